import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdguard.core import (
    CircleObstacle,
    ExitSegment,
    FieldConfig,
    Goal,
    InvalidArgument,
    Vec2,
)
from crowdguard.dynamics import (
    ForceContext,
    ForceKind,
    ForceParams,
    ScenarioForce,
    World,
    apply_instruction,
    compute_force,
    step,
)
from crowdguard.harness import bundled, initial_world, load_scenario
from crowdguard.instructions import Instruction, InstructionKind, Spotlight

from helpers import open_field, ped

INTENT_ONLY = ForceParams(cohesion_gain=0.0, coherency_gain=0.0, avoidance_gain=0.0,
                          obstacle_gain=0.0)


def test_isolated_force_points_east():
    f = compute_force(ped(0, 5, 5), [], ForceContext(open_field(20, 20)))
    assert f.x > 0 and f.y == 0.0


def test_group_terms_vanish_at_centroid():
    # the middle walker sits on the centroid and moves with the mean heading
    peds = [ped(i, 4 + i, 5, 1.0, 0.0, goal=Goal(heading=Vec2(1, 0)), desired=1.0)
            for i in range(3)]
    ctx = ForceContext(open_field(20, 20), ForceParams(avoidance_gain=0.0))
    f = compute_force(peds[1], peds, ctx)
    assert f == Vec2(0.0, 0.0)


def test_head_on_repulsion_sign():
    a = ped(0, 5.0, 5.0, 1.0, 0.0, goal=Goal(heading=Vec2(1, 0)))
    b = ped(1, 5.3, 5.0, -1.0, 0.0, goal=Goal(heading=Vec2(-1, 0)), group=1)
    ctx = ForceContext(open_field(20, 20), ForceParams(intent_gain=0.0))
    fa = compute_force(a, [b], ctx)
    fb = compute_force(b, [a], ctx)
    assert fa.x < 0 and fb.x > 0


def test_empty_world_ticks():
    w = step(World(open_field(10, 10), ()), 0.1)
    assert w.tick == 1 and w.pedestrians == ()


def test_bad_dt():
    with pytest.raises(InvalidArgument):
        step(World(open_field(10, 10), ()), 0.0)


@pytest.mark.parametrize("gain", [0.5, 1.0, 2.0, 4.0])
def test_intent_relaxation(gain):
    dt = 0.01
    prm = ForceParams(intent_gain=gain, cohesion_gain=0.0, coherency_gain=0.0,
                      avoidance_gain=0.0, obstacle_gain=0.0)
    w = World(open_field(1000, 20), (ped(0, 1, 10, desired=1.0, v_max=1.5),), prm)
    n = round(5.0 / gain / dt)
    for k in range(1, n + 1):
        w = step(w, dt)
        s = w.pedestrians[0].speed
        # discrete relaxation: 1 - (1 - g dt)^k
        assert s == pytest.approx(1.0 - (1.0 - gain * dt) ** k, rel=1e-9)
    assert abs(w.pedestrians[0].speed - 1.0) <= 0.01
    # and close to the continuous solution 1 - exp(-g t)
    assert w.pedestrians[0].speed == pytest.approx(1.0 - math.exp(-5.0), abs=2e-3)


@given(st.lists(st.tuples(st.floats(1, 19), st.floats(1, 19), st.floats(-3, 3),
                          st.floats(-3, 3)), min_size=1, max_size=12),
       st.floats(0.3, 2.0))
def test_speed_clamped(rows, vmax):
    peds = tuple(ped(i, x, y, vx, vy, v_max=vmax, group=i % 2) for i, (x, y, vx, vy) in
                 enumerate(rows))
    w = step(World(open_field(20, 20), peds, ForceParams(avoidance_gain=50.0)), 0.1)
    assert all(p.speed <= vmax * (1 + 1e-12) for p in w.pedestrians)


def test_wait_stops_obedient():
    inst = Instruction(InstructionKind.WAIT, frozenset({0}), 0)
    eff = apply_instruction(ped(0, 0, 0), inst)
    assert eff.speed == 0.0 and not eff.drive


def test_disobedient_ignores_everything():
    p = ped(0, 0, 0, obedient=False)
    base = apply_instruction(p, None)
    for inst in (Instruction(InstructionKind.WAIT, {0}, 0),
                 Instruction(InstructionKind.SLOW_DOWN, {0}, 0, factor=0.5),
                 Instruction(InstructionKind.FOLLOW_SPOTLIGHT, {0}, 0,
                             spotlight=Spotlight(Vec2(3, 3), 0.5))):
        assert apply_instruction(p, inst) == base


def test_follow_spotlight_speed_min_rule():
    inst = Instruction(InstructionKind.FOLLOW_SPOTLIGHT, {0}, 0,
                       spotlight=Spotlight(Vec2(9, 0), 1.0))
    eff = apply_instruction(ped(0, 0, 0, v_max=1.4), inst)
    assert eff.speed == 1.0 and eff.goal.point == Vec2(9, 0)


def test_slow_down_scales_speed():
    inst = Instruction(InstructionKind.SLOW_DOWN, {0}, 0, factor=0.5)
    assert apply_instruction(ped(0, 0, 0, v_max=1.2), inst).speed == 0.6


def test_unaddressed_keep_intent():
    inst = Instruction(InstructionKind.WAIT, {1}, 0)
    assert apply_instruction(ped(0, 0, 0), inst).speed == 1.5


def test_wait_instruction_stops_walker():
    w = World(open_field(30, 10), (ped(0, 5, 5, 1.0, 0.0),))
    w = w.with_instructions({0: Instruction(InstructionKind.WAIT, {0}, 0)})
    for _ in range(40):
        w = step(w, 0.1)
    assert w.pedestrians[0].speed < 0.01


def test_params_validated():
    with pytest.raises(InvalidArgument):
        ForceParams(avoidance_range=0.0)
    with pytest.raises(InvalidArgument):
        ForceParams(cohesion_gain=-1.0)
    with pytest.raises(InvalidArgument):
        ScenarioForce(ForceKind.FIXED_POINT)


def test_exit_removes_walker():
    fc = FieldConfig(10, 10, (), (ExitSegment(10, 0, 10, 10),))
    w = World(fc, (ped(0, 9.95, 5, 1.5, 0.0),))
    w = step(w, 0.1)
    assert w.pedestrians == () and w.exited == (0,)


def test_wall_without_exit_holds():
    w = World(open_field(10, 10), (ped(0, 9.95, 5, 1.5, 0.0),))
    for _ in range(10):
        w = step(w, 0.1)
    assert w.pedestrians[0].position.x <= 10.0


def test_obstacle_not_entered():
    fc = FieldConfig(20, 10, (CircleObstacle(10.0, 5.0, 1.5),))
    w = World(fc, (ped(0, 3, 5.05),))
    for _ in range(200):
        w = step(w, 0.1)
        assert not fc.blocked(w.pedestrians[0].position)


def test_exit_attraction_pulls_to_exit():
    fc = FieldConfig(20, 10, (), (ExitSegment(20, 0, 20, 10),))
    sf = ScenarioForce(ForceKind.EXIT, gain=1.0)
    p = ped(0, 5, 5, goal=Goal(heading=Vec2(0, 1)))
    f = compute_force(p, [], ForceContext(fc, INTENT_ONLY, sf))
    assert f.x == pytest.approx(1.0)


def test_head_on_fixture_keeps_distance():
    sc = load_scenario(bundled("headon"))
    w = initial_world(sc)
    closest = math.inf
    for _ in range(sc.tick_budget):
        w = step(w, sc.dt)
        if len(w.pedestrians) == 2:
            a, b = w.pedestrians
            closest = min(closest, a.position.dist(b.position))
    assert closest >= 0.3
