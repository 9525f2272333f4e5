"""Social-force crowd dynamics with a semi-implicit Euler integrator.

Each pedestrian feels intent (relaxation toward a desired velocity),
cohesion and coherency toward its own social group, exponential avoidance
of other pedestrians and obstacles, and an optional scenario drive (exit or
fixed-point attraction). Momentum is the velocity carried between ticks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .core import (
    ZERO,
    ExitSegment,
    FieldConfig,
    Goal,
    InvalidArgument,
    Pedestrian,
    Snapshot,
    Vec2,
)
from .instructions import Instruction, InstructionKind


@dataclass(frozen=True)
class ForceParams:
    intent_gain: float = 2.0
    cohesion_gain: float = 0.3
    coherency_gain: float = 0.5
    avoidance_gain: float = 3.0
    avoidance_range: float = 0.5
    anticipation: float = 1.0
    obstacle_gain: float = 5.0
    obstacle_range: float = 0.5
    interaction_range: float = 3.0
    arrival_radius: float = 1.0

    def __post_init__(self) -> None:
        for name in ("intent_gain", "cohesion_gain", "coherency_gain",
                     "avoidance_gain", "obstacle_gain", "anticipation"):
            if getattr(self, name) < 0:
                raise InvalidArgument(f"{name} must be >= 0")
        for name in ("avoidance_range", "obstacle_range", "interaction_range", "arrival_radius"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be > 0")


class ForceKind(str, enum.Enum):
    NONE = "none"
    EXIT = "exit-attraction"
    FIXED_POINT = "fixed-point-attraction"


@dataclass(frozen=True)
class ScenarioForce:
    kind: ForceKind = ForceKind.NONE
    target: Vec2 | None = None
    gain: float = 0.0

    def __post_init__(self) -> None:
        if self.kind is ForceKind.FIXED_POINT and self.target is None:
            raise InvalidArgument("fixed-point attraction needs a target")
        if self.gain < 0:
            raise InvalidArgument("scenario force gain must be >= 0")


@dataclass(frozen=True)
class ForceContext:
    field: FieldConfig
    params: ForceParams = ForceParams()
    scenario_force: ScenarioForce = ScenarioForce()


@dataclass(frozen=True)
class EffectiveIntent:
    goal: Goal
    speed: float
    drive: bool  # whether the scenario attraction acts


def apply_instruction(ped: Pedestrian, inst: Instruction | None) -> EffectiveIntent:
    """Goal and desired speed a pedestrian actually pursues under ``inst``.

    Disobedient pedestrians, and pedestrians the instruction does not
    address, keep their own goal. Obedient ones under any instruction also
    stop responding to the scenario attraction; they are following the
    control agent instead.
    """
    own = EffectiveIntent(ped.goal, ped.desired_speed, True)
    if inst is None or not ped.obedient or ped.id not in inst.addressed:
        return own
    if inst.kind is InstructionKind.WAIT:
        return EffectiveIntent(ped.goal, 0.0, False)
    if inst.kind is InstructionKind.SLOW_DOWN:
        return EffectiveIntent(ped.goal, ped.desired_speed * inst.factor, False)
    spot = inst.spotlight
    return EffectiveIntent(Goal(point=spot.position), min(ped.desired_speed, spot.speed), False)


def _desired_velocity(ped: Pedestrian, eff: EffectiveIntent, params: ForceParams) -> Vec2:
    if eff.speed <= 0.0:
        return ZERO
    direction = eff.goal.direction_from(ped.position)
    if direction is None:
        return ZERO
    speed = eff.speed
    if eff.goal.point is not None:
        speed *= min(1.0, ped.position.dist(eff.goal.point) / params.arrival_radius)
    return direction * speed


def _obstacle_force(p: Vec2, ctx: ForceContext) -> Vec2:
    fx = 0.0
    fy = 0.0
    prm = ctx.params
    for ob in ctx.field.obstacles:
        q = ob.closest_point(p)
        dx = p.x - q.x
        dy = p.y - q.y
        d = math.hypot(dx, dy)
        if d == 0.0 or d > prm.interaction_range:
            continue
        m = prm.obstacle_gain * math.exp(-d / prm.obstacle_range) / d
        fx += dx * m
        fy += dy * m
    return Vec2(fx, fy)


def _nearest_exit_point(p: Vec2, exits: Sequence[ExitSegment]) -> Vec2 | None:
    best = None
    best_d = math.inf
    for ex in exits:
        q = ex.closest_point(p)
        d = p.dist(q)
        if d < best_d:
            best, best_d = q, d
    return best


def _scenario_drive(ped: Pedestrian, ctx: ForceContext) -> Vec2:
    sf = ctx.scenario_force
    if sf.kind is ForceKind.NONE or sf.gain == 0.0:
        return ZERO
    if sf.kind is ForceKind.EXIT:
        target = _nearest_exit_point(ped.position, ctx.field.exits)
        if target is None:
            return ZERO
    else:
        target = sf.target
        # the pull toward the point lets go once the pedestrian is past it
        intended = ped.goal.direction_from(ped.position)
        if intended is not None and (ped.position - target).dot(intended) >= 0.0:
            return ZERO
    d = target - ped.position
    n = d.norm()
    if n < 1e-9:
        return ZERO
    return Vec2(d.x / n * sf.gain, d.y / n * sf.gain)


def _heading(ped: Pedestrian) -> tuple[float, float]:
    s = ped.velocity.norm()
    if s < 1e-9:
        return (0.0, 0.0)
    return (ped.velocity.x / s, ped.velocity.y / s)


def _pair_terms(peds: Sequence[Pedestrian], speeds: Sequence[float], params: ForceParams):
    n = len(peds)
    x = np.empty(n)
    y = np.empty(n)
    vx = np.empty(n)
    vy = np.empty(n)
    hx = np.empty(n)
    hy = np.empty(n)
    g = np.empty(n, dtype=np.int64)
    for i, p in enumerate(peds):
        x[i] = p.position.x
        y[i] = p.position.y
        vx[i] = p.velocity.x
        vy[i] = p.velocity.y
        hx[i], hy[i] = _heading(p)
        g[i] = p.group_hint
    return kernels.social_forces(
        x, y, vx, vy, hx, hy, g, np.asarray(speeds, dtype=np.float64),
        params.interaction_range, params.avoidance_gain, params.avoidance_range,
        params.anticipation, params.cohesion_gain, params.coherency_gain,
    )


def _assemble(ped: Pedestrian, eff: EffectiveIntent, pfx: float, pfy: float,
              ctx: ForceContext) -> Vec2:
    prm = ctx.params
    vd = _desired_velocity(ped, eff, prm)
    ix = prm.intent_gain * (vd.x - ped.velocity.x)
    iy = prm.intent_gain * (vd.y - ped.velocity.y)
    ob = _obstacle_force(ped.position, ctx)
    sc = _scenario_drive(ped, ctx) if eff.drive else ZERO
    return Vec2(ix + pfx + ob.x + sc.x, iy + pfy + ob.y + sc.y)


def compute_force(ped: Pedestrian, neighbors: Sequence[Pedestrian], ctx: ForceContext) -> Vec2:
    """Total acceleration on ``ped`` given the pedestrians around it.

    ``neighbors`` should hold everyone within the interaction range; order
    does not matter (they are summed in id order, as in :func:`step`).
    """
    others = sorted((n for n in neighbors if n.id != ped.id), key=lambda n: n.id)
    eff = apply_instruction(ped, ped.active_instruction)
    fx, fy = _pair_terms([ped, *others], [eff.speed] + [0.0] * len(others), ctx.params)
    return _assemble(ped, eff, float(fx[0]), float(fy[0]), ctx)


@dataclass(frozen=True)
class World:
    field: FieldConfig
    pedestrians: tuple[Pedestrian, ...]
    params: ForceParams = ForceParams()
    scenario_force: ScenarioForce = ScenarioForce()
    tick: int = 0
    sim_time: float = 0.0
    previous_positions: Mapping[int, Vec2] = field(default_factory=dict)
    previous_time: float | None = None
    exited: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "pedestrians",
                           tuple(sorted(self.pedestrians, key=lambda p: p.id)))

    @property
    def context(self) -> ForceContext:
        return ForceContext(self.field, self.params, self.scenario_force)

    def snapshot(self) -> Snapshot:
        return Snapshot(self.tick, self.sim_time, self.pedestrians,
                        self.previous_positions, self.previous_time)

    def with_instructions(self, instructions: Mapping[int, Instruction]) -> World:
        """Attach the instruction addressed to each pedestrian (None clears)."""
        peds = tuple(
            p if p.active_instruction is instructions.get(p.id)
            else replace(p, active_instruction=instructions.get(p.id))
            for p in self.pedestrians
        )
        return replace(self, pedestrians=peds)


def _crosses_exit(a: Vec2, b: Vec2, ex: ExitSegment) -> bool:
    if ex.y0 == ex.y1:
        y = ex.y0
        if (a.y - y) * (b.y - y) > 0 or a.y == b.y:
            return False
        t = (y - a.y) / (b.y - a.y)
        xc = a.x + t * (b.x - a.x)
        return min(ex.x0, ex.x1) <= xc <= max(ex.x0, ex.x1)
    x = ex.x0
    if (a.x - x) * (b.x - x) > 0 or a.x == b.x:
        return False
    t = (x - a.x) / (b.x - a.x)
    yc = a.y + t * (b.y - a.y)
    return min(ex.y0, ex.y1) <= yc <= max(ex.y0, ex.y1)


def step(world: World, dt: float) -> World:
    """Advance one tick: v += a*dt, clamp to v_max, x += v*dt, resolve collisions."""
    if not dt > 0:
        raise InvalidArgument(f"dt must be positive, got {dt}")
    ctx = world.context
    peds = world.pedestrians
    effs = [apply_instruction(p, p.active_instruction) for p in peds]
    if peds:
        pfx, pfy = _pair_terms(peds, [e.speed for e in effs], ctx.params)
    fld = world.field
    moved = []
    exited = list(world.exited)
    for i, p in enumerate(peds):
        a = _assemble(p, effs[i], float(pfx[i]), float(pfy[i]), ctx)
        vx = p.velocity.x + a.x * dt
        vy = p.velocity.y + a.y * dt
        s = math.hypot(vx, vy)
        if s > p.v_max:
            k = p.v_max / s
            vx *= k
            vy *= k
        old = p.position
        new = Vec2(old.x + vx * dt, old.y + vy * dt)
        if fld.blocked(new):
            if not fld.in_field(new) and any(_crosses_exit(old, new, ex) for ex in fld.exits):
                exited.append(p.id)
                continue
            alt = Vec2(new.x, old.y)
            if not fld.blocked(alt):
                new, vy = alt, 0.0
            else:
                alt = Vec2(old.x, new.y)
                if not fld.blocked(alt):
                    new, vx = alt, 0.0
                else:
                    new, vx, vy = old, 0.0, 0.0
        # direct construction: dataclasses.replace is a measurable share of a tick
        moved.append(Pedestrian(p.id, new, Vec2(vx, vy), p.goal, p.group_hint, p.v_max,
                                p.obedient, p.desired_speed, p.active_instruction))
    return replace(
        world,
        pedestrians=tuple(moved),
        tick=world.tick + 1,
        sim_time=(world.tick + 1) * dt,
        previous_positions={p.id: p.position for p in peds},
        previous_time=world.sim_time,
        exited=tuple(exited),
    )
