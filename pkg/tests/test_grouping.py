import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdguard.core import Vec2, derive_kinematics
from crowdguard.detection import build_groups, split_subgroups
from crowdguard.detection.grouping import Group

from helpers import brute_components, moving

THETA = math.radians(30)


def _walkers(walkers, dt=1.0):
    """Walker rows: (x, y, heading angle in degrees, speed)."""
    rows = []
    for i, (x, y, deg, v) in enumerate(walkers):
        a = math.radians(deg)
        rows.append((i, (x - v * dt * math.cos(a), y - v * dt * math.sin(a)), (x, y)))
    snap = moving(rows, dt)
    return snap, derive_kinematics(snap)


def test_far_clusters_split():
    walkers = [(1 + 0.5 * i, 1, 0, 1) for i in range(5)] + [(51 + 0.5 * i, 1, 0, 1) for i in range(5)]
    snap, kin = _walkers(walkers)
    groups = build_groups(snap, kin, 2.0, THETA)
    assert [sorted(g.member_ids) for g in groups] == [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]]


def test_gradual_turn_is_one_group():
    # heading rotates 10 degrees per step, 120 degrees end to end
    walkers = [(i * 1.5, 0.0, 10 * i, 1.0) for i in range(13)]
    snap, kin = _walkers(walkers)
    groups = build_groups(snap, kin, 2.0, THETA)
    assert len(groups) == 1 and groups[0].size == 13


def test_interleaved_opposite_streams():
    walkers = [(i * 0.5, 0.0 if i % 2 else 0.4, 0 if i % 2 else 180, 1.0) for i in range(10)]
    snap, kin = _walkers(walkers)
    groups = build_groups(snap, kin, 2.0, THETA)
    assert len(groups) == 2
    assert {frozenset(g.member_ids) for g in groups} == {
        frozenset(range(1, 10, 2)), frozenset(range(0, 10, 2))}


def test_stationary_stay_single():
    snap, kin = _walkers([(0, 0, 0, 0.0), (0.5, 0, 0, 0.0)])
    groups = build_groups(snap, kin, 2.0, THETA)
    assert len(groups) == 2 and all(g.mean_heading is None for g in groups)


walker = st.tuples(st.floats(0, 12), st.floats(0, 12), st.sampled_from([0, 20, 45, 90, 180, 270]),
                   st.sampled_from([0.0, 0.5, 1.0]))


@given(st.lists(walker, min_size=1, max_size=25))
def test_groups_partition_crowd(walkers):
    snap, kin = _walkers(walkers)
    groups = build_groups(snap, kin, 2.0, THETA)
    seen = [i for g in groups for i in g.member_ids]
    assert sorted(seen) == list(range(len(walkers)))
    assert [g.id for g in groups] == list(range(len(groups)))


@given(st.lists(walker, min_size=1, max_size=25))
def test_groups_match_component_oracle(walkers):
    snap, kin = _walkers(walkers)
    pos = [p.position for p in snap.pedestrians]
    h = [kin[i].heading for i in range(len(walkers))]

    def linked(i, j):
        return (pos[i].dist(pos[j]) <= 2.0 and h[i] is not None and h[j] is not None
                and h[i].dot(h[j]) >= math.cos(THETA))

    got = sorted(sorted(g.member_ids) for g in build_groups(snap, kin, 2.0, THETA))
    assert got == brute_components(len(walkers), linked)


def _column(speeds, heading=Vec2(1, 0)):
    """Single file along +x; index 0 is at the front."""
    rows = []
    n = len(speeds)
    for i, v in enumerate(speeds):
        x = 10.0 + (n - i) * 0.8
        rows.append((i, (x - v, 5.0), (x, 5.0)))
    snap = moving(rows)
    kin = derive_kinematics(snap)
    g = Group(0, frozenset(range(n)), heading, Vec2(10.0, 5.0))
    return snap, kin, g


def test_uniform_speed_single_subgroup():
    snap, kin, g = _column([1.0] * 6)
    parts = split_subgroups(g, snap, kin, 0.2, 2.0)
    assert len(parts) == 1 and parts[0].rank_along_heading == 0


def test_slow_front_ranked_first():
    snap, kin, g = _column([0.5] * 3 + [1.2] * 3)
    parts = split_subgroups(g, snap, kin, 0.2, 2.0)
    assert len(parts) == 2
    front, rear = parts
    assert front.rank_along_heading == 0 and sorted(front.member_ids) == [0, 1, 2]
    assert front.mean_speed == pytest.approx(0.5) and rear.mean_speed == pytest.approx(1.2)


def test_subgroups_match_oracle():
    rng = random.Random(12)
    for _ in range(20):
        n = 30
        rows = []
        for i in range(n):
            x, y = rng.uniform(0, 10), rng.uniform(0, 10)
            v = rng.choice([0.4, 0.5, 0.9, 1.0, 1.3])
            rows.append((i, (x - v, y), (x, y)))
        snap = moving(rows)
        kin = derive_kinematics(snap)
        g = Group(0, frozenset(range(n)), Vec2(1, 0), Vec2(5, 5))
        parts = split_subgroups(g, snap, kin, 0.2, 2.0)
        pos = [p.position for p in snap.pedestrians]

        def linked(i, j):
            return pos[i].dist(pos[j]) <= 2.0 and abs(kin[i].speed - kin[j].speed) <= 0.2

        assert sorted(sorted(s.member_ids) for s in parts) == brute_components(n, linked)
        proj = [s.centroid.dot(Vec2(1, 0)) for s in parts]
        assert proj == sorted(proj, reverse=True)
        assert [s.rank_along_heading for s in parts] == list(range(len(parts)))
