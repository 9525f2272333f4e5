import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdguard.core import Snapshot, Vec2
from crowdguard.spatial import SpatialHash, neighbor_index

from helpers import brute_radius, ped


def test_single_point_has_no_neighbors():
    idx = neighbor_index(Snapshot(0, 0.0, (ped(3, 5, 5),)), 2.0)
    assert idx.neighbors(3, 2.0) == []


def test_closed_ball():
    idx = SpatialHash([(0, Vec2(0, 0)), (1, Vec2(1.5, 0))], 1.5)
    assert idx.neighbors(0, 1.5) == [1]
    assert idx.neighbors(1, 1.5) == [0]


def test_radius_above_bucket_rejected():
    idx = SpatialHash([(0, Vec2(0, 0))], 1.0)
    with pytest.raises(ValueError):
        idx.query(Vec2(0, 0), 1.5)
    with pytest.raises(ValueError):
        SpatialHash([], 0.0)


def test_random_cloud_matches_scan():
    rng = random.Random(4)
    pts = {i: Vec2(rng.uniform(0, 30), rng.uniform(0, 30)) for i in range(200)}
    idx = SpatialHash(pts.items(), 3.0)
    for _ in range(200):
        c = Vec2(rng.uniform(-2, 32), rng.uniform(-2, 32))
        r = rng.uniform(0, 3.0)
        assert idx.query(c, r) == brute_radius(pts, c, r)


pt = st.tuples(st.floats(-20, 20), st.floats(-20, 20))


@given(st.lists(pt, min_size=1, max_size=60), pt, st.floats(0.0, 4.0), st.floats(0.5, 4.0))
def test_query_equals_scan(points, center, radius, bucket):
    radius = min(radius, bucket)
    pts = {i: Vec2(*p) for i, p in enumerate(points)}
    idx = SpatialHash(pts.items(), bucket)
    c = Vec2(*center)
    assert idx.query(c, radius) == brute_radius(pts, c, radius)
    assert idx.neighbors(0, radius) == brute_radius(pts, pts[0], radius, exclude=0)


@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), min_size=2, max_size=40),
       st.integers(1, 3))
def test_lattice_boundaries(points, radius):
    # integer coordinates put many points exactly on the query circle
    pts = {i: Vec2(float(x), float(y)) for i, (x, y) in enumerate(points)}
    idx = SpatialHash(pts.items(), float(radius))
    for key, p in pts.items():
        assert idx.neighbors(key, radius) == brute_radius(pts, p, radius, exclude=key)
