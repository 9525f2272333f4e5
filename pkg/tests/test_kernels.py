import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdguard import kernels
from crowdguard.harness import RunOptions, bundled, load_scenario, run

have_cython = "cython" in kernels.BACKENDS
needs_cython = pytest.mark.skipif(not have_cython, reason="compiled extension not built")


def _inputs(rng, n):
    x = rng.uniform(0, 8, n)
    y = rng.uniform(0, 8, n)
    vx = rng.uniform(-1.5, 1.5, n)
    vy = rng.uniform(-1.5, 1.5, n)
    s = np.hypot(vx, vy)
    hx = np.where(s > 0, vx / s, 0.0)
    hy = np.where(s > 0, vy / s, 0.0)
    g = rng.integers(0, 3, n)
    ds = rng.uniform(0, 1.5, n)
    return x, y, vx, vy, hx, hy, g, ds


PARAMS = (3.0, 3.0, 0.5, 1.0, 0.3, 0.5)


@needs_cython
@pytest.mark.parametrize("seed", range(5))
def test_social_forces_bit_identical(seed):
    args = _inputs(np.random.default_rng(seed), 40)
    a = kernels.BACKENDS["python"].social_forces(*args, *PARAMS)
    b = kernels.BACKENDS["cython"].social_forces(*args, *PARAMS)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@needs_cython
@given(st.integers(0, 2**32 - 1), st.integers(0, 30), st.floats(0.1, 4.0))
def test_close_pairs_bit_identical(seed, n, radius):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 10, n)
    y = rng.uniform(0, 10, n)
    ia, ja = kernels.BACKENDS["python"].close_pairs(x, y, radius)
    ib, jb = kernels.BACKENDS["cython"].close_pairs(x, y, radius)
    assert ia.tolist() == ib.tolist() and ja.tolist() == jb.tolist()


@given(st.integers(0, 2**32 - 1), st.integers(0, 30), st.floats(0.1, 4.0))
def test_close_pairs_match_scan(seed, n, radius):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 10, n)
    y = rng.uniform(0, 10, n)
    ii, jj = kernels.close_pairs(x, y, radius)
    want = [(i, j) for i in range(n) for j in range(i + 1, n)
            if math.hypot(x[i] - x[j], y[i] - y[j]) <= radius]
    assert sorted(zip(ii.tolist(), jj.tolist())) == want


def test_lone_pedestrian_feels_nothing():
    fx, fy = kernels.social_forces([1.0], [1.0], [1.0], [0.0], [1.0], [0.0], [0], [1.0], *PARAMS)
    assert fx[0] == 0.0 and fy[0] == 0.0


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


@needs_cython
def test_trace_independent_of_backend():
    sc = load_scenario(bundled("localized"))
    opts = RunOptions(ticks=150)
    before = kernels.backend()
    try:
        kernels.use_backend("python")
        slow = run(sc, opts).trace.to_text()
        kernels.use_backend("cython")
        fast = run(sc, opts).trace.to_text()
    finally:
        kernels.use_backend(before)
    assert slow == fast
