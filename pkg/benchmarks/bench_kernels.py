"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--sizes 50 200 800] [--repeat 5]

Prints the best-of-N wall time per call for each kernel and crowd size, the
speed-up of the compiled backend, and checks that both backends return
identical arrays.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from crowdguard import kernels
from crowdguard.harness import RunOptions, bundled, load_scenario, run


def crowd(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    side = max(5.0, np.sqrt(n) * 1.2)
    x = rng.uniform(0, side, n)
    y = rng.uniform(0, side, n)
    vx = rng.uniform(-1.3, 1.3, n)
    vy = rng.uniform(-1.3, 1.3, n)
    s = np.hypot(vx, vy)
    return {
        "x": x, "y": y, "vx": vx, "vy": vy, "hx": vx / s, "hy": vy / s,
        "group": rng.integers(0, max(1, n // 8), n),
        "desired_speed": rng.uniform(0.8, 1.3, n),
    }


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_size(n: int, repeat: int) -> None:
    c = crowd(n)
    force_args = (c["x"], c["y"], c["vx"], c["vy"], c["hx"], c["hy"], c["group"],
                  c["desired_speed"], 3.0, 3.0, 0.5, 1.0, 0.3, 0.5)
    results = {}
    for name, mod in sorted(kernels.BACKENDS.items()):
        results[name] = {
            "social_forces": (best_of(lambda: mod.social_forces(*force_args), repeat),
                              mod.social_forces(*force_args)),
            "close_pairs": (best_of(lambda: mod.close_pairs(c["x"], c["y"], 2.0), repeat),
                            mod.close_pairs(c["x"], c["y"], 2.0)),
        }
    for kernel in ("social_forces", "close_pairs"):
        row = [f"n={n:5d}", f"{kernel:14s}"]
        for name in sorted(results):
            row.append(f"{name} {results[name][kernel][0] * 1e3:9.3f} ms")
        if "cython" in results:
            py, cy = results["python"][kernel], results["cython"][kernel]
            same = all(np.array_equal(a, b) for a, b in zip(py[1], cy[1]))
            row.append(f"speed-up {py[0] / cy[0]:7.1f}x")
            row.append("identical" if same else "MISMATCH")
        print("  ".join(row))


def bench_run(ticks: int) -> None:
    sc = load_scenario(bundled("localized"))
    before = kernels.backend()
    try:
        for name in sorted(kernels.BACKENDS):
            kernels.use_backend(name)
            t0 = time.perf_counter()
            run(sc, RunOptions(ticks=ticks))
            print(f"localized run, {ticks} ticks, {name:6s} backend: "
                  f"{time.perf_counter() - t0:.2f} s")
    finally:
        kernels.use_backend(before)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 200, 800])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--run-ticks", type=int, default=300)
    args = ap.parse_args()
    print(f"backends available: {sorted(kernels.BACKENDS)}; active: {kernels.backend()}")
    for n in args.sizes:
        bench_size(n, args.repeat)
    bench_run(args.run_ticks)


if __name__ == "__main__":
    main()
