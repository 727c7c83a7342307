"""Time the numba kernels against the numpy reference on the same inputs.

    python3 benchmarks/bench_kernels.py [--pool 20000] [--repeat 3]

The first numba call of each kernel includes JIT compilation and is reported
separately. Outputs of the two backends are compared for equality.
"""

import argparse
import math
import time

import numpy as np

from weylsampl import accel, candidate_pool, make_manifold


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(pool):
    sphere = make_manifold("sphere")
    torus = make_manifold("torus", lengths=(1.0, 1.0))
    for m, rho in ((sphere, 0.05), (torus, 0.02)):
        pts = candidate_pool(m, pool, 0)
        coords = np.ascontiguousarray(m.embed(pts), dtype=np.float64)
        period = np.asarray(m.period, dtype=np.float64)
        r = m.chord(rho)
        order = np.random.default_rng(0).permutation(len(coords))
        yield m.kind, coords, period, r, order


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pool", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    found = accel.backends()
    if "numba" not in found:
        print("numba is not importable; only the numpy backend is available")
    print(f"{'kernel':<28}{'numpy s':>10}{'numba s':>10}{'jit s':>9}{'speedup':>9}  same")
    for kind, coords, period, r, order in cases(args.pool):
        lat = None
        jobs = {
            "greedy_pack": lambda k: k.greedy_pack(coords, period, r, order),
            "fps_pack": lambda k: k.fps_pack(coords, period, r, 0),
        }
        for name, job in jobs.items():
            row = {}
            for backend, k in found.items():
                t0 = time.perf_counter()
                job(k)
                jit = time.perf_counter() - t0
                row[backend] = (*_best(lambda: job(k), args.repeat), jit)
            _report(f"{kind}/{name}", row, np.array_equal)
            lat = coords[row["numpy"][1]]
        row = {}
        for backend, k in found.items():
            t0 = time.perf_counter()
            k.nearest_and_count(coords, lat, period, r)
            jit = time.perf_counter() - t0
            row[backend] = (*_best(lambda: k.nearest_and_count(coords, lat, period, r), args.repeat), jit)
        _report(f"{kind}/nearest_and_count", row,
                lambda a, b: np.allclose(a[0], b[0], rtol=0, atol=1e-12) and np.array_equal(a[1], b[1]))
    return 0


def _report(label, row, same):
    tn, on, _ = row["numpy"]
    if "numba" in row:
        tb, ob, jit = row["numba"]
        eq = same(on, ob)
        print(f"{label:<28}{tn:>10.4f}{tb:>10.4f}{jit:>9.2f}{tn / tb if tb > 0 else math.inf:>9.1f}  {eq}")
    else:
        print(f"{label:<28}{tn:>10.4f}{'-':>10}{'-':>9}{'-':>9}  -")


if __name__ == "__main__":
    raise SystemExit(main())
