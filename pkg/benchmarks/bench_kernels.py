"""Compare the numba and pure-numpy kernel paths.

    python3 benchmarks/bench_kernels.py [--dim 4096] [--sizes 300,600,1200,2400]

Prints per-probe cluster_scan latency for both backends at each gallery
size, the speed-up, and the 2x scaling ratio of each backend.  A second
table times pairwise_distances, which the offline DBSCAN baseline and the
stream simulator lean on.
"""
import argparse
import time

import numpy as np

from facereid import kernels
from facereid.bench import run_bench, scaling_ratio


def time_pairwise(n, dim, reps, rng):
    pts = rng.standard_normal((n, dim)).astype(np.float32)
    out = {}
    for backend in kernels.available_backends():
        with kernels.use_backend(backend):
            kernels.pairwise_distances(pts[:4])  # compile
            best = np.inf
            for _ in range(reps):
                t0 = time.perf_counter()
                kernels.pairwise_distances(pts)
                best = min(best, time.perf_counter() - t0)
        out[backend] = best
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=4096)
    ap.add_argument("--sizes", default="300,600,1200,2400")
    ap.add_argument("--repetitions", type=int, default=100)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    backends = kernels.available_backends()
    if len(backends) < 2:
        print("numba not installed: only the numpy path is timed")

    rows = run_bench(sizes, args.dim, args.repetitions, backends)
    med = {(r["backend"], r["gallery_size"]): r["median_s"] for r in rows}
    print(f"match_probe, D={args.dim}, median of {args.repetitions} probes")
    print(f"{'size':>6} " + " ".join(f"{b + ' ms':>11}" for b in backends) + "   speed-up")
    for n in sizes:
        cells = " ".join(f"{med[(b, n)] * 1e3:11.3f}" for b in backends)
        speed = med[("numpy", n)] / med[("numba", n)] if len(backends) == 2 else float("nan")
        print(f"{n:6d} {cells}   {speed:7.2f}x")
    for b in backends:
        ratios = [scaling_ratio(rows, a, c, b) for a, c in zip(sizes, sizes[1:]) if c == 2 * a]
        print(f"{b}: doubling ratios " + ", ".join(f"{r:.2f}" for r in ratios))

    rng = np.random.default_rng(1)
    print("\npairwise_distances, D=64, best of 5")
    for n in (200, 800, 1500):
        t = time_pairwise(n, 64, 5, rng)
        print(f"{n:6d} " + " ".join(f"{b}={t[b] * 1e3:.2f}ms" for b in backends))


if __name__ == "__main__":
    main()
