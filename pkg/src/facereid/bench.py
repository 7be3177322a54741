"""Per-probe matching latency against synthetic galleries of varying size."""
import time

import numpy as np

from . import kernels
from .gallery import DEFAULT_S1, GalleryView
from .matcher import MatchConfig, match_probe

BENCH_COLUMNS = (
    "backend", "gallery_size", "dim", "repetitions", "median_s", "min_s",
    "probes_per_s", "fit_slope_s_per_descriptor", "fit_intercept_s",
)


def random_view(n_descriptors, dim, rng, cluster_size=DEFAULT_S1):
    """Random unit descriptors split into clusters of ``cluster_size``."""
    x = rng.standard_normal((n_descriptors, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True) if n_descriptors else 1.0
    x = x.astype(np.float32)
    clusters = []
    ident = 1
    for start in range(0, n_descriptors, cluster_size):
        clusters.append((ident, x[start:start + cluster_size]))
        ident += 1
    if not clusters:
        return GalleryView.empty(dim)
    return GalleryView.from_clusters(clusters)


def time_probe(view, probes, cfg):
    times = []
    matched = 0
    for p in probes:
        t0 = time.perf_counter()
        dec = match_probe(p, view, (), cfg)
        times.append(time.perf_counter() - t0)
        matched += dec.matched
    return np.asarray(times), matched


def run_bench(sizes, dim=4096, repetitions=100, backends=None, seed=0, cfg=None):
    """Time ``match_probe`` at each total gallery size.

    Returns a list of row dicts (one per backend and size) including a
    least-squares linear fit of median latency against gallery size.
    """
    cfg = cfg or MatchConfig()
    backends = backends or (kernels.BACKEND,)
    rng = np.random.default_rng(seed)
    views = {n: random_view(n, dim, rng) for n in sizes}
    probes = rng.standard_normal((repetitions, dim))
    probes = (probes / np.linalg.norm(probes, axis=1, keepdims=True)).astype(np.float32)
    rows = []
    for backend in backends:
        with kernels.use_backend(backend):
            # warm-up: JIT compilation and first-touch page faults
            for n in sizes:
                time_probe(views[n], probes[:2], cfg)
            block = []
            for n in sizes:
                times, matched = time_probe(views[n], probes, cfg)
                med = float(np.median(times))
                block.append({
                    "backend": backend, "gallery_size": n, "dim": dim,
                    "repetitions": repetitions, "median_s": med,
                    "min_s": float(times.min()),
                    "probes_per_s": 1.0 / med if med > 0 else float("inf"),
                    "matched": matched,
                })
        xs = np.array([r["gallery_size"] for r in block], dtype=float)
        ys = np.array([r["median_s"] for r in block])
        if len(set(xs)) >= 2:
            slope, intercept = np.polyfit(xs, ys, 1)
        else:
            slope, intercept = float("nan"), float(ys[0]) if len(ys) else float("nan")
        for r in block:
            r["fit_slope_s_per_descriptor"] = float(slope)
            r["fit_intercept_s"] = float(intercept)
        rows.extend(block)
    return rows


def scaling_ratio(rows, small, large, backend=None):
    """Median latency at ``large`` divided by median latency at ``small``."""
    pick = {r["gallery_size"]: r["median_s"] for r in rows
            if backend is None or r["backend"] == backend}
    return pick[large] / pick[small]
