"""Hot distance kernels, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports cleanly and the environment
variable ``FACEREID_DISABLE_JIT`` is unset (or ``0``).  Both variants are
always importable under explicit names so the benchmark and the test-suite
can compare them side by side.

All kernels take float32 descriptor storage and accumulate in float64.
"""
import os

import numpy as np

_FLAG = os.environ.get("FACEREID_DISABLE_JIT", "0").strip().lower()
_WANT_JIT = _FLAG in ("", "0", "false", "no", "off")

try:
    import numba as _nb
except ImportError:  # pragma: no cover - exercised only without numba
    _nb = None

HAVE_NUMBA = _nb is not None
BACKEND = "numba" if (HAVE_NUMBA and _WANT_JIT) else "numpy"

# rows per chunk in the numpy fallbacks; bounds the float64 temporaries
_CHUNK = 256


def _maybe_njit(fn):
    if HAVE_NUMBA:
        return _nb.njit(cache=True, nogil=True)(fn)
    return None


# ---------------------------------------------------------------------------
# per-cluster neighbour scan
# ---------------------------------------------------------------------------

def _cluster_scan_loops(probe, matrix, owner, n_clusters, skip, t_d):
    counts = np.zeros(n_clusters, dtype=np.int64)
    sums = np.zeros(n_clusters, dtype=np.float64)
    mins = np.full(n_clusters, np.inf)
    n, dim = matrix.shape
    for i in range(n):
        c = owner[i]
        if skip[c]:
            continue
        acc = 0.0
        for k in range(dim):
            diff = np.float64(probe[k]) - np.float64(matrix[i, k])
            acc += diff * diff
        d = np.sqrt(acc)
        if d < mins[c]:
            mins[c] = d
        if d <= t_d:
            counts[c] += 1
            sums[c] += d
    return counts, sums, mins


cluster_scan_numba = _maybe_njit(_cluster_scan_loops)


def cluster_scan_numpy(probe, matrix, owner, n_clusters, skip, t_d):
    counts = np.zeros(n_clusters, dtype=np.int64)
    sums = np.zeros(n_clusters, dtype=np.float64)
    mins = np.full(n_clusters, np.inf)
    keep = ~skip[owner] if len(owner) else np.zeros(0, dtype=bool)
    rows = np.flatnonzero(keep)
    if rows.size == 0:
        return counts, sums, mins
    p = probe.astype(np.float64)
    dist = np.empty(rows.size)
    for start in range(0, rows.size, _CHUNK):
        sel = rows[start:start + _CHUNK]
        diff = matrix[sel].astype(np.float64) - p
        dist[start:start + _CHUNK] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    own = owner[rows]
    np.minimum.at(mins, own, dist)
    hit = dist <= t_d
    np.add.at(counts, own[hit], 1)
    np.add.at(sums, own[hit], dist[hit])
    return counts, sums, mins


def cluster_scan(probe, matrix, owner, n_clusters, skip, t_d):
    """Scan every stored descriptor once against ``probe``.

    Returns per-cluster ``(counts, sums, mins)``: the number of descriptors
    within ``t_d`` (inclusive), the sum of those distances, and the smallest
    distance seen.  Clusters flagged in ``skip`` are not visited at all and
    report ``(0, 0.0, inf)``.
    """
    if BACKEND == "numba":
        return cluster_scan_numba(probe, matrix, owner, n_clusters, skip, float(t_d))
    return cluster_scan_numpy(probe, matrix, owner, n_clusters, skip, float(t_d))


# ---------------------------------------------------------------------------
# full pairwise distance matrix
# ---------------------------------------------------------------------------

def _pairwise_loops(points):
    n, dim = points.shape
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(dim):
                diff = np.float64(points[i, k]) - np.float64(points[j, k])
                acc += diff * diff
            d = np.sqrt(acc)
            out[i, j] = d
            out[j, i] = d
    return out


pairwise_distances_numba = _maybe_njit(_pairwise_loops)


def pairwise_distances_numpy(points):
    x = points.astype(np.float64)
    n = x.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    # keep each float64 difference block around 16M elements
    step = max(1, int(2 ** 24 // max(n * x.shape[1], 1)))
    for start in range(0, n, step):
        block = x[start:start + step]
        diff = block[:, None, :] - x[None, :, :]
        out[start:start + block.shape[0]] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(out, 0.0)
    return out


def pairwise_distances(points):
    """Symmetric (n, n) Euclidean distance matrix of the rows of ``points``."""
    points = np.ascontiguousarray(points, dtype=np.float32)
    if BACKEND == "numba":
        return pairwise_distances_numba(points)
    return pairwise_distances_numpy(points)


class use_backend:
    """Context manager forcing the ``numba`` or ``numpy`` path temporarily."""

    def __init__(self, name):
        if name not in ("numba", "numpy"):
            raise ValueError(f"unknown backend {name!r}")
        if name == "numba" and not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        self.name = name

    def __enter__(self):
        global BACKEND
        self._saved = BACKEND
        BACKEND = self.name
        return self

    def __exit__(self, *exc):
        global BACKEND
        BACKEND = self._saved
        return False


def available_backends():
    return ("numba", "numpy") if HAVE_NUMBA else ("numpy",)
