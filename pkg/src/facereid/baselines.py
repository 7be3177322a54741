"""Comparison algorithms: online 1-nearest-neighbour matching and two
offline clusterers (DBSCAN, k-means) over a batch of descriptors.

Offline labelings are int64 arrays; ``NOISE`` (-1) marks unclustered points.
"""
from collections import Counter, deque

import numpy as np

from . import kernels
from .errors import KTooLarge
from .matcher import MatchDecision, _stats_for

NOISE = -1


def online_1nn_match(probe, view, excluded=(), t_d=1.215) -> MatchDecision:
    """Match to the identity owning the globally nearest stored descriptor,
    provided that descriptor lies within ``t_d``."""
    stats = _stats_for(probe, view, excluded, t_d)
    if not stats:
        return MatchDecision(None, ())
    nearest = min(stats, key=lambda s: (s.min_distance, s.identity))
    ident = nearest.identity if nearest.min_distance <= t_d else None
    return MatchDecision(ident, tuple(stats))


def offline_dbscan(points, eps, min_pts) -> np.ndarray:
    """Classic DBSCAN with the Euclidean metric.

    A point is core when at least ``min_pts`` points (itself included) lie
    within ``eps``.  Clusters are grown from core points in index order; a
    border point reachable from two clusters stays with the first.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    pts = np.asarray(points, dtype=np.float32)
    n = pts.shape[0]
    labels = np.full(n, NOISE, dtype=np.int64)
    if n == 0:
        return labels
    dist = kernels.pairwise_distances(pts)
    neighbours = [np.flatnonzero(dist[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbours])
    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cluster
        queue = deque([i])
        while queue:
            j = queue.popleft()
            if not core[j]:
                continue
            for k in neighbours[j]:
                if labels[k] == NOISE:
                    labels[k] = cluster
                    queue.append(k)
        cluster += 1
    return labels


def _sq_dists(x, centers):
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def offline_kmeans(points, k, seed=0, max_iter=300) -> np.ndarray:
    """Lloyd iterations from a seeded k-means++ start."""
    x = np.asarray(points, dtype=np.float64)
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise KTooLarge(f"k={k} exceeds point count {n}")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = _sq_dists(x, centers[:1]).ravel()
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            # fewer distinct points than k left: take the first unused index
            used = {tuple(row) for row in centers[:c]}
            idx = next((i for i in range(n) if tuple(x[i]) not in used), c)
        else:
            idx = rng.choice(n, p=closest / total)
        centers[c] = x[idx]
        closest = np.minimum(closest, _sq_dists(x, centers[c:c + 1]).ravel())

    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d = _sq_dists(x, centers)
        new = d.argmin(axis=1)
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = x[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                far = d[np.arange(n), labels].argmax()
                centers[c] = x[far]
                labels[far] = c
    return labels


def clustering_accuracy(labels, truth) -> float:
    """Fraction of points whose cluster's majority truth label is their own.

    Noise points always count as wrong.
    """
    labels = np.asarray(labels)
    truth = list(truth)
    if len(truth) != len(labels):
        raise ValueError("labeling and truth cover different point sets")
    if not truth:
        return 0.0
    groups = {}
    for lab, t in zip(labels.tolist(), truth):
        if lab == NOISE:
            continue
        groups.setdefault(lab, Counter())[t] += 1
    correct = sum(c.most_common(1)[0][1] for c in groups.values())
    return correct / len(truth)
