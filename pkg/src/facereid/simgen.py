"""Synthetic ground-truthed descriptor streams.

Each identity owns a unit centroid.  An observation is
``normalize(centroid + N(0, intra_sigma^2 I))``; with probability
``outlier_rate`` the noise scale is ``outlier_sigma`` instead, centred on
the identity's own centroid (``outlier_mode = self``) or on the normalized
midpoint between it and another random identity's centroid
(``outlier_mode = between``).  Ghost tracks are short random-descriptor
tracks labelled GHOST.
"""
import re
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import FrameBatch, Observation, l2_normalize
from .errors import CentroidSamplingFailed
from .evaluation import GHOST_LABEL
from .preprocess import DEFAULT_GHOST_MIN_FRAMES

CENTROID_ATTEMPTS = 64


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    dim: int = 64
    n_identities: int = 5
    centroid_min_distance: float = 1.5
    intra_sigma: float = 0.01
    frames: int = 300
    presence: str = "all"
    outlier_rate: float = 0.0
    outlier_sigma: float = 0.0
    outlier_mode: str = "self"
    ghost_injection_rate: float = 0.0
    ghost_min_frames: int = DEFAULT_GHOST_MIN_FRAMES

    def __post_init__(self):
        if self.dim < 1 or self.n_identities < 1 or self.frames < 0:
            raise ValueError("dim and n_identities must be >= 1, frames >= 0")
        if not 0.0 <= self.outlier_rate < 1.0:
            raise ValueError("outlier_rate must lie in [0, 1)")
        if not 0.0 <= self.ghost_injection_rate <= 1.0:
            raise ValueError("ghost_injection_rate must lie in [0, 1]")
        if self.intra_sigma < 0 or self.outlier_sigma < 0:
            raise ValueError("noise scales must be non-negative")
        if self.outlier_mode not in ("self", "between"):
            raise ValueError("outlier_mode must be 'self' or 'between'")

    @classmethod
    def from_values(cls, values: dict):
        from .config import SIM_KEYS

        return cls(**{k: v for k, v in values.items() if k in SIM_KEYS})


@dataclass(frozen=True)
class Appearance:
    identity: int
    enter: int
    exit: int  # inclusive
    track: int


@dataclass
class SimStream:
    batches: list
    centroids: np.ndarray
    schedule: list = field(default_factory=list)
    outlier_mask: dict = field(default_factory=dict)  # (frame, track) -> bool


_ENTRY = re.compile(r"^\s*(\d+)\s*:\s*(\d+)\s*-\s*(\d+)\s*:\s*(\d+)\s*$")


def parse_presence(spec: str, n_identities: int, frames: int):
    """Build the appearance schedule.

    ``all``: every identity present throughout, track = identity + 1.
    ``sequential``: identities take turns in equal consecutive blocks.
    Otherwise ``identity:enter-exit:track`` entries separated by ``;``.
    """
    spec = spec.strip()
    last = max(frames - 1, 0)
    if spec == "all":
        return [Appearance(k, 0, last, k + 1) for k in range(n_identities)]
    if spec == "sequential":
        block = max(frames // n_identities, 1)
        out = []
        for k in range(n_identities):
            start = k * block
            end = last if k == n_identities - 1 else min(start + block - 1, last)
            out.append(Appearance(k, start, end, k + 1))
        return out
    out = []
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        m = _ENTRY.match(part)
        if not m:
            raise ValueError(f"bad presence entry {part!r}")
        ident, enter, exit_, track = map(int, m.groups())
        if ident >= n_identities or enter > exit_:
            raise ValueError(f"bad presence entry {part!r}")
        out.append(Appearance(ident, enter, exit_, track))
    for a in out:
        for b in out:
            if a is not b and a.track == b.track and a.enter <= b.exit and b.enter <= a.exit:
                raise ValueError(f"track {a.track} is used by two overlapping appearances")
    return out


def _random_simplex(rng, k, dim):
    if k < 2 or k > dim:
        return None
    s = np.eye(k) - 1.0 / k
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    q, _ = np.linalg.qr(rng.standard_normal((dim, k)))
    return s @ q.T


def _unit_rows(x):
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _min_pairwise(c):
    if len(c) < 2:
        return np.inf
    d = kernels.pairwise_distances(c.astype(np.float32))
    return d[np.triu_indices(len(c), 1)].min()


def sample_centroids(cfg: SimConfig, rng) -> np.ndarray:
    """Unit centroids at pairwise distance >= ``centroid_min_distance``.

    Attempts blend random directions with a randomly rotated regular
    simplex, moving from pure random to pure simplex over a bounded number
    of attempts.
    """
    k, dim = cfg.n_identities, cfg.dim
    simplex = _random_simplex(rng, k, dim)
    for attempt in range(CENTROID_ATTEMPTS):
        g = _unit_rows(rng.standard_normal((k, dim)))
        if simplex is not None:
            w = attempt / (CENTROID_ATTEMPTS - 1)
            g = _unit_rows((1.0 - w) * g + w * simplex)
        # float32 storage can shave a hair off the distance
        if _min_pairwise(g) >= cfg.centroid_min_distance + 1e-6 or k == 1:
            return g
    raise CentroidSamplingFailed(
        f"no {k} centroids in D={dim} with pairwise distance >= {cfg.centroid_min_distance}"
    )


def simulate(cfg: SimConfig) -> SimStream:
    rng = np.random.default_rng(cfg.seed)
    centroids = sample_centroids(cfg, rng)
    schedule = parse_presence(cfg.presence, cfg.n_identities, cfg.frames)
    next_ghost_track = max((a.track for a in schedule), default=0) + 1
    ghosts = []  # [track, frames_left]
    batches = []
    outliers = {}
    for f in range(cfg.frames):
        obs = []
        for a in sorted((a for a in schedule if a.enter <= f <= a.exit), key=lambda a: a.track):
            c = centroids[a.identity]
            is_outlier = cfg.outlier_rate > 0 and rng.random() < cfg.outlier_rate
            if is_outlier:
                center = c
                if cfg.outlier_mode == "between" and cfg.n_identities > 1:
                    other = rng.integers(cfg.n_identities - 1)
                    other += other >= a.identity
                    center = c + centroids[other]
                    center = center / np.linalg.norm(center)
                v = center + cfg.outlier_sigma * rng.standard_normal(cfg.dim)
            else:
                v = c + cfg.intra_sigma * rng.standard_normal(cfg.dim)
            outliers[(f, a.track)] = bool(is_outlier)
            obs.append(Observation(f, a.track, l2_normalize(v), f"face{a.identity}"))
        if cfg.ghost_injection_rate > 0 and rng.random() < cfg.ghost_injection_rate:
            life = int(rng.integers(1, max(cfg.ghost_min_frames, 2)))
            ghosts.append([next_ghost_track, life])
            next_ghost_track += 1
        for g in ghosts:
            obs.append(Observation(f, g[0], l2_normalize(rng.standard_normal(cfg.dim)), GHOST_LABEL))
            g[1] -= 1
        ghosts = [g for g in ghosts if g[1] > 0]
        obs.sort(key=lambda o: o.track_id)
        batches.append(FrameBatch(f, tuple(obs)))
    return SimStream(batches, centroids, schedule, outliers)


def generate_stream(cfg: SimConfig) -> list:
    """Seed-deterministic list of FrameBatch carrying truth labels."""
    return simulate(cfg).batches


def separation_report(batches):
    """``(max intra-class distance, min inter-class distance)`` over every
    non-ghost descriptor pair."""
    descs, labels = [], []
    for b in batches:
        for o in b.observations:
            if o.truth_label != GHOST_LABEL:
                descs.append(o.descriptor)
                labels.append(o.truth_label)
    if len(set(labels)) < 2:
        raise ValueError("separation needs at least two identities")
    d = kernels.pairwise_distances(np.stack(descs))
    lab = np.array(labels)
    same = lab[:, None] == lab[None, :]
    iu = np.triu(np.ones_like(same, dtype=bool), 1)
    intra = d[same & iu]
    inter = d[~same & iu]
    return (float(intra.max()) if intra.size else 0.0, float(inter.min()))
