"""Density-based online matching of probe descriptors against the gallery.

A probe matches identity ``i`` when at least ``t_n`` of ``i``'s stored
descriptors lie within Euclidean distance ``t_d``.  Among qualifying
identities the one with the most neighbours wins; ties go to the smaller
mean neighbour distance, then to the smaller identity id.  Inside one frame
an identity handed to one probe is invisible to every later probe.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import DimensionMismatch
from .gallery import Gallery, GalleryView

DEFAULT_T_D = 1.215
DEFAULT_T_N = 3
YTF_T_D = 1.27

PENDING = "pending"
IMMEDIATE = "immediate"
TRACK = "track"
ADMISSIONS = (PENDING, IMMEDIATE, TRACK)

DBSCAN = "dbscan"
ONE_NN = "1nn"
MATCHERS = (DBSCAN, ONE_NN)

MATCHED = "matched"
NEW = "new"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class MatchConfig:
    t_d: float = DEFAULT_T_D
    t_n: int = DEFAULT_T_N
    admission: str = PENDING
    matcher: str = DBSCAN

    def __post_init__(self):
        if not (0.0 < self.t_d <= 2.0):
            raise ValueError(f"t_d must lie in (0, 2], got {self.t_d}")
        if int(self.t_n) != self.t_n or self.t_n < 1:
            raise ValueError(f"t_n must be a positive integer, got {self.t_n}")
        if self.admission not in ADMISSIONS:
            raise ValueError(f"admission must be one of {ADMISSIONS}, got {self.admission!r}")
        if self.matcher not in MATCHERS:
            raise ValueError(f"matcher must be one of {MATCHERS}, got {self.matcher!r}")


@dataclass(frozen=True)
class NeighborStats:
    identity: int
    count: int
    mean_neighbor_distance: Optional[float]  # None when count == 0
    min_distance: float = float("inf")

    def rank_key(self):
        mean = self.mean_neighbor_distance if self.count else float("inf")
        return (-self.count, mean, self.identity)


@dataclass(frozen=True)
class MatchDecision:
    identity: Optional[int]  # None means no match
    stats: tuple = ()

    @property
    def matched(self):
        return self.identity is not None

    @property
    def best(self) -> Optional[NeighborStats]:
        """Stats of the matched identity, else of the top-ranked candidate."""
        if self.identity is not None:
            for s in self.stats:
                if s.identity == self.identity:
                    return s
        if not self.stats:
            return None
        return min(self.stats, key=NeighborStats.rank_key)


@dataclass(frozen=True)
class Assignment:
    frame: int
    track: int
    status: str
    identity: Optional[int] = None
    neighbor_count: int = 0
    mean_distance: Optional[float] = None
    ghost_suppressed: bool = False


def _check_probe(probe, dim):
    if dim is not None and probe.shape[0] != dim:
        raise DimensionMismatch(f"probe dim {probe.shape[0]} vs gallery dim {dim}")


def _stats_for(probe, view, excluded, t_d):
    probe = np.asarray(probe, dtype=np.float32)
    if view.total_descriptors:
        _check_probe(probe, view.dim)
    skip = np.zeros(len(view), dtype=bool)
    for ident in excluded:
        c = view.index_of(ident)
        if c is not None:
            skip[c] = True
    counts, sums, mins = kernels.cluster_scan(
        probe, view.matrix, view.owner, len(view), skip, t_d
    )
    out = []
    for c, ident in enumerate(view.ids):
        if skip[c]:
            continue
        n = int(counts[c])
        out.append(NeighborStats(ident, n, float(sums[c] / n) if n else None, float(mins[c])))
    return out


def neighbor_stats(probe, cluster, t_d) -> NeighborStats:
    """Neighbour count and mean neighbour distance of ``probe`` in one cluster.

    ``cluster`` is a ClusterStore or an (n, D) array of descriptors.
    """
    ident = getattr(cluster, "id", 0)
    descs = cluster.matrix() if hasattr(cluster, "matrix") else np.asarray(cluster)
    if len(descs) == 0:
        return NeighborStats(ident, 0, None)
    view = GalleryView.from_clusters([(ident, descs)])
    return _stats_for(probe, view, (), t_d)[0]


def match_probe(probe, view: GalleryView, excluded=(), cfg: MatchConfig = MatchConfig()) -> MatchDecision:
    if cfg.matcher == ONE_NN:
        from .baselines import online_1nn_match

        return online_1nn_match(probe, view, excluded, cfg.t_d)
    stats = _stats_for(probe, view, excluded, cfg.t_d)
    if not stats:
        return MatchDecision(None, ())
    top = min(stats, key=NeighborStats.rank_key)
    ident = top.identity if top.count >= cfg.t_n else None
    return MatchDecision(ident, tuple(stats))


def likelihood_rank(probe, view: GalleryView, cfg: MatchConfig = MatchConfig()):
    """Every identity as ``(id, count, mean distance)``, best first."""
    stats = sorted(_stats_for(probe, view, (), cfg.t_d), key=NeighborStats.rank_key)
    return [(s.identity, s.count, s.mean_neighbor_distance) for s in stats]


@dataclass
class _Provisional:
    key: int
    entries: list = field(default_factory=list)  # (descriptor, frame)
    last_frame: int = 0


class PendingPool:
    """Provisional clusters for probes that matched no registered identity.

    A provisional cluster is promoted to a registered identity on the probe
    that brings it to ``t_n`` members.  At most ``capacity`` provisional
    clusters are held; the least recently fed one is dropped first.
    """

    def __init__(self, capacity=None):
        self.capacity = capacity
        self.clusters: "dict[int, _Provisional]" = {}
        self._seq = 0

    def __len__(self):
        return len(self.clusters)

    def _best(self, probe, t_d, skip_keys):
        keys = [k for k in self.clusters if k not in skip_keys]
        if not keys:
            return None
        view = GalleryView.from_clusters(
            [(k, np.stack([d for d, _ in self.clusters[k].entries])) for k in keys]
        )
        stats = [s for s in _stats_for(probe, view, (), t_d) if s.count > 0]
        if not stats:
            return None
        return min(stats, key=NeighborStats.rank_key).identity

    def offer(self, probe, frame, cfg: MatchConfig, touched: set):
        """Add ``probe`` to its best provisional cluster or a fresh one.

        Provisional clusters in ``touched`` already took a probe this frame
        and are skipped.  Returns the earlier ``(descriptor, frame)`` entries
        when this probe completes a cluster (which leaves the pool), else None.
        """
        key = self._best(probe, cfg.t_d, touched)
        if key is None:
            self._seq += 1
            key = self._seq
            self.clusters[key] = _Provisional(key)
        prov = self.clusters[key]
        prov.entries.append((probe, frame))
        prov.last_frame = frame
        touched.add(key)
        if len(prov.entries) >= cfg.t_n:
            del self.clusters[key]
            return prov.entries[:-1]
        self._trim(touched)
        return None

    def _trim(self, keep):
        if self.capacity is None:
            return
        while len(self.clusters) > self.capacity:
            victims = [p for p in self.clusters.values() if p.key not in keep]
            if not victims:
                return
            victim = min(victims, key=lambda p: (p.last_frame, p.key))
            del self.clusters[victim.key]


def assign_frame(batch, gallery: Gallery, pool: PendingPool, cfg: MatchConfig,
                 bindings=None, update=True):
    """Assign identities to every observation in one frame.

    Probes go in ascending track id order against a snapshot taken at frame
    start.  Gallery writes (appends for matches, then registrations) are
    applied after the whole frame is decided.  With ``update=False`` the
    gallery and pool are left untouched and unmatched probes are unknown.
    ``bindings`` (track -> identity) is read and maintained for the
    ``track`` admission policy.
    """
    frame = batch.frame_index
    view = gallery.frozen_view()
    obs = sorted(batch.observations, key=lambda o: o.track_id)
    excluded = set()
    results = {}
    appends = []
    registrations = []

    bound = {}
    if cfg.admission == TRACK and bindings is not None:
        for o in obs:
            ident = bindings.get(o.track_id)
            if ident is None:
                continue
            if ident in gallery and ident not in excluded:
                bound[o.track_id] = ident
                excluded.add(ident)
            else:
                del bindings[o.track_id]

    touched = set()
    for o in obs:
        if o.track_id in bound:
            ident = bound[o.track_id]
            results[o.track_id] = Assignment(frame, o.track_id, MATCHED, ident)
            appends.append((ident, o.descriptor))
            continue
        dec = match_probe(o.descriptor, view, excluded, cfg)
        top = dec.best
        count = top.count if top else 0
        mean = top.mean_neighbor_distance if top else None
        if dec.matched:
            excluded.add(dec.identity)
            appends.append((dec.identity, o.descriptor))
            results[o.track_id] = Assignment(frame, o.track_id, MATCHED, dec.identity, count, mean)
            if bindings is not None and cfg.admission == TRACK:
                bindings[o.track_id] = dec.identity
            continue
        if update and cfg.admission in (IMMEDIATE, TRACK):
            registrations.append((o, (), count, mean))
            continue
        if update:
            history = pool.offer(o.descriptor, frame, cfg, touched)
            if history is not None:
                registrations.append((o, history, count, mean))
                continue
        results[o.track_id] = Assignment(frame, o.track_id, UNKNOWN, None, count, mean)

    if update:
        for ident, d in appends:
            if ident in gallery:
                gallery.add_descriptor(ident, d, frame)
        for o, history, count, mean in registrations:
            ident = gallery.register_new_identity(o.descriptor, frame, history)
            results[o.track_id] = Assignment(frame, o.track_id, NEW, ident, count, mean)
            if bindings is not None and cfg.admission == TRACK:
                bindings[o.track_id] = ident
    return [results[o.track_id] for o in obs]
