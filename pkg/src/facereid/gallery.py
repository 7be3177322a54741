"""Run-time gallery: bounded per-identity descriptor stores.

Size limits follow ``max |G_i| <= s1`` and ``N <= s2``.  Excess descriptors
are dropped oldest-first; excess identities are dropped least recently
matched first (ties: smaller id).  ``None`` for either limit means unbounded.
"""
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, UnknownIdentity

DEFAULT_S1 = 60
DEFAULT_S2 = 20


@dataclass(frozen=True)
class GalleryConfig:
    s1: Optional[int] = DEFAULT_S1
    s2: Optional[int] = DEFAULT_S2
    # False defers size checks to explicit enforce_limits() calls
    auto_enforce: bool = True

    def __post_init__(self):
        for name in ("s1", "s2"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be >= 1 or None, got {value}")


@dataclass
class ClusterStore:
    id: int
    entries: deque = field(default_factory=deque)  # (descriptor, inserted_frame)
    last_matched_frame: int = 0

    def __len__(self):
        return len(self.entries)

    def matrix(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, 0), dtype=np.float32)
        return np.stack([d for d, _ in self.entries])

    @property
    def frames(self):
        return [f for _, f in self.entries]


@dataclass
class EvictionReport:
    descriptors: list = field(default_factory=list)  # (identity, inserted_frame)
    identities: list = field(default_factory=list)

    def __bool__(self):
        return bool(self.descriptors or self.identities)

    def extend(self, other):
        self.descriptors.extend(other.descriptors)
        self.identities.extend(other.identities)


class GalleryView:
    """Immutable snapshot of a gallery for one frame's matching pass.

    ``matrix`` stacks every stored descriptor (float32, read-only) and
    ``owner[i]`` is the cluster index of row ``i``; ``ids[c]`` maps a cluster
    index back to its identity.
    """

    __slots__ = ("ids", "matrix", "owner", "sizes", "last_matched", "dim", "_index")

    def __init__(self, ids, matrix, owner, sizes, last_matched, dim):
        self.ids = tuple(ids)
        self.matrix = matrix
        self.owner = owner
        self.sizes = tuple(sizes)
        self.last_matched = tuple(last_matched)
        self.dim = dim
        self._index = {ident: c for c, ident in enumerate(self.ids)}
        for arr in (self.matrix, self.owner):
            arr.flags.writeable = False

    @classmethod
    def empty(cls, dim=None):
        d = dim or 0
        return cls((), np.zeros((0, d), dtype=np.float32), np.zeros(0, dtype=np.int64), (), (), dim)

    @classmethod
    def from_clusters(cls, clusters, dim=None):
        """Build a view from ``(identity, descriptors)`` pairs (tests, benchmarks)."""
        ids, blocks, sizes = [], [], []
        for ident, descs in clusters:
            if len(descs) == 0:
                block = np.zeros((0, dim or 0), dtype=np.float32)
            else:
                block = np.asarray(descs, dtype=np.float32).reshape(len(descs), -1)
            ids.append(ident)
            blocks.append(block)
            sizes.append(block.shape[0])
        nonempty = [b for b in blocks if b.size]
        if nonempty:
            dim = nonempty[0].shape[1]
        if not ids or not nonempty:
            matrix = np.zeros((0, dim or 0), dtype=np.float32)
        else:
            matrix = np.ascontiguousarray(np.concatenate(nonempty))
        owner = np.repeat(np.arange(len(ids), dtype=np.int64), sizes)
        return cls(ids, matrix, owner, sizes, [0] * len(ids), dim)

    def __len__(self):
        return len(self.ids)

    @property
    def total_descriptors(self):
        return int(self.matrix.shape[0])

    def index_of(self, ident):
        return self._index.get(ident)

    def cluster(self, ident) -> np.ndarray:
        c = self._index[ident]
        return self.matrix[self.owner == c]

    def contents(self):
        return [(ident, self.cluster(ident).copy()) for ident in self.ids]

    def __eq__(self, other):
        if not isinstance(other, GalleryView):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.sizes == other.sizes
            and self.last_matched == other.last_matched
            and np.array_equal(self.matrix, other.matrix)
        )


class Gallery:
    """Ordered identity -> ClusterStore map with eager size enforcement.

    Single writer; ``frozen_view()`` snapshots are safe to read from any
    thread while the writer proceeds.
    """

    def __init__(self, config: GalleryConfig = None, dim=None):
        self.config = config or GalleryConfig()
        self.clusters: "dict[int, ClusterStore]" = {}
        self.next_id = 1
        self.dim = dim
        self._view = None

    def __len__(self):
        return len(self.clusters)

    def __contains__(self, ident):
        return ident in self.clusters

    @property
    def ids(self):
        return list(self.clusters)

    def _check_dim(self, d):
        if self.dim is None:
            self.dim = d.shape[0]
        elif d.shape[0] != self.dim:
            raise DimensionMismatch(f"gallery holds dim {self.dim}, got {d.shape[0]}")

    def _touch(self):
        self._view = None

    def register_new_identity(self, d, frame, history=()) -> int:
        """Create a cluster holding ``history`` entries followed by ``d``.

        ``history`` is an optional sequence of ``(descriptor, frame)`` pairs
        (used when promoting a provisional cluster).  Returns the new id.
        """
        ident = self.next_id
        self.next_id += 1
        store = ClusterStore(ident, deque(), last_matched_frame=frame)
        for hd, hf in history:
            self._check_dim(hd)
            store.entries.append((hd, hf))
        self._check_dim(d)
        store.entries.append((d, frame))
        self.clusters[ident] = store
        self._touch()
        if self.config.auto_enforce:
            self.enforce_limits()
        return ident

    def add_descriptor(self, ident, d, frame):
        store = self.clusters.get(ident)
        if store is None:
            raise UnknownIdentity(ident)
        self._check_dim(d)
        store.entries.append((d, frame))
        store.last_matched_frame = frame
        self._touch()
        if self.config.auto_enforce:
            self.enforce_limits()

    def enforce_limits(self) -> EvictionReport:
        report = EvictionReport()
        s1, s2 = self.config.s1, self.config.s2
        if s1 is not None:
            for store in self.clusters.values():
                while len(store.entries) > s1:
                    _, f = store.entries.popleft()
                    report.descriptors.append((store.id, f))
        if s2 is not None and len(self.clusters) > s2:
            order = sorted(self.clusters.values(), key=lambda s: (s.last_matched_frame, s.id))
            for store in order[: len(self.clusters) - s2]:
                del self.clusters[store.id]
                report.identities.append(store.id)
        if report:
            self._touch()
        return report

    def frozen_view(self) -> GalleryView:
        if self._view is not None:
            return self._view
        ids, blocks, sizes, last = [], [], [], []
        for store in self.clusters.values():
            ids.append(store.id)
            sizes.append(len(store.entries))
            last.append(store.last_matched_frame)
            blocks.extend(d for d, _ in store.entries)
        if blocks:
            matrix = np.stack(blocks)
        else:
            matrix = np.zeros((0, self.dim or 0), dtype=np.float32)
        owner = np.repeat(np.arange(len(ids), dtype=np.int64), sizes)
        self._view = GalleryView(ids, matrix, owner, sizes, last, self.dim)
        return self._view

    def max_cluster_size(self):
        return max((len(s) for s in self.clusters.values()), default=0)

    def satisfies_limits(self):
        s1, s2 = self.config.s1, self.config.s2
        ok_s1 = s1 is None or self.max_cluster_size() <= s1
        ok_s2 = s2 is None or len(self.clusters) <= s2
        return ok_s1 and ok_s2
