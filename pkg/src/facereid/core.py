"""Descriptor arithmetic and the observation types shared by every module.

A descriptor is a read-only 1-D ``float32`` numpy array of unit L2 norm.
Arithmetic on descriptors is carried out in float64.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptySet, NonFinite, ZeroVector

DEFAULT_DIM = 4096
DESCRIPTOR_DTYPE = np.float32


def _freeze(arr):
    arr.flags.writeable = False
    return arr


def as_descriptor(values) -> np.ndarray:
    """Wrap an already unit-length vector as a frozen float32 descriptor."""
    arr = np.array(values, dtype=DESCRIPTOR_DTYPE).reshape(-1)
    if arr.size == 0:
        raise EmptySet("descriptor must have at least one component")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("descriptor has NaN or Inf components")
    return _freeze(arr)


def l2_normalize(v) -> np.ndarray:
    """Scale ``v`` to unit Euclidean length.

    Raises ZeroVector for an all-zero input and NonFinite when any
    component is NaN or Inf.
    """
    x = np.asarray(v, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise EmptySet("cannot normalize an empty vector")
    if not np.all(np.isfinite(x)):
        raise NonFinite("vector has NaN or Inf components")
    norm = np.sqrt(np.dot(x, x))
    if norm == 0.0:
        raise ZeroVector("cannot normalize the zero vector")
    return _freeze((x / norm).astype(DESCRIPTOR_DTYPE))


def euclidean_distance(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension {a.shape[-1]} vs {b.shape[-1]}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    return float(np.sqrt(np.dot(diff, diff)))


def mean_descriptor(descriptors: Sequence) -> np.ndarray:
    """Componentwise mean of ``descriptors``, re-normalized to unit length."""
    if len(descriptors) == 0:
        raise EmptySet("mean of an empty descriptor set")
    dims = {np.asarray(d).shape for d in descriptors}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed descriptor shapes {sorted(dims)}")
    stacked = np.stack([np.asarray(d, dtype=np.float64) for d in descriptors])
    mean = stacked.mean(axis=0)
    # mean of unit vectors can cancel to (numerically) nothing
    if np.sqrt(np.dot(mean, mean)) < 1e-12:
        raise ZeroVector("descriptor mean is the zero vector")
    return l2_normalize(mean)


@dataclass(frozen=True)
class Observation:
    """One tracked face at one frame.

    ``truth_label`` exists for evaluation; the matching path never reads it.
    """

    frame_index: int
    track_id: int
    descriptor: np.ndarray
    truth_label: Optional[str] = None

    @property
    def dim(self):
        return self.descriptor.shape[0]


@dataclass(frozen=True)
class FrameBatch:
    frame_index: int
    observations: tuple = field(default_factory=tuple)

    def __post_init__(self):
        obs = tuple(self.observations)
        object.__setattr__(self, "observations", obs)
        tracks = [o.track_id for o in obs]
        if len(set(tracks)) != len(tracks):
            raise ValueError(f"duplicate track ids in frame {self.frame_index}")
        for o in obs:
            if o.frame_index != self.frame_index:
                raise ValueError(
                    f"observation for frame {o.frame_index} in batch {self.frame_index}"
                )

    def __len__(self):
        return len(self.observations)
