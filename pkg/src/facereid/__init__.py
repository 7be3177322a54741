"""Online open-set face re-identification with a bounded run-time gallery."""
from .core import FrameBatch, Observation, euclidean_distance, l2_normalize, mean_descriptor
from .config import EngineConfig
from .engine import Engine
from .gallery import Gallery, GalleryConfig, GalleryView
from .kernels import BACKEND
from .matcher import Assignment, MatchConfig, PendingPool, assign_frame, match_probe

__all__ = [
    "Assignment", "BACKEND", "Engine", "EngineConfig", "FrameBatch", "Gallery",
    "GalleryConfig", "GalleryView", "MatchConfig", "Observation", "PendingPool",
    "assign_frame", "euclidean_distance", "l2_normalize", "match_probe", "mean_descriptor",
]
