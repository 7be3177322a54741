"""JSONL wire formats: descriptor streams, assignments, gallery checkpoints.

Stream file: a ``{"dim": D}`` header line, then one record per observation
sorted by (frame, track)::

    {"frame": 0, "track": 1, "truth": "face0", "descriptor": [0.12, ...]}

Descriptor components are written as the shortest decimal that round-trips
to the same float32, so reading a file back is bit-exact.
"""
import json
from collections import deque

import numpy as np

from .core import FrameBatch, Observation, as_descriptor
from .errors import DimensionMismatch
from .gallery import ClusterStore, Gallery, GalleryConfig
from .matcher import Assignment


class StreamFormatError(ValueError):
    pass


def _vec(values) -> str:
    return "[" + ",".join(str(x) for x in np.asarray(values, dtype=np.float32)) + "]"


def _num(x):
    return "null" if x is None else json.dumps(x)


def stream_lines(dim, batches):
    yield json.dumps({"dim": int(dim)})
    for b in sorted(batches, key=lambda b: b.frame_index):
        for o in sorted(b.observations, key=lambda o: o.track_id):
            if o.descriptor.shape[0] != dim:
                raise DimensionMismatch(f"descriptor dim {o.descriptor.shape[0]} != header {dim}")
            yield (
                f'{{"frame": {o.frame_index}, "track": {o.track_id}, '
                f'"truth": {json.dumps(o.truth_label)}, "descriptor": {_vec(o.descriptor)}}}'
            )


def write_stream(path, batches, dim=None):
    batches = list(batches)
    if dim is None:
        dim = next((o.descriptor.shape[0] for b in batches for o in b.observations), 0)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in stream_lines(dim, batches):
            fh.write(line + "\n")


def read_stream(path):
    """Return ``(dim, batches)``.  Frames with no records produce no batch."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise StreamFormatError(f"{path}: missing dim header")
    header = json.loads(lines[0])
    if not isinstance(header, dict) or "dim" not in header:
        raise StreamFormatError(f"{path}: first line must be a dim header")
    dim = int(header["dim"])
    frames = {}
    prev = None
    for lineno, line in enumerate(lines[1:], start=2):
        rec = json.loads(line)
        desc = rec["descriptor"]
        if len(desc) != dim:
            raise DimensionMismatch(f"{path}:{lineno}: descriptor length {len(desc)} != {dim}")
        key = (int(rec["frame"]), int(rec["track"]))
        if prev is not None and key <= prev:
            raise StreamFormatError(f"{path}:{lineno}: records not sorted by frame, track")
        prev = key
        obs = Observation(key[0], key[1], as_descriptor(desc), rec.get("truth"))
        frames.setdefault(key[0], []).append(obs)
    return dim, [FrameBatch(f, tuple(obs)) for f, obs in frames.items()]


def assignment_line(a: Assignment) -> str:
    mean = None if a.mean_distance is None else float(a.mean_distance)
    return (
        f'{{"frame": {a.frame}, "track": {a.track}, "status": "{a.status}", '
        f'"id": {_num(a.identity)}, "neighbor_count": {int(a.neighbor_count)}, '
        f'"mean_distance": {_num(mean)}, "ghost_suppressed": {_num(bool(a.ghost_suppressed))}}}'
    )


def write_assignments(path, assignments):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in assignments:
            fh.write(assignment_line(a) + "\n")


def read_assignments(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            r = json.loads(line)
            if (r["id"] is None) != (r["status"] == "unknown"):
                raise StreamFormatError(f"id must be null exactly when status is unknown: {line.strip()}")
            out.append(Assignment(
                int(r["frame"]), int(r["track"]), r["status"], r["id"],
                int(r.get("neighbor_count", 0)), r.get("mean_distance"),
                bool(r.get("ghost_suppressed", False)),
            ))
    return out


def checkpoint_lines(gallery: Gallery):
    """Header ``{"dim", "next_id"}`` then one cluster per line.

    A gallery that never issued an identity serializes to nothing.
    """
    if gallery.next_id == 1 and not gallery.clusters:
        return
    yield json.dumps({"dim": gallery.dim, "next_id": gallery.next_id})
    for store in gallery.clusters.values():
        descs = ",".join(_vec(d) for d, _ in store.entries)
        yield (
            f'{{"id": {store.id}, "last_matched_frame": {store.last_matched_frame}, '
            f'"frames": {json.dumps(store.frames)}, "descriptors": [{descs}]}}'
        )


def save_checkpoint(path, gallery: Gallery):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in checkpoint_lines(gallery):
            fh.write(line + "\n")


def load_checkpoint(path, config: GalleryConfig = None) -> Gallery:
    g = Gallery(config)
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        return g
    header = json.loads(lines[0])
    g.dim = header["dim"]
    g.next_id = int(header["next_id"])
    for line in lines[1:]:
        r = json.loads(line)
        entries = deque(
            (as_descriptor(d), int(f)) for d, f in zip(r["descriptors"], r["frames"])
        )
        g.clusters[int(r["id"])] = ClusterStore(int(r["id"]), entries, int(r["last_matched_frame"]))
    g.enforce_limits()
    return g
