"""Image conditioning ahead of the embedder, and the embedder boundary.

Images are 2-D ``uint8`` arrays indexed ``[row, col]``; crop offsets are
given as ``(x, y)`` = ``(col, row)``.
"""
import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import l2_normalize, mean_descriptor
from .errors import SourceTooSmall, WrongSize

DEFAULT_GHOST_MIN_FRAMES = 32  # about one second at 32 fps
NET_INPUT = 256
PATCH = 224
FIVE_OFFSETS = ((0, 0), (32, 0), (0, 32), (32, 32), (16, 16))
CENTRAL_OFFSET = (16, 16)

CENTRAL = "central"
FIVE = "five"


@dataclass
class TrackState:
    track_id: int
    first_seen_frame: int
    frames_tracked: int = 0
    admitted: bool = False


def ghost_admit(state: TrackState, min_frames: int = DEFAULT_GHOST_MIN_FRAMES) -> bool:
    """Admit a track once it has been followed for ``min_frames`` frames.

    Admission is sticky: once set it is never revoked.
    """
    if min_frames < 1:
        raise ValueError("min_frames must be >= 1")
    if not state.admitted and state.frames_tracked >= min_frames:
        state.admitted = True
    return state.admitted


class GhostFilter:
    """Tracks per-track age across frames and gates short-lived tracks.

    A track missing from a frame is considered lost; if its id shows up
    again it starts from zero.
    """

    def __init__(self, min_frames=DEFAULT_GHOST_MIN_FRAMES):
        if min_frames < 1:
            raise ValueError("min_frames must be >= 1")
        self.min_frames = min_frames
        self.tracks: "dict[int, TrackState]" = {}

    def update(self, frame, track_ids):
        seen = set(track_ids)
        for tid in list(self.tracks):
            if tid not in seen:
                del self.tracks[tid]
        admitted = {}
        for tid in track_ids:
            st = self.tracks.get(tid)
            if st is None:
                st = self.tracks[tid] = TrackState(tid, frame)
            st.frames_tracked += 1
            admitted[tid] = ghost_admit(st, self.min_frames)
        return admitted


def _check_gray(img):
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(f"expected 2-D uint8 image, got {img.dtype} {img.shape}")
    return img


def histogram_equalize(img) -> np.ndarray:
    """Global histogram equalization via the CDF remap.

    ``h(v) = round((cdf(v) - cdf_min) / (N - cdf_min) * 255)`` with half-up
    rounding.  A single-intensity image is returned unchanged.
    """
    img = _check_gray(img)
    n = img.size
    hist = np.bincount(img.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    cdf_min = cdf[np.flatnonzero(hist)[0]]
    if cdf_min == n:
        return img.copy()
    lut = np.floor((cdf - cdf_min) / (n - cdf_min) * 255.0 + 0.5)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return lut[img]


def resize_bilinear(img, out_w=NET_INPUT, out_h=NET_INPUT) -> np.ndarray:
    """Bilinear resize with corner-aligned sampling; half-up rounding."""
    img = _check_gray(img)
    h, w = img.shape
    if h < 2 or w < 2:
        raise SourceTooSmall(f"source {w}x{h} is smaller than 2x2")
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = np.arange(out_h) * (h - 1) / (out_h - 1) if out_h > 1 else np.zeros(1)
    xs = np.arange(out_w) * (w - 1) / (out_w - 1) if out_w > 1 else np.zeros(1)
    y0 = np.minimum(np.floor(ys).astype(np.int64), h - 2)
    x0 = np.minimum(np.floor(xs).astype(np.int64), w - 2)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    src = img.astype(np.float64)
    tl = src[y0][:, x0]
    tr = src[y0][:, x0 + 1]
    bl = src[y0 + 1][:, x0]
    br = src[y0 + 1][:, x0 + 1]
    top = tl + (tr - tl) * fx
    bot = bl + (br - bl) * fx
    out = top + (bot - top) * fy
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _require_net_input(img):
    img = _check_gray(img)
    if img.shape != (NET_INPUT, NET_INPUT):
        raise WrongSize(f"expected {NET_INPUT}x{NET_INPUT}, got {img.shape[1]}x{img.shape[0]}")
    return img


def _window(img, offset):
    x, y = offset
    return img[y:y + PATCH, x:x + PATCH].copy()


def crop_central(img) -> np.ndarray:
    return _window(_require_net_input(img), CENTRAL_OFFSET)


def crop_five(img) -> list:
    """Four corner patches then the centre patch, in that fixed order."""
    img = _require_net_input(img)
    return [_window(img, off) for off in FIVE_OFFSETS]


class Embedder:
    """Maps a 224x224 patch to a real vector of length ``dim``.

    ``mean_image`` (optional, float array of patch shape) is subtracted
    from the patch before embedding.  Implementations must be deterministic
    and safe to call concurrently.
    """

    dim: int

    def __init__(self, dim, mean_image=None):
        self.dim = dim
        self.mean_image = None if mean_image is None else np.asarray(mean_image, dtype=np.float64)

    def condition(self, patch):
        x = np.asarray(patch, dtype=np.float64)
        if self.mean_image is not None:
            x = x - self.mean_image
        return x

    def embed(self, patch, key=None) -> np.ndarray:
        raise NotImplementedError


class DeterministicStubEmbedder(Embedder):
    """Seeded hash of the conditioned pixels, expanded to a unit vector."""

    def __init__(self, dim=4096, seed=0, mean_image=None):
        super().__init__(dim, mean_image)
        self.seed = seed

    def embed(self, patch, key=None):
        x = self.condition(patch)
        h = hashlib.blake2b(x.tobytes(), digest_size=16, key=str(self.seed).encode())
        h.update(repr(x.shape).encode())
        rng = np.random.default_rng(int.from_bytes(h.digest(), "little"))
        return l2_normalize(rng.standard_normal(self.dim))


class FileBackedEmbedder(Embedder):
    """Looks up precomputed vectors by ``(frame, track)`` key.

    The patch content is ignored; ``key`` is required.
    """

    def __init__(self, vectors: dict, dim=None):
        if dim is None:
            dim = len(next(iter(vectors.values()))) if vectors else 0
        super().__init__(dim)
        self.vectors = vectors

    @classmethod
    def from_stream(cls, path):
        from .io import read_stream

        dim, batches = read_stream(path)
        table = {}
        for b in batches:
            for o in b.observations:
                table[(o.frame_index, o.track_id)] = o.descriptor
        return cls(table, dim)

    def embed(self, patch, key=None):
        if key is None:
            raise KeyError("FileBackedEmbedder needs a (frame, track) key")
        return self.vectors[key]


def extract_descriptor(patches, embedder: Embedder, mode=CENTRAL, key=None) -> np.ndarray:
    expected = 1 if mode == CENTRAL else 5
    if mode not in (CENTRAL, FIVE):
        raise ValueError(f"unknown crop mode {mode!r}")
    if len(patches) != expected:
        raise ValueError(f"{mode} mode takes {expected} patch(es), got {len(patches)}")
    vectors = [embedder.embed(p, key) for p in patches]
    return mean_descriptor(vectors)


@dataclass
class ImagePipeline:
    """Face crop -> descriptor: optional equalization, resize, crop, embed.

    Equalization runs before the resize.
    """

    embedder: Embedder
    crop: str = CENTRAL
    histogram_equalization: bool = True

    def __call__(self, face, key=None):
        img = _check_gray(face)
        if self.histogram_equalization:
            img = histogram_equalize(img)
        img = resize_bilinear(img, NET_INPUT, NET_INPUT)
        patches = [crop_central(img)] if self.crop == CENTRAL else crop_five(img)
        return extract_descriptor(patches, self.embedder, self.crop, key)


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM with maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte before the raster
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != b"P5" or maxval != 255:
        raise ValueError(f"unsupported PGM: {magic!r} maxval {maxval}")
    raster = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos)
    return raster.reshape(h, w).copy()


def write_pgm(path, img: np.ndarray, comment: Optional[str] = None):
    img = _check_gray(img)
    h, w = img.shape
    header = b"P5\n"
    if comment:
        header += b"# " + comment.encode() + b"\n"
    header += f"{w} {h}\n255\n".encode()
    with open(path, "wb") as fh:
        fh.write(header + np.ascontiguousarray(img).tobytes())
