"""Flat ``key = value`` configuration files.

One key universe is shared by the engine and the stream simulator, so a
single file may configure both; any key outside it is rejected with its
line number.  ``#`` starts a comment.
"""
import math
from dataclasses import dataclass, fields
from typing import Optional

from .errors import ConfigError
from .gallery import DEFAULT_S1, DEFAULT_S2, GalleryConfig
from .matcher import ADMISSIONS, DEFAULT_T_D, DEFAULT_T_N, MATCHERS, MatchConfig
from .preprocess import CENTRAL, DEFAULT_GHOST_MIN_FRAMES, FIVE


@dataclass(frozen=True)
class EngineConfig:
    t_d: float = DEFAULT_T_D
    t_n: int = DEFAULT_T_N
    s1: Optional[int] = DEFAULT_S1
    s2: Optional[int] = DEFAULT_S2
    ghost_min_frames: int = DEFAULT_GHOST_MIN_FRAMES
    admission: str = "pending"
    matcher: str = "dbscan"
    crop: str = CENTRAL
    histogram_equalization: bool = True
    enforce_every_n_frames: int = 1

    def __post_init__(self):
        self.match_config()
        GalleryConfig(self.s1, self.s2)
        if self.ghost_min_frames < 1:
            raise ValueError("ghost_min_frames must be >= 1")
        if self.enforce_every_n_frames < 1:
            raise ValueError("enforce_every_n_frames must be >= 1")
        if self.crop not in (CENTRAL, FIVE):
            raise ValueError(f"crop must be 'central' or 'five', got {self.crop!r}")

    def match_config(self):
        return MatchConfig(self.t_d, self.t_n, self.admission, self.matcher)

    def gallery_config(self):
        return GalleryConfig(self.s1, self.s2, auto_enforce=self.enforce_every_n_frames == 1)

    def replace(self, **changes):
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return EngineConfig(**values)


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _limit(text):
    low = text.lower()
    if low in ("inf", "none", "unlimited"):
        return None
    value = float(text)
    if math.isinf(value):
        return None
    if value != int(value):
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _int(text):
    value = float(text)
    if value != int(value):
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {text!r}")
        return text

    return parse


ENGINE_KEYS = {
    "t_d": float,
    "t_n": _int,
    "s1": _limit,
    "s2": _limit,
    "ghost_min_frames": _int,
    "admission": _choice(ADMISSIONS),
    "matcher": _choice(MATCHERS),
    "crop": _choice((CENTRAL, FIVE)),
    "histogram_equalization": _bool,
    "enforce_every_n_frames": _int,
}

SIM_KEYS = {
    "seed": _int,
    "dim": _int,
    "n_identities": _int,
    "centroid_min_distance": float,
    "intra_sigma": float,
    "frames": _int,
    "presence": str,
    "outlier_rate": float,
    "outlier_sigma": float,
    "outlier_mode": _choice(("self", "between")),
    "ghost_injection_rate": float,
    "ghost_min_frames": _int,
}

ALL_KEYS = {**SIM_KEYS, **ENGINE_KEYS}


def parse_config_text(text):
    """Parse config text into a dict of typed values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in ALL_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            out[key] = ALL_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
    return out


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def engine_config_from(values: dict) -> EngineConfig:
    kwargs = {k: v for k, v in values.items() if k in ENGINE_KEYS}
    try:
        return EngineConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def format_config(cfg) -> str:
    """Render a config dataclass back to config-file text."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            text = "inf"
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"
