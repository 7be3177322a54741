import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

from facereid.core import FrameBatch, Observation, as_descriptor  # noqa: E402


def unit(*xs):
    v = np.asarray(xs, dtype=np.float64)
    return as_descriptor(v / np.linalg.norm(v))


def batch(frame, *descs, labels=None, first_track=1):
    obs = []
    for k, d in enumerate(descs):
        lab = labels[k] if labels else None
        obs.append(Observation(frame, first_track + k, as_descriptor(d), lab))
    return FrameBatch(frame, tuple(obs))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
