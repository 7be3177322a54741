"""Consistency Confusion Matrix (CCM) evaluation.

Rows are ground-truth faces, columns predicted identities.  Each face's
most frequent predicted identity counts as its correct one and is moved
onto the diagonal; every other identity and the trailing ``unknown``
column follow.  Off-diagonal mass inside the first P columns is false
acceptance, everything past column P is false rejection.
"""
import csv
import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import EmptyMatrix, MissingTruth
from .matcher import UNKNOWN

GHOST_LABEL = "GHOST"
UNKNOWN_COL = "unknown"
PLACEHOLDER = None  # diagonal slot for a face that owns no major identity


@dataclass
class RawTable:
    """Per-face counts of predicted outcomes, rows in first-seen order."""

    rows: dict = field(default_factory=dict)  # label -> Counter(id | UNKNOWN_COL)
    ghost_total: int = 0
    ghost_leaks: int = 0

    @classmethod
    def from_counts(cls, counts: dict):
        t = cls()
        for label, row in counts.items():
            t.rows[label] = Counter({k: v for k, v in row.items() if v})
        return t

    @property
    def total(self):
        return sum(sum(c.values()) for c in self.rows.values())


@dataclass
class ConsistencyConfusionMatrix:
    rows: list
    cols: list  # first len(rows) columns are diagonal slots; last is UNKNOWN_COL
    counts: np.ndarray

    @property
    def p(self):
        return len(self.rows)

    @property
    def q(self):
        return len(self.cols)

    def col_labels(self):
        out = []
        for c in self.cols:
            if c is PLACEHOLDER:
                out.append("-")
            else:
                out.append(str(c))
        return out


@dataclass(frozen=True)
class EvalMetrics:
    tp: int
    fa: int
    fr: int
    total: int
    accuracy: float
    far: float
    frr: float
    uar: float

    @property
    def exact(self):
        """``(accuracy, far, frr)`` as exact fractions."""
        return (Fraction(self.tp, self.total), Fraction(self.fa, self.total),
                Fraction(self.fr, self.total))


def accumulate(assignments, truth) -> RawTable:
    """Tally assignments per ground-truth face.

    ``truth`` maps ``(frame, track)`` to a face label.  Observations labelled
    GHOST never form a row; any of them that received an identity is counted
    in ``ghost_leaks``.
    """
    table = RawTable()
    for a in assignments:
        label = truth.get((a.frame, a.track))
        if label is None:
            raise MissingTruth(a.frame, a.track)
        if label == GHOST_LABEL:
            table.ghost_total += 1
            if a.status != UNKNOWN:
                table.ghost_leaks += 1
            continue
        key = UNKNOWN_COL if a.status == UNKNOWN else a.identity
        table.rows.setdefault(label, Counter())[key] += 1
    return table


def _major(row: Counter):
    ids = [(cnt, k) for k, cnt in row.items() if k != UNKNOWN_COL and cnt > 0]
    if not ids:
        return None
    cnt, k = max(ids, key=lambda t: (t[0], -t[1]))
    return k, cnt


def order_columns(raw: RawTable) -> ConsistencyConfusionMatrix:
    """Lay a raw table out as a CCM with majors on the diagonal.

    When two faces share a major identity the face with the larger count
    keeps it (ties: earlier row); the other face's diagonal slot is a
    placeholder column of zeros.
    """
    labels = list(raw.rows)
    majors = {lab: _major(raw.rows[lab]) for lab in labels}
    claimed = {}
    order = sorted(
        (i for i, lab in enumerate(labels) if majors[lab] is not None),
        key=lambda i: (-majors[labels[i]][1], i),
    )
    for i in order:
        ident = majors[labels[i]][0]
        if ident not in claimed:
            claimed[ident] = i
    diag = [PLACEHOLDER] * len(labels)
    for ident, i in claimed.items():
        diag[i] = ident
    every = set()
    for row in raw.rows.values():
        every.update(k for k in row if k != UNKNOWN_COL)
    rest = sorted(every - set(claimed))
    cols = diag + rest + [UNKNOWN_COL]
    counts = np.zeros((len(labels), len(cols)), dtype=np.int64)
    for r, lab in enumerate(labels):
        row = raw.rows[lab]
        for c, col in enumerate(cols):
            if col is not PLACEHOLDER:
                counts[r, c] = row.get(col, 0)
    return ConsistencyConfusionMatrix(labels, cols, counts)


def metrics(ccm: ConsistencyConfusionMatrix) -> EvalMetrics:
    counts = ccm.counts
    total = int(counts.sum())
    if total == 0:
        raise EmptyMatrix("CCM has no observations")
    p = ccm.p
    diag = np.diagonal(counts[:, :p])
    tp = int(diag.sum())
    fa = int(counts[:, :p].sum()) - tp
    fr = int(counts[:, p:].sum())
    return EvalMetrics(tp, fa, fr, total, tp / total, fa / total, fr / total, _uar([ccm]))


def _row_recalls(ccm):
    sums = ccm.counts.sum(axis=1)
    diag = np.diagonal(ccm.counts[:, :ccm.p])
    return [int(d) / int(s) for d, s in zip(diag, sums) if s > 0]


def _uar(ccms):
    recalls = list(itertools.chain.from_iterable(_row_recalls(c) for c in ccms))
    return float(np.mean(recalls)) if recalls else 0.0


def pooled_metrics(ccms) -> EvalMetrics:
    """Pool several CCMs by summing TP/FA/FR and totals; UAR over all rows."""
    parts = [metrics(c) for c in ccms if c.counts.sum() > 0]
    if not parts:
        raise EmptyMatrix("no fold has observations")
    tp = sum(m.tp for m in parts)
    fa = sum(m.fa for m in parts)
    fr = sum(m.fr for m in parts)
    total = sum(m.total for m in parts)
    return EvalMetrics(tp, fa, fr, total, tp / total, fa / total, fr / total, _uar(ccms))


def truth_of(batches):
    return {(o.frame_index, o.track_id): o.truth_label for b in batches for o in b.observations}


@dataclass
class FoldResult:
    ccms: list
    tables: list
    fold_metrics: list
    pooled: EvalMetrics
    assignments: list


def evaluate_run(batches, assignments):
    table = accumulate(assignments, truth_of(batches))
    return table, order_columns(table)


def fold_runner(folds, engine_factory) -> FoldResult:
    """Run a fresh engine per fold and pool the resulting CCMs."""
    ccms, tables, per, runs = [], [], [], []
    for batches in folds:
        engine = engine_factory()
        assigned = engine.run(batches)
        table, ccm = evaluate_run(batches, assigned)
        ccms.append(ccm)
        tables.append(table)
        per.append(metrics(ccm) if table.total else None)
        runs.append(assigned)
    return FoldResult(ccms, tables, per, pooled_metrics(ccms), runs)


SWEEP_PARAMS = ("t_d", "t_n", "s1")


def grid_points(grid: dict):
    """Cartesian product of a ``{param: [values]}`` grid, in key order."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("sweep grid is empty")
    unknown = set(grid) - set(SWEEP_PARAMS)
    if unknown:
        raise ValueError(f"cannot sweep {sorted(unknown)}; allowed: {SWEEP_PARAMS}")
    keys = list(grid)
    for combo in itertools.product(*(grid[k] for k in keys)):
        yield dict(zip(keys, combo))


def sweep(batches, grid: dict, base_config=None, engine_factory=None, gallery=None, frozen=False):
    """One full independent run per grid point.

    Returns a list of dict rows with the swept parameters followed by
    tp, fa, fr, accuracy, far, frr, uar and the count of matched probes.
    ``gallery`` (optional) seeds every run with a copy of that gallery;
    combine with ``frozen=True`` to match against it read-only.
    """
    from .config import EngineConfig
    from .engine import Engine

    base_config = base_config or EngineConfig()
    if engine_factory is None:
        def engine_factory(cfg):
            seeded = _copy_gallery(gallery, cfg) if gallery is not None else None
            return Engine(cfg, gallery=seeded, frozen=frozen)

    rows = []
    for point in grid_points(grid):
        cfg = base_config.replace(**point)
        assigned = engine_factory(cfg).run(batches)
        _, ccm = evaluate_run(batches, assigned)
        m = metrics(ccm)
        row = dict(point)
        row.update(tp=m.tp, fa=m.fa, fr=m.fr, accuracy=m.accuracy, far=m.far,
                   frr=m.frr, uar=m.uar,
                   matched=sum(1 for a in assigned if a.status == "matched"))
        rows.append(row)
    return rows


def _copy_gallery(src, cfg):
    from .gallery import Gallery

    g = Gallery(cfg.gallery_config(), dim=src.dim)
    g.next_id = src.next_id
    for store in src.clusters.values():
        entries = list(store.entries)
        g.clusters[store.id] = type(store)(store.id, type(store.entries)(entries),
                                           store.last_matched_frame)
    if cfg.gallery_config().auto_enforce:
        g.enforce_limits()
    return g


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "inf"
    return str(v)


def write_ccm_csv(ccm: ConsistencyConfusionMatrix, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["actual"] + ccm.col_labels())
    for label, row in zip(ccm.rows, ccm.counts):
        w.writerow([label] + [int(x) for x in row])


METRIC_COLUMNS = ("tp", "fa", "fr", "accuracy", "far", "frr", "uar")


def metrics_row(m: Optional[EvalMetrics]):
    if m is None:
        return {k: "" for k in METRIC_COLUMNS}
    return {"tp": m.tp, "fa": m.fa, "fr": m.fr, "accuracy": m.accuracy,
            "far": m.far, "frr": m.frr, "uar": m.uar}


def write_rows_csv(rows, fh, columns=None):
    if columns is None:
        columns = list(rows[0]) if rows else list(METRIC_COLUMNS)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in columns])
