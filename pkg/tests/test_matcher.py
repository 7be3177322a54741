import math

import numpy as np
import pytest

from facereid.gallery import Gallery, GalleryConfig, GalleryView
from facereid.matcher import (
    IMMEDIATE, MATCHED, NEW, PENDING, TRACK, UNKNOWN, MatchConfig, PendingPool, assign_frame,
    likelihood_rank, match_probe, neighbor_stats,
)
from conftest import batch, unit
from oracles import exhaustive_match

E1, E2 = unit(1, 0), unit(0, 1)


def gallery_with(*clusters, s1=60, s2=20):
    g = Gallery(GalleryConfig(s1, s2))
    for descs in clusters:
        ident = g.register_new_identity(descs[0], 0)
        for d in descs[1:]:
            g.add_descriptor(ident, d, 0)
    return g


def test_neighbor_stats_examples():
    cluster = np.stack([unit(1, 0), unit(0, 1), unit(-1, 0)])
    s = neighbor_stats(unit(1, 0), cluster, 1.5)
    assert s.count == 2
    assert s.mean_neighbor_distance == pytest.approx(math.sqrt(2) / 2, abs=1e-6)
    assert neighbor_stats(E1, np.zeros((0, 2), np.float32), 1.0).count == 0
    assert neighbor_stats(E1, cluster, 2.0).count == 3


def test_match_examples():
    view = GalleryView.from_clusters([(1, [E1] * 3), (2, [E2] * 3)])
    probe = unit(0.8, 0.6)
    dec = match_probe(probe, view, (), MatchConfig(0.7, 3))
    assert dec.identity == 1
    by_id = {s.identity: s for s in dec.stats}
    assert by_id[1].count == 3 and by_id[2].count == 0
    assert by_id[1].mean_neighbor_distance == pytest.approx(math.sqrt(0.4), abs=1e-6)
    assert not match_probe(probe, view, (), MatchConfig(0.5, 3)).matched


def test_match_tie_break_by_mean():
    view = GalleryView.from_clusters([(1, [E1] * 3), (2, [unit(0.6, 0.8)] * 3)])
    probe = unit(3, 1)
    cfg = MatchConfig(0.7, 3)
    assert match_probe(probe, view, (), cfg).identity == 1
    rank = likelihood_rank(probe, view, cfg)
    assert [(i, c) for i, c, _ in rank] == [(1, 3), (2, 3)]
    assert rank[0][2] == pytest.approx(0.3204, abs=1e-4)
    assert rank[1][2] == pytest.approx(0.5963, abs=1e-4)


def test_final_tie_break_smallest_id():
    view = GalleryView.from_clusters([(5, [E1] * 3), (2, [E1] * 3)])
    assert match_probe(E1, view, (), MatchConfig(0.5, 3)).identity == 2


def test_excluded_and_empty():
    view = GalleryView.from_clusters([(1, [E1] * 3), (2, [E1] * 2)])
    assert match_probe(E1, view, {1}, MatchConfig(0.5, 2)).identity == 2
    assert not match_probe(E1, GalleryView.empty(2), (), MatchConfig()).matched
    assert likelihood_rank(E1, GalleryView.empty(2)) == []
    single = GalleryView.from_clusters([(1, [E1])])
    assert len(likelihood_rank(E1, single)) == 1


def test_assign_frame_exclusion_trace():
    g = gallery_with([E1] * 3)
    out = assign_frame(batch(1, unit(0.96, 0.28), unit(0.8, 0.6)), g, PendingPool(),
                       MatchConfig(0.7, 3, IMMEDIATE))
    assert (out[0].status, out[0].identity) == (MATCHED, 1)
    assert out[0].mean_distance == pytest.approx(math.sqrt(0.08), abs=1e-6)
    assert (out[1].status, out[1].identity) == (NEW, 2)


def test_immediate_empty_gallery_three_probes():
    g = Gallery()
    out = assign_frame(batch(0, E1, E2, unit(-1, 0)), g, PendingPool(), MatchConfig(admission=IMMEDIATE))
    assert [(a.status, a.identity) for a in out] == [(NEW, 1), (NEW, 2), (NEW, 3)]


def test_pending_promotion_trace():
    g, pool = Gallery(), PendingPool(capacity=20)
    cfg = MatchConfig(0.7, 3, PENDING)
    statuses = []
    for f in (1, 2, 3):
        (a,) = assign_frame(batch(f, unit(1, 0.001 * f)), g, pool, cfg)
        statuses.append((a.status, a.identity))
    assert statuses == [(UNKNOWN, None), (UNKNOWN, None), (NEW, 1)]
    assert g.clusters[1].frames == [1, 2, 3]
    assert len(pool) == 0


def test_pending_pool_same_frame_probes_do_not_merge():
    g, pool = Gallery(), PendingPool()
    cfg = MatchConfig(0.7, 2, PENDING)
    out = assign_frame(batch(0, E1, E1), g, pool, cfg)
    assert [a.status for a in out] == [UNKNOWN, UNKNOWN]
    assert len(pool) == 2


def test_pending_pool_capacity():
    pool = PendingPool(capacity=2)
    cfg = MatchConfig(0.1, 3)
    for f, v in enumerate([E1, E2, unit(-1, 0)]):
        pool.offer(v, f, cfg, set())
    assert len(pool) == 2
    assert sorted(p.last_frame for p in pool.clusters.values()) == [1, 2]


def test_one_nn_vs_dbscan_split():
    view = GalleryView.from_clusters([(1, [E1])])
    probe = unit(0.8, 0.6)
    assert match_probe(probe, view, (), MatchConfig(0.7, 3, matcher="1nn")).identity == 1
    assert not match_probe(probe, view, (), MatchConfig(0.6, 3, matcher="1nn")).matched
    assert not match_probe(probe, view, (), MatchConfig(0.7, 3)).matched


def test_track_binding_reserves_identity():
    g = gallery_with([E1] * 3)
    bindings, cfg = {}, MatchConfig(0.7, 3, TRACK)
    assign_frame(batch(0, E1, first_track=9), g, PendingPool(), cfg, bindings)
    assert bindings == {9: 1}
    # track 9 keeps identity 1 even though track 4 is the closer probe
    out = assign_frame(FrameBatchPair(E1, unit(0.2, 1)), g, PendingPool(), cfg, bindings)
    got = {a.track: (a.status, a.identity) for a in out}
    assert got[9] == (MATCHED, 1)
    assert got[4] == (NEW, 2)


def FrameBatchPair(d_track4, d_track9):
    from facereid.core import FrameBatch, Observation

    return FrameBatch(1, (Observation(1, 4, d_track4), Observation(1, 9, d_track9)))


def test_update_false_leaves_state():
    g = gallery_with([E1] * 3)
    pool = PendingPool()
    before = g.frozen_view()
    out = assign_frame(batch(2, E1, E2), g, pool, MatchConfig(0.5, 3), update=False)
    assert [a.status for a in out] == [MATCHED, UNKNOWN]
    assert g.frozen_view() == before and len(pool) == 0


def test_config_validation():
    for bad in (dict(t_d=0), dict(t_d=2.5), dict(t_n=0), dict(admission="x"), dict(matcher="y")):
        with pytest.raises(ValueError):
            MatchConfig(**bad)


def _random_clusters(rng, dim):
    pool = rng.standard_normal((6, dim))
    pool /= np.linalg.norm(pool, axis=1, keepdims=True)
    clusters = []
    for ident in rng.permutation(np.arange(1, 20))[: int(rng.integers(1, 11))]:
        n = int(rng.integers(0, 6))
        # draw from a small pool so exact distance ties occur
        descs = [pool[int(rng.integers(len(pool)))] for _ in range(n)]
        clusters.append((int(ident), np.asarray(descs, np.float32).reshape(n, dim)))
    return pool, clusters


def test_oracle_equivalence_sample(rng):
    for _ in range(500):
        dim = int(rng.integers(1, 9))
        pool, clusters = _random_clusters(rng, dim)
        probe = pool[int(rng.integers(len(pool)))].astype(np.float32) if rng.random() < 0.5 \
            else unit(*rng.standard_normal(dim))
        view = GalleryView.from_clusters(clusters, dim=dim)
        ids = [c[0] for c in clusters]
        excluded = set(rng.choice(ids, size=int(rng.integers(0, len(ids) + 1)), replace=False).tolist())
        cfg = MatchConfig(float(rng.uniform(0.2, 2.0)), int(rng.integers(1, 4)))
        expected = exhaustive_match(probe, clusters, excluded, cfg.t_d, cfg.t_n)
        assert match_probe(probe, view, excluded, cfg).identity == expected


def test_threshold_monotonicity(rng):
    centers = rng.standard_normal((4, 8))
    clusters = []
    for k, c in enumerate(centers, start=1):
        pts = c + 0.4 * rng.standard_normal((5, 8))
        clusters.append((k, pts / np.linalg.norm(pts, axis=1, keepdims=True)))
    view = GalleryView.from_clusters(clusters)
    probes = [unit(*v) for v in rng.standard_normal((60, 8))]

    def accepted(t_d, t_n):
        return {i for i, p in enumerate(probes) if match_probe(p, view, (), MatchConfig(t_d, t_n)).matched}

    prev = set()
    for t_d in np.linspace(0.2, 2.0, 10):
        cur = accepted(float(t_d), 3)
        assert prev <= cur
        prev = cur
    prev = None
    for t_n in range(1, 6):
        cur = accepted(1.2, t_n)
        assert prev is None or cur <= prev
        prev = cur
