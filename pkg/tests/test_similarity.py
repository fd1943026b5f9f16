"""Similarity component and composite score tests."""

import numpy as np
import pytest

from galign.graph import AttributedGraph, UNTYPED
from galign.similarity import (AnchorView, SimilarityConfig, ScoreContext,
                               type_gate, anchor_similarity,
                               relative_degree_distance, histogram_similarity,
                               weighted_jaccard, vertex_attr_similarity,
                               edge_attr_similarity, sigma)
from galign import bench

TOL = 1e-12


# -- anchor component ------------------------------------------------------


def anchor_fixture():
    # u touches anchors a and b; v touches the counterparts of a and c
    g1 = AttributedGraph.from_data(["u", "a", "b", "c"],
                                   [(0, 1), (0, 2), (1, 3)])
    g2 = AttributedGraph.from_data(["v", "ma", "mb", "mc"],
                                   [(0, 1), (0, 3)])
    anchors = AnchorView([(1, 1), (2, 2), (3, 3)])
    return g1, g2, anchors


def test_anchor_similarity_value():
    g1, g2, anchors = anchor_fixture()
    assert abs(anchor_similarity(g1, g2, 0, 0, anchors) - 1.0 / 3.0) < TOL


def test_anchor_similarity_no_anchored_neighbors():
    g1, g2, _ = anchor_fixture()
    assert anchor_similarity(g1, g2, 0, 0, AnchorView.empty()) == 0.0


def test_anchor_similarity_full_match():
    g1 = AttributedGraph.from_data(["u", "a", "b"], [(0, 1), (0, 2)])
    g2 = AttributedGraph.from_data(["v", "ma", "mb"], [(0, 1), (0, 2)])
    anchors = AnchorView([(1, 1), (2, 2)])
    assert anchor_similarity(g1, g2, 0, 0, anchors) == 1.0


def test_anchor_similarity_ignores_plain_neighbors():
    g1 = AttributedGraph.from_data(["u", "a", "x"], [(0, 1), (0, 2)])
    g2 = AttributedGraph.from_data(["v", "ma", "y"], [(0, 1), (0, 2)])
    anchors = AnchorView([(1, 1)])
    assert anchor_similarity(g1, g2, 0, 0, anchors) == 1.0


# -- degree component ------------------------------------------------------


def test_degree_distance_values():
    assert abs(relative_degree_distance(2, 6) - 0.5) < TOL
    assert abs(relative_degree_distance(0, 5) - 1.0 / 3.0) < TOL
    assert relative_degree_distance(7, 7) == 1.0
    assert relative_degree_distance(0, 0) == 1.0


def test_degree_distance_bounds():
    rng = np.random.default_rng(7)
    for _ in range(500):
        d1, d2 = rng.integers(0, 1000, size=2)
        val = relative_degree_distance(int(d1), int(d2))
        assert 0.0 < val <= 1.0
        assert val == relative_degree_distance(int(d2), int(d1))


# -- histogram component ---------------------------------------------------


def test_histogram_similarity_values():
    assert abs(histogram_similarity({0: 2, 1: 1}, {0: 1, 1: 1}) - 2.0 / 3.0) < TOL
    assert histogram_similarity({0: 3, 2: 1}, {0: 3, 2: 1}) == 1.0
    assert histogram_similarity({0: 2}, {1: 2}) == 0.0
    assert histogram_similarity({}, {}) == 1.0
    assert histogram_similarity({0: 1}, {}) == 0.0


# -- token overlap component -----------------------------------------------


def test_weighted_jaccard_values():
    assert abs(weighted_jaccard({"x", "y"}, {"y", "z"}) - 1.0 / 3.0) < TOL
    assert weighted_jaccard({"x"}, {"x"}) == 1.0
    assert weighted_jaccard({"x"}, {"y"}) == 0.0
    assert weighted_jaccard(set(), {"x"}) == 0.0
    assert weighted_jaccard(set(), set()) == 0.0


def test_weighted_jaccard_with_weights():
    val = weighted_jaccard({"x", "y"}, {"y", "z"}, {"y": 2.0})
    assert abs(val - 0.5) < TOL


def test_vertex_attr_similarity_table_override():
    g1 = AttributedGraph.from_data(["u"], [], vertex_attrs=[{"x"}])
    g2 = AttributedGraph.from_data(["v"], [], vertex_attrs=[{"x"}])
    cfg = SimilarityConfig(use_vertex_attrs=True, external_table={(0, 0): 0.7})
    assert vertex_attr_similarity(g1, g2, 0, 0, cfg) == 0.7
    cfg = SimilarityConfig(use_vertex_attrs=True, external_table={})
    assert vertex_attr_similarity(g1, g2, 0, 0, cfg) == 0.0


# -- edge attribute component ----------------------------------------------


def numeric_edge_fixture():
    schema = (("year", "numeric"),)
    g1 = AttributedGraph.from_data(
        ["u", "a", "b"], [(0, 1), (0, 2)], edge_schema=schema,
        edge_attrs={(0, 1): (2014.0,), (0, 2): (2016.0,)})
    g2 = AttributedGraph.from_data(
        ["v", "c", "d"], [(0, 1)], edge_schema=schema,
        edge_attrs={(0, 1): (2014.0,)})
    return g1, g2


def test_numeric_edge_similarity_value():
    g1, g2 = numeric_edge_fixture()
    cfg = SimilarityConfig(edge_attr_mode="numeric", close_epsilon=1.0)
    assert abs(edge_attr_similarity(g1, g2, 0, 0, cfg) - 0.5) < TOL


def test_numeric_edge_similarity_corners():
    g1, g2 = numeric_edge_fixture()
    cfg = SimilarityConfig(edge_attr_mode="numeric", close_epsilon=10.0)
    assert edge_attr_similarity(g1, g2, 0, 0, cfg) == 1.0
    # isolated endpoint has no incident values
    assert edge_attr_similarity(g1, g2, 0, 2, cfg) == 0.0
    # a missing value never counts as close
    g3 = AttributedGraph.from_data(["v", "c"], [(0, 1)],
                                   edge_schema=(("year", "numeric"),),
                                   edge_attrs={(0, 1): (None,)})
    assert edge_attr_similarity(g1, g3, 0, 0, cfg) == 0.0


def test_token_edge_similarity_value():
    schema = (("tags", "set"),)
    g1 = AttributedGraph.from_data(
        ["u", "a", "b"], [(0, 1), (0, 2)], edge_schema=schema,
        edge_attrs={(0, 1): (frozenset({"x"}),),
                    (0, 2): (frozenset({"x", "z"}),)})
    g2 = AttributedGraph.from_data(
        ["v", "c"], [(0, 1)], edge_schema=schema,
        edge_attrs={(0, 1): (frozenset({"x"}),)})
    cfg = SimilarityConfig(edge_attr_mode="set")
    assert abs(edge_attr_similarity(g1, g2, 0, 0, cfg) - 1.0 / 3.0) < TOL
    cfg = SimilarityConfig(edge_attr_mode="set", token_weights={"x": 2.0})
    assert abs(edge_attr_similarity(g1, g2, 0, 0, cfg) - 0.4) < TOL


# -- type gate -------------------------------------------------------------


def typed_pair():
    g1 = AttributedGraph.from_data(["u", "a"], [(0, 1)],
                                   vertex_types=["user", "page"])
    g2 = AttributedGraph.from_data(["v", "b"], [(0, 1)],
                                   vertex_types=["page", "user"])
    cfg = SimilarityConfig.detect(g1, g2)
    return g1, g2, cfg


def test_type_gate():
    g1, g2, cfg = typed_pair()
    assert type_gate(g1, g2, 0, 0, cfg) == 0
    assert type_gate(g1, g2, 0, 1, cfg) == 1
    assert type_gate(g1, g2, 1, 0, cfg) == 1


def test_gate_zeroes_total_but_not_components():
    g1, g2, cfg = typed_pair()
    score = sigma(g1, g2, 0, 0, AnchorView.empty(), cfg)
    assert score.total == 0.0
    assert score.components["type_gate"] == 0.0
    assert score.components["degree"] == 1.0


def test_type_translation_across_graphs():
    # the same type names get different local ids in each graph; the
    # gate must still match them up
    g1 = AttributedGraph.from_data(["a", "b"], [], vertex_types=["x", "y"])
    g2 = AttributedGraph.from_data(["c", "d"], [], vertex_types=["y", "x"])
    cfg = SimilarityConfig.detect(g1, g2)
    assert type_gate(g1, g2, 0, 1, cfg) == 1
    assert type_gate(g1, g2, 1, 0, cfg) == 1
    assert type_gate(g1, g2, 0, 0, cfg) == 0


def test_untyped_vertices_pass_gate():
    g1 = AttributedGraph.from_data(["a"], [])
    g2 = AttributedGraph.from_data(["b"], [])
    cfg = SimilarityConfig.detect(g1, g2)
    assert type_gate(g1, g2, 0, 0, cfg) == 1


# -- composite score -------------------------------------------------------


def test_composite_average_arithmetic():
    # all six components active: the composite is their plain average
    parts = (0.5, 0.8, 1.0, 1.0, 0.2, 0.0)
    total = sum(parts) / 6.0
    assert abs(total - 0.5833333333333334) < TOL


def test_metadata_free_sigma_is_half_anchor_plus_degree():
    g1, g2, anchors = anchor_fixture()
    cfg = SimilarityConfig.detect(g1, g2)
    assert cfg.n_active() == 2
    score = sigma(g1, g2, 0, 0, anchors, cfg)
    expect = (anchor_similarity(g1, g2, 0, 0, anchors)
              + relative_degree_distance(g1.degree(0), g2.degree(0))) / 2.0
    assert score.total == expect


def test_detect_flags():
    g1 = AttributedGraph.from_data(["a"], [], vertex_types=["t"],
                                   vertex_attrs=[{"x"}])
    g2 = AttributedGraph.from_data(["b"], [], vertex_types=["t"],
                                   vertex_attrs=[{"x"}])
    cfg = SimilarityConfig.detect(g1, g2)
    assert cfg.use_vertex_types and cfg.use_vertex_attrs
    assert not cfg.use_edge_types and cfg.edge_attr_mode is None
    assert cfg.n_active() == 4
    plain = AttributedGraph.from_data(["c"], [])
    cfg = SimilarityConfig.detect(g1, plain)
    # attrs on only one side cannot overlap, so the component stays off
    assert not cfg.use_vertex_attrs
    cfg = SimilarityConfig.detect(g1, plain, external_table={(0, 0): 1.0})
    assert cfg.use_vertex_attrs


def attach_edge_metadata(g, rng, mode):
    """Random edge types plus one numeric or one set attribute column."""
    etypes = {key: "e%d" % rng.integers(0, 3) for key in g.edges}
    eattrs = {}
    for key in g.edges:
        if mode == "numeric":
            eattrs[key] = (float(rng.integers(2000, 2006)),)
        else:
            eattrs[key] = (frozenset("k%d" % t for t in
                                     rng.integers(0, 6, size=2).tolist()),)
    schema = (("year", "numeric"),) if mode == "numeric" else (("tags", "set"),)
    vtypes = [g.vtype_names[t] if t != UNTYPED else None for t in g.vtype]
    return AttributedGraph.from_data(g.ext_ids, g.edges, vertex_types=vtypes,
                                     vertex_attrs=[set(a) for a in g.vattrs],
                                     edge_schema=schema, edge_types=etypes,
                                     edge_attrs=eattrs)


def rich_pair(seed, mode):
    rng = np.random.default_rng(seed)
    g1 = bench.random_graph(30, 3.0, n_types=3, tokens_per_vertex=2,
                            token_pool=8, connected=False, seed=seed)
    g2 = bench.random_graph(30, 3.0, n_types=3, tokens_per_vertex=2,
                            token_pool=8, connected=False, seed=seed + 1)
    g1 = attach_edge_metadata(g1, rng, mode)
    g2 = attach_edge_metadata(g2, rng, mode)
    lefts = rng.permutation(30)[:8]
    rights = rng.permutation(30)[:8]
    anchors = AnchorView(list(zip(lefts.tolist(), rights.tolist())))
    return g1, g2, anchors


@pytest.mark.parametrize("mode", ["numeric", "set"])
def test_sigma_bounds_and_consistency(mode):
    for seed in range(5):
        g1, g2, anchors = rich_pair(seed, mode)
        cfg = SimilarityConfig.detect(g1, g2)
        assert cfg.n_active() == 6
        ctx = ScoreContext(g1, g2, anchors, cfg)
        rng = np.random.default_rng(100 + seed)
        for _ in range(400):
            u = int(rng.integers(0, g1.n))
            v = int(rng.integers(0, g2.n))
            score = sigma(g1, g2, u, v, anchors, cfg)
            for name, val in score.components.items():
                assert 0.0 <= val <= 1.0, (name, val)
            assert 0.0 <= score.total <= 1.0
            if score.components["type_gate"] == 0.0:
                assert score.total == 0.0
            # the fast scorer must reproduce sigma bit for bit
            assert ctx.score(u, v) == score.total


def test_sigma_total_matches_ordered_component_sum():
    g1, g2, anchors = rich_pair(3, "numeric")
    cfg = SimilarityConfig.detect(g1, g2)
    rng = np.random.default_rng(42)
    for _ in range(200):
        u = int(rng.integers(0, g1.n))
        v = int(rng.integers(0, g2.n))
        score = sigma(g1, g2, u, v, anchors, cfg)
        c = score.components
        total = (c["anchor"] + c["degree"] + c["neighbor_vertex_types"]
                 + c["neighbor_edge_types"] + c["vertex_attrs"]
                 + c["edge_attrs"])
        assert score.total == c["type_gate"] * total / cfg.n_active()


def test_perfect_self_pair_scores_one():
    g = bench.random_graph(20, 3.0, n_types=2, unique_token=True,
                           connected=True, seed=5)
    cfg = SimilarityConfig.detect(g, g)
    anchors = AnchorView([(u, u) for u in range(5)])
    for u in range(g.n):
        score = sigma(g, g, u, u, anchors, cfg)
        for name, val in score.components.items():
            if name == "anchor" and not any(w < 5 for w in g.adj[u]):
                continue
            assert val == 1.0, (u, name, val)
