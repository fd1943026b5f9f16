"""Synthetic scenario, perturbation and sweep tests."""

import numpy as np
import pytest

from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from galign.graph import AttributedGraph, UNTYPED
from galign.aligner import AlignConfig, align
from galign import bench


def components_of(g):
    if g.m == 0:
        return g.n
    rows = [e[0] for e in g.edges] + [e[1] for e in g.edges]
    cols = [e[1] for e in g.edges] + [e[0] for e in g.edges]
    mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                     shape=(g.n, g.n))
    ncomp, _ = connected_components(mat, directed=False)
    return ncomp


def circulant(n, full_offsets, partial_offset, partial_count):
    edges = []
    for k in range(1, full_offsets + 1):
        edges.extend((i, (i + k) % n) for i in range(n))
    edges.extend((i, i + partial_offset) for i in range(partial_count))
    return AttributedGraph.from_data(["v%d" % i for i in range(n)], edges)


# -- rng streams -----------------------------------------------------------


def test_rng_stream_reproducible_and_labelled():
    a = bench.rng_stream(5, "x").integers(0, 1000, size=8)
    b = bench.rng_stream(5, "x").integers(0, 1000, size=8)
    c = bench.rng_stream(5, "y").integers(0, 1000, size=8)
    assert (a == b).all()
    assert not (a == c).all()


# -- random graphs ---------------------------------------------------------


def test_random_graph_shape():
    g = bench.random_graph(200, 6.0, seed=4)
    assert g.n == 200
    assert g.m >= 600
    assert components_of(g) == 1
    assert g.ext_ids[:2] == ["v0", "v1"]
    assert not g.has_vertex_types()


def test_random_graph_metadata():
    g = bench.random_graph(50, 3.0, n_types=4, tokens_per_vertex=2,
                           token_pool=6, unique_token=True, seed=8)
    assert len(g.vtype_names) <= 4
    assert all(t != UNTYPED for t in g.vtype)
    for u in range(g.n):
        assert "q%d" % u in g.vattrs[u]
        assert len(g.vattrs[u]) <= 3


def test_random_graph_deterministic():
    a = bench.random_graph(80, 4.0, n_types=3, seed=12)
    b = bench.random_graph(80, 4.0, n_types=3, seed=12)
    assert a.edges == b.edges
    assert a.vtype == b.vtype


def test_random_graph_disconnected_allowed():
    g = bench.random_graph(100, 0.5, connected=False, seed=3)
    assert g.m == 25


# -- cluster graphs --------------------------------------------------------


def test_cluster_graph_structure():
    g, hubs = bench.cluster_graph(900, 3, relays=4, member_degree=4, seed=2)
    assert g.n == 900
    assert len(hubs) == 9
    assert components_of(g) == 1
    # every hub carries its own star plus incoming relay links from the
    # two neighbor communities feeding it
    for q, hub in enumerate(hubs):
        assert g.degree(hub) == 99 + 2 * 4


def test_cluster_graph_too_small():
    with pytest.raises(ValueError, match="too small"):
        bench.cluster_graph(100, 5, relays=6)


def test_cluster_graph_metadata_flags():
    g, _ = bench.cluster_graph(400, 2, relays=3, n_types=8,
                               unique_token=True, seed=1)
    assert g.has_vertex_types()
    assert g.vattrs[7] == frozenset({"q7"})


# -- perturbation ----------------------------------------------------------


def test_perturb_pure_relabel_is_isomorphic():
    g1 = bench.random_graph(60, 4.0, n_types=3, unique_token=True, seed=5)
    res = bench.perturb(g1, seed=9)
    g2 = res.graph
    to2 = dict(res.truth.pairs)
    assert g2.n == g1.n and g2.m == g1.m
    assert sorted(to2) == list(range(g1.n))
    assert sorted(to2.values()) == list(range(g1.n))
    mapped = {tuple(sorted((to2[u], to2[v]))) for u, v in g1.edges}
    assert mapped == set(g2.edges)
    for u in range(g1.n):
        t1 = g1.vtype_names[g1.vtype[u]] if g1.vtype[u] != UNTYPED else None
        j = to2[u]
        t2 = g2.vtype_names[g2.vtype[j]] if g2.vtype[j] != UNTYPED else None
        assert t1 == t2
        assert g1.vattrs[u] == g2.vattrs[j]


def test_perturb_edge_removal_count():
    g = circulant(4038, 21, 22, 3436)
    assert g.m == 88234
    res = bench.perturb(g, seed=1, remove_edges=0.2)
    assert res.graph.n == 4038
    assert res.graph.m == 88234 - 17646


def test_perturb_added_vertices_without_budget():
    g = bench.random_graph(100, 4.0, connected=False, seed=2)
    assert g.m == 200
    res = bench.perturb(g, seed=3, add_vertices=0.1)
    assert res.graph.n == 110
    # each new vertex attaches floor-average-degree edges
    assert res.graph.m == 200 + 10 * 4
    assert len(res.truth.pairs) == 100


def test_perturb_added_edges_budget():
    g = bench.random_graph(100, 4.0, connected=False, seed=2)
    res = bench.perturb(g, seed=3, add_edges=0.1)
    assert res.graph.m == 220
    # with both fractions, attachments spend the budget first and each
    # new vertex keeps at least one edge once it runs out
    res = bench.perturb(g, seed=3, add_vertices=0.1, add_edges=0.1)
    assert res.graph.n == 110
    assert res.graph.m == 200 + 20 + 5


def test_perturb_keeps_edge_metadata():
    g = AttributedGraph.from_data(
        ["a", "b", "c"], [(0, 1), (1, 2)],
        edge_schema=(("year", "numeric"),),
        edge_types={(0, 1): "friend"},
        edge_attrs={(0, 1): (2014.0,), (1, 2): (2015.0,)})
    res = bench.perturb(g, seed=4)
    to2 = dict(res.truth.pairs)
    key = tuple(sorted((to2[0], to2[1])))
    assert res.graph.etype_names[res.graph.etype[key]] == "friend"
    assert res.graph.eattrs[key] == (2014.0,)


def test_perturb_deterministic():
    g = bench.random_graph(80, 4.0, seed=6)
    a = bench.perturb(g, seed=10, remove_edges=0.1)
    b = bench.perturb(g, seed=10, remove_edges=0.1)
    assert a.graph.edges == b.graph.edges
    assert a.truth.pairs == b.truth.pairs
    c = bench.perturb(g, seed=11, remove_edges=0.1)
    assert a.truth.pairs != c.truth.pairs


def test_perturb_external_table():
    table = {(i, i): 1.0 for i in range(10)}
    table[(99, 99)] = 0.0
    out = bench.perturb_external_table(table, 0.0, seed=1)
    assert out == table
    out = bench.perturb_external_table(table, 0.25, seed=1)
    changed = [k for k in table if out[k] != table[k]]
    assert len(changed) == 2
    out = bench.perturb_external_table(table, 1.0, seed=1)
    for key, val in out.items():
        if key == (99, 99):
            assert val == 0.0
        else:
            assert 0.0 < val <= 1.0
    # input mapping is left untouched
    assert table[(0, 0)] == 1.0


def test_perturb_vertex_tokens():
    g = bench.random_graph(40, 3.0, tokens_per_vertex=2, token_pool=10,
                           connected=False, seed=7)
    same = bench.perturb_vertex_tokens(g, 0.0, seed=1)
    assert same.vattrs == g.vattrs
    out = bench.perturb_vertex_tokens(g, 0.5, seed=1)
    changed = sum(1 for u in range(g.n) if out.vattrs[u] != g.vattrs[u])
    assert changed > 0
    again = bench.perturb_vertex_tokens(g, 0.5, seed=1)
    assert again.vattrs == out.vattrs


# -- evaluation ------------------------------------------------------------


def test_evaluate_counts():
    truth = [(i, i) for i in range(10)]
    mapping = {i: i for i in range(5)}
    mapping.update({5: 9, 6: 8})
    scored = {(i, i) for i in range(7)}
    rep = bench.evaluate(mapping, truth, scored_truth=scored,
                         compared=25, pair_space=100)
    assert rep.recall == 0.5
    assert rep.correct == 5
    assert rep.truth_pairs == 10
    assert rep.hit_count == 0.7
    assert rep.gain == 0.75


def test_evaluate_empty_truth():
    with pytest.raises(ValueError, match="empty"):
        bench.evaluate({}, [])


def test_evaluate_optional_fields_default_none():
    rep = bench.evaluate({0: 0}, [(0, 0)])
    assert rep.recall == 1.0
    assert rep.hit_count is None and rep.gain is None


# -- scenarios and sweeps --------------------------------------------------


def test_clone_scenario_shape():
    sc = bench.clone_scenario("s", n=80, avg_degree=4.0, n_types=4,
                              n_anchors=10, seed=3, remove_edges=0.1)
    assert sc.g1.n == 80 and sc.g2.n == 80
    assert len(sc.anchors) == 10
    assert len(sc.truth) == 80
    truth = dict(sc.truth.pairs)
    for u, v in sc.anchors.pairs:
        assert truth[u] == v
    assert sc.anchors.source == "scenario"
    assert sc.truth.source == "perturb"


def test_community_scenario_anchors_are_hub_pairs():
    sc = bench.community_scenario("c", n=900, clusters_per_side=3,
                                  n_anchors=4, seed=2, relays=4)
    assert len(sc.anchors) == 4
    truth = dict(sc.truth.pairs)
    for u, v in sc.anchors.pairs:
        assert truth[u] == v


def test_sweep_single_cell_matches_align():
    sc = bench.clone_scenario("one", n=60, avg_degree=4.0, n_types=4,
                              n_anchors=8, seed=1)
    cfg = AlignConfig(max_iterations=1)
    rows = bench.sweep([sc], [500], cfg)
    assert len(rows) == 1
    res = align(sc.g1, sc.g2, anchors=sc.anchors,
                config=AlignConfig(max_iterations=1), truth=sc.truth)
    totals = res.report["totals"]
    row = rows[0]
    assert row["scenario"] == "one"
    assert row["bucket_size"] == 500
    assert row["recall"] == totals["recall"]
    assert row["hit_count"] == totals["hit_count"]
    assert row["gain"] == totals["gain"]
    assert row["iterations"] == totals["iterations"]
    assert row["compared_pairs"] == totals["compared_pairs"]


def test_sweep_compared_non_decreasing_in_bucket_size():
    sc = bench.clone_scenario("mono", n=150, avg_degree=4.0, n_types=4,
                              n_anchors=12, seed=2)
    rows = bench.sweep([sc], [4, 16, 64, 500], AlignConfig(max_iterations=1))
    compared = [r["compared_pairs"] for r in rows]
    assert compared == sorted(compared)


def test_sweep_abort_becomes_error_row():
    sc = bench.clone_scenario("bad", n=60, avg_degree=4.0, n_types=4,
                              n_anchors=1, seed=1)
    rows = bench.sweep([sc], [500])
    assert rows[0]["recall"] == 0.0
    assert "error" in rows[0]


def test_sweep_csv_layout(tmp_path):
    rows = [{"scenario": "s", "bucket_size": 250, "recall": 0.5,
             "hit_count": 0.75, "gain": 0.9, "iterations": 3,
             "seconds": 0.01, "compared_pairs": 10}]
    out = tmp_path / "sweep.csv"
    bench.write_sweep_csv(str(out), rows)
    lines = out.read_text().splitlines()
    assert lines[0] == "scenario,bucket_size,recall,hit_count,gain,iterations,seconds"
    assert lines[1].startswith("s,250,0.500000,0.750000,0.900000,3,")
    assert len(lines) == 2
