"""Benchmark scenarios: synthetic graphs, perturbation, scoring, sweeps.

The perturbation protocol builds a noisy copy of a graph: relabel every
vertex with a seeded permutation, remove a fraction of the edges, add a
fraction of new vertices (each attached with about average-degree many
random edges) and a fraction of new random edges.  The permutation is
returned as ground truth.  All randomness is drawn from named
sub-streams of one seed so scenarios are reproducible end to end.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import AttributedGraph, AnchorMap, GroundTruth, UNTYPED
from .aligner import AlignConfig, AlignmentAbort, align


def rng_stream(seed: int, label: str) -> np.random.Generator:
    """Independent deterministic generator for one named purpose."""
    return np.random.default_rng([seed & 0xFFFFFFFF, zlib.crc32(label.encode())])


# -- synthetic graphs -----------------------------------------------------


def random_graph(n: int, avg_degree: float, n_types: int = 0,
                 tokens_per_vertex: int = 0, token_pool: int = 0,
                 unique_token: bool = False, connected: bool = True,
                 seed: int = 0) -> AttributedGraph:
    """Seeded uniform random graph with optional types and token attrs.

    Draws n*avg_degree/2 distinct edges uniformly; when `connected`,
    components are then chained together with one extra edge each, so
    the edge count can exceed the target slightly.  Each vertex gets a
    uniform type out of n_types, `tokens_per_vertex` random tokens from
    a pool, and optionally one token unique to its id.
    """
    rng = rng_stream(seed, "random-graph")
    target = int(n * avg_degree // 2)
    edges = set()
    while len(edges) < target:
        need = target - len(edges)
        us = rng.integers(0, n, size=2 * need + 8)
        vs = rng.integers(0, n, size=2 * need + 8)
        for u, v in zip(us.tolist(), vs.tolist()):
            if u == v:
                continue
            key = (u, v) if u < v else (v, u)
            edges.add(key)
            if len(edges) >= target:
                break
    edges = sorted(edges)

    if connected and n > 1:
        rows = np.array([e[0] for e in edges] + [e[1] for e in edges], dtype=np.int64)
        cols = np.array([e[1] for e in edges] + [e[0] for e in edges], dtype=np.int64)
        mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
        ncomp, labels = connected_components(mat, directed=False)
        if ncomp > 1:
            reps = {}
            for vid, lab in enumerate(labels.tolist()):
                if lab not in reps:
                    reps[lab] = vid
            chain = [reps[lab] for lab in sorted(reps)]
            for i in range(1, len(chain)):
                key = (min(chain[0], chain[i]), max(chain[0], chain[i]))
                if key not in set(edges):
                    edges.append(key)
            edges = sorted(set(edges))

    ext_ids = ["v%d" % i for i in range(n)]
    vtypes = None
    if n_types > 0:
        picks = rng.integers(0, n_types, size=n)
        vtypes = ["t%d" % t for t in picks.tolist()]
    vattrs = None
    if tokens_per_vertex > 0 or unique_token:
        pool = max(1, token_pool)
        vattrs = []
        for u in range(n):
            toks = set()
            if unique_token:
                toks.add("q%d" % u)
            if tokens_per_vertex > 0:
                toks.update("a%d" % t for t in
                            rng.integers(0, pool, size=tokens_per_vertex).tolist())
            vattrs.append(toks)
    return AttributedGraph.from_data(ext_ids, edges, vertex_types=vtypes,
                                     vertex_attrs=vattrs)


def cluster_graph(n: int, clusters_per_side: int, relays: int = 6,
                  member_degree: int = 4, n_types: int = 0,
                  unique_token: bool = False, seed: int = 0):
    """Seeded hub-and-spoke community graph on a torus of clusters.

    Vertices are split into clusters_per_side**2 equal communities.
    Each community is a star around a hub plus a sparse random mesh
    among ordinary members, and neighboring communities (4-torus grid)
    are bridged by `relays` dedicated member-to-hub links per direction.
    Relay members stay out of the mesh so every ordinary member keeps
    the same hop profile toward the rest of the graph, and the parallel
    relay links keep hub-to-hub distances stable under edge removal.
    Returns (graph, hub ids).
    """
    rng = rng_stream(seed, "cluster-graph")
    k = clusters_per_side
    n_clusters = k * k
    base, extra = divmod(n, n_clusters)
    if base < 2 * relays + 2:
        raise ValueError("clusters too small for the requested relay count")
    starts = []
    sizes = []
    pos = 0
    for q in range(n_clusters):
        sz = base + (1 if q < extra else 0)
        starts.append(pos)
        sizes.append(sz)
        pos += sz

    edges = set()
    relay_of = {}
    for q in range(n_clusters):
        s, sz = starts[q], sizes[q]
        picks = rng.choice(np.arange(s + 1, s + sz), size=2 * relays, replace=False)
        relay_of[q] = [int(r) for r in picks]
        for member in range(s + 1, s + sz):
            edges.add((s, member))
        pool = [m for m in range(s + 1, s + sz) if m not in set(relay_of[q])]
        want = sz * member_degree // 2
        got = 0
        attempts = 0
        while got < want and attempts < want * 20:
            attempts += 1
            a = pool[int(rng.integers(0, len(pool)))]
            b = pool[int(rng.integers(0, len(pool)))]
            if a == b:
                continue
            key = (a, b) if a < b else (b, a)
            if key not in edges:
                edges.add(key)
                got += 1
    for i in range(k):
        for j in range(k):
            q = i * k + j
            right = ((i + 1) % k) * k + j
            down = i * k + (j + 1) % k
            for dirno, q2 in ((0, right), (1, down)):
                hub2 = starts[q2]
                for r in relay_of[q][dirno * relays:(dirno + 1) * relays]:
                    edges.add((r, hub2) if r < hub2 else (hub2, r))

    ext_ids = ["v%d" % i for i in range(n)]
    vtypes = None
    if n_types > 0:
        picks = rng.integers(0, n_types, size=n)
        vtypes = ["t%d" % t for t in picks.tolist()]
    vattrs = None
    if unique_token:
        vattrs = [{"q%d" % u} for u in range(n)]
    g = AttributedGraph.from_data(ext_ids, sorted(edges), vertex_types=vtypes,
                                  vertex_attrs=vattrs)
    return g, starts


# -- perturbation ---------------------------------------------------------


@dataclass
class PerturbResult:
    graph: AttributedGraph
    truth: GroundTruth          # original internal id -> new internal id


def perturb(g: AttributedGraph, seed: int = 0, remove_edges: float = 0.0,
            add_vertices: float = 0.0, add_edges: float = 0.0) -> PerturbResult:
    """Noisy relabeled copy of a graph plus the true correspondence.

    Counts are floors of the fractions times the original vertex/edge
    counts.  New-vertex attachment edges are budgeted against the
    added-edge count when both fractions are set, each new vertex
    keeping at least one edge; leftover budget becomes uniform random
    non-duplicate edges.  New vertices copy the type of a random
    existing vertex and carry no attribute tokens.
    """
    rng = rng_stream(seed, "perturb-edges")
    n = g.n
    m0 = g.m
    perm = rng.permutation(n)

    n_new = int(add_vertices * n)
    total = n + n_new
    ext_ids = ["v%d" % j for j in range(total)]
    vtypes = [None] * total
    vattrs = [frozenset()] * total
    for i in range(n):
        j = int(perm[i])
        vtypes[j] = g.vtype_names[g.vtype[i]] if g.vtype[i] != UNTYPED else None
        vattrs[j] = g.vattrs[i]

    def canon(u, v):
        return (u, v) if u < v else (v, u)

    edges = []
    etypes = {}
    eattrs = {}
    for u, v in g.edges:
        key = canon(int(perm[u]), int(perm[v]))
        edges.append(key)
        t = g.etype.get((u, v))
        if t is not None:
            etypes[key] = g.etype_names[t]
        a = g.eattrs.get((u, v))
        if a is not None:
            eattrs[key] = a
    edges.sort()

    k_remove = int(remove_edges * m0)
    if k_remove > 0:
        drop = set(rng.choice(len(edges), size=k_remove, replace=False).tolist())
        kept = [e for i, e in enumerate(edges) if i not in drop]
        edges = kept
    edge_set = set(edges)

    budget_mode = add_edges > 0.0
    budget = int(add_edges * m0)
    deg_avg = int(2 * m0 / n) if n else 0

    def add_random_edges(count):
        added = 0
        attempts = 0
        limit = 20 * count + 100
        while added < count and attempts < limit:
            attempts += 1
            u = int(rng.integers(0, total))
            v = int(rng.integers(0, total))
            if u == v:
                continue
            key = canon(u, v)
            if key in edge_set:
                continue
            edge_set.add(key)
            edges.append(key)
            added += 1
        return added

    for j in range(n, total):
        if n > 0:
            src = int(rng.integers(0, n))
            vtypes[j] = g.vtype_names[g.vtype[src]] if g.vtype[src] != UNTYPED else None
        if budget_mode:
            want = max(1, min(deg_avg, budget))
        else:
            want = max(1, deg_avg)
        got = 0
        attempts = 0
        while got < want and attempts < 20 * want + 100:
            attempts += 1
            t = int(rng.integers(0, total))
            if t == j:
                continue
            key = canon(j, t)
            if key in edge_set:
                continue
            edge_set.add(key)
            edges.append(key)
            got += 1
        if budget_mode:
            budget = max(0, budget - got)
    if budget_mode and budget > 0:
        add_random_edges(budget)

    g2 = AttributedGraph.from_data(ext_ids, edges, vertex_types=vtypes,
                                   vertex_attrs=vattrs,
                                   edge_schema=g.edge_schema,
                                   edge_types=etypes, edge_attrs=eattrs)
    truth = GroundTruth([(i, int(perm[i])) for i in range(n)], source="perturb")
    return PerturbResult(graph=g2, truth=truth)


def perturb_external_table(table: dict, fraction: float, seed: int = 0) -> dict:
    """Rewrite a fraction of the non-zero table entries to uniform (0, 1]."""
    keys = sorted(k for k, val in table.items() if val != 0.0)
    rng = rng_stream(seed, "perturb-attrs")
    k = int(fraction * len(keys))
    out = dict(table)
    if k > 0:
        chosen = rng.choice(len(keys), size=k, replace=False)
        for idx in sorted(chosen.tolist()):
            out[keys[idx]] = 1.0 - float(rng.random())
    return out


def perturb_vertex_tokens(g: AttributedGraph, fraction: float, seed: int = 0) -> AttributedGraph:
    """Replace a fraction of all vertex attribute tokens from the global pool."""
    rng = rng_stream(seed, "perturb-attrs")
    slots = [(u, tok) for u in range(g.n) for tok in sorted(g.vattrs[u])]
    pool = sorted({tok for u in range(g.n) for tok in g.vattrs[u]})
    k = int(fraction * len(slots))
    new_attrs = [set(a) for a in g.vattrs]
    if k > 0 and pool:
        chosen = rng.choice(len(slots), size=k, replace=False)
        for idx in sorted(chosen.tolist()):
            u, tok = slots[idx]
            repl = pool[int(rng.integers(0, len(pool)))]
            new_attrs[u].discard(tok)
            new_attrs[u].add(repl)
    vtypes = [g.vtype_names[t] if t != UNTYPED else None for t in g.vtype]
    etypes = {k2: g.etype_names[t] for k2, t in g.etype.items()}
    return AttributedGraph.from_data(g.ext_ids, g.edges, vertex_types=vtypes,
                                     vertex_attrs=new_attrs,
                                     edge_schema=g.edge_schema,
                                     edge_types=etypes, edge_attrs=g.eattrs)


# -- evaluation -----------------------------------------------------------


@dataclass
class EvalReport:
    recall: float
    hit_count: float | None = None
    gain: float | None = None
    correct: int = 0
    truth_pairs: int = 0


def evaluate(mapping: dict, truth_pairs, scored_truth=None,
             compared: int | None = None, pair_space: int | None = None) -> EvalReport:
    """Score a mapping against ground truth.

    recall is the mapped-correct fraction; hit_count the fraction of
    true pairs that were ever scored (when the scored set is known);
    gain the fraction of the full pair space never compared.
    """
    truth_pairs = list(truth_pairs)
    if not truth_pairs:
        raise ValueError("ground truth is empty")
    correct = sum(1 for u, v in truth_pairs if mapping.get(u) == v)
    rep = EvalReport(recall=correct / len(truth_pairs), correct=correct,
                     truth_pairs=len(truth_pairs))
    if scored_truth is not None:
        scored = set(scored_truth)
        rep.hit_count = sum(1 for p in truth_pairs if p in scored) / len(truth_pairs)
    if compared is not None and pair_space:
        rep.gain = 1.0 - compared / pair_space
    return rep


# -- scenarios and sweeps -------------------------------------------------


@dataclass
class Scenario:
    name: str
    g1: AttributedGraph
    g2: AttributedGraph
    anchors: AnchorMap
    truth: GroundTruth


def clone_scenario(name: str, n: int, avg_degree: float, n_types: int,
                   n_anchors: int, seed: int, remove_edges: float = 0.0,
                   add_vertices: float = 0.0, add_edges: float = 0.0,
                   tokens_per_vertex: int = 0, token_pool: int = 0,
                   unique_token: bool = True) -> Scenario:
    """A graph, its perturbed copy, true anchors and full ground truth."""
    g1 = random_graph(n, avg_degree, n_types=n_types,
                      tokens_per_vertex=tokens_per_vertex, token_pool=token_pool,
                      unique_token=unique_token, connected=True, seed=seed)
    res = perturb(g1, seed=seed, remove_edges=remove_edges,
                  add_vertices=add_vertices, add_edges=add_edges)
    rng = rng_stream(seed, "anchor-pick")
    idx = sorted(rng.choice(len(res.truth.pairs), size=min(n_anchors, len(res.truth.pairs)),
                            replace=False).tolist())
    anchors = AnchorMap([res.truth.pairs[i] for i in idx], source="scenario")
    return Scenario(name=name, g1=g1, g2=res.graph, anchors=anchors, truth=res.truth)


def community_scenario(name: str, n: int, clusters_per_side: int,
                       n_anchors: int, seed: int, remove_edges: float = 0.0,
                       relays: int = 6, member_degree: int = 4,
                       n_types: int = 0, unique_token: bool = False) -> Scenario:
    """Community graph, its perturbed copy, and hub anchors.

    Anchors are hubs spaced evenly over the torus of communities; hub
    positions are robust to edge removal thanks to the redundant relay
    links, which keeps the seeded correspondences trustworthy even on
    heavily perturbed copies.
    """
    g1, hubs = cluster_graph(n, clusters_per_side, relays=relays,
                             member_degree=member_degree, n_types=n_types,
                             unique_token=unique_token, seed=seed)
    res = perturb(g1, seed=seed, remove_edges=remove_edges)
    right_of = dict(res.truth.pairs)
    count = min(n_anchors, len(hubs))
    step = max(1, len(hubs) // count)
    lefts = [hubs[i * step] for i in range(count)]
    anchors = AnchorMap(sorted((u, right_of[u]) for u in lefts), source="scenario")
    return Scenario(name=name, g1=g1, g2=res.graph, anchors=anchors, truth=res.truth)


def sweep(scenarios, bucket_sizes, base_config: AlignConfig | None = None) -> list:
    """Run every scenario at every bucket size; one result row per cell."""
    base = base_config or AlignConfig()
    rows = []
    for sc in scenarios:
        for b in bucket_sizes:
            cfg = AlignConfig(**{**base.__dict__, "bucket_capacity": int(b)})
            t0 = time.perf_counter()
            try:
                res = align(sc.g1, sc.g2, anchors=sc.anchors, config=cfg, truth=sc.truth)
                totals = res.report["totals"]
                rows.append({
                    "scenario": sc.name,
                    "bucket_size": int(b),
                    "recall": totals.get("recall", 0.0),
                    "hit_count": totals.get("hit_count", 0.0),
                    "gain": totals["gain"],
                    "iterations": totals["iterations"],
                    "seconds": time.perf_counter() - t0,
                    "compared_pairs": totals["compared_pairs"],
                })
            except AlignmentAbort as exc:
                rows.append({
                    "scenario": sc.name, "bucket_size": int(b), "recall": 0.0,
                    "hit_count": 0.0, "gain": 0.0, "iterations": 0,
                    "seconds": time.perf_counter() - t0, "compared_pairs": 0,
                    "error": str(exc),
                })
    return rows


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("scenario,bucket_size,recall,hit_count,gain,iterations,seconds\n")
        for r in rows:
            fh.write("%s,%d,%.6f,%.6f,%.6f,%d,%.3f\n"
                     % (r["scenario"], r["bucket_size"], r["recall"],
                        r["hit_count"], r["gain"], r["iterations"], r["seconds"]))
