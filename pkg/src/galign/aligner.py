"""Iterative alignment driver.

Each iteration BFS-positions both graphs from the current anchor set,
buckets the positions in a quadtree, scores candidate pairs inside each
bucket (optionally widened by its touching neighbor buckets), rebuilds
the non-anchor part of the mapping with a greedy sweep, and finally
promotes the best mapped pairs to anchors for the next round.  The loop
stops when the mapping stops growing or the iteration budget runs out.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, asdict

from .graph import AttributedGraph, AnchorMap, GraphError
from .similarity import AnchorView, SimilarityConfig, ScoreContext
from .anchors import (DistanceTable, bootstrap_anchors, find_central_anchors,
                      find_vantage_anchors, pair_and_order)
from .embedding import compute_all_positions, normalize_coords, build_bucket_tree

log = logging.getLogger("galign")


@dataclass
class AlignConfig:
    """Tunables of one alignment run."""

    bucket_capacity: int = 500
    top_k: int = 3
    max_iterations: int = 20
    min_growth_ratio: float = 1.02
    anchor_cap: int = 1000
    central_hop_threshold: float = 1.0
    scan_neighbors: bool = True
    bootstrap_log_base: float = math.e
    central_log_base: float = 2.0
    close_epsilon: float = 1.0
    seed: int = 0
    threads: int = 1

    def validate(self) -> None:
        if self.bucket_capacity < 1:
            raise ValueError("bucket_capacity must be positive")
        if self.top_k < 1:
            raise ValueError("top_k must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if not self.min_growth_ratio > 1.0:
            raise ValueError("min_growth_ratio must be > 1")
        if self.anchor_cap < 1:
            raise ValueError("anchor_cap must be positive")
        if self.central_hop_threshold <= 0:
            raise ValueError("central_hop_threshold must be positive")
        if self.bootstrap_log_base <= 1.0 or self.central_log_base <= 1.0:
            raise ValueError("log bases must exceed 1")
        if self.close_epsilon <= 0:
            raise ValueError("close_epsilon must be positive")
        if self.threads < 1:
            raise ValueError("threads must be positive")


@dataclass
class AlignResult:
    mapping: dict
    scores: dict
    found_iteration: dict
    report: dict


class AlignmentAbort(RuntimeError):
    """Alignment could not continue; .partial holds the best-effort result."""

    def __init__(self, message, partial: AlignResult | None = None):
        super().__init__(message)
        self.partial = partial


class _ScopeProbe:
    """Which pairs were inside a scored bucket scope this iteration."""

    def __init__(self):
        self.leaf_of_v2 = {}
        self.scope_sets = []
        self.overflow_v2 = set()
        self.overflow_scope = set()

    def covers(self, u: int, v: int) -> bool:
        li = self.leaf_of_v2.get(v)
        if li is not None:
            return u in self.scope_sets[li]
        if v in self.overflow_v2:
            return u in self.overflow_scope
        return False


def top_similars(tree, g1: AttributedGraph, g2: AttributedGraph,
                 ctx: ScoreContext, k: int, scan_neighbors: bool = True):
    """Per graph-2 vertex, the k best-scoring graph-1 vertices in scope.

    The scope of a leaf is the leaf itself plus, when scan_neighbors is
    on, every leaf touching it (edge or corner).  Candidate lists are
    ordered by descending score with ties to the lower id; when fewer
    than k candidates score above zero the list is padded with the
    lowest-id zero-score scope members.  Vertices in the overflow bucket
    are scoped against overflow vertices only.

    Returns (candidate dict, compared-pair count, scope probe); the
    compared count is the sum over buckets of |bucket V2| * |scope V1|.
    """
    leaves = tree.leaves()
    members1 = []
    members2 = []
    for leaf in leaves:
        m1 = sorted(p[3] for p in leaf.points if p[2] == 1)
        m2 = sorted(p[3] for p in leaf.points if p[2] == 2)
        members1.append(m1)
        members2.append(m2)
    leaf_index = {id(leaf): i for i, leaf in enumerate(leaves)}

    cands = {}
    compared = 0
    probe = _ScopeProbe()
    vtype1 = g1.vtype

    for li, leaf in enumerate(leaves):
        v2_here = members2[li]
        scope = list(members1[li])
        if scan_neighbors:
            for nb in tree.neighbor_buckets(leaf):
                scope.extend(members1[leaf_index[id(nb)]])
            scope = sorted(set(scope))
        compared += len(v2_here) * len(scope)
        probe.scope_sets.append(set(scope))
        if not v2_here:
            continue
        by_type = {}
        for u in scope:
            by_type.setdefault(vtype1[u], []).append(u)
        score = ctx.score
        for v in v2_here:
            probe.leaf_of_v2[v] = li
            tv = ctx.shared_type2(v)
            positives = sorted(((-score(u, v), u) for u in by_type.get(tv, ())))
            top = [(-s, u) for s, u in positives[:k]]
            if len(top) < k:
                # pad with zero-score entries: every cross-type scope
                # member scores exactly 0, lowest ids first
                for u in scope:
                    if len(top) >= k:
                        break
                    if vtype1[u] != tv:
                        top.append((0.0, u))
            cands[v] = top

    o1 = sorted(vid for gno, vid in tree.overflow if gno == 1)
    o2 = sorted(vid for gno, vid in tree.overflow if gno == 2)
    compared += len(o1) * len(o2)
    probe.overflow_v2 = set(o2)
    probe.overflow_scope = set(o1)
    if o2 and o1:
        by_type = {}
        for u in o1:
            by_type.setdefault(vtype1[u], []).append(u)
        for v in o2:
            tv = ctx.shared_type2(v)
            positives = sorted(((-ctx.score(u, v), u) for u in by_type.get(tv, ())))
            top = [(-s, u) for s, u in positives[:k]]
            if len(top) < k:
                for u in o1:
                    if len(top) >= k:
                        break
                    if vtype1[u] != tv:
                        top.append((0.0, u))
            cands[v] = top

    return cands, compared, probe


def greedy_map(cands: dict, pinned_pairs) -> tuple:
    """Stable-suitor sweeps turning candidate lists into an injective map.

    Graph-2 vertices are visited in ascending id; an unassigned vertex
    pops its best remaining candidate u and claims it when u is free or
    scored lower with its current partner (which then re-enters
    contention with its remaining list).  Zero-score pops are discarded.
    Pinned pairs hold score 1.0 and are never displaced.  Sweeps repeat
    until no vertex has anything left to try.
    """
    mapping = {}
    score = {}
    assigned = set()
    for u, v in pinned_pairs:
        mapping[u] = v
        score[u] = 1.0
        assigned.add(v)
    ptr = dict.fromkeys(cands, 0)
    order = sorted(cands)
    while True:
        popped = False
        for v in order:
            if v in assigned:
                continue
            lst = cands[v]
            p = ptr[v]
            if p >= len(lst):
                continue
            s, u = lst[p]
            ptr[v] = p + 1
            popped = True
            if s <= 0.0:
                continue
            cur = score.get(u)
            if cur is None or s > cur:
                old = mapping.get(u)
                mapping[u] = v
                score[u] = s
                assigned.add(v)
                if old is not None:
                    assigned.discard(old)
        if not popped:
            break
    return mapping, score


def grow_anchors(pairs_now, initial_pairs, growth_size: int, cap: int,
                 mapping: dict, score: dict) -> tuple:
    """Promote the best mapped pairs to anchors and double the batch size.

    When the batch size has exceeded the cap, the anchor set first
    resets to the initial anchors and the size to their count.  Then the
    `size` highest-scoring mapped non-anchor pairs (ties to the lower
    graph-1 id) join the anchor set; the size doubles for next time.
    """
    a = growth_size
    if a > cap:
        pairs_now = list(initial_pairs)
        a = len(initial_pairs)
    lefts = {u for u, _ in pairs_now}
    rights = {v for _, v in pairs_now}
    eligible = sorted(((u, v) for u, v in mapping.items()
                       if u not in lefts and v not in rights),
                      key=lambda p: (-score[p[0]], p[0]))
    pairs_now = list(pairs_now) + eligible[:a]
    return pairs_now, 2 * a


def align(g1: AttributedGraph, g2: AttributedGraph, anchors: AnchorMap | None = None,
          config: AlignConfig | None = None, truth=None,
          external_table=None, token_weights=None) -> AlignResult:
    """Run the full iterative alignment; see the module docstring.

    truth, when given, is used only for per-iteration bookkeeping
    (which true pairs got scored / mapped); it never influences the
    alignment itself.
    """
    cfg = config or AlignConfig()
    cfg.validate()
    if g1.n == 0 or g2.n == 0:
        raise GraphError("cannot align an empty graph")
    sim_cfg = SimilarityConfig.detect(g1, g2, external_table=external_table,
                                      token_weights=token_weights,
                                      close_epsilon=cfg.close_epsilon)
    if anchors is None:
        anchors = bootstrap_anchors(g1, g2, sim_cfg, cfg.bootstrap_log_base)
        log.info("bootstrapped %d anchor pairs", len(anchors))
    truth_pairs = list(truth.pairs) if truth is not None else []

    report = {
        "config": asdict(cfg),
        "anchor_source": anchors.source,
        "graphs": {"n1": g1.n, "m1": g1.m, "n2": g2.n, "m2": g2.m},
        "active_components": {
            "neighbor_vertex_types": sim_cfg.use_vertex_types,
            "neighbor_edge_types": sim_cfg.use_edge_types,
            "vertex_attrs": sim_cfg.use_vertex_attrs,
            "edge_attrs": sim_cfg.edge_attr_mode or "off",
        },
        "iterations": [],
    }

    mapping = {u: v for u, v in anchors.pairs}
    score = {u: 1.0 for u, _ in anchors.pairs}
    first_seen = {(u, v): 0 for u, v in anchors.pairs}
    ever_mapped = set(mapping)
    pairs_now = list(anchors.pairs)
    initial_pairs = list(anchors.pairs)
    growth_size = len(initial_pairs)
    anchors_ever = {u for u, _ in pairs_now}
    scored_truth = set()
    dtable = DistanceTable(g1, g2)

    def build_result(aborted=None):
        totals = {
            "iterations": len(report["iterations"]),
            "mapped": len(mapping),
            "compared_pairs": sum(r["compared_pairs"] for r in report["iterations"]),
            "pair_space": g1.n * g2.n,
            "bfs_rows": dtable.bfs_count,
            "distinct_anchors": len(anchors_ever),
        }
        totals["gain"] = 1.0 - totals["compared_pairs"] / totals["pair_space"]
        if truth is not None and truth_pairs:
            totals["truth_pairs"] = len(truth_pairs)
            totals["hit_count"] = len(scored_truth) / len(truth_pairs)
            correct = sum(1 for u, v in truth_pairs if mapping.get(u) == v)
            totals["recall"] = correct / len(truth_pairs)
        if aborted:
            totals["aborted"] = aborted
        report["totals"] = totals
        found = {u: first_seen[(u, v)] for u, v in mapping.items()}
        return AlignResult(mapping=dict(mapping), scores=dict(score),
                           found_iteration=found, report=report)

    if len(pairs_now) == 0:
        raise AlignmentAbort("no usable anchor pairs", build_result(aborted="no anchors"))

    mu_prev_len = 0
    it = 0
    while it < cfg.max_iterations:
        ratio = math.inf if mu_prev_len == 0 else len(mapping) / mu_prev_len
        if ratio <= cfg.min_growth_ratio:
            break
        if it >= 1:
            pairs_now, growth_size = grow_anchors(
                pairs_now, initial_pairs, growth_size, cfg.anchor_cap,
                mapping, score)
            anchors_ever.update(u for u, _ in pairs_now)
        mu_prev_len = len(mapping)
        it += 1

        t0 = time.perf_counter()
        new_rows = dtable.ensure_rows(pairs_now, cfg.threads)
        t1 = time.perf_counter()

        lefts = sorted(u for u, _ in pairs_now)
        centrals = find_central_anchors(g1, lefts, dtable, cfg.central_hop_threshold)
        central_set = set(centrals)
        non_central = [u for u in lefts if u not in central_set]
        vantage = find_vantage_anchors(non_central, centrals, dtable)
        try:
            vpairs = pair_and_order(vantage, dtable)
        except GraphError as exc:
            raise AlignmentAbort(
                "iteration %d: %s" % (it, exc),
                build_result(aborted=str(exc))) from None

        left_of = dict(pairs_now)
        rows1 = []
        seps1 = []
        rows2 = []
        seps2 = []
        for p0, p1 in vpairs:
            r1a = dtable.row(1, p0)
            r1b = dtable.row(1, p1)
            rows1.append((r1a, r1b))
            d = r1a[p1]
            seps1.append(float(d) if d >= 0 else math.inf)
            r2a = dtable.row(2, p0)
            r2b = dtable.row(2, p1)
            rows2.append((r2a, r2b))
            d2 = r2a[left_of[p1]]
            seps2.append(float(d2) if d2 >= 0 else math.inf)

        coords1, cnt1 = compute_all_positions(g1.n, vpairs, rows1, seps1)
        coords2, cnt2 = compute_all_positions(g2.n, vpairs, rows2, seps2)
        valid1 = cnt1 > 0
        valid2 = cnt2 > 0
        peak = normalize_coords([coords1, coords2], [valid1, valid2])
        tree = build_bucket_tree(coords1, valid1, coords2, valid2, cfg.bucket_capacity)
        t2 = time.perf_counter()

        ctx = ScoreContext(g1, g2, AnchorView(pairs_now), sim_cfg)
        cands, compared_it, probe = top_similars(tree, g1, g2, ctx,
                                                 cfg.top_k, cfg.scan_neighbors)
        t3 = time.perf_counter()
        for idx, (tu, tv) in enumerate(truth_pairs):
            if idx not in scored_truth and probe.covers(tu, tv):
                scored_truth.add(idx)

        mapping, score = greedy_map(cands, pairs_now)
        t4 = time.perf_counter()
        for u, v in mapping.items():
            if (u, v) not in first_seen:
                first_seen[(u, v)] = it
        ever_mapped.update(mapping)

        rec = {
            "iteration": it,
            "anchor_pairs": len(pairs_now),
            "new_bfs_rows": new_rows,
            "central_anchors": len(centrals),
            "vantage_pairs": len(vpairs),
            "scale_peak": peak,
            "bucket_leaves": len(tree.leaves()),
            "overflow_vertices": len(tree.overflow),
            "compared_pairs": compared_it,
            "mapped": len(mapping),
            "cumulative_mapped": len(ever_mapped),
            "growth_ratio": len(mapping) / mu_prev_len,
        }
        if truth is not None and truth_pairs:
            rec["hit_count"] = len(scored_truth) / len(truth_pairs)
            rec["recall"] = sum(1 for tu, tv in truth_pairs
                                if mapping.get(tu) == tv) / len(truth_pairs)
        report["iterations"].append(rec)
        log.info("iteration %d: anchors=%d vantage_pairs=%d mapped=%d compared=%d",
                 it, len(pairs_now), len(vpairs), len(mapping), compared_it)
        log.debug("iteration %d timing: bfs=%.3fs embed=%.3fs scan=%.3fs map=%.3fs",
                  it, t1 - t0, t2 - t1, t3 - t2, t4 - t3)

    return build_result()
