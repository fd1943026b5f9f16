"""Anchor seeding, hop-distance caching and vantage-anchor selection.

Anchors are cross-graph vertex pairs trusted to correspond.  Each
iteration distills them into a few well-spread "vantage" pairs whose
hop distances position every vertex in the plane.  Distance rows are
keyed by the graph-1 member of the pair, so the graph-2 row of an
anchor is the BFS from its counterpart; rows are computed once and
cached across iterations.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .graph import AttributedGraph, AnchorMap, GraphError
from .similarity import AnchorView, SimilarityConfig, ScoreContext

UNREACHED = -1
_INF = math.inf


def _to_csr(g: AttributedGraph) -> csr_matrix:
    if g.m == 0:
        return csr_matrix((g.n, g.n), dtype=np.int8)
    rows = np.empty(2 * g.m, dtype=np.int64)
    cols = np.empty(2 * g.m, dtype=np.int64)
    for i, (u, v) in enumerate(g.edges):
        rows[2 * i] = u
        cols[2 * i] = v
        rows[2 * i + 1] = v
        cols[2 * i + 1] = u
    data = np.ones(2 * g.m, dtype=np.int8)
    return csr_matrix((data, (rows, cols)), shape=(g.n, g.n))


class DistanceTable:
    """Cached unweighted shortest-path rows for both graphs.

    rows[(1, u)] holds hop distances from anchor u over graph 1 and
    rows[(2, u)] the distances from u's counterpart over graph 2, both
    as int32 arrays with -1 marking unreachable vertices.  bfs_count
    tracks how many rows were actually computed.
    """

    def __init__(self, g1: AttributedGraph, g2: AttributedGraph):
        self.g1 = g1
        self.g2 = g2
        self._csr = {1: _to_csr(g1), 2: _to_csr(g2)}
        self.rows = {}
        self.bfs_count = 0

    def ensure_rows(self, pairs, threads: int = 1) -> int:
        """Compute missing rows for the given (left, right) anchor pairs."""
        new = 0
        for graph_no, sources in ((1, [u for u, _ in pairs]),
                                  (2, [v for _, v in pairs])):
            keys = [u for u, _ in pairs]
            missing = [(k, s) for k, s in zip(keys, sources)
                       if (graph_no, k) not in self.rows]
            if not missing:
                continue
            dist = dijkstra(self._csr[graph_no], unweighted=True,
                            indices=[s for _, s in missing])
            dist = np.where(np.isinf(dist), UNREACHED, dist).astype(np.int32)
            for row_i, (k, _) in enumerate(missing):
                self.rows[(graph_no, k)] = dist[row_i]
            new += len(missing)
        self.bfs_count += new
        return new

    def row(self, graph_no: int, left: int) -> np.ndarray:
        return self.rows[(graph_no, left)]

    def dist1(self, left: int, target: int) -> float:
        """Graph-1 hop distance from anchor `left` to vertex `target`."""
        d = self.rows[(1, left)][target]
        return _INF if d < 0 else float(d)


# -- bootstrap ------------------------------------------------------------


def bootstrap_size(n1: int, n2: int, log_base: float = math.e) -> int:
    return math.ceil(4.0 * math.log(max(n1, n2)) / math.log(log_base))


def bootstrap_anchors(g1: AttributedGraph, g2: AttributedGraph,
                      sim_cfg: SimilarityConfig,
                      log_base: float = math.e) -> AnchorMap:
    """Seed anchors from scratch by matching high-degree vertices.

    The 2s highest-degree vertices of each graph (s grows with the log
    of the larger order) are scored pairwise with an anchor-free
    similarity; the s best mutual-best pairs become the seed map.
    """
    if g1.n == 0 or g2.n == 0:
        raise GraphError("cannot bootstrap anchors from an empty graph")
    size = max(1, bootstrap_size(g1.n, g2.n, log_base))

    def top_by_degree(g, count):
        order = sorted(range(g.n), key=lambda u: (-g.degree(u), u))
        return order[:count]

    cand1 = top_by_degree(g1, 2 * size)
    cand2 = top_by_degree(g2, 2 * size)
    ctx = ScoreContext(g1, g2, AnchorView.empty(), sim_cfg)

    scores = {}
    best1 = {}
    best2 = {}
    for u in cand1:
        for v in cand2:
            s = ctx.score(u, v)
            if s <= 0.0:
                continue
            scores[(u, v)] = s
            if u not in best1 or s > scores[(u, best1[u])]:
                best1[u] = v
            if v not in best2 or s > scores[(best2[v], v)]:
                best2[v] = u

    mutual = [(u, v) for u, v in best1.items() if best2.get(v) == u]
    mutual.sort(key=lambda p: (-scores[p], p[0], p[1]))
    return AnchorMap(mutual[:size], source="bootstrap")


# -- selection stages -----------------------------------------------------


def find_central_anchors(g1: AttributedGraph, anchor_lefts, dtable: DistanceTable,
                         hop_threshold: float = 1.0) -> list:
    """Keep mutually distant anchors, then the few highest-degree ones.

    Anchors are scanned in ascending id; one survives the scan when it
    is more than hop_threshold away from every survivor so far.  Of the
    survivors, ceil(log2 of the anchor count) highest-degree vertices
    (ties to the lower id) are returned.
    """
    lefts = sorted(anchor_lefts)
    spread = []
    for u in lefts:
        row = dtable.rows[(1, u)]
        ok = True
        for v in spread:
            d = row[v]
            if 0 <= d <= hop_threshold:
                ok = False
                break
        if ok:
            spread.append(u)
    want = math.ceil(math.log2(len(lefts))) if lefts else 0
    spread.sort(key=lambda u: (-g1.degree(u), u))
    return sorted(spread[:want])


def find_vantage_anchors(non_central, central, dtable: DistanceTable,
                         sentinel: float | None = None) -> list:
    """Pick the far fringe of each central anchor's assignment list.

    Every non-central anchor joins its nearest central anchor (ties to
    the lower central id; unreachable from all of them drops out).  With
    a = the smallest list size, each central keeps its a farthest
    assignees; far ties prefer the assignee farthest in total from the
    other centrals, then the lower id.  When some list is empty, each
    non-empty central contributes its single farthest assignee instead.
    """
    central = sorted(central)
    if not central:
        return []
    if sentinel is None:
        sentinel = float(max((dtable.g1.n, dtable.g2.n)))
    assigned = {c: [] for c in central}
    for u in sorted(non_central):
        best_c = None
        best_d = _INF
        for c in central:
            d = dtable.rows[(1, c)][u]
            if d < 0:
                continue
            if d < best_d:
                best_d = d
                best_c = c
        if best_c is not None:
            assigned[best_c].append(u)

    def far_order(c, members):
        others = [o for o in central if o != c]

        def key(u):
            d = dtable.rows[(1, c)][u]
            spread = 0.0
            for o in others:
                do = dtable.rows[(1, o)][u]
                spread += sentinel if do < 0 else float(do)
            return (-float(d), -spread, u)

        return sorted(members, key=key)

    take = min(len(v) for v in assigned.values())
    vantage = []
    if take == 0:
        for c in central:
            members = assigned[c]
            if members:
                vantage.append(far_order(c, members)[0])
    else:
        for c in central:
            vantage.extend(far_order(c, assigned[c])[:take])
    return sorted(vantage)


def pair_and_order(vantage, dtable: DistanceTable) -> list:
    """Couple vantage anchors into far pairs, then chain pairs by nearness.

    Scanning remaining anchors in ascending id, each is paired with its
    farthest remaining peer (ties to the lower id); a leftover odd
    anchor is dropped.  Pairs after the first are then reordered so each
    pair's first member is the nearest (among the remaining pairs) to
    the previous pair's first member.
    """
    remaining = sorted(vantage)
    if len(remaining) < 2:
        raise GraphError(
            "need at least 2 vantage anchors to build pairs; "
            "rerun with more anchors or bootstrapped anchors")
    pairs = []
    while len(remaining) >= 2:
        u = remaining[0]
        row = dtable.rows[(1, u)]
        best_v = None
        best_d = -1.0
        for v in remaining[1:]:
            d = row[v]
            dv = _INF if d < 0 else float(d)
            if dv > best_d:
                best_d = dv
                best_v = v
        pairs.append((u, best_v))
        remaining.remove(u)
        remaining.remove(best_v)

    for i in range(1, len(pairs)):
        prev = pairs[i - 1][0]
        row = dtable.rows[(1, prev)]
        best_j = i
        best_d = _INF
        found = False
        for j in range(i, len(pairs)):
            d = row[pairs[j][0]]
            dv = _INF if d < 0 else float(d)
            if not found or dv < best_d:
                best_d = dv
                best_j = j
                found = True
        pairs[i], pairs[best_j] = pairs[best_j], pairs[i]
    return pairs
