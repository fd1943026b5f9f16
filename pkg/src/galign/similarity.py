"""Composite vertex-pair similarity.

The score of a cross-graph pair (u, v) is a type gate times the mean of
the active components: anchor-neighborhood overlap and relative degree
closeness are always active; neighbor vertex-type, incident edge-type,
vertex-attribute and edge-attribute components join the mean only when
both graphs carry the data they need.  Every component lies in [0, 1],
so the total does too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graph import AttributedGraph, UNTYPED


class AnchorView:
    """Membership and correspondence of the current anchor pairs."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        self.s1 = set(u for u, _ in self.pairs)
        self.s2 = set(v for _, v in self.pairs)
        self.mu = {u: v for u, v in self.pairs}

    @classmethod
    def empty(cls) -> "AnchorView":
        return cls([])


@dataclass
class SimilarityScore:
    total: float
    components: dict = field(default_factory=dict)


@dataclass
class SimilarityConfig:
    """Active-component mask plus the data the components consume.

    Type ids are graph-local, so ids of the second graph are translated
    into the first graph's id space before comparison; types present
    only in graph 2 get fresh ids past the graph-1 range.
    """

    use_vertex_types: bool = False
    use_edge_types: bool = False
    use_vertex_attrs: bool = False
    edge_attr_mode: str | None = None      # "numeric" | "set" | None
    close_epsilon: float = 1.0
    token_weights: dict | None = None
    external_table: dict | None = None
    vtype2_shared: list = field(default_factory=list)
    etype2_shared: list = field(default_factory=list)

    @classmethod
    def detect(cls, g1: AttributedGraph, g2: AttributedGraph,
               external_table=None, token_weights=None, close_epsilon=1.0):
        use_vt = g1.has_vertex_types() or g2.has_vertex_types()
        use_et = g1.has_edge_types() or g2.has_edge_types()
        use_va = external_table is not None or (g1.has_vertex_attrs() and g2.has_vertex_attrs())
        if g1.numeric_edge_attrs() and g2.numeric_edge_attrs():
            mode = "numeric"
        elif g1.set_edge_attrs() and g2.set_edge_attrs():
            mode = "set"
        else:
            mode = None

        vshared = _shared_ids(g1.vtype_names, g2.vtype_names)
        eshared = _shared_ids(g1.etype_names, g2.etype_names)
        return cls(use_vertex_types=use_vt, use_edge_types=use_et,
                   use_vertex_attrs=use_va, edge_attr_mode=mode,
                   close_epsilon=close_epsilon, token_weights=token_weights,
                   external_table=external_table,
                   vtype2_shared=vshared, etype2_shared=eshared)

    def n_active(self) -> int:
        return 2 + int(self.use_vertex_types) + int(self.use_edge_types) \
            + int(self.use_vertex_attrs) + int(self.edge_attr_mode is not None)

    def vtype2(self, t: int) -> int:
        return t if t == UNTYPED else self.vtype2_shared[t]

    def etype2(self, t: int) -> int:
        return t if t == UNTYPED else self.etype2_shared[t]


def _shared_ids(names1, names2):
    index1 = {name: i for i, name in enumerate(names1)}
    out = []
    fresh = len(names1)
    for name in names2:
        if name in index1:
            out.append(index1[name])
        else:
            out.append(fresh)
            fresh += 1
    return out


# -- components -----------------------------------------------------------


def type_gate(g1, g2, u, v, cfg: SimilarityConfig) -> int:
    """1 when the two vertices carry the same type (or neither has one)."""
    return 1 if g1.vtype[u] == cfg.vtype2(g2.vtype[v]) else 0


def anchor_similarity(g1, g2, u, v, anchors: AnchorView) -> float:
    """Share of anchors around u whose counterparts sit around v.

    The denominator counts anchor occurrences in either neighborhood,
    with a matched anchor pair counted once; no anchors around either
    vertex gives 0.
    """
    s1 = anchors.s1
    mu = anchors.mu
    adj2v = g2.adj_sets[v]
    num = 0
    n1 = 0
    for w in g1.adj[u]:
        if w in s1:
            n1 += 1
            if mu[w] in adj2v:
                num += 1
    s2 = anchors.s2
    n2 = 0
    for x in g2.adj[v]:
        if x in s2:
            n2 += 1
    denom = n1 + n2 - num
    return num / denom if denom else 0.0


def relative_degree_distance(d1: int, d2: int) -> float:
    """Degree closeness in (0, 1]; two isolated vertices count as equal."""
    if d1 == 0 and d2 == 0:
        return 1.0
    return 1.0 / (1.0 + 2.0 * abs(d1 - d2) / (d1 + d2))


def histogram_similarity(h1: dict, h2: dict) -> float:
    """Generalized Jaccard over two count histograms; both empty gives 1."""
    if not h1 and not h2:
        return 1.0
    num = 0
    den = 0
    for key, c1 in h1.items():
        c2 = h2.get(key, 0)
        num += c1 if c1 < c2 else c2
        den += c1 if c1 > c2 else c2
    for key, c2 in h2.items():
        if key not in h1:
            den += c2
    return num / den if den else 0.0


def weighted_jaccard(set1, set2, weights=None) -> float:
    """Weighted set overlap; unknown tokens weigh 1, empty sets give 0."""
    if not set1 or not set2:
        return 0.0
    if weights is None:
        inter = len(set1 & set2)
        union = len(set1) + len(set2) - inter
        return inter / union
    get = weights.get
    inter = sum(get(c, 1.0) for c in set1 & set2)
    union = sum(get(c, 1.0) for c in set1 | set2)
    return inter / union if union else 0.0


def vertex_attr_similarity(g1, g2, u, v, cfg: SimilarityConfig) -> float:
    """External-table value when a table is supplied, else token overlap."""
    if cfg.external_table is not None:
        return cfg.external_table.get((u, v), 0.0)
    return weighted_jaccard(g1.vattrs[u], g2.vattrs[v], cfg.token_weights)


def _numeric_edge_similarity(g1, g2, u, v, eps) -> float:
    vals1 = g1.incident_numeric_values(u)
    vals2 = g2.incident_numeric_values(v)
    if not vals1 or not vals2:
        return 0.0
    close = 0
    for row1 in vals1:
        for row2 in vals2:
            ok = True
            for x, y in zip(row1, row2):
                if x is None or y is None or not abs(x - y) < eps:
                    ok = False
                    break
            if ok:
                close += 1
    return close / (len(vals1) * len(vals2))


def _token_edge_similarity(g1, g2, u, v, weights) -> float:
    c1 = g1.incident_token_counts(u)
    c2 = g2.incident_token_counts(v)
    if not c1 and not c2:
        return 0.0
    get = weights.get if weights else None
    num = 0.0
    den = 0.0
    for key, a in c1.items():
        b = c2.get(key, 0)
        w = get(key, 1.0) if get else 1.0
        num += w * (a if a < b else b)
        den += w * (a if a > b else b)
    for key, b in c2.items():
        if key not in c1:
            den += (get(key, 1.0) if get else 1.0) * b
    return num / den if den else 0.0


def edge_attr_similarity(g1, g2, u, v, cfg: SimilarityConfig) -> float:
    """Incident-edge attribute agreement; empty neighborhoods give 0."""
    if cfg.edge_attr_mode == "numeric":
        return _numeric_edge_similarity(g1, g2, u, v, cfg.close_epsilon)
    if cfg.edge_attr_mode == "set":
        return _token_edge_similarity(g1, g2, u, v, cfg.token_weights)
    return 0.0


def _translated_hist(hist, translate):
    out = {}
    for key, c in hist.items():
        k = key if key == UNTYPED else translate[key]
        out[k] = out.get(k, 0) + c
    return out


def sigma(g1: AttributedGraph, g2: AttributedGraph, u: int, v: int,
          anchors: AnchorView, cfg: SimilarityConfig) -> SimilarityScore:
    """Full similarity with a per-component breakdown.

    Components are evaluated even when the type gate is 0 so callers can
    inspect them; the total is gated regardless.
    """
    gate = type_gate(g1, g2, u, v, cfg)
    comp = {
        "type_gate": float(gate),
        "anchor": anchor_similarity(g1, g2, u, v, anchors),
        "degree": relative_degree_distance(g1.degree(u), g2.degree(v)),
    }
    if cfg.use_vertex_types:
        comp["neighbor_vertex_types"] = histogram_similarity(
            g1.neighbor_vtype_hist(u),
            _translated_hist(g2.neighbor_vtype_hist(v), cfg.vtype2_shared))
    if cfg.use_edge_types:
        comp["neighbor_edge_types"] = histogram_similarity(
            g1.incident_etype_hist(u),
            _translated_hist(g2.incident_etype_hist(v), cfg.etype2_shared))
    if cfg.use_vertex_attrs:
        comp["vertex_attrs"] = vertex_attr_similarity(g1, g2, u, v, cfg)
    if cfg.edge_attr_mode is not None:
        comp["edge_attrs"] = edge_attr_similarity(g1, g2, u, v, cfg)

    # accumulate in a fixed order so the fast scorer reproduces the
    # exact floating-point total
    total = comp["anchor"] + comp["degree"]
    for key in ("neighbor_vertex_types", "neighbor_edge_types",
                "vertex_attrs", "edge_attrs"):
        if key in comp:
            total += comp[key]
    total = gate * total / cfg.n_active()
    return SimilarityScore(total=total, components=comp)


class ScoreContext:
    """Per-iteration scorer with caches for the candidate-scan hot path.

    Produces exactly the totals of :func:`sigma` for the same anchors
    and config; the only shortcut is skipping component evaluation when
    the type gate is already 0.
    """

    def __init__(self, g1: AttributedGraph, g2: AttributedGraph,
                 anchors: AnchorView, cfg: SimilarityConfig):
        self.g1 = g1
        self.g2 = g2
        self.anchors = anchors
        self.cfg = cfg
        self.n_active = cfg.n_active()
        # shared-space type of every graph-2 vertex, for gate checks
        self.vtype2 = [cfg.vtype2(t) for t in g2.vtype]
        self._hist2 = [None] * g2.n
        self._ehist2 = [None] * g2.n

    def shared_type2(self, v: int) -> int:
        return self.vtype2[v]

    def _nbr_hist2(self, v):
        h = self._hist2[v]
        if h is None:
            h = _translated_hist(self.g2.neighbor_vtype_hist(v), self.cfg.vtype2_shared)
            self._hist2[v] = h
        return h

    def _inc_ehist2(self, v):
        h = self._ehist2[v]
        if h is None:
            h = _translated_hist(self.g2.incident_etype_hist(v), self.cfg.etype2_shared)
            self._ehist2[v] = h
        return h

    def score(self, u: int, v: int) -> float:
        g1 = self.g1
        g2 = self.g2
        cfg = self.cfg
        if g1.vtype[u] != self.vtype2[v]:
            return 0.0
        total = anchor_similarity(g1, g2, u, v, self.anchors)
        total += relative_degree_distance(len(g1.adj[u]), len(g2.adj[v]))
        if cfg.use_vertex_types:
            total += histogram_similarity(g1.neighbor_vtype_hist(u), self._nbr_hist2(v))
        if cfg.use_edge_types:
            total += histogram_similarity(g1.incident_etype_hist(u), self._inc_ehist2(v))
        if cfg.use_vertex_attrs:
            total += vertex_attr_similarity(g1, g2, u, v, cfg)
        if cfg.edge_attr_mode is not None:
            total += edge_attr_similarity(g1, g2, u, v, cfg)
        return total / self.n_active
