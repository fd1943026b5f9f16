"""Estimator-style facade over the alignment driver.

Follows the scikit-learn conventions: hyperparameters are plain
constructor arguments, fit validates inputs and stores results on
trailing-underscore attributes, and get_params/set_params/clone work
through the inherited BaseEstimator machinery.
"""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .graph import AttributedGraph, AnchorMap
from .aligner import AlignConfig, align


def check_graph_pair(X):
    """Validate that X is a (graph, graph) pair and return it."""
    try:
        g1, g2 = X
    except (TypeError, ValueError):
        raise ValueError("X must be a (graph, graph) pair") from None
    for g in (g1, g2):
        if not isinstance(g, AttributedGraph):
            raise ValueError("expected AttributedGraph instances, got %r" % type(g))
    return g1, g2


def check_anchor_map(anchors, g1, g2):
    """Validate anchor ids against the graphs; None passes through."""
    if anchors is None:
        return None
    if not isinstance(anchors, AnchorMap):
        anchors = AnchorMap(list(anchors))
    for u, v in anchors.pairs:
        if not 0 <= u < g1.n or not 0 <= v < g2.n:
            raise ValueError("anchor pair (%d, %d) out of range" % (u, v))
    return anchors


class GraphAligner(BaseEstimator):
    """Aligns two attributed graphs and exposes the mapping.

    Parameters mirror :class:`AlignConfig`.  After fit, `mapping_`
    holds the external-id mapping, `report_` the run report and
    `n_iter_` the number of iterations executed.
    """

    def __init__(self, bucket_capacity=500, top_k=3, max_iterations=20,
                 min_growth_ratio=1.02, anchor_cap=1000,
                 central_hop_threshold=1.0, scan_neighbors=True,
                 bootstrap_log_base=math.e, central_log_base=2.0,
                 close_epsilon=1.0, seed=0, threads=1):
        self.bucket_capacity = bucket_capacity
        self.top_k = top_k
        self.max_iterations = max_iterations
        self.min_growth_ratio = min_growth_ratio
        self.anchor_cap = anchor_cap
        self.central_hop_threshold = central_hop_threshold
        self.scan_neighbors = scan_neighbors
        self.bootstrap_log_base = bootstrap_log_base
        self.central_log_base = central_log_base
        self.close_epsilon = close_epsilon
        self.seed = seed
        self.threads = threads

    def _config(self) -> AlignConfig:
        cfg = AlignConfig(**self.get_params())
        cfg.validate()
        return cfg

    def fit(self, X, y=None, anchors=None, truth=None,
            external_table=None, token_weights=None):
        """Align the pair X = (g1, g2); anchors seed the run when given."""
        g1, g2 = check_graph_pair(X)
        anchors = check_anchor_map(anchors, g1, g2)
        result = align(g1, g2, anchors=anchors, config=self._config(),
                       truth=truth, external_table=external_table,
                       token_weights=token_weights)
        self.result_ = result
        self.graphs_ = (g1, g2)
        self.mapping_ = {g1.ext_ids[u]: g2.ext_ids[v]
                         for u, v in sorted(result.mapping.items())}
        self.report_ = result.report
        self.n_iter_ = result.report["totals"]["iterations"]
        return self

    def predict(self, X):
        """Map external graph-1 ids to their aligned graph-2 ids (or None)."""
        if not hasattr(self, "mapping_"):
            raise NotFittedError("this GraphAligner instance is not fitted yet")
        return [self.mapping_.get(ext) for ext in X]
