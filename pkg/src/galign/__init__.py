"""Seeded alignment of attributed graphs.

Positions every vertex of two graphs in the plane from hop distances to
a small set of shared anchor pairs, buckets the positions in a quadtree
to prune the candidate space, scores bucket-local pairs with a
composite attribute-aware similarity and grows the mapping greedily
over a few iterations.
"""

from .graph import (AttributedGraph, AnchorMap, GroundTruth, GraphError,
                    load_graph, save_graph, load_anchor_map, load_ground_truth,
                    load_external_similarity, load_token_weights)
from .similarity import SimilarityConfig, SimilarityScore, AnchorView, sigma
from .aligner import AlignConfig, AlignResult, AlignmentAbort, align
from .estimator import GraphAligner

__version__ = "0.1.0"

__all__ = [
    "AttributedGraph", "AnchorMap", "GroundTruth", "GraphError",
    "load_graph", "save_graph", "load_anchor_map", "load_ground_truth",
    "load_external_similarity", "load_token_weights",
    "SimilarityConfig", "SimilarityScore", "AnchorView", "sigma",
    "AlignConfig", "AlignResult", "AlignmentAbort", "align",
    "GraphAligner", "__version__",
]
