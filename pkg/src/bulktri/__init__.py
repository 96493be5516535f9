"""Streaming approximate triangle counting with bulk-parallel neighborhood sampling."""
from __future__ import annotations

from bulktri.aggregate import aggregate_estimate, median_of_means, required_estimators
from bulktri.engine import Engine
from bulktri.oracle import OrderedGraph, exact_triangle_count

__version__ = "0.1.0"

__all__ = [
    "Engine", "OrderedGraph", "TriangleCountEstimator", "aggregate_estimate",
    "exact_triangle_count", "median_of_means", "required_estimators",
]


def __getattr__(name):
    # scikit-learn is imported only when the estimator front end is used
    if name == "TriangleCountEstimator":
        from bulktri.api import TriangleCountEstimator
        return TriangleCountEstimator
    raise AttributeError(f"module 'bulktri' has no attribute {name!r}")
