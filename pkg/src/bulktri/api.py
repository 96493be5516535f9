"""scikit-learn style front end.

The "samples" are edges: ``X`` is an ``(m, 2)`` integer array of vertex ids
in arrival order. ``fit`` consumes a whole stream, ``partial_fit`` appends
more edges to the stream seen so far.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from bulktri.aggregate import AggregateConfig, aggregate_estimate, default_groups
from bulktri.edgeio import batches_of
from bulktri.engine import Engine
from bulktri.estimator import InvalidEdgeError


def check_edges(X) -> np.ndarray:
    """Validate an edge array and return it as ``(m, 2)`` uint64.

    Accepts anything :func:`sklearn.utils.check_array` does, including an
    empty stream. Vertex ids must be non-negative integers.
    """
    X = check_array(X, dtype=None, ensure_2d=True, ensure_min_samples=0, ensure_min_features=0)
    if X.size == 0:
        return np.empty((0, 2), dtype=np.uint64)
    if X.shape[1] != 2:
        raise ValueError(f"edges must have 2 columns, got {X.shape[1]}")
    if X.dtype.kind == "f":
        if not np.array_equal(X, np.floor(X)):
            raise InvalidEdgeError("vertex ids must be integers")
        X = X.astype(np.int64)
    if X.dtype.kind not in "iu":
        raise InvalidEdgeError(f"vertex ids must be integers, got dtype {X.dtype}")
    if X.dtype.kind == "i" and (X < 0).any():
        raise InvalidEdgeError("vertex ids must be non-negative")
    return X.astype(np.uint64, copy=False)


class TriangleCountEstimator(BaseEstimator):
    """Approximate triangle count of an edge stream.

    Parameters
    ----------
    n_estimators : int
        Number of neighborhood-sampling estimators ``r``.
    batch_size : int
        Edges per bulk update.
    n_groups : int or None
        Median-of-means groups; ``None`` uses ``min(r, ceil(8 ln(1/delta)))``.
    delta : float
        Failure probability used for the default group count.
    random_state : int or None
        Seed of the decision source. ``None`` draws a fresh seed at ``fit``.
    n_jobs : int or None
        Worker threads; ``None`` uses all CPUs.

    Attributes
    ----------
    estimate_ : float
        Triangle count estimate for the stream seen so far.
    n_edges_seen_ : int
    engine_ : Engine
    """

    def __init__(self, n_estimators: int = 100_000, batch_size: int = 16384, n_groups: int | None = None,
                 delta: float = 0.1, random_state: int | None = 0, n_jobs: int | None = None):
        self.n_estimators = n_estimators
        self.batch_size = batch_size
        self.n_groups = n_groups
        self.delta = delta
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _check_params(self):
        if int(self.n_estimators) < 1:
            raise ValueError("n_estimators must be >= 1")
        if int(self.batch_size) < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.n_groups is not None and not 1 <= self.n_groups <= self.n_estimators:
            raise ValueError("n_groups must lie in [1, n_estimators]")

    def _seed(self) -> int:
        if self.random_state is None:
            return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])
        if isinstance(self.random_state, (int, np.integer)):
            return int(self.random_state)
        raise ValueError("random_state must be an int or None")

    def _reset(self):
        self._check_params()
        self.engine_ = Engine(int(self.n_estimators), seed=self._seed(), workers=self.n_jobs)
        self.groups_ = (self.n_groups if self.n_groups is not None
                        else default_groups(int(self.n_estimators), self.delta))

    def fit(self, X, y=None):
        """Start a new stream and ingest ``X``."""
        X = check_edges(X)
        self._reset()
        return self._ingest(X)

    def partial_fit(self, X, y=None):
        """Append ``X`` to the stream (starts one on the first call)."""
        X = check_edges(X)
        if not hasattr(self, "engine_"):
            self._reset()
        return self._ingest(X)

    def _ingest(self, X):
        for w in batches_of(X, int(self.batch_size)):
            self.engine_.ingest_batch(w)
        self.n_edges_seen_ = self.engine_.m
        self.estimate_ = (aggregate_estimate(self.engine_, AggregateConfig(self.groups_))
                          if self.engine_.m else 0.0)
        return self

    def coarse_estimates(self) -> np.ndarray:
        """Per-estimator unbiased estimates ``chi * m`` (0 where no triangle closed)."""
        check_is_fitted(self, "engine_")
        return self.engine_.coarse_estimates()

    def estimate(self) -> float:
        check_is_fitted(self, "estimate_")
        return self.estimate_
