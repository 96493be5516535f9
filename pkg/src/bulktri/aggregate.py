"""Median-of-means aggregation and estimator-count sizing."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bulktri import primitives as P


class EstimateUndefinedError(ValueError):
    pass


class InfeasibleBoundError(ValueError):
    pass


@dataclass(frozen=True)
class AggregateConfig:
    groups: int
    epsilon: float = 1.0
    delta: float = 0.1

    def __post_init__(self):
        if self.groups < 1:
            raise ValueError("groups must be positive")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


def default_groups(r: int, delta: float = 0.1) -> int:
    """``min(r, max(1, ceil(8 ln(1/delta))))``."""
    return min(r, max(1, math.ceil(8 * math.log(1 / delta))))


def group_bounds(r: int, groups: int) -> np.ndarray:
    """Boundaries of ``groups`` contiguous ranges over ``range(r)``.

    Sizes differ by at most one, larger groups first (as ``np.array_split``).
    """
    q, extra = divmod(r, groups)
    sizes = np.full(groups, q, dtype=np.int64)
    sizes[:extra] += 1
    return np.concatenate([[0], np.cumsum(sizes)])


def median_of_means(values, groups: int) -> float:
    """Lower median of the means of ``groups`` contiguous groups of ``values``."""
    values = np.asarray(values)
    r = len(values)
    if r == 0:
        raise EstimateUndefinedError("no estimators to aggregate")
    if not 1 <= groups <= r:
        raise ValueError(f"groups must be in [1, {r}], got {groups}")
    bounds = group_bounds(r, groups)
    prefix = P.concat(P.scan(values, np.add, values.dtype.type(0)), [values.sum()])
    sums = prefix[bounds[1:]] - prefix[bounds[:-1]]
    means = sums / np.diff(bounds)
    return float(P.sort(means)[(groups - 1) // 2])


def aggregate_estimate(engine, cfg: AggregateConfig | None = None, m: int | None = None) -> float:
    """Median-of-means of the coarse estimates held by ``engine``.

    Group sums are taken over the integer ``chi`` hits and scaled by ``m``
    afterwards, which keeps the sums exact.
    """
    m = engine.m if m is None else m
    groups = cfg.groups if cfg is not None else default_groups(engine.r)
    return median_of_means(engine.hits(), groups) * float(m)


def required_estimators(epsilon: float, delta: float, m: int, max_degree: int,
                        tau_lower_bound: float) -> int:
    """Estimators sufficient for an (epsilon, delta) guarantee.

    ``ceil(96 / epsilon**2 * m * max_degree / tau * ln(1 / delta))``, at least 1.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if m <= 0 or max_degree <= 0:
        raise ValueError("m and max_degree must be positive")
    if tau_lower_bound <= 0:
        raise InfeasibleBoundError("the triangle-count lower bound must be positive")
    x = 96.0 / epsilon ** 2 * (m * max_degree / tau_lower_bound) * math.log(1.0 / delta)
    # absorb floating-point noise such as 576.0000000001
    return max(1, math.ceil(x * (1 - 1e-12)))
