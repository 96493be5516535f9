"""Seeded synthetic edge streams.

``gnp`` is the Erdos-Renyi G(n, p) model. ``powerlaw`` is a configuration
model: degrees drawn from a discrete Pareto law ``P(d) ~ d^-exponent`` on
``[min_degree, max_degree]``, stubs paired uniformly at random, self-loops
and repeated pairs dropped. Both emit edges in a random arrival order.
"""
from __future__ import annotations

import math

import numpy as np


def _pair_from_index(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Invert ``k = j (j - 1) / 2 + i`` for ``0 <= i < j``."""
    k = np.asarray(k, dtype=np.int64)
    j = ((1 + np.sqrt(1 + 8 * k.astype(np.float64))) / 2).astype(np.int64)
    # float rounding can be off by one either way
    j -= (j * (j - 1) // 2) > k
    j += ((j + 1) * j // 2) <= k
    i = k - j * (j - 1) // 2
    return i, j


def gnp(n: int, p: float, seed: int = 0) -> np.ndarray:
    """G(n, p) edges as an ``(m, 2)`` uint64 array with ``u < v``, shuffled."""
    if n < 0 or not 0 <= p <= 1:
        raise ValueError("need n >= 0 and 0 <= p <= 1")
    rng = np.random.default_rng(seed)
    total = n * (n - 1) // 2
    if total == 0 or p == 0:
        return np.empty((0, 2), dtype=np.uint64)
    if p == 1:
        idx = np.arange(total, dtype=np.int64)
    else:
        # geometric gaps between successive selected pair indices
        parts = []
        last = -1
        chunk = max(1024, int(total * p * 1.1) + 64)
        while last < total:
            steps = np.cumsum(rng.geometric(p, size=chunk).astype(np.int64)) + last
            parts.append(steps[steps < total])
            last = int(steps[-1])
        idx = np.concatenate(parts)
    i, j = _pair_from_index(idx)
    edges = np.column_stack([i, j]).astype(np.uint64)
    return edges[rng.permutation(len(edges))]


def powerlaw_degrees(n: int, exponent: float, min_degree: int, max_degree: int,
                     rng: np.random.Generator) -> np.ndarray:
    # inverse-CDF sample of a continuous Pareto, floored and truncated
    u = rng.random(n)
    d = np.floor(min_degree * (1 - u) ** (-1.0 / (exponent - 1)))
    d = np.minimum(d, max_degree).astype(np.int64)
    if d.sum() % 2:
        d[int(np.argmax(d))] -= 1
    return d


def powerlaw(n: int, exponent: float = 2.5, min_degree: int = 1, max_degree: int | None = None,
             seed: int = 0) -> np.ndarray:
    """Configuration-model graph with a power-law degree sequence.

    Returns an ``(m, 2)`` uint64 array of distinct edges with ``u < v`` in a
    uniformly random arrival order.
    """
    if n < 2:
        raise ValueError("need at least two vertices")
    if exponent <= 1:
        raise ValueError("exponent must exceed 1")
    if min_degree < 1:
        raise ValueError("min_degree must be positive")
    max_degree = n - 1 if max_degree is None else min(max_degree, n - 1)
    rng = np.random.default_rng(seed)
    deg = powerlaw_degrees(n, exponent, min_degree, max_degree, rng)
    stubs = np.repeat(np.arange(n, dtype=np.int64), deg)
    stubs = stubs[rng.permutation(len(stubs))]
    a, b = stubs[0::2], stubs[1::2]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keep = lo != hi
    lo, hi = lo[keep], hi[keep]
    # first occurrence of each pair, in the (already random) pairing order
    _, first = np.unique(lo * n + hi, return_index=True)
    first.sort()
    return np.column_stack([lo[first], hi[first]]).astype(np.uint64)


def powerlaw_for_edges(m: int, exponent: float = 2.5, min_degree: int = 4, seed: int = 0) -> np.ndarray:
    """A power-law stream with at least ``m`` edges (vertex count chosen to fit)."""
    mean = min_degree * (exponent - 1) / (exponent - 2) if exponent > 2 else 2.0 * min_degree
    n = max(16, int(math.ceil(2 * m / mean)))
    while True:
        edges = powerlaw(n, exponent, min_degree, seed=seed)
        if len(edges) >= m:
            return edges
        n = int(n * 1.1) + 1
