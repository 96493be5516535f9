from __future__ import annotations

import itertools

import numpy as np
import pytest

# vertices A..F of the worked example, as integer ids
A, B, C, D, E, F = range(1, 7)
NAMES = {v: k for k, v in zip("ABCDEF", range(1, 7))}

# the example batch W = <{B,C}, {C,D}, {E,F}, {B,D}, {D,F}>
EXAMPLE_BATCH = [(B, C), (C, D), (E, F), (B, D), (D, F)]


def edge_name(u, v) -> str:
    return "".join(sorted((NAMES[int(u)], NAMES[int(v)])))


def random_graph(n: int, p: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    """G(n, p) edges in a random arrival order."""
    edges = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    order = rng.permutation(len(edges))
    return [edges[k] for k in order]


@pytest.fixture
def example_batch():
    return np.array(EXAMPLE_BATCH, dtype=np.uint64)
