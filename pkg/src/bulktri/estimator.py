"""Neighborhood-sampling estimator state and the coarse per-estimator estimate."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

Edge = Tuple[int, int]

STALE = -1


class InvalidEdgeError(ValueError):
    """Raised for self-loops, duplicates or malformed edge input."""


def normalize_edge(u, v) -> Edge:
    u, v = int(u), int(v)
    if u == v:
        raise InvalidEdgeError(f"self-loop on vertex {u}")
    if u < 0 or v < 0:
        raise InvalidEdgeError(f"negative vertex id in edge ({u}, {v})")
    return (u, v) if u < v else (v, u)


def closing_edge(f1: Edge, f2: Edge) -> Optional[Edge]:
    """The edge that turns the wedge ``f1, f2`` into a triangle.

    Returns ``None`` when the two edges do not share exactly one vertex.
    """
    shared = set(f1) & set(f2)
    if len(shared) != 1:
        return None
    (c,) = shared
    x = f1[0] if f1[1] == c else f1[1]
    y = f2[0] if f2[1] == c else f2[1]
    return normalize_edge(x, y)


@dataclass
class Estimator:
    """One neighborhood-sampling tuple.

    ``f1`` is the level-1 edge, ``f2`` the level-2 edge and ``f3`` the closing
    edge (``None`` when empty). ``chi`` counts the edges adjacent to ``f1``
    that arrived after it. The batch positions are 1-based positions inside
    the batch being processed, or ``STALE`` when the edge is older.
    """

    f1: Optional[Edge] = None
    f2: Optional[Edge] = None
    f3: Optional[Edge] = None
    chi: int = 0
    f1_batch_pos: int = STALE
    f2_batch_pos: int = STALE

    def as_tuple(self):
        return (self.f1, self.f2, self.f3, self.chi)


@dataclass
class StreamState:
    edges_seen: int = 0
    batches_seen: int = 0

    def advance(self, batch_size: int) -> None:
        self.edges_seen += batch_size
        self.batches_seen += 1


def new_estimator() -> Estimator:
    return Estimator()


def coarse_estimate(est: Estimator, m: int) -> float:
    """``chi * m`` if the estimator holds a closed triangle, else 0."""
    if est.f3 is None:
        return 0.0
    return float(est.chi) * float(m)


def validate_nbsi(est: Estimator, stream: Sequence[Edge]) -> bool:
    """Check the deterministic invariant clauses against ``stream`` by brute force.

    ``stream`` is the full ordered edge sequence the estimator has seen. The
    uniformity clauses are statistical and are not checked here.
    """
    return not nbsi_violations(est, stream)


def nbsi_violations(est: Estimator, stream: Sequence[Edge]) -> list[str]:
    """Like :func:`validate_nbsi` but returns the diagnostics."""
    from bulktri.oracle import OrderedGraph

    return OrderedGraph(stream).nbsi_violations(est)
