"""Brute-force ground truth: exact triangle counts and stream neighborhoods.

Everything here is plain Python on dict/set structures and meant for
desk-scale graphs (up to roughly 10^6 edges for counting; neighborhood
queries cost O(log deg) each after an O(m) index build).
"""
from __future__ import annotations

import bisect
from collections import defaultdict
from typing import Iterable, Sequence

from bulktri.estimator import Edge, Estimator, closing_edge, normalize_edge


class NotInGraphError(KeyError):
    pass


class InvalidTriangleError(ValueError):
    pass


class OrderedGraph:
    """A simple graph together with the arrival order of its edges."""

    def __init__(self, edges: Iterable[Sequence[int]]):
        self.edges: list[Edge] = [normalize_edge(u, v) for u, v in edges]
        self.position: dict[Edge, int] = {}
        for i, e in enumerate(self.edges):
            if e in self.position:
                raise ValueError(f"duplicate edge {e} at stream positions {self.position[e]} and {i}")
            self.position[e] = i
        # vertex -> sorted stream positions of its incident edges
        self._incident: dict[int, list[int]] = defaultdict(list)
        for i, (u, v) in enumerate(self.edges):
            self._incident[u].append(i)
            self._incident[v].append(i)

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, x: int) -> int:
        return len(self._incident.get(x, ()))

    def max_degree(self) -> int:
        return max((len(p) for p in self._incident.values()), default=0)

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = defaultdict(set)
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    # -- triangles ---------------------------------------------------------

    def triangles(self) -> list[tuple[int, int, int]]:
        """All triangles as sorted vertex triples."""
        adj = self.adjacency()
        # orient each edge toward the endpoint that is larger in (degree, id)
        rank = {x: (len(nb), x) for x, nb in adj.items()}
        fwd = {x: {y for y in nb if rank[y] > rank[x]} for x, nb in adj.items()}
        out = []
        for x, xs in fwd.items():
            for y in xs:
                for z in fwd[y]:
                    if z in xs:
                        out.append(tuple(sorted((x, y, z))))
        return sorted(out)

    def triangle_count(self) -> int:
        return len(self.triangles())

    def triangle_edges(self, t) -> list[Edge]:
        """The three edges of ``t`` (a vertex triple or three edges), in stream order."""
        t = tuple(t)
        if len(t) == 3 and all(isinstance(x, tuple) for x in t):
            vertices = {x for e in t for x in e}
        else:
            vertices = set(t)
        if len(vertices) != 3:
            raise InvalidTriangleError(f"{t!r} does not describe a triangle")
        a, b, c = sorted(vertices)
        edges = [(a, b), (a, c), (b, c)]
        missing = [e for e in edges if e not in self.position]
        if missing:
            raise InvalidTriangleError(f"{(a, b, c)} is not a triangle: missing {missing}")
        return sorted(edges, key=self.position.__getitem__)

    # -- stream neighborhoods ----------------------------------------------

    def neighborhood_after(self, f, upto: int | None = None) -> set[Edge]:
        """Edges sharing a vertex with ``f`` that arrive after it.

        ``upto`` restricts the stream to its first ``upto`` edges.
        """
        return {self.edges[i] for i in self._after_positions(f, upto)}

    def neighborhood_after_size(self, f, upto: int | None = None) -> int:
        f = self._require(f, upto)
        p = self.position[f]
        hi = self.m if upto is None else upto
        return sum(bisect.bisect_right(self._incident[x], hi - 1) - bisect.bisect_right(self._incident[x], p)
                   for x in f)

    def _after_positions(self, f, upto):
        f = self._require(f, upto)
        p = self.position[f]
        hi = self.m if upto is None else upto
        for x in f:
            inc = self._incident[x]
            yield from inc[bisect.bisect_right(inc, p):bisect.bisect_right(inc, hi - 1)]

    def _require(self, f, upto=None) -> Edge:
        f = normalize_edge(*f)
        p = self.position.get(f)
        if p is None or (upto is not None and p >= upto):
            raise NotInGraphError(f"edge {f} is not in the stream")
        return f

    def triangle_c(self, t) -> int:
        """Size of the later neighborhood of the triangle's first edge."""
        first = self.triangle_edges(t)[0]
        return self.neighborhood_after_size(first)

    def discovery_probabilities(self) -> dict[tuple[int, int, int], float]:
        """Probability that one estimator ends up holding each triangle."""
        return {t: 1.0 / (self.m * self.triangle_c(t)) for t in self.triangles()}

    # -- invariant checking --------------------------------------------------

    def nbsi_violations(self, est: Estimator, upto: int | None = None) -> list[str]:
        """Deterministic invariant clauses for ``est`` after the first ``upto`` edges."""
        n = self.m if upto is None else upto
        errs: list[str] = []
        if est.f1 is None:
            if n > 0:
                errs.append("f1 empty although the stream is not")
            if est.chi != 0:
                errs.append(f"chi={est.chi} with empty f1")
            if est.f2 is not None or est.f3 is not None:
                errs.append("f2/f3 set with empty f1")
            return errs
        p1 = self.position.get(normalize_edge(*est.f1))
        if p1 is None or p1 >= n:
            return [f"f1={est.f1} not in stream"]
        chi = self.neighborhood_after_size(est.f1, n)
        if est.chi != chi:
            errs.append(f"chi={est.chi}, expected {chi}")
        if est.f2 is None:
            if chi > 0:
                errs.append("f2 empty although the neighborhood of f1 is not")
            if est.f3 is not None:
                errs.append("f3 set with empty f2")
            return errs
        p2 = self.position.get(normalize_edge(*est.f2))
        if p2 is None or p2 >= n:
            errs.append(f"f2={est.f2} not in stream")
            return errs
        if len(set(est.f1) & set(est.f2)) != 1:
            errs.append(f"f2={est.f2} not adjacent to f1={est.f1}")
            return errs
        if p2 <= p1:
            errs.append(f"f2={est.f2} arrived before f1={est.f1}")
        closing = closing_edge(est.f1, est.f2)
        pc = self.position.get(closing)
        expected = closing if pc is not None and p2 < pc < n else None
        if est.f3 != expected:
            errs.append(f"f3={est.f3}, expected {expected}")
        return errs


def exact_triangle_count(edges: Iterable[Sequence[int]]) -> int:
    return OrderedGraph(edges).triangle_count()


def neighborhood_after(edges: Iterable[Sequence[int]], f) -> set[Edge]:
    return OrderedGraph(edges).neighborhood_after(f)


def triangle_c(edges: Iterable[Sequence[int]], t) -> int:
    return OrderedGraph(edges).triangle_c(t)
