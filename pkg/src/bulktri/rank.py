"""Per-batch rank structure, substream naming and closing-edge index.

For a batch ``W = <w_1 .. w_s>`` every edge yields two arcs, one per
orientation. The rank of an arc ``x -> y`` is the number of batch edges
incident on ``x`` that arrive after ``{x, y}``; for a pair that is not a batch
edge it is the batch degree of ``x``. Positions are 1-based; ``OLD`` (``-1``)
stands for an edge that arrived in an earlier batch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bulktri import primitives as P
from bulktri.primitives import NULL
from bulktri.rng import vertex_hash

OLD = -1


class InconsistentStateError(RuntimeError):
    """A rank query referred to an arc that the batch does not contain."""


def as_edge_array(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.uint64)
    if w.size == 0:
        return np.empty((0, 2), dtype=np.uint64)
    if w.ndim != 2 or w.shape[1] != 2:
        raise ValueError(f"expected an (s, 2) edge array, got shape {w.shape}")
    return w


_BLOCK = 1 << 15


class BatchVertices:
    """Sorted distinct vertex ids of one batch.

    Besides exact multisearch, ids can be resolved through a hashed slot
    table when the caller already holds :func:`vertex_hash` values: each
    bucket stores the dense index of the single batch vertex hashing there
    (verified against ``ids``), ``EMPTY``, or ``SHARED`` when several
    collide, in which case the query falls back to multisearch.
    """

    EMPTY = -1
    SHARED = -2

    def __init__(self, vertices: np.ndarray):
        self.ids = np.asarray(vertices, dtype=np.uint64)
        n = len(self.ids)
        # occupancy about 1/64, capped at a 64 MiB table
        self.bits = min(24, max(10, int(np.ceil(np.log2(max(n, 1)))) + 6))
        self._shift = 32 - self.bits
        self.slot = np.full(1 << self.bits, self.EMPTY, dtype=np.int32)
        b = vertex_hash(self.ids) >> self._shift
        self.slot[b] = np.arange(n, dtype=np.int32)
        if n > 1:
            sb = np.sort(b)
            clash = sb[1:][sb[1:] == sb[:-1]]
            self.slot[clash] = self.SHARED

    def __len__(self) -> int:
        return len(self.ids)

    def buckets(self, hashes: np.ndarray) -> np.ndarray:
        """Slot entry of each hash (``EMPTY``, ``SHARED`` or a dense index)."""
        h = np.asarray(hashes, dtype=np.intp)
        out = np.empty(h.shape, dtype=self.slot.dtype)
        flat, res = h.reshape(-1), out.reshape(-1)
        # blocked so the shifted indices stay in cache between the two passes
        tmp = np.empty(min(len(flat), _BLOCK), dtype=np.intp)
        for a in range(0, len(flat), _BLOCK):
            b = min(a + _BLOCK, len(flat))
            np.right_shift(flat[a:b], self._shift, out=tmp[:b - a])
            np.take(self.slot, tmp[:b - a], out=res[a:b])
        return out

    def may_contain(self, hashes: np.ndarray) -> np.ndarray:
        """False only for vertices that are certainly absent."""
        return self.buckets(hashes) != self.EMPTY

    def lookup(self, q, hashes=None, buckets=None) -> np.ndarray:
        """Dense index of each query vertex, or ``NULL``.

        With ``hashes`` (or their ``buckets``) the slot table is used;
        otherwise, and for shared buckets, an exact multisearch.
        """
        q = np.asarray(q, dtype=np.uint64)
        if hashes is None and buckets is None:
            return P.exact_multisearch(self.ids, q)
        idx = self.buckets(hashes) if buckets is None else np.asarray(buckets)
        out = idx.astype(np.int64)
        if len(self.ids) == 0:
            out[:] = NULL
            return out
        # a bucket names one candidate; keep it only if the ids agree
        np.putmask(out, (out >= 0) & (self.ids[np.maximum(out, 0)] != q), NULL)
        shared = np.flatnonzero(idx == self.SHARED)
        if len(shared):
            out[shared] = P.exact_multisearch(self.ids, q[shared])
        return out

    @classmethod
    def of_edges(cls, w) -> "BatchVertices":
        w = as_edge_array(w)
        return cls(P.sort(w.ravel()) if len(w) else w.ravel())._dedup()

    def _dedup(self) -> "BatchVertices":
        ids = self.ids
        if len(ids) > 1:
            keep = np.ones(len(ids), dtype=bool)
            keep[1:] = ids[1:] != ids[:-1]
            if not keep.all():
                return BatchVertices(ids[keep])
        return self


@dataclass(frozen=True)
class RankedArcs:
    """Output of :func:`rank_all`: ``2 s`` arcs ordered by (src, pos desc).

    The same order is (src, rank asc), so one array serves both lookups:
    ``q1_keys`` encodes (src, pos desc) and ``q2_keys`` encodes (src, rank).
    ``start``/``deg`` give each batch vertex's arc range, and
    ``arc_of_pos[side, p - 1]`` locates the arc leaving endpoint ``side``
    of the edge at position ``p``; these allow the same queries to be
    answered by direct indexing.
    """

    src: np.ndarray
    dst: np.ndarray
    pos: np.ndarray
    rank: np.ndarray
    vidx: np.ndarray
    vertices: BatchVertices
    s: int
    q1_keys: np.ndarray
    q2_keys: np.ndarray
    start: np.ndarray
    deg: np.ndarray
    arc_of_pos: np.ndarray

    def __len__(self) -> int:
        return len(self.src)

    def records(self) -> list[tuple[int, int, int, int]]:
        """(src, dst, pos, rank) tuples in (src asc, pos desc) order."""
        return [(int(a), int(b), int(p), int(r))
                for a, b, p, r in zip(self.src, self.dst, self.pos, self.rank)]

    def by_src_rank(self) -> list[tuple[int, int, int, int]]:
        order = np.lexsort((self.rank, self.src))
        return [self.records()[i] for i in order]

    def degree(self, u) -> np.ndarray:
        return query_rank_outgoing(self, u, np.full(np.shape(u), OLD))


def rank_all(w) -> RankedArcs:
    """Rank every batch edge in both orientations.

    ``w`` is an ``(s, 2)`` array of distinct edges in arrival order.
    """
    w = as_edge_array(w)
    s = len(w)
    # arcs listed by decreasing position, so a stable sort by src leaves
    # equal-src arcs in decreasing pos order
    rev = w[::-1]
    src = np.column_stack([rev[:, 0], rev[:, 1]]).ravel()
    dst = np.column_stack([rev[:, 1], rev[:, 0]]).ravel()
    pos = np.repeat(np.arange(s, 0, -1, dtype=np.int64), 2)

    order = P.argsort(src)
    src, dst, pos = (P.extract(a, order) for a in (src, dst, pos))

    n = len(src)
    starts = np.ones(n, dtype=bool)
    if n > 1:
        starts[1:] = src[1:] != src[:-1]
    # an arc contributes 1 to the next arc's rank unless the next arc opens a new src
    ones = np.ones(n, dtype=bool)
    ones[:-1] = ~starts[1:]
    rank = P.scan_with_resets(ones)
    vidx = P.scan(starts.astype(np.int64)) + starts - 1

    vertices = BatchVertices(src[starts])
    start = np.flatnonzero(starts)
    deg = np.diff(np.append(start, n))
    # unsorted arc a came from edge position s - a // 2, leaving endpoint a % 2
    arc_of_pos = np.empty((2, s), dtype=np.int64)
    arc_of_pos[order % 2, s - 1 - order // 2] = np.arange(n)
    q1_keys = vidx * (s + 2) + (s + 1 - pos)
    q2_keys = vidx * (s + 1) + rank
    return RankedArcs(src=src, dst=dst, pos=pos, rank=rank, vidx=vidx, vertices=vertices,
                      s=s, q1_keys=q1_keys, q2_keys=q2_keys, start=start, deg=deg,
                      arc_of_pos=arc_of_pos)


def _check_positions(p, s):
    bad = (p != OLD) & ((p < 1) | (p > s))
    if bad.any():
        raise InconsistentStateError(f"position {int(p[bad][0])} outside batch of size {s}")


def query_rank_outgoing(ranked: RankedArcs, u, p, vidx=None, method: str = "direct") -> np.ndarray:
    """Batched Q1 lookups: ``rank(u -> v)`` for the batch edge at position ``p``.

    With ``p == OLD`` the answer is the batch degree of ``u``: the rank of
    ``u``'s earliest arc plus one, or 0 when ``u`` does not occur in the
    batch. ``vidx`` may carry already-resolved vertex indices for ``u``.

    ``method="multisearch"`` runs the predecessor multisearch over
    ``q1_keys``; ``"direct"`` reads ``deg`` and ``arc_of_pos``. Both give
    identical answers and raise on the same inconsistencies.
    """
    u = np.atleast_1d(np.asarray(u, dtype=np.uint64))
    p = np.broadcast_to(np.asarray(p, dtype=np.int64), u.shape)
    _check_positions(p, ranked.s)
    if method == "multisearch":
        return _q1_multisearch(ranked, u, p, vidx)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    old = p == OLD
    out = np.zeros(len(u), dtype=np.int64)
    io = np.flatnonzero(old)
    if len(io):
        vi = ranked.vertices.lookup(u[io]) if vidx is None else np.asarray(vidx)[io]
        # NULL (-1) picks the trailing zero: absent vertices have degree 0
        out[io] = np.append(ranked.deg, 0)[vi]
    ip = np.flatnonzero(~old)
    if len(ip):
        pp = p[ip] - 1
        j = ranked.arc_of_pos[0, pp]
        j = np.where(ranked.src[j] == u[ip], j, ranked.arc_of_pos[1, pp])
        wrong = ranked.src[j] != u[ip]
        if wrong.any():
            k = int(np.flatnonzero(wrong)[0])
            raise InconsistentStateError(
                f"no arc with src={int(u[ip][k])} at position {int(p[ip][k])}")
        out[ip] = ranked.rank[j]
    return out


def _q1_multisearch(ranked, u, p, vidx):
    s = ranked.s
    vi = ranked.vertices.lookup(u) if vidx is None else np.asarray(vidx, dtype=np.int64)
    out = np.zeros(len(u), dtype=np.int64)
    if (p[vi == NULL] != OLD).any():
        k = int(np.flatnonzero((vi == NULL) & (p != OLD))[0])
        raise InconsistentStateError(f"no arc with src={int(u[k])} at position {int(p[k])}")
    found = np.flatnonzero(vi != NULL)
    if len(found) == 0:
        return out
    pf = p[found]
    old = pf == OLD
    inner = np.where(old, s + 1, s + 1 - pf)
    j = P.pred_eq_multisearch(ranked.q1_keys, vi[found] * (s + 2) + inner)
    ok = (j != NULL)
    ok[ok] = ranked.vidx[j[ok]] == vi[found][ok]
    if not ok.all():
        raise InconsistentStateError("no arc for a vertex that occurs in the batch")
    jp = P.extract(ranked.pos, j)
    mismatch = ~old & (jp != pf)
    if mismatch.any():
        k = int(np.flatnonzero(mismatch)[0])
        raise InconsistentStateError(
            f"no arc with src={int(u[found][k])} at position {int(pf[k])}")
    out[found] = P.extract(ranked.rank, j) + old
    return out


def substream_edge(ranked: RankedArcs, u, v, ld, phi, vidx_u=None, vidx_v=None,
                   method: str = "direct"):
    """Resolve substream names ``phi`` for level-1 edges ``{u, v}``.

    ``phi < ld`` names the arc with src ``u`` and rank ``phi``; otherwise the
    arc with src ``v`` and rank ``phi - ld`` (Q2 lookups). Returns
    ``(src, dst, pos)`` arrays.
    """
    u = np.atleast_1d(np.asarray(u, dtype=np.uint64))
    v = np.broadcast_to(np.asarray(v, dtype=np.uint64), u.shape)
    ld = np.broadcast_to(np.asarray(ld, dtype=np.int64), u.shape)
    phi = np.broadcast_to(np.asarray(phi, dtype=np.int64), u.shape)
    left = phi < ld
    src = np.where(left, u, v)
    r = np.where(left, phi, phi - ld)
    if vidx_u is not None and vidx_v is not None:
        vi = np.where(left, vidx_u, vidx_v)
    else:
        vi = ranked.vertices.lookup(src)
    if method == "multisearch":
        keys = vi * (ranked.s + 1) + r
        j = P.exact_multisearch(ranked.q2_keys, keys)
        j[(vi == NULL) | (r < 0)] = NULL
    elif method == "direct":
        ok = (vi != NULL) & (r >= 0)
        ok[ok] = r[ok] < ranked.deg[vi[ok]]
        j = np.where(ok, ranked.start[np.where(ok, vi, 0)] + r, NULL)
    else:
        raise ValueError(f"unknown method {method!r}")
    if (j == NULL).any():
        k = int(np.flatnonzero(j == NULL)[0])
        raise InconsistentStateError(f"no arc with src={int(src[k])} and rank={int(r[k])}")
    return ranked.src[j], ranked.dst[j], ranked.pos[j]


@dataclass(frozen=True)
class ClosingIndex:
    """Batch edges ``(src < dst, pos)`` sorted by (src, dst)."""

    src: np.ndarray
    dst: np.ndarray
    pos: np.ndarray
    keys: np.ndarray
    vertices: BatchVertices

    def __len__(self) -> int:
        return len(self.src)

    def records(self) -> list[tuple[int, int, int]]:
        return [(int(a), int(b), int(p)) for a, b, p in zip(self.src, self.dst, self.pos)]


def build_closing_index(w, vertices: BatchVertices | None = None,
                        ranked: RankedArcs | None = None) -> ClosingIndex:
    """Index the batch edges by their pair of dense vertex indices.

    With ``ranked`` (from :func:`rank_all` on the same batch) the dense
    indices are read off the arcs instead of being searched for.
    """
    w = as_edge_array(w)
    if ranked is not None:
        vertices = ranked.vertices
    elif vertices is None:
        vertices = BatchVertices.of_edges(w)
    lo = np.minimum(w[:, 0], w[:, 1])
    hi = np.maximum(w[:, 0], w[:, 1])
    nv = len(vertices)
    if ranked is not None:
        a = ranked.vidx[ranked.arc_of_pos[0]]
        b = ranked.vidx[ranked.arc_of_pos[1]]
        # dense indices follow id order, so min/max pairs them with lo/hi
        keys = np.minimum(a, b) * nv + np.maximum(a, b)
    else:
        keys = vertices.lookup(lo) * nv + vertices.lookup(hi)
    order = P.argsort(keys)
    pos = np.arange(1, len(w) + 1, dtype=np.int64)
    return ClosingIndex(src=lo[order], dst=hi[order], pos=pos[order], keys=keys[order],
                        vertices=vertices)


def lookup_closing(ix: ClosingIndex, u, v, hu=None, hv=None) -> np.ndarray:
    """Batch position of each edge ``{u, v}``, or ``NULL`` when absent.

    ``hu``/``hv`` are optional :func:`vertex_hash` values of ``u`` and ``v``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=np.uint64))
    v = np.broadcast_to(np.asarray(v, dtype=np.uint64), u.shape)
    swap = u > v
    lo, hi = np.where(swap, v, u), np.where(swap, u, v)
    if hu is not None and hv is not None:
        hlo, hhi = np.where(swap, hv, hu), np.where(swap, hu, hv)
    else:
        hlo = hhi = None
    a = ix.vertices.lookup(lo, hlo)
    b = ix.vertices.lookup(hi, hhi)
    both = (a != NULL) & (b != NULL)
    keys = np.where(both, a * len(ix.vertices) + b, -1)
    j = P.exact_multisearch(ix.keys, keys)
    j[~both] = NULL
    return P.extract(ix.pos, j, fill=NULL)
