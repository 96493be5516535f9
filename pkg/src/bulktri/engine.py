"""Coordinated bulk update of ``r`` neighborhood-sampling estimators.

Estimator state is held column-wise (one numpy array per field) so that each
step of a batch update is a handful of whole-array primitive calls:

1. level-1 edges: reservoir replacement with probability ``s / (m + s)``;
2. level-2 edges and ``chi``: batch ranks give every estimator the number of
   new neighbors and name the candidate picked;
3. closing edges: one lookup per open wedge in the batch edge index.
"""
from __future__ import annotations

import logging

import numpy as np

from bulktri import primitives as P
from bulktri.estimator import STALE, Estimator, InvalidEdgeError, StreamState, closing_edge
from bulktri.primitives import NULL
from bulktri.rank import (
    RankedArcs, as_edge_array, build_closing_index, lookup_closing, query_rank_outgoing,
    rank_all, substream_edge,
)
from bulktri.rng import DecisionSource, mix64, vertex_hash

log = logging.getLogger(__name__)

TAG_LEVEL1 = 1
TAG_LEVEL2 = 2


def validate_batch(w) -> np.ndarray:
    """Normalize a batch to ``(s, 2)`` uint64 with ``u < v`` per row.

    Raises :class:`InvalidEdgeError` on self-loops or repeated edges.
    """
    w = np.asarray(w)
    if w.size == 0:
        return np.empty((0, 2), dtype=np.uint64)
    if w.ndim != 2 or w.shape[1] != 2:
        raise InvalidEdgeError(f"batch must have shape (s, 2), got {w.shape}")
    if w.dtype.kind == "i" and (w < 0).any():
        raise InvalidEdgeError("negative vertex id in batch")
    if w.dtype.kind not in "iu":
        raise InvalidEdgeError(f"vertex ids must be integers, got dtype {w.dtype}")
    w = as_edge_array(w)
    lo = np.minimum(w[:, 0], w[:, 1])
    hi = np.maximum(w[:, 0], w[:, 1])
    loops = np.flatnonzero(lo == hi)
    if len(loops):
        i = int(loops[0])
        raise InvalidEdgeError(f"self-loop ({int(lo[i])}, {int(hi[i])}) at batch position {i + 1}")
    # cheap screen: equal edges give equal fingerprints
    with np.errstate(over="ignore"):
        fp = np.sort(mix64(lo ^ mix64(hi)))
    if not (fp[1:] == fp[:-1]).any():
        return np.column_stack([lo, hi])
    order = np.lexsort((hi, lo))
    slo, shi = lo[order], hi[order]
    dup = np.flatnonzero((slo[1:] == slo[:-1]) & (shi[1:] == shi[:-1]))
    if len(dup):
        a, b = sorted((int(order[dup[0]]), int(order[dup[0] + 1])))
        raise InvalidEdgeError(
            f"duplicate edge ({int(lo[a])}, {int(hi[a])}) at batch positions {a + 1} and {b + 1}")
    return np.column_stack([lo, hi])


def _method() -> str:
    # the reference configuration answers rank queries by multisearch
    return "multisearch" if P.get_config().reference else "direct"


class Engine:
    """``r`` independent estimators updated one batch at a time.

    Parameters
    ----------
    r : int
        Number of estimators.
    seed : int
        Seed of the counter-based decision source.
    workers : int or None
        Worker threads for the primitives; ``None`` keeps the ambient setting.
    """

    def __init__(self, r: int, seed: int = 0, workers: int | None = None):
        if r < 1:
            raise ValueError("need at least one estimator")
        self.r = int(r)
        self.seed = int(seed)
        self.workers = workers
        self.rng = DecisionSource(seed)
        self.state = StreamState()
        self.ids = np.arange(self.r, dtype=np.uint64)
        self.f1 = np.zeros((2, self.r), dtype=np.uint64)
        self.f2 = np.zeros((2, self.r), dtype=np.uint64)
        self.has_f1 = np.zeros(self.r, dtype=bool)
        self.has_f2 = np.zeros(self.r, dtype=bool)
        self.has_f3 = np.zeros(self.r, dtype=bool)
        self.chi = np.zeros(self.r, dtype=np.int64)
        self.f1_pos = np.full(self.r, STALE, dtype=np.int64)
        self.f2_pos = np.full(self.r, STALE, dtype=np.int64)
        # vertex hashes of f1's endpoints and of the open wedge's closing edge,
        # used to skip estimators that cannot be affected by a batch
        self._f1_hash = np.zeros((2, self.r), dtype=np.int64)
        self._close_hash = np.zeros((2, self.r), dtype=np.int64)

    @property
    def m(self) -> int:
        return self.state.edges_seen

    # -- public API ----------------------------------------------------------

    def ingest_batch(self, w) -> None:
        """Fold one batch of new edges into every estimator.

        The batch is validated before any state changes, so a rejected batch
        leaves the engine untouched.
        """
        w = validate_batch(w)
        if self.workers is None:
            self._ingest(w)
        else:
            with P.config_context(workers=self.workers):
                self._ingest(w)

    def estimator(self, i: int) -> Estimator:
        """Snapshot of estimator ``i`` as a plain record."""
        f1 = f2 = f3 = None
        if self.has_f1[i]:
            f1 = (int(self.f1[0, i]), int(self.f1[1, i]))
        if self.has_f2[i]:
            f2 = (int(self.f2[0, i]), int(self.f2[1, i]))
        if self.has_f3[i]:
            f3 = closing_edge(f1, f2)
        return Estimator(f1=f1, f2=f2, f3=f3, chi=int(self.chi[i]),
                         f1_batch_pos=int(self.f1_pos[i]), f2_batch_pos=int(self.f2_pos[i]))

    def estimators(self) -> list[Estimator]:
        return [self.estimator(i) for i in range(self.r)]

    def coarse_estimates(self) -> np.ndarray:
        return np.where(self.has_f3, self.chi.astype(np.float64) * float(self.m), 0.0)

    def hits(self) -> np.ndarray:
        """``chi`` where a triangle is closed and 0 elsewhere (coarse estimate / m)."""
        return np.where(self.has_f3, self.chi, 0)

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copy of the full state, for equality checks."""
        return {name: getattr(self, name).copy() for name in
                ("f1", "f2", "has_f1", "has_f2", "has_f3", "chi", "f1_pos", "f2_pos")}

    # -- the three steps ------------------------------------------------------

    def _ingest(self, w: np.ndarray) -> None:
        s = len(w)
        batch = self.state.batches_seen
        if s == 0:
            self.state.advance(0)
            return
        ranked = rank_all(w)
        fresh = self.step1_level1(w, batch)
        touched2 = self.step2_level2(ranked, batch, fresh)
        self.step3_closing(w, ranked)
        # batch-local positions only mean something while this batch is processed
        self.f1_pos[fresh] = STALE
        self.f2_pos[touched2] = STALE
        self.state.advance(s)

    def step1_level1(self, w: np.ndarray, batch: int) -> np.ndarray:
        """Reservoir step; returns the ids of estimators given a new level-1 edge."""
        m, s = self.m, len(w)
        d = self.rng.uniform(self.ids, batch, TAG_LEVEL1, m + s)
        fresh = np.flatnonzero(d >= m)
        idx = d[fresh] - m
        for k in range(2):
            self.f1[k, fresh] = P.extract(w[:, k], idx)
            self._f1_hash[k, fresh] = vertex_hash(self.f1[k, fresh])
        self.has_f1[fresh] = True
        self.chi[fresh] = 0
        self.has_f2[fresh] = False
        self.has_f3[fresh] = False
        self.f1_pos[fresh] = idx + 1
        return fresh

    def step2_level2(self, ranked: RankedArcs, batch: int, fresh: np.ndarray) -> np.ndarray:
        """Neighborhood sizes and level-2 resampling; returns ids whose f2 changed."""
        verts = ranked.vertices
        b0, b1 = verts.buckets(self._f1_hash[0]), verts.buckets(self._f1_hash[1])
        near = self.has_f1 & ((b0 != verts.EMPTY) | (b1 != verts.EMPTY))
        near[fresh] = True
        cand = np.flatnonzero(near)
        if len(cand) == 0:
            return cand
        method = _method()
        u, v = self.f1[0, cand], self.f1[1, cand]
        if method == "direct":
            vu = verts.lookup(u, buckets=b0[cand])
            vv = verts.lookup(v, buckets=b1[cand])
        else:
            vu, vv = verts.lookup(u), verts.lookup(v)
        p = self.f1_pos[cand]
        ld = query_rank_outgoing(ranked, u, p, vu, method=method)
        rd = query_rank_outgoing(ranked, v, p, vv, method=method)
        chi_plus = ld + rd
        grow = np.flatnonzero(chi_plus > 0)
        cand, u, v, ld, chi_plus = cand[grow], u[grow], v[grow], ld[grow], chi_plus[grow]
        if len(cand) == 0:
            return cand
        chi_minus = self.chi[cand]
        total = chi_minus + chi_plus
        # one draw in [0, total): landing at or past chi_minus means "take a
        # new edge" and the offset doubles as its substream name
        x = self.rng.uniform(cand.astype(np.uint64), batch, TAG_LEVEL2, total)
        take = np.flatnonzero(x >= chi_minus)
        self.chi[cand] = total
        ids = cand[take]
        if len(ids) == 0:
            return ids
        src, dst, pos = substream_edge(ranked, u[take], v[take], ld[take], x[take] - chi_minus[take],
                                       vu[grow][take], vv[grow][take], method=method)
        self.f2[0, ids] = np.minimum(src, dst)
        self.f2[1, ids] = np.maximum(src, dst)
        # src is the shared vertex, dst the new one; the wedge closes on
        # (other endpoint of f1, dst)
        other = np.where(self.f1[0, ids] == src, self.f1[1, ids], self.f1[0, ids])
        self._close_hash[0, ids] = vertex_hash(other)
        self._close_hash[1, ids] = vertex_hash(dst)
        self.has_f2[ids] = True
        self.has_f3[ids] = False
        self.f2_pos[ids] = pos
        return ids

    def step3_closing(self, w: np.ndarray, ranked: RankedArcs) -> None:
        """Close open wedges whose third edge arrives in this batch after f2."""
        verts = ranked.vertices
        open_ = np.flatnonzero(self.has_f2 & ~self.has_f3 & verts.may_contain(self._close_hash[0]))
        # second endpoint only for the survivors of the first filter
        open_ = open_[verts.may_contain(self._close_hash[1, open_])]
        if len(open_) == 0:
            return
        x, y = self._wedge_ends(open_)
        if _method() == "direct":
            ix = build_closing_index(w, ranked=ranked)
            pos = lookup_closing(ix, x, y, self._close_hash[0, open_], self._close_hash[1, open_])
        else:
            ix = build_closing_index(w, verts)
            pos = lookup_closing(ix, x, y)
        f2p = self.f2_pos[open_]
        closed = (pos != NULL) & ((f2p == STALE) | (pos > f2p))
        self.has_f3[open_[closed]] = True

    def _wedge_ends(self, ids):
        """Endpoints of the closing edge: (f1's vertex not on f2, f2's vertex not on f1)."""
        a1, b1 = self.f1[0, ids], self.f1[1, ids]
        a2, b2 = self.f2[0, ids], self.f2[1, ids]
        x_is_a1 = (a1 != a2) & (a1 != b2)
        x = np.where(x_is_a1, a1, b1)
        shared = np.where(x_is_a1, b1, a1)
        y = np.where(a2 == shared, b2, a2)
        return x, y

    def __repr__(self) -> str:
        return f"Engine(r={self.r}, seed={self.seed}, m={self.m}, batches={self.state.batches_seen})"

