from __future__ import annotations

import numpy as np
import pytest

from bulktri.primitives import NULL
from bulktri.rank import (
    OLD, BatchVertices, InconsistentStateError, build_closing_index, lookup_closing,
    query_rank_outgoing, rank_all, substream_edge,
)
from bulktri.rng import vertex_hash
from conftest import A, B, C, D, E, F, edge_name, random_graph

METHODS = ("direct", "multisearch")

EXAMPLE_ARCS = [
    (B, D, 4, 0), (B, C, 1, 1),
    (C, D, 2, 0), (C, B, 1, 1),
    (D, F, 5, 0), (D, B, 4, 1), (D, C, 2, 2),
    (E, F, 3, 0),
    (F, D, 5, 0), (F, E, 3, 1),
]


def brute_rank(w, x, y):
    """Definition of rank(x -> y) by counting."""
    w = [tuple(map(int, e)) for e in w]
    norm = [tuple(sorted(e)) for e in w]
    key = tuple(sorted((x, y)))
    if key in norm:
        p = norm.index(key)
        return sum(1 for e in norm[p + 1:] if x in e)
    return sum(1 for e in norm if x in e)


def test_rank_all_reproduces_worked_example(example_batch):
    ranked = rank_all(example_batch)
    assert ranked.records() == EXAMPLE_ARCS
    assert ranked.by_src_rank() == EXAMPLE_ARCS


@pytest.mark.parametrize("method", METHODS)
def test_query_rank_outgoing_example_values(example_batch, method):
    ranked = rank_all(example_batch)
    # (src, dst, batch position of {src, dst} or OLD)
    queries = [(C, A, OLD, 2), (C, D, 2, 0), (D, C, 2, 2), (D, F, 5, 0), (B, C, 1, 1), (B, D, 4, 0)]
    u = np.array([q[0] for q in queries], dtype=np.uint64)
    p = np.array([q[2] for q in queries])
    got = query_rank_outgoing(ranked, u, p, method=method)
    assert got.tolist() == [q[3] for q in queries]


def phi_table(ranked, f1, pos, method="direct"):
    u, v = sorted(f1)
    ld = int(query_rank_outgoing(ranked, [u], [pos], method=method)[0])
    rd = int(query_rank_outgoing(ranked, [v], [pos], method=method)[0])
    chi_plus = ld + rd
    phi = np.arange(chi_plus)
    src, dst, _ = substream_edge(ranked, np.full(chi_plus, u), np.full(chi_plus, v),
                                 np.full(chi_plus, ld), phi, method=method)
    return [edge_name(a, b) for a, b in zip(src, dst)]


@pytest.mark.parametrize("method", METHODS)
def test_substream_naming_example_tables(example_batch, method):
    ranked = rank_all(example_batch)
    assert phi_table(ranked, (D, C), 2, method) == ["DF", "BD"]
    assert phi_table(ranked, (C, E), OLD, method) == ["CD", "BC", "EF"]


def test_degree_of_absent_vertex_is_zero(example_batch):
    ranked = rank_all(example_batch)
    assert ranked.degree(np.array([A, 99], dtype=np.uint64)).tolist() == [0, 0]
    assert ranked.degree(np.array([D, F], dtype=np.uint64)).tolist() == [3, 2]


def test_rank_matches_definition_on_random_batches():
    rng = np.random.default_rng(5)
    for _ in range(50):
        w = np.array(random_graph(12, 0.4, rng), dtype=np.uint64).reshape(-1, 2)
        if len(w) == 0:
            continue
        ranked = rank_all(w)
        for x, y, _, r in ranked.records():
            assert r == brute_rank(w, x, y)
        # non-edge pairs: rank is the batch degree
        verts = np.arange(12, dtype=np.uint64)
        deg = [sum(1 for e in w.tolist() if x in e) for x in range(12)]
        for method in METHODS:
            assert query_rank_outgoing(ranked, verts, np.full(12, OLD), method=method).tolist() == deg


@pytest.mark.parametrize("method", METHODS)
def test_substream_naming_is_a_bijection_onto_later_neighbors(method):
    rng = np.random.default_rng(6)
    for _ in range(30):
        edges = random_graph(10, 0.5, rng)
        if len(edges) < 4:
            continue
        cut = int(rng.integers(1, len(edges)))
        old, w = edges[:cut], np.array(edges[cut:], dtype=np.uint64)
        ranked = rank_all(w)
        wn = [tuple(sorted(map(int, e))) for e in w]
        cases = [(e, OLD, wn) for e in old] + [(e, i + 1, wn[i + 1:]) for i, e in enumerate(wn)]
        for f1, pos, later_pool in cases:
            later = {e for e in later_pool if set(e) & set(f1) and e != tuple(sorted(f1))}
            got = [tuple(sorted((a, b))) for a, b in _named_edges(ranked, f1, pos, method)]
            # chi_plus equals the size of the batch part of the later neighborhood
            assert len(got) == len(later)
            assert len(set(got)) == len(got)
            assert set(got) == later


def _named_edges(ranked, f1, pos, method):
    u, v = sorted(f1)
    ld = int(query_rank_outgoing(ranked, [u], [pos], method=method)[0])
    rd = int(query_rank_outgoing(ranked, [v], [pos], method=method)[0])
    n = ld + rd
    src, dst, p = substream_edge(ranked, np.full(n, u), np.full(n, v), np.full(n, ld), np.arange(n),
                                 method=method)
    if pos != OLD:
        assert (p > pos).all()
    return [(int(a), int(b)) for a, b in zip(src, dst)]


def test_direct_and_multisearch_agree():
    rng = np.random.default_rng(7)
    for _ in range(100):
        w = np.array(random_graph(15, 0.3, rng), dtype=np.uint64).reshape(-1, 2)
        if len(w) == 0:
            continue
        ranked = rank_all(w)
        u = rng.integers(0, 20, size=50).astype(np.uint64)
        p = np.full(50, OLD)
        a = query_rank_outgoing(ranked, u, p, method="direct")
        b = query_rank_outgoing(ranked, u, p, method="multisearch")
        assert a.tolist() == b.tolist()
        side = rng.integers(0, 2, size=len(w))
        u = w[np.arange(len(w)), side]
        p = np.arange(1, len(w) + 1)
        a = query_rank_outgoing(ranked, u, p, method="direct")
        b = query_rank_outgoing(ranked, u, p, method="multisearch")
        assert a.tolist() == b.tolist()


@pytest.mark.parametrize("method", METHODS)
def test_inconsistent_queries_raise(example_batch, method):
    ranked = rank_all(example_batch)
    with pytest.raises(InconsistentStateError):
        # position 3 is {E, F}, not incident on B
        query_rank_outgoing(ranked, [B], [3], method=method)
    with pytest.raises(InconsistentStateError):
        query_rank_outgoing(ranked, [A], [1], method=method)
    with pytest.raises(InconsistentStateError):
        query_rank_outgoing(ranked, [B], [9], method=method)
    with pytest.raises(InconsistentStateError):
        # C has batch degree 2, so rank 5 names nothing
        substream_edge(ranked, [C], [E], [2], [5], method=method)


def test_batch_vertices_hashed_lookup_matches_search():
    rng = np.random.default_rng(8)
    ids = np.unique(rng.integers(0, 10_000, size=3000)).astype(np.uint64)
    bv = BatchVertices(ids)
    q = rng.integers(0, 12_000, size=5000).astype(np.uint64)
    exact = bv.lookup(q)
    hashed = bv.lookup(q, vertex_hash(q))
    assert np.array_equal(exact, hashed)
    assert (bv.may_contain(vertex_hash(ids))).all()


def test_batch_vertices_shared_buckets():
    # a tiny table forces many vertices into shared buckets
    ids = np.arange(0, 5000, 3, dtype=np.uint64)
    bv = BatchVertices(ids)
    bv.slot[:] = BatchVertices.SHARED
    q = np.arange(0, 6000, dtype=np.uint64)
    assert np.array_equal(bv.lookup(q, vertex_hash(q)), bv.lookup(q))


def test_closing_index(example_batch):
    ix = build_closing_index(example_batch)
    assert ix.records() == [(B, C, 1), (B, D, 4), (C, D, 2), (D, F, 5), (E, F, 3)]
    u = np.array([C, D, A, F], dtype=np.uint64)
    v = np.array([B, B, B, E], dtype=np.uint64)
    assert lookup_closing(ix, u, v).tolist() == [1, 4, NULL, 3]
    assert lookup_closing(ix, u, v, vertex_hash(u), vertex_hash(v)).tolist() == [1, 4, NULL, 3]


def test_empty_batch():
    ranked = rank_all(np.empty((0, 2), dtype=np.uint64))
    assert len(ranked) == 0
    assert ranked.degree(np.array([1], dtype=np.uint64)).tolist() == [0]
