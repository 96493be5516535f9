from __future__ import annotations

import numpy as np
import pytest
from scipy.stats import chisquare

from bulktri import primitives as P
from bulktri.rng import DecisionSource, mix64, mix64_int, vertex_hash


def test_vectorized_mix_matches_scalar():
    xs = [0, 1, 2**63, 2**64 - 1, 12345678901234567]
    assert mix64(np.array(xs, dtype=np.uint64)).tolist() == [mix64_int(x) for x in xs]


def test_raw_is_splitmix_at_id_position():
    d = DecisionSource(42)
    key = d._stream_key(3, 1, 0)
    ids = np.arange(20, dtype=np.uint64)
    expected = [mix64_int(key + (i + 1) * 0x9E3779B97F4A7C15) for i in range(20)]
    assert d.raw(ids, 3, 1, 0).tolist() == expected


def test_draws_depend_on_every_coordinate():
    d = DecisionSource(1)
    ids = np.arange(100, dtype=np.uint64)
    base = d.raw(ids, 0, 1, 0)
    for other in (d.raw(ids, 1, 1, 0), d.raw(ids, 0, 2, 0), d.raw(ids, 0, 1, 1),
                  DecisionSource(2).raw(ids, 0, 1, 0)):
        assert (base != other).mean() > 0.99


def test_draw_for_an_id_does_not_depend_on_the_others():
    d = DecisionSource(5)
    ids = np.arange(1000, dtype=np.uint64)
    full = d.uniform(ids, 4, 2, 17)
    sub = ids[::7]
    assert np.array_equal(d.uniform(sub, 4, 2, 17), full[::7])


@pytest.mark.parametrize("n", [1, 2, 3, 7, 1000, 2**32, 2**32 + 1, 2**40 + 3, 2**63 + 5])
def test_uniform_range_and_paths(n):
    d = DecisionSource(9)
    ids = np.arange(2000, dtype=np.uint64)
    a = d.uniform(ids, 1, 1, n)
    b = d.uniform(ids, 1, 1, np.full(len(ids), n, dtype=np.uint64))
    with P.config_context(reference=True):
        c = d.uniform(ids[:200], 1, 1, n)
    with P.config_context(workers=4, grain=33):
        e = d.uniform(ids, 1, 1, n)
    assert (a >= 0).all() and (a.astype(np.uint64) < np.uint64(n)).all()
    assert np.array_equal(a, b)
    assert np.array_equal(a[:200], c)
    assert np.array_equal(a, e)


@pytest.mark.parametrize("n", [6, 3 * 2**30, 2**33 + 7])
def test_uniform_is_uniform(n):
    # 3 * 2**30 rejects a quarter of the raw draws on the fast path
    d = DecisionSource(11)
    x = d.uniform(np.arange(300_000, dtype=np.uint64), 0, 1, n).astype(np.float64)
    bins = np.minimum((x * 6 / n).astype(int), 5)
    assert chisquare(np.bincount(bins, minlength=6)).pvalue > 0.001


def test_uniform_mixed_ranges():
    d = DecisionSource(3)
    n = np.array([1, 5, 2**40, 3] * 50, dtype=np.uint64)
    x = d.uniform(np.arange(len(n), dtype=np.uint64), 2, 2, n)
    assert (x.astype(np.uint64) < n).all()
    assert (x[n == 1] == 0).all()


def test_uniform_rejects_empty_range():
    d = DecisionSource(0)
    with pytest.raises(ValueError):
        d.uniform(np.arange(3, dtype=np.uint64), 0, 1, 0)
    with pytest.raises(ValueError):
        d.uniform(np.arange(3, dtype=np.uint64), 0, 1, np.array([1, 0, 2]))
    assert d.uniform(np.arange(0, dtype=np.uint64), 0, 1, 5).tolist() == []


def test_vertex_hash_range():
    h = vertex_hash(np.arange(10_000, dtype=np.uint64))
    assert h.min() >= 0 and h.max() < 2**32
    assert len(np.unique(h)) > 9_990
