"""Data-parallel sequence primitives.

Every primitive has two execution paths:

* a *parallel* path that splits the input into fixed-size chunks (``grain``
  elements each), processes chunks on a thread pool and stitches the partial
  results together, and
* a *reference* path written as a plain sequential loop.

Chunk boundaries depend only on ``grain``, never on the number of workers, so
the output of the parallel path is the same for any worker count. Indices are
0-based; ``NULL`` (``-1``) marks a missing index or a failed search.

The active path is selected with :func:`config_context` / :func:`set_config`::

    with config_context(reference=True):
        out = scan(a)
"""
from __future__ import annotations

import bisect
import contextlib
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterator, Sequence

import numpy as np

NULL = -1

_DEFAULT_GRAIN = 1 << 17


@dataclass(frozen=True)
class ParallelConfig:
    workers: int | None = None
    reference: bool = False
    grain: int = _DEFAULT_GRAIN

    @property
    def n_workers(self) -> int:
        if self.workers is None or self.workers <= 0:
            return os.cpu_count() or 1
        return self.workers


_state = threading.local()
_global_config = ParallelConfig()
_pools: dict[int, ThreadPoolExecutor] = {}
_pools_lock = threading.Lock()


def get_config() -> ParallelConfig:
    return getattr(_state, "config", None) or _global_config


def set_config(*, workers: int | None = None, reference: bool | None = None,
               grain: int | None = None) -> None:
    """Change the process-wide default configuration."""
    global _global_config
    _global_config = _updated(_global_config, workers, reference, grain)


@contextlib.contextmanager
def config_context(*, workers: int | None = None, reference: bool | None = None,
                   grain: int | None = None) -> Iterator[ParallelConfig]:
    """Temporarily override the configuration for the current thread."""
    prev = getattr(_state, "config", None)
    cfg = _updated(get_config(), workers, reference, grain)
    _state.config = cfg
    try:
        yield cfg
    finally:
        _state.config = prev


def _updated(cfg, workers, reference, grain):
    kw = {}
    if workers is not None:
        kw["workers"] = workers
    if reference is not None:
        kw["reference"] = reference
    if grain is not None:
        if grain < 1:
            raise ValueError("grain must be positive")
        kw["grain"] = grain
    return replace(cfg, **kw)


def _pool(n: int) -> ThreadPoolExecutor:
    with _pools_lock:
        pool = _pools.get(n)
        if pool is None:
            pool = _pools[n] = ThreadPoolExecutor(max_workers=n, thread_name_prefix="bulktri")
        return pool


def _chunks(n: int, grain: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + grain, n)) for lo in range(0, n, grain)]


def parallel_for(n: int, body: Callable[[int, int], object]) -> list:
    """Run ``body(lo, hi)`` over grain-sized chunks of ``range(n)``.

    Returns the per-chunk results in chunk order. Chunks run inline when
    there is only one chunk or one worker.
    """
    cfg = get_config()
    spans = _chunks(n, cfg.grain)
    if len(spans) <= 1 or cfg.n_workers == 1:
        return [body(lo, hi) for lo, hi in spans]
    # worker threads do not inherit the thread-local config
    def run(span):
        prev = getattr(_state, "config", None)
        _state.config = cfg
        try:
            return body(*span)
        finally:
            _state.config = prev
    return list(_pool(cfg.n_workers).map(run, spans))


# ---------------------------------------------------------------------------
# map / combine / concat / extract
# ---------------------------------------------------------------------------

def map_(a, f: Callable) -> np.ndarray:
    """Apply ``f`` to every element of ``a``.

    In the parallel path ``f`` receives whole chunks and must be vectorized;
    the reference path calls it once per element.
    """
    a = np.asarray(a)
    if get_config().reference:
        return np.array([f(x) for x in a])
    if len(a) == 0:
        return np.asarray(f(a))
    parts = parallel_for(len(a), lambda lo, hi: np.asarray(f(a[lo:hi])))
    return np.concatenate(parts)


def combine(a, b, f: Callable) -> np.ndarray:
    """Elementwise ``f(a[i], b[i])``; ``a`` and ``b`` must have equal length."""
    a = np.asarray(a)
    b = np.asarray(b)
    if len(a) != len(b):
        raise ValueError(f"combine: length mismatch ({len(a)} != {len(b)})")
    if get_config().reference:
        return np.array([f(x, y) for x, y in zip(a, b)])
    if len(a) == 0:
        return np.asarray(f(a, b))
    parts = parallel_for(len(a), lambda lo, hi: np.asarray(f(a[lo:hi], b[lo:hi])))
    return np.concatenate(parts)


def concat(*seqs) -> np.ndarray:
    arrays = [np.asarray(s) for s in seqs]
    if get_config().reference:
        return np.array([x for arr in arrays for x in arr])
    return np.concatenate(arrays)


def extract(a, idx, fill=None) -> np.ndarray:
    """Gather ``a[idx[i]]``; ``NULL`` entries of ``idx`` yield ``fill``.

    ``fill`` defaults to zero of ``a``'s dtype. Raises ``IndexError`` for any
    index outside ``[0, len(a))``.
    """
    a = np.asarray(a)
    idx = np.asarray(idx, dtype=np.int64)
    fill = np.zeros((), dtype=a.dtype)[()] if fill is None else fill
    bad = (idx != NULL) & ((idx < 0) | (idx >= len(a)))
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise IndexError(f"extract: index {int(idx[j])} at position {j} out of range for length {len(a)}")
    if get_config().reference:
        out = np.empty(len(idx), dtype=a.dtype)
        for i, k in enumerate(idx):
            out[i] = fill if k == NULL else a[k]
        return out

    out = np.empty(len(idx), dtype=a.dtype)

    def body(lo, hi):
        sub = idx[lo:hi]
        hit = sub != NULL
        res = np.full(hi - lo, fill, dtype=a.dtype)
        res[hit] = a[sub[hit]]
        out[lo:hi] = res

    parallel_for(len(idx), body)
    return out


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def scan(a, op: Callable = np.add, identity=0) -> np.ndarray:
    """Exclusive prefix: ``out[i] = identity op a[0] op ... op a[i-1]``.

    The parallel path needs ``op`` to be a numpy ufunc (it uses
    ``op.accumulate``); any other callable is evaluated with the sequential
    loop. For floating-point ``op`` the parallel result depends on ``grain``
    but not on the worker count.
    """
    a = np.asarray(a)
    n = len(a)
    if get_config().reference or not isinstance(op, np.ufunc):
        out = np.empty(n, dtype=np.result_type(a, np.asarray(identity)))
        acc = identity
        for i in range(n):
            out[i] = acc
            acc = op(acc, a[i])
        return out
    dtype = np.result_type(a, np.asarray(identity))
    out = np.empty(n, dtype=dtype)
    if n == 0:
        return out
    grain = get_config().grain

    def local(lo, hi):
        incl = op.accumulate(a[lo:hi], dtype=dtype)
        out[lo + 1:hi] = incl[:-1]
        return incl[-1]

    totals = parallel_for(n, local)
    # carry into each chunk: tiny sequential scan over the chunk totals
    carries = []
    acc = np.asarray(identity, dtype=dtype)[()]
    for t in totals:
        carries.append(acc)
        acc = op(acc, t)

    def fix(lo, hi):
        c = carries[lo // grain]
        out[lo] = c
        if hi - lo > 1:
            out[lo + 1:hi] = op(c, out[lo + 1:hi])

    parallel_for(n, fix)
    return out


def reset_op(x, y):
    """The reset-aware ``⊕`` for counting runs; ``None`` is the reset marker.

    This is the operator as used by the sequential left fold; it is *not*
    associative (``(1 ⊕ None) ⊕ 1 = 1`` but ``1 ⊕ (None ⊕ 1) = 2``), which is
    why the parallel path lifts elements to ``(reset, count)`` pairs instead.
    """
    if x is not None and y is not None:
        return x + y
    if y is not None:
        return y
    return 0


def scan_with_resets(a) -> np.ndarray:
    """Count consecutive ones, restarting after every reset.

    ``a`` is a sequence of ``1`` and reset markers (``None``, or ``False`` in
    a boolean mask where ``True`` means one). ``out[i]`` is the accumulator
    value just before position ``i`` of the loop ``sum = 0; out[i] = sum;
    sum = 0 if a[i] is reset else sum + 1``.
    """
    ones = _as_ones_mask(a)
    n = len(ones)
    if get_config().reference:
        out = np.empty(n, dtype=np.int64)
        total = 0
        for i in range(n):
            out[i] = total
            total = total + 1 if ones[i] else 0
        return out

    out = np.empty(n, dtype=np.int64)
    if n == 0:
        return out
    grain = get_config().grain

    # Each chunk is summarized as (saw_reset, count after its last reset);
    # (r1, c1) . (r2, c2) = (r1 or r2, c2 if r2 else c1 + c2) is associative.
    def local(lo, hi):
        m = ones[lo:hi]
        csum = np.cumsum(m, dtype=np.int64)
        # count of ones since the latest reset, inclusive of position i
        reset_pos = np.where(~m, np.arange(hi - lo), -1)
        last_reset = np.maximum.accumulate(reset_pos)
        base = np.where(last_reset >= 0, csum[np.maximum(last_reset, 0)], 0)
        run = csum - base
        out[lo:hi] = run  # inclusive; shifted below
        return bool(last_reset[-1] >= 0), int(run[-1]), last_reset

    parts = parallel_for(n, local)
    carries = []
    acc_reset, acc = False, 0
    for saw_reset, count, _ in parts:
        carries.append(acc)
        acc = count if saw_reset else acc + count

    def fix(lo, hi):
        k = lo // grain
        carry = carries[k]
        last_reset = parts[k][2]
        incl = out[lo:hi].copy()
        incl = np.where(last_reset < 0, incl + carry, incl)
        out[lo] = carry
        out[lo + 1:hi] = incl[:-1]

    parallel_for(n, fix)
    return out


def scan_with_resets_fold(a) -> np.ndarray:
    """Left fold of :func:`reset_op` over the input, as an exclusive scan."""
    ones = _as_ones_mask(a)
    out = np.empty(len(ones), dtype=np.int64)
    acc = 0
    for i, one in enumerate(ones):
        out[i] = acc
        acc = reset_op(acc, 1 if one else None)
    return out


def _as_ones_mask(a) -> np.ndarray:
    if isinstance(a, np.ndarray) and a.dtype == bool:
        return a
    vals = list(a)
    bad = [v for v in vals if v is not None and v != 1]
    if bad:
        raise ValueError(f"scan_with_resets: entries must be 1 or None, got {bad[0]!r}")
    return np.array([v is not None for v in vals], dtype=bool)


# ---------------------------------------------------------------------------
# sort / merge
# ---------------------------------------------------------------------------

def merge_positions(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Output slots of ``a``'s and ``b``'s elements in their stable merge.

    Ties go to ``a`` first.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    pos_a = np.arange(len(a)) + np.searchsorted(b, a, side="left")
    pos_b = np.arange(len(b)) + np.searchsorted(a, b, side="right")
    return pos_a, pos_b


def merge(a, b) -> np.ndarray:
    """Stable merge of two sorted sequences."""
    a = np.asarray(a)
    b = np.asarray(b)
    if get_config().reference:
        out, i, j = [], 0, 0
        while i < len(a) and j < len(b):
            if b[j] < a[i]:
                out.append(b[j])
                j += 1
            else:
                out.append(a[i])
                i += 1
        out.extend(a[i:])
        out.extend(b[j:])
        return np.array(out, dtype=np.result_type(a, b))
    out = np.empty(len(a) + len(b), dtype=np.result_type(a, b))
    pos_a, pos_b = merge_positions(a, b)
    out[pos_a] = a
    out[pos_b] = b
    return out


def argsort(keys) -> np.ndarray:
    """Stable sorting permutation of ``keys`` (1-D, totally ordered)."""
    keys = np.asarray(keys)
    n = len(keys)
    if get_config().reference:
        return np.array(sorted(range(n), key=keys.__getitem__), dtype=np.int64)
    cfg = get_config()
    grain = cfg.grain
    # one stable sort is the same permutation, and cheaper without helpers
    if n <= grain or cfg.n_workers == 1:
        return np.argsort(keys, kind="stable").astype(np.int64, copy=False)

    # sorted runs per chunk, then rounds of pairwise stable merges
    def run(lo, hi):
        return (np.argsort(keys[lo:hi], kind="stable") + lo).astype(np.int64)

    runs = parallel_for(n, run)
    while len(runs) > 1:
        pairs = [(runs[i], runs[i + 1]) for i in range(0, len(runs) - 1, 2)]
        tail = [runs[-1]] if len(runs) % 2 else []
        runs = _merge_rounds(keys, pairs) + tail
    return runs[0]


def _merge_rounds(keys, pairs):
    cfg = get_config()

    def merge_pair(pair):
        pa, pb = pair
        pos_a, pos_b = merge_positions(keys[pa], keys[pb])
        out = np.empty(len(pa) + len(pb), dtype=np.int64)
        out[pos_a] = pa
        out[pos_b] = pb
        return out

    if len(pairs) == 1 or cfg.n_workers == 1:
        return [merge_pair(p) for p in pairs]
    return list(_pool(cfg.n_workers).map(merge_pair, pairs))


def sort(a, key: Callable | None = None) -> np.ndarray:
    """Stable sort of ``a``; ``key`` maps the whole sequence to sort keys."""
    a = np.asarray(a)
    keys = a if key is None else np.asarray(key(a))
    return a[argsort(keys)]


def is_sorted(keys) -> bool:
    keys = np.asarray(keys)
    return bool(np.all(keys[:-1] <= keys[1:])) if len(keys) > 1 else True


# ---------------------------------------------------------------------------
# multisearch
# ---------------------------------------------------------------------------

def exact_multisearch(keys, queries) -> np.ndarray:
    """Index of ``queries[j]`` in the sorted, duplicate-free ``keys`` or ``NULL``.

    Output order follows ``queries``.
    """
    keys = np.asarray(keys)
    queries = np.asarray(queries)
    if get_config().reference:
        out = np.full(len(queries), NULL, dtype=np.int64)
        for j, q in enumerate(queries):
            i = bisect.bisect_left(keys, q)
            if i < len(keys) and keys[i] == q:
                out[j] = i
        return out
    out = np.empty(len(queries), dtype=np.int64)

    def body(lo, hi):
        q = queries[lo:hi]
        i = np.searchsorted(keys, q, side="left")
        hit = i < len(keys)
        hit[hit] = keys[i[hit]] == q[hit]
        out[lo:hi] = np.where(hit, i, NULL)

    parallel_for(len(queries), body)
    return out


def pred_eq_multisearch(keys, queries) -> np.ndarray:
    """Index of the largest key ``<= queries[j]`` or ``NULL`` if none."""
    keys = np.asarray(keys)
    queries = np.asarray(queries)
    if get_config().reference:
        out = np.full(len(queries), NULL, dtype=np.int64)
        for j, q in enumerate(queries):
            out[j] = bisect.bisect_right(keys, q) - 1
        return out
    out = np.empty(len(queries), dtype=np.int64)

    def body(lo, hi):
        out[lo:hi] = np.searchsorted(keys, queries[lo:hi], side="right") - 1

    parallel_for(len(queries), body)
    return out


def multisearch_pairs(keys, values, queries, *, predecessor: bool = False) -> list:
    """Key-value view of the multisearch primitives.

    Returns a list holding ``(key, value)`` for each hit and ``None`` for each
    miss, in query order.
    """
    search = pred_eq_multisearch if predecessor else exact_multisearch
    idx = search(keys, queries)
    return [None if i == NULL else (keys[i], values[i]) for i in idx]


def sequence(xs: Sequence, dtype=None) -> np.ndarray:
    """Freeze ``xs`` as an immutable array."""
    arr = np.array(xs, dtype=dtype)
    arr.setflags(write=False)
    return arr
