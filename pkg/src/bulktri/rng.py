"""Counter-based randomness addressed by (estimator, batch, draw tag).

Each draw is a pure function of ``(seed, estimator id, batch id, tag,
attempt)``: a SplitMix64 output taken at position ``estimator id`` of a
stream whose starting state is derived from the other coordinates. Nothing
depends on evaluation order, so results are identical however the work is
split between threads.
"""
from __future__ import annotations

import numpy as np

from bulktri import primitives as P

_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1

_U30, _U27, _U31 = np.uint64(30), np.uint64(27), np.uint64(31)
_UM1, _UM2, _UGOLD = np.uint64(_M1), np.uint64(_M2), np.uint64(_GOLDEN)

MAX_ATTEMPTS = 64
_TWO32 = 1 << 32
_U32 = np.uint64(32)
_LOW32 = np.uint64(_TWO32 - 1)


def mix64_int(x: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * _M1) & _MASK
    x = ((x ^ (x >> 27)) * _M2) & _MASK
    return x ^ (x >> 31)


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, vectorized over a uint64 array."""
    x = np.asarray(x, dtype=np.uint64)
    z = np.array(x ^ (x >> _U30), dtype=np.uint64, ndmin=1, copy=None)
    z *= _UM1
    z ^= z >> _U27
    z *= _UM2
    z ^= z >> _U31
    return z.reshape(x.shape)


def vertex_hash(v) -> np.ndarray:
    """32-bit vertex fingerprint (top half of a SplitMix64 output) as int64."""
    with np.errstate(over="ignore"):
        h = mix64(np.asarray(v, dtype=np.uint64) + _UGOLD)
    return (h >> np.uint64(32)).astype(np.int64)


class DecisionSource:
    """Uniform integer draws keyed by estimator id.

    Parameters
    ----------
    seed : int
        Any non-negative integer below 2**64.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK

    def _stream_key(self, batch: int, tag: int, attempt: int) -> int:
        k = mix64_int(self.seed ^ _GOLDEN)
        k = mix64_int(k ^ (int(batch) * _GOLDEN))
        return mix64_int(k ^ ((int(tag) << 8 | int(attempt)) * _M2))

    def raw(self, ids, batch: int, tag: int, attempt: int = 0) -> np.ndarray:
        """Raw 64-bit outputs at stream positions ``ids``."""
        key = np.uint64(self._stream_key(batch, tag, attempt))
        ids = np.atleast_1d(np.asarray(ids, dtype=np.uint64))
        out = np.empty(len(ids), dtype=np.uint64)

        def body(lo, hi):
            scratch = np.empty(min(_BLOCK, hi - lo), dtype=np.uint64)
            for a in range(lo, hi, _BLOCK):
                b = min(a + _BLOCK, hi)
                _splitmix_into(ids[a:b], key, out[a:b], scratch[:b - a])

        P.parallel_for(len(ids), body)
        return out

    def uniform(self, ids, batch: int, tag: int, n) -> np.ndarray:
        """Draw ``d`` uniform in ``[0, n)`` for every id (``n`` scalar or per id).

        Ranges up to ``2**32`` use the multiply-shift method on the top 32
        raw bits: ``d = (x * n) >> 32``, rejecting when the low word falls
        below ``2**32 mod n``. Larger ranges reject raw values in the
        incomplete top block ``[floor(2**64 / n) * n, 2**64)`` and reduce
        modulo ``n``. Rejected ids redraw with the next attempt counter.
        """
        ids = np.asarray(ids, dtype=np.uint64)
        scalar = np.ndim(n) == 0
        if scalar:
            if int(n) <= 0:
                raise ValueError("uniform: empty range")
            n = np.uint64(n)
            small = int(n) <= _TWO32
        else:
            n = np.broadcast_to(np.asarray(n, dtype=np.uint64), ids.shape)
            if ids.size and (n == 0).any():
                raise ValueError("uniform: empty range")
            small = bool((n <= np.uint64(_TWO32)).all())
        if ids.size == 0:
            return np.empty(0, dtype=np.int64)
        out = self._attempt(ids, n, batch, tag, 0, small)
        todo = np.flatnonzero(out == _REJECT)
        for attempt in range(1, MAX_ATTEMPTS):
            if len(todo) == 0:
                return out.view(np.int64)
            d = self._attempt(ids[todo], n if scalar else n[todo], batch, tag, attempt, small)
            out[todo] = d
            todo = todo[d == _REJECT]
        if len(todo) == 0:
            return out.view(np.int64)
        raise RuntimeError("uniform: rejection sampling did not terminate")

    def _attempt(self, ids, n, batch, tag, attempt, small):
        key = np.uint64(self._stream_key(batch, tag, attempt))
        scalar = np.ndim(n) == 0
        out = np.empty(len(ids), dtype=np.uint64)

        # fill ``out`` in cache-sized blocks, reusing one scratch buffer
        def body(lo, hi):
            scratch = np.empty(min(_BLOCK, hi - lo), dtype=np.uint64)
            for a in range(lo, hi, _BLOCK):
                b = min(a + _BLOCK, hi)
                z, t = out[a:b], scratch[:b - a]
                nn = n if scalar else n[a:b]
                _splitmix_into(ids[a:b], key, z, t)
                if small:
                    _multiply_shift(z, nn, t)
                else:
                    z[:] = _modulo(z, nn)

        P.parallel_for(len(ids), body)
        return out


_REJECT = np.uint64(_MASK)
# elements per block of the fused draw loops (fits comfortably in L2)
_BLOCK = 1 << 15


def _splitmix_into(ids, key, z, t):
    """SplitMix64 output at stream position ``ids + 1`` of stream ``key``, into ``z``.

    ``t`` is scratch of the same length.
    """
    with np.errstate(over="ignore"):
        np.add(ids, np.uint64(1), out=z)
        z *= _UGOLD
        z += key
        np.right_shift(z, _U30, out=t)
        z ^= t
        z *= _UM1
        np.right_shift(z, _U27, out=t)
        z ^= t
        z *= _UM2
        np.right_shift(z, _U31, out=t)
        z ^= t
    return z


def _multiply_shift(z, n, t=None):
    """In place: d = (x * n) >> 32 with x the top 32 bits of ``z``.

    Rejects (sets ``_REJECT``) iff the low word is below ``2**32 mod n``.
    """
    z >>= _U32
    z *= n
    low = np.bitwise_and(z, _LOW32, out=t)
    z >>= _U32
    risky = np.flatnonzero(low < n)
    if len(risky):
        nr = n if np.ndim(n) == 0 else n[risky]
        bad = low[risky] < (np.uint64(_TWO32) % nr)
        z[risky[bad]] = _REJECT
    return z


def _modulo(z, n):
    d = z % n
    # accept iff n * floor(z / n) <= 2**64 - n
    with np.errstate(over="ignore"):
        d[(z - d) > (np.uint64(0) - n)] = _REJECT
    return d
