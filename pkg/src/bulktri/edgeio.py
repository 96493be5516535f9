"""Plain-text edge lists: parsing into batches, writing, prefetching.

Format: one edge per line, two non-negative integer vertex ids separated by
whitespace. Lines whose first non-blank character is ``#`` are comments and
blank lines are ignored (SNAP files parse as-is).
"""
from __future__ import annotations

import os
import queue
import re
import threading
import time
from typing import Iterable, Iterator

import numpy as np

_MAX_ID = (1 << 64) - 1
_COMMENT = re.compile(rb"^[ \t]*#[^\n]*\n?", re.M)

# bytes allowed on the fast path: digits and ascii whitespace
_ALLOWED = np.zeros(256, dtype=bool)
_ALLOWED[list(b"0123456789 \t\r\n")] = True
_DIGIT = np.zeros(256, dtype=bool)
_DIGIT[list(b"0123456789")] = True


class EdgeListParseError(ValueError):
    """A malformed line; carries the 1-based line number."""

    def __init__(self, path, lineno: int, msg: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


class SelfLoopError(EdgeListParseError):
    pass


def _parse_line(line: bytes, path, lineno: int):
    text = line.decode("ascii", errors="replace").strip()
    if not text or text.startswith("#"):
        return None
    parts = text.split()
    if len(parts) != 2:
        raise EdgeListParseError(path, lineno, f"expected 2 vertex ids, got {len(parts)} fields: {text!r}")
    ids = []
    for tok in parts:
        if not tok.isdigit():
            raise EdgeListParseError(path, lineno, f"vertex id {tok!r} is not a non-negative integer")
        x = int(tok)
        if x > _MAX_ID:
            raise EdgeListParseError(path, lineno, f"vertex id {tok} does not fit in 64 bits")
        ids.append(x)
    if ids[0] == ids[1]:
        raise SelfLoopError(path, lineno, f"self-loop on vertex {ids[0]}")
    return ids


def _parse_slow(lines: list[bytes], path, first_lineno: int) -> np.ndarray:
    rows = []
    for k, line in enumerate(lines):
        e = _parse_line(line, path, first_lineno + k)
        if e is not None:
            rows.append(e)
    return np.array(rows, dtype=np.uint64).reshape(-1, 2)


def parse_block(lines: list[bytes], path="<input>", first_lineno: int = 1) -> np.ndarray:
    """Parse raw lines into an ``(n, 2)`` uint64 array.

    The common case is handled with whole-block numpy checks; anything
    suspicious is re-parsed line by line to produce a precise diagnostic.
    """
    buf = b"".join(lines)
    if not buf.endswith(b"\n"):
        buf += b"\n"
    if b"#" in buf:
        buf = _COMMENT.sub(b"", buf)
    b = np.frombuffer(buf, dtype=np.uint8)
    if not _ALLOWED[b].all():
        return _parse_slow(lines, path, first_lineno)
    digit = _DIGIT[b]
    starts = np.flatnonzero(digit & ~np.concatenate([[False], digit[:-1]]))
    ends = np.flatnonzero(digit & ~np.concatenate([digit[1:], [False]]))
    if len(starts) and (ends - starts).max() >= 19:
        # may exceed 64 bits; let Python ints decide
        return _parse_slow(lines, path, first_lineno)
    line_of = np.cumsum(b == ord("\n"))[starts]
    per_line = np.bincount(line_of)
    if ((per_line != 0) & (per_line != 2)).any():
        return _parse_slow(lines, path, first_lineno)
    out = np.fromstring(buf.decode("ascii"), dtype=np.uint64, sep=" ").reshape(-1, 2)
    if (out[:, 0] == out[:, 1]).any():
        return _parse_slow(lines, path, first_lineno)
    return out


def iter_edge_blocks(path, block_bytes: int = 1 << 22) -> Iterator[np.ndarray]:
    """Yield the edges of ``path`` in arrival order, one parsed block at a time."""
    lineno = 1
    with open(path, "rb") as fh:
        while True:
            lines = fh.readlines(block_bytes)
            if not lines:
                return
            block = parse_block(lines, path, lineno)
            lineno += len(lines)
            if len(block):
                yield block


def rebatch(blocks: Iterable[np.ndarray], batch_size: int,
            max_edges: int | None = None) -> Iterator[np.ndarray]:
    """Regroup edge blocks into batches of exactly ``batch_size`` (last may be short)."""
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    pending: list[np.ndarray] = []
    have = 0
    budget = max_edges
    for block in blocks:
        if budget is not None:
            block = block[:budget]
            budget -= len(block)
        pending.append(block)
        have += len(block)
        if have >= batch_size:
            buf = np.concatenate(pending)
            k = (len(buf) // batch_size) * batch_size
            for i in range(0, k, batch_size):
                yield buf[i:i + batch_size]
            pending, have = [buf[k:]], len(buf) - k
        if budget == 0:
            break
    if have:
        yield np.concatenate(pending)


def parse_edge_list(path, batch_size: int, max_edges: int | None = None) -> Iterator[np.ndarray]:
    """Stream the edge list at ``path`` as ``(s, 2)`` uint64 batches."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return rebatch(iter_edge_blocks(path), batch_size, max_edges)


def read_edge_list(path, max_edges: int | None = None) -> np.ndarray:
    blocks = list(rebatch(iter_edge_blocks(path), 1 << 20, max_edges))
    if not blocks:
        return np.empty((0, 2), dtype=np.uint64)
    return np.concatenate(blocks)


def batches_of(edges, batch_size: int, max_edges: int | None = None) -> Iterator[np.ndarray]:
    """Batches over an in-memory ``(m, 2)`` edge array."""
    edges = np.asarray(edges)
    return rebatch([edges] if len(edges) else [], batch_size, max_edges)


def write_edge_list(path, edges, header: str | None = None) -> None:
    edges = np.asarray(edges, dtype=np.uint64).reshape(-1, 2)
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for i in range(0, len(edges), 1 << 20):
            chunk = edges[i:i + (1 << 20)]
            if len(chunk):
                fh.write("\n".join(f"{u}\t{v}" for u, v in chunk.tolist()))
                fh.write("\n")


class Prefetcher:
    """Runs an iterator on a background thread, at most ``depth`` items ahead.

    Iterating yields items; ``wait_time`` accumulates the time the consumer
    spent blocked on the producer (the I/O time not hidden by overlap).
    Exceptions raised by the producer are re-raised in the consumer.
    """

    _DONE = object()

    def __init__(self, source: Iterable, depth: int = 2):
        self._source = source
        self._q: queue.Queue = queue.Queue(maxsize=depth)
        self._stop = threading.Event()
        self.wait_time = 0.0
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _put(self, item) -> bool:
        while not self._stop.is_set():
            try:
                self._q.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def _run(self):
        try:
            for item in self._source:
                if not self._put((item, None)):
                    return
        except BaseException as exc:  # handed to the consumer
            self._put((self._DONE, exc))
            return
        self._put((self._DONE, None))

    def __iter__(self):
        try:
            while True:
                t0 = time.perf_counter()
                item, exc = self._q.get()
                self.wait_time += time.perf_counter() - t0
                if item is self._DONE:
                    if exc is not None:
                        raise exc
                    return
                yield item
        finally:
            self.close()

    def close(self):
        self._stop.set()
        self._thread.join(timeout=5)
