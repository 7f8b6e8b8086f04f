"""Range maximum queries over immutable integer arrays.

``SparseTableRmq`` is the textbook O(n log n) table of argmax indices with
O(1) queries. ``BlockedRmq`` answers value-only queries with a sparse table
over 16-element chunk maxima and short scans at the two ragged ends; it keeps
the per-element overhead to a fraction of a word, which matters because the
search index holds one weight array per tree level.

Positions in the public API are 1-based and inclusive.
"""

from __future__ import annotations

import numpy as np
from numba import njit

CHUNK_SHIFT = 4
CHUNK = 1 << CHUNK_SHIFT


def _floor_log2(x: int) -> int:
    return x.bit_length() - 1


class SparseTableRmq:
    """Argmax sparse table; ties resolve to the smaller index."""

    def __init__(self, values):
        self.values = np.ascontiguousarray(values)
        n = len(self.values)
        self.n = n
        levels = max(1, _floor_log2(n) + 1) if n else 0
        self.table = np.zeros((levels, n), dtype=np.int32)
        if n == 0:
            return
        self.table[0] = np.arange(n, dtype=np.int32)
        v = self.values
        for k in range(1, levels):
            half = 1 << (k - 1)
            width = n - (1 << k) + 1
            left = self.table[k - 1, :width]
            right = self.table[k - 1, half : half + width]
            self.table[k, :width] = np.where(v[left] >= v[right], left, right)

    def __len__(self) -> int:
        return self.n

    def argmax(self, s: int, t: int) -> int:
        """1-based index of the leftmost maximum of ``values[s..t]``."""
        if not 1 <= s <= t <= self.n:
            raise IndexError(f"invalid range [{s}, {t}] for length {self.n}")
        lo, hi = s - 1, t - 1
        k = _floor_log2(hi - lo + 1)
        a = int(self.table[k, lo])
        b = int(self.table[k, hi - (1 << k) + 1])
        return (a if self.values[a] >= self.values[b] else b) + 1

    def query(self, s: int, t: int) -> tuple[int, int]:
        i = self.argmax(s, t)
        return i, int(self.values[i - 1])

    @property
    def nbytes(self) -> int:
        return self.values.nbytes + self.table.nbytes


def build_rmq(values) -> SparseTableRmq:
    return SparseTableRmq(values)


def range_max(u: SparseTableRmq, s: int, t: int) -> tuple[int, int]:
    """``(index, value)`` of the maximum over ``[s, t]``."""
    return u.query(s, t)


def chunk_table(values: np.ndarray, max_span: int | None = None) -> np.ndarray:
    """Sparse table of maxima over consecutive 16-element chunks.

    Only windows up to ``max_span`` elements are supported when it is given;
    the index uses this because no query leaves one block level.
    """
    n = len(values)
    nchunks = (n + CHUNK - 1) // CHUNK
    if nchunks == 0:
        return np.zeros((1, 0), dtype=values.dtype)
    padded = np.zeros(nchunks * CHUNK, dtype=values.dtype)
    padded[:n] = values
    base = padded.reshape(nchunks, CHUNK).max(axis=1)
    widest = nchunks if max_span is None else max(1, min(nchunks, (max_span + CHUNK - 1) // CHUNK))
    levels = _floor_log2(widest) + 1
    table = np.zeros((levels, nchunks), dtype=values.dtype)
    table[0] = base
    for k in range(1, levels):
        half = 1 << (k - 1)
        width = nchunks - (1 << k) + 1
        np.maximum(table[k - 1, :width], table[k - 1, half : half + width], out=table[k, :width])
    return table


@njit(cache=True)
def blocked_max(values, table, lo, hi):
    """Maximum of ``values[lo..hi]`` (0-based, inclusive)."""
    cl = lo >> 4
    ch = hi >> 4
    best = values[lo]
    if cl == ch:
        for i in range(lo + 1, hi + 1):
            if values[i] > best:
                best = values[i]
        return best
    for i in range(lo + 1, (cl + 1) << 4):
        if values[i] > best:
            best = values[i]
    for i in range(ch << 4, hi + 1):
        if values[i] > best:
            best = values[i]
    if ch - cl > 1:
        a = cl + 1
        b = ch - 1
        span = b - a + 1
        k = 0
        while (2 << k) <= span:
            k += 1
        m = table[k, a]
        m2 = table[k, b - (1 << k) + 1]
        if m2 > m:
            m = m2
        if m > best:
            best = m
    return best


class BlockedRmq:
    """Value-only RMQ with ~ (1 + log(n/16)/16) values per element."""

    def __init__(self, values, max_span: int | None = None):
        self.values = np.ascontiguousarray(values)
        self.max_span = len(self.values) if max_span is None else max_span
        self.table = chunk_table(self.values, max_span)

    def __len__(self) -> int:
        return len(self.values)

    def max_value(self, s: int, t: int) -> int:
        if not 1 <= s <= t <= len(self.values) or t - s + 1 > self.max_span:
            raise IndexError(f"invalid range [{s}, {t}] for length {len(self.values)}")
        return int(blocked_max(self.values, self.table, s - 1, t - 1))

    @property
    def nbytes(self) -> int:
        return self.values.nbytes + self.table.nbytes
