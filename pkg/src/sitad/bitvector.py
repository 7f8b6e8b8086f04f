"""Rank dictionary over a packed, immutable bit array.

Bits live in little-endian 64-bit words: bit ``p`` (0-based) is bit ``p & 63``
of word ``p >> 6``. Two sample layers answer ``rank1`` in constant time:

* ``supers``: absolute 1-count before every 2**16-bit superblock (64 bits each)
* ``rels``: 1-count from the superblock start to each word (16 bits each)

The remainder inside the word is a masked popcount. Ranks use 1-based prefix
semantics: ``rank1(i)`` counts the ones among positions ``1..i``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

SUPER_SHIFT = 16
WORD_SHIFT = 6


@njit(cache=True, inline="always")
def popcount64(v):
    v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
    v = (v & np.uint64(0x3333333333333333)) + ((v >> np.uint64(2)) & np.uint64(0x3333333333333333))
    v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return np.int64((v * np.uint64(0x0101010101010101)) >> np.uint64(56))


@njit(cache=True)
def rank1_at(words, supers, rels, i):
    """Number of set bits among the first ``i`` bits."""
    w = i >> 6
    r = np.int64(supers[i >> 16]) + np.int64(rels[w])
    low = i & 63
    if low:
        r += popcount64(words[w] & ((np.uint64(1) << np.uint64(low)) - np.uint64(1)))
    return r


@njit(cache=True)
def rank1_many(words, supers, rels, positions):
    out = np.empty(len(positions), np.int64)
    for k in range(len(positions)):
        out[k] = rank1_at(words, supers, rels, positions[k])
    return out


def pack_bits(bits) -> np.ndarray:
    """Pack a 0/1 sequence into little-endian uint64 words, plus one spare word."""
    bits = np.asarray(bits, dtype=bool)
    nwords = len(bits) // 64 + 1
    raw = np.packbits(bits, bitorder="little")
    buf = np.zeros(nwords * 8, dtype=np.uint8)
    buf[: len(raw)] = raw
    return buf.view("<u8").astype(np.uint64, copy=False)


def word_popcounts(words: np.ndarray) -> np.ndarray:
    return np.bitwise_count(words).astype(np.int64)


def rank_samples(words: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Superblock and word samples for an already packed word array."""
    counts = word_popcounts(words)
    before = np.zeros(len(words) + 1, dtype=np.int64)
    np.cumsum(counts, out=before[1:])
    words_per_super = 1 << (SUPER_SHIFT - WORD_SHIFT)
    nsupers = (len(words) - 1) // words_per_super + 1
    supers = before[np.arange(nsupers) * words_per_super].astype(np.uint64)
    rels = (before[:-1] - before[(np.arange(len(words)) // words_per_super) * words_per_super]).astype(np.uint16)
    return supers, rels


class RankBitVector:
    """Bit array of length ``n`` with O(1) ``rank0``/``rank1``."""

    def __init__(self, words: np.ndarray, n: int):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        need = n // 64 + 1
        if len(words) < need:
            words = np.concatenate([words, np.zeros(need - len(words), dtype=np.uint64)])
        self.n = int(n)
        self.words = words
        self.supers, self.rels = rank_samples(words)

    @classmethod
    def from_bits(cls, bits) -> "RankBitVector":
        bits = np.asarray(bits, dtype=bool)
        return cls(pack_bits(bits), len(bits))

    @classmethod
    def from_string(cls, text: str) -> "RankBitVector":
        return cls.from_bits([ch == "1" for ch in text])

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, pos: int) -> int:
        """Bit at 1-based position ``pos``."""
        if not 1 <= pos <= self.n:
            raise IndexError(pos)
        p = pos - 1
        return int((int(self.words[p >> 6]) >> (p & 63)) & 1)

    def _check(self, i: int) -> None:
        if not 0 <= i <= self.n:
            raise IndexError(f"rank position {i} outside [0, {self.n}]")

    def rank1(self, i: int) -> int:
        self._check(i)
        return int(rank1_at(self.words, self.supers, self.rels, i))

    def rank0(self, i: int) -> int:
        self._check(i)
        return i - int(rank1_at(self.words, self.supers, self.rels, i))

    def rank1_array(self, positions) -> np.ndarray:
        """Vectorised ``rank1`` over an array of prefix lengths."""
        positions = np.asarray(positions, dtype=np.int64)
        if len(positions) and (positions.min() < 0 or positions.max() > self.n):
            raise IndexError("rank position outside [0, n]")
        return rank1_many(self.words, self.supers, self.rels, positions)

    def rank(self, bit: int, i: int) -> int:
        return self.rank1(i) if bit else self.rank0(i)

    def popcount(self) -> int:
        return self.rank1(self.n)

    def to_bits(self) -> np.ndarray:
        raw = self.words.astype("<u8").view(np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.n].astype(bool)

    @property
    def data_bits(self) -> int:
        return self.n

    @property
    def aux_bits(self) -> int:
        return self.supers.size * 64 + self.rels.size * 16

    @property
    def nbytes(self) -> int:
        return self.words.nbytes + self.supers.nbytes + self.rels.nbytes


def build_rank(bits) -> RankBitVector:
    if isinstance(bits, str):
        return RankBitVector.from_string(bits)
    return RankBitVector.from_bits(bits)
