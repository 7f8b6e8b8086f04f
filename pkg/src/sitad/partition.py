"""Grouping the database by squared norm and picking the blocks a query can hit.

``J(x, q) >= eps`` needs ``x . q >= eps / (1 + eps) * (|x|^2 + |q|^2)`` and
``x . q <= |x| |q|``, hence ``eps (c + |q|^2) <= (1 + eps) sqrt(c |q|^2)`` for
``c = |x|^2``. Squared and written over the threshold's integers
``eps = a / (b - a)`` this is ``a^2 (c + |q|^2)^2 <= b^2 c |q|^2``, a closed
interval in ``c`` that always contains ``|q|^2``. Only blocks inside it are
searched; endpoints are found in integer arithmetic so a block exactly on the
boundary is kept.

The narrower window ``eps |q|^2 <= c <= |q|^2 / eps`` is only valid when
``x . q <= min(|x|^2, |q|^2)``, which holds for 0/1 fingerprints but not for
integer weights: ``x = (1:1)``, ``q = (1:2)`` has ``J = 2/3`` and ``|x|^2 = 1 <
(2/3) * 4``. It is exposed as :func:`binary_norm_window` for reference only.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .descriptor import Database, Descriptor, EmptyDescriptorError, Threshold, squared_norm


@dataclass(frozen=True)
class Block:
    """All descriptors of squared norm ``c``, ordered by ascending external id.

    ``rows`` are row numbers into the source :class:`Database`; ``ids`` the
    matching external ids. Position ``p`` (1-based) in the block is
    ``rows[p - 1]``.
    """

    c: int
    rows: np.ndarray
    ids: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)


class BlockSet:
    def __init__(self, blocks: list[Block]):
        blocks = sorted(blocks, key=lambda b: b.c)
        self.norms = [b.c for b in blocks]
        self.blocks = {b.c: b for b in blocks}

    def __len__(self) -> int:
        return len(self.norms)

    def __iter__(self) -> Iterator[Block]:
        return (self.blocks[c] for c in self.norms)

    def __getitem__(self, c: int) -> Block:
        return self.blocks[c]

    def __contains__(self, c: int) -> bool:
        return c in self.blocks

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks.values())

    def norm_range(self, lo: int, hi: int) -> list[int]:
        """Occurring norms ``c`` with ``lo <= c <= hi``, ascending."""
        i = bisect.bisect_left(self.norms, lo)
        j = bisect.bisect_right(self.norms, hi)
        return self.norms[i:j]


def partition(db: Database) -> BlockSet:
    """Split non-empty rows of ``db`` into blocks of equal squared norm."""
    keep = np.flatnonzero(db.norms > 0)
    order = keep[np.lexsort((keep, db.ids[keep], db.norms[keep]))]
    norms = db.norms[order]
    cuts = np.flatnonzero(np.diff(norms)) + 1
    blocks = []
    for seg in np.split(order, cuts) if len(order) else []:
        blocks.append(Block(int(db.norms[seg[0]]), seg, db.ids[seg]))
    return BlockSet(blocks)


def _outside(c: int, qnorm: int, a2: int, b2: int) -> bool:
    return a2 * (c + qnorm) ** 2 > b2 * c * qnorm


def norm_window(qnorm: int, eps: Threshold) -> tuple[int, int]:
    """Smallest and largest integer ``c >= 1`` a match's squared norm can take."""
    if qnorm <= 0:
        raise EmptyDescriptorError("empty query")
    a = eps.numerator
    b = eps.numerator + eps.denominator
    a2, b2 = a * a, b * b
    # roots of a^2 c^2 + (2a^2 - b^2) qn c + a^2 qn^2 = 0
    root = math.isqrt(qnorm * qnorm * b2 * (b2 - 4 * a2))
    centre = qnorm * (b2 - 2 * a2)
    lo = max(1, (centre - root) // (2 * a2))
    hi = max(lo, (centre + root) // (2 * a2))
    while _outside(lo, qnorm, a2, b2):
        lo += 1
    while lo > 1 and not _outside(lo - 1, qnorm, a2, b2):
        lo -= 1
    while _outside(hi, qnorm, a2, b2):
        hi -= 1
    while not _outside(hi + 1, qnorm, a2, b2):
        hi += 1
    return lo, hi


def binary_norm_window(qnorm: int, eps: Threshold) -> tuple[int, int]:
    """``[ceil(eps |q|^2), floor(|q|^2 / eps)]``; sound only for 0/1 vectors."""
    num, den = eps.numerator, eps.denominator
    return -((-num * qnorm) // den), (den * qnorm) // num


def candidate_norms(q: Descriptor, eps: Threshold, blocks: BlockSet) -> list[int]:
    qnorm = squared_norm(q)
    if qnorm == 0:
        raise EmptyDescriptorError("empty query")
    return blocks.norm_range(*norm_window(qnorm, eps))


def block_threshold(c: int, q: "Descriptor | int", eps: Threshold) -> Fraction:
    """Minimum dot product a member of block ``c`` needs: eps/(1+eps) * (c + |q|^2)."""
    qnorm = q if isinstance(q, int) else squared_norm(q)
    return Fraction(eps.numerator * (c + qnorm), eps.numerator + eps.denominator)


def passes(bound: int, c: int, qnorm: int, eps: Threshold) -> bool:
    """``bound >= block_threshold(c, q, eps)`` without building a fraction."""
    return (eps.numerator + eps.denominator) * bound >= eps.numerator * (c + qnorm)
