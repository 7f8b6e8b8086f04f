"""Sparse integer descriptors and exact generalized Jaccard arithmetic.

A descriptor is a non-negative integer vector stored as its support: sorted
``(index, weight)`` pairs with 1-based indices and positive weights. Zero
entries are never stored.

Every similarity decision in the package goes through integers. The threshold
is held as an exact fraction, so ``J(x, q) >= eps`` is decided by
cross-multiplication and never rounds.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

logger = logging.getLogger(__name__)

MAX_WEIGHT = 1 << 16
MAX_ENTRIES = 1 << 32


class DescriptorError(ValueError):
    """Malformed descriptor text or a record that breaks a descriptor invariant."""

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class EmptyDescriptorError(ValueError):
    """Similarity is undefined when both descriptors are empty."""


@dataclass(frozen=True)
class Descriptor:
    """Immutable sparse vector, entries sorted strictly ascending by index."""

    entries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prev = 0
        for d, f in self.entries:
            if d <= prev:
                if d == prev:
                    raise DescriptorError(f"duplicate index {d}")
                if d < 1:
                    raise DescriptorError(f"index {d} is not positive")
                raise DescriptorError("indices are not ascending")
            if f < 1:
                raise DescriptorError(f"weight {f} at index {d} is not positive")
            prev = d

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "Descriptor":
        """Build from pairs in any order; duplicates are rejected."""
        items = sorted((int(d), int(f)) for d, f in pairs)
        return cls(tuple(items))

    @classmethod
    def from_dense(cls, vector: Sequence[int]) -> "Descriptor":
        """Build from a dense vector whose position 0 is dimension 1."""
        return cls(tuple((i + 1, int(f)) for i, f in enumerate(vector) if f))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.entries)

    @property
    def cardinality(self) -> int:
        return len(self.entries)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.entries)

    @property
    def weights(self) -> tuple[int, ...]:
        return tuple(f for _, f in self.entries)

    def to_dense(self, dim: int) -> list[int]:
        out = [0] * dim
        for d, f in self.entries:
            out[d - 1] = f
        return out

    def format(self) -> str:
        return " ".join(f"{d}:{f}" for d, f in self.entries)


@dataclass(frozen=True)
class Threshold:
    """Similarity threshold ``eps = numerator / denominator`` with ``0 < eps <= 1``."""

    numerator: int
    denominator: int

    def __post_init__(self):
        if self.denominator <= 0 or self.numerator <= 0:
            raise ValueError("threshold must be positive")
        if self.numerator > self.denominator:
            raise ValueError("threshold must not exceed 1")

    @classmethod
    def parse(cls, value: "str | Fraction | int | float | Threshold") -> "Threshold":
        """Parse a decimal string (``"0.95"``) or number into an exact fraction.

        Floats are converted through their shortest repr, so ``0.95`` means
        19/20 and not the nearest binary double.
        """
        if isinstance(value, Threshold):
            return value
        if isinstance(value, float):
            value = repr(value)
        try:
            frac = Fraction(value.strip() if isinstance(value, str) else value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"invalid threshold {value!r}") from exc
        return cls(frac.numerator, frac.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __float__(self) -> float:
        return self.numerator / self.denominator

    def __str__(self) -> str:
        return str(float(self))


def _parse_body(body: str, lineno: int | None, dim: int | None) -> Descriptor:
    pairs = []
    for token in body.split():
        d, sep, f = token.partition(":")
        if not sep or ":" in f:
            raise DescriptorError(f"malformed pair {token!r}", lineno)
        try:
            d, f = int(d), int(f)
        except ValueError:
            raise DescriptorError(f"malformed pair {token!r}", lineno) from None
        if d < 1 or (dim is not None and d > dim):
            raise DescriptorError(f"index {d} out of dimension range", lineno)
        if f < 1:
            raise DescriptorError(f"weight {f} at index {d} is not positive", lineno)
        if f > MAX_WEIGHT:
            raise DescriptorError(f"weight {f} exceeds {MAX_WEIGHT}", lineno)
        pairs.append((d, f))
    pairs.sort()
    for (a, _), (b, _) in zip(pairs, pairs[1:]):
        if a == b:
            raise DescriptorError(f"duplicate index {a}", lineno)
    return Descriptor(tuple(pairs))


def parse_record(line: str, lineno: int | None = None, dim: int | None = None) -> tuple[int, Descriptor]:
    """Parse ``<id>\\t<d>:<f> <d>:<f> ...`` into ``(id, descriptor)``."""
    line = line.rstrip("\r\n")
    head, sep, body = line.partition("\t")
    if not sep:
        raise DescriptorError("missing TAB after record id", lineno)
    try:
        ident = int(head)
    except ValueError:
        raise DescriptorError(f"invalid record id {head!r}", lineno) from None
    return ident, _parse_body(body, lineno, dim)


def parse_descriptor(line: str, dim: int | None = None) -> Descriptor:
    """Parse one database/query record and return its descriptor."""
    return parse_record(line, dim=dim)[1]


def squared_norm(x: Descriptor) -> int:
    return sum(f * f for _, f in x.entries)


def dot(x: Descriptor, y: Descriptor) -> int:
    """Inner product by a sorted merge of the two supports."""
    a, b = x.entries, y.entries
    i = j = 0
    total = 0
    while i < len(a) and j < len(b):
        da, db = a[i][0], b[j][0]
        if da == db:
            total += a[i][1] * b[j][1]
            i += 1
            j += 1
        elif da < db:
            i += 1
        else:
            j += 1
    return total


def jaccard_value(x: Descriptor, q: Descriptor) -> Fraction:
    nx, nq = squared_norm(x), squared_norm(q)
    if nx == 0 and nq == 0:
        raise EmptyDescriptorError("Jaccard similarity of two empty descriptors is undefined")
    p = dot(x, q)
    return Fraction(p, nx + nq - p)


def similarity_from_dot(p: int, nx: int, nq: int) -> Fraction:
    return Fraction(p, nx + nq - p)


def threshold_test(p: int, nx: int, nq: int, eps: Threshold) -> bool:
    """``p / (nx + nq - p) >= eps`` rewritten as ``(num + den) p >= num (nx + nq)``."""
    return (eps.numerator + eps.denominator) * p >= eps.numerator * (nx + nq)


def jaccard_geq(x: Descriptor, q: Descriptor, eps: Threshold) -> bool:
    nx, nq = squared_norm(x), squared_norm(q)
    if nx == 0 and nq == 0:
        raise EmptyDescriptorError("Jaccard similarity of two empty descriptors is undefined")
    return threshold_test(dot(x, q), nx, nq, eps)


class Database:
    """Column-compressed descriptor store (CSR rows, one row per record).

    ``indices`` and ``weights`` hold every entry; row ``r`` spans
    ``indptr[r]:indptr[r + 1]`` and is sorted by index. Rows keep file order.
    """

    def __init__(self, ids, indptr, indices, weights, dim: int | None = None):
        self.ids = np.ascontiguousarray(ids, dtype=np.int64)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.weights = np.ascontiguousarray(weights, dtype=np.int64)
        if len(self.indptr) != len(self.ids) + 1:
            raise ValueError("indptr length must be len(ids) + 1")
        counts = np.diff(self.indptr)
        if np.any(counts >= MAX_ENTRIES):
            raise DescriptorError(f"descriptor with {MAX_ENTRIES} or more entries")
        if len(self.weights) and (self.weights.min() < 1 or self.weights.max() > MAX_WEIGHT):
            raise DescriptorError(f"weights must lie in [1, {MAX_WEIGHT}]")
        max_index = int(self.indices.max()) if len(self.indices) else 0
        self.dim = max(dim or 0, max_index)
        self.max_weight = int(self.weights.max()) if len(self.weights) else 0
        csum = np.zeros(len(self.weights) + 1, dtype=np.int64)
        np.cumsum(self.weights * self.weights, out=csum[1:])
        self.norms = csum[self.indptr[1:]] - csum[self.indptr[:-1]]

    @classmethod
    def from_records(cls, records: Iterable[tuple[int, Descriptor]], dim: int | None = None) -> "Database":
        ids, indptr, indices, weights = [], [0], [], []
        for ident, x in records:
            ids.append(ident)
            for d, f in x.entries:
                indices.append(d)
                weights.append(f)
            indptr.append(len(indices))
        return cls(ids, indptr, indices, weights, dim=dim)

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, row: int) -> Descriptor:
        lo, hi = self.indptr[row], self.indptr[row + 1]
        return Descriptor(tuple(zip(self.indices[lo:hi].tolist(), self.weights[lo:hi].tolist())))

    def records(self) -> Iterator[tuple[int, Descriptor]]:
        for r in range(len(self)):
            yield int(self.ids[r]), self[r]

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def nonempty(self) -> "Database":
        """Drop empty rows; they match nothing for any positive threshold."""
        keep = self.counts > 0
        if keep.all():
            return self
        warnings.warn(f"skipping {int((~keep).sum())} empty descriptor(s)", stacklevel=2)
        return self.take(np.flatnonzero(keep))

    def take(self, rows) -> "Database":
        rows = np.asarray(rows, dtype=np.int64)
        counts = self.counts[rows]
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        starts = np.repeat(self.indptr[rows] - indptr[:-1], counts) + np.arange(indptr[-1])
        return Database(self.ids[rows], indptr, self.indices[starts], self.weights[starts], dim=self.dim)

    def nbytes(self) -> int:
        return sum(a.nbytes for a in (self.ids, self.indptr, self.indices, self.weights, self.norms))


def _records_from_lines(lines: Iterable[str], dim: int | None) -> Iterator[tuple[int, Descriptor]]:
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield parse_record(line, lineno, dim)


def read_records(source: "str | TextIO", dim: int | None = None) -> list[tuple[int, Descriptor]]:
    if isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            return list(_records_from_lines(fh, dim))
    return list(_records_from_lines(source, dim))


def read_database(source: "str | TextIO", dim: int | None = None) -> Database:
    """Load a text database.

    Parsing is done in bulk: tokens are split per line and validated
    with numpy. Any problem falls back to the per-record parser, which
    reports the offending line number.
    """
    if isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = source.readlines()
    ids, counts, flat, linenos = [], [], [], []
    try:
        for lineno, line in enumerate(lines, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            head, sep, body = line.rstrip("\r\n").partition("\t")
            if not sep:
                raise DescriptorError("missing TAB", lineno)
            ntok = len(body.split())
            nums = body.replace(":", " ").split()
            if body.count(":") != ntok or len(nums) != 2 * ntok:
                raise DescriptorError("malformed pair", lineno)
            ids.append(int(head))
            counts.append(ntok)
            flat.extend(map(int, nums))
            linenos.append(lineno)
    except (DescriptorError, ValueError):
        _raise_first_error(lines, dim)
        raise
    pairs = np.array(flat, dtype=np.int64).reshape(-1, 2)
    counts_arr = np.array(counts, dtype=np.int64)
    rows = np.repeat(np.arange(len(ids)), counts_arr)
    idx, w = pairs[:, 0], pairs[:, 1]
    bad = (idx < 1) | (w < 1) | (w > MAX_WEIGHT)
    if dim is not None:
        bad |= idx > dim
    order = np.lexsort((idx, rows))
    idx, w = idx[order], w[order]
    dup = np.zeros(len(idx), dtype=bool)
    if len(idx) > 1:
        dup[1:] = (rows[1:] == rows[:-1]) & (idx[1:] == idx[:-1])
    if bad.any() or dup.any():
        _raise_first_error(lines, dim)
    indptr = np.zeros(len(ids) + 1, dtype=np.int64)
    np.cumsum(counts_arr, out=indptr[1:])
    return Database(ids, indptr, idx, w, dim=dim)


def _raise_first_error(lines: Sequence[str], dim: int | None) -> None:
    for _ in _records_from_lines(lines, dim):
        pass


def write_database(db: "Database | Iterable[tuple[int, Descriptor]]", sink: TextIO, header: str | None = None) -> None:
    if header:
        for h in header.splitlines():
            sink.write(f"# {h}\n")
    if isinstance(db, Database):
        indptr, indices, weights = db.indptr, db.indices.tolist(), db.weights.tolist()
        for r, ident in enumerate(db.ids.tolist()):
            lo, hi = indptr[r], indptr[r + 1]
            body = " ".join(f"{d}:{f}" for d, f in zip(indices[lo:hi], weights[lo:hi]))
            sink.write(f"{ident}\t{body}\n")
    else:
        for ident, x in db:
            sink.write(f"{ident}\t{x.format()}\n")
