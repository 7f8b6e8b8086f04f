"""Comparison engines: exhaustive scan (OVA) and an uncompressed inverted index (INV).

Both are exact. OVA is the ground truth every other engine is checked against.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .descriptor import Database, Descriptor, EmptyDescriptorError, Threshold, squared_norm
from .index import SearchHit


def _query_arrays(q: Descriptor) -> tuple[np.ndarray, np.ndarray, int]:
    qd = np.fromiter((d for d, _ in q.entries), dtype=np.int64, count=len(q))
    qf = np.fromiter((f for _, f in q.entries), dtype=np.int64, count=len(q))
    qnorm = int((qf * qf).sum())
    if qnorm == 0:
        raise EmptyDescriptorError("empty query")
    return qd, qf, qnorm


def _accept(ids, dots, norms, qnorm: int, eps: Threshold) -> list[SearchHit]:
    num, den = eps.numerator, eps.denominator
    ok = (num + den) * dots >= num * (norms + qnorm)
    hits = [
        SearchHit(i, Fraction(p, c + qnorm - p))
        for i, p, c in zip(ids[ok].tolist(), dots[ok].tolist(), norms[ok].tolist())
    ]
    hits.sort(key=lambda h: (-h.similarity, h.id))
    return hits


def ova_search(db: Database, q: Descriptor, eps) -> list[SearchHit]:
    """Score every descriptor against ``q`` and keep those with J >= eps."""
    eps = Threshold.parse(eps)
    qd, qf, qnorm = _query_arrays(q)
    dense = np.zeros(max(db.dim, int(qd.max())) + 1, dtype=np.int64)
    dense[qd] = qf
    prod = db.weights * dense[db.indices]
    csum = np.zeros(len(prod) + 1, dtype=np.int64)
    np.cumsum(prod, out=csum[1:])
    dots = csum[db.indptr[1:]] - csum[db.indptr[:-1]]
    return _accept(db.ids, dots, db.norms, qnorm, eps)


def ova_search_records(records, q: Descriptor, eps) -> list[SearchHit]:
    """Same answer as :func:`ova_search`, one Python pair at a time."""
    from .descriptor import jaccard_geq, jaccard_value

    eps = Threshold.parse(eps)
    if squared_norm(q) == 0:
        raise EmptyDescriptorError("empty query")
    hits = [SearchHit(i, jaccard_value(x, q)) for i, x in records if len(x) and jaccard_geq(x, q, eps)]
    hits.sort(key=lambda h: (-h.similarity, h.id))
    return hits


class InvertedIndex:
    """Postings per dimension: ascending-id ``(id, weight)`` lists.

    Stored column-compressed: the postings of dimension ``d`` are
    ``post_ids[ptr[d]:ptr[d + 1]]`` with weights in ``post_w``.
    """

    def __init__(self, db: Database):
        rows = np.repeat(np.arange(len(db), dtype=np.int64), db.counts)
        order = np.lexsort((db.ids[rows], db.indices))
        self.dim = db.dim
        self.ptr = np.zeros(db.dim + 2, dtype=np.int64)
        np.cumsum(np.bincount(db.indices, minlength=db.dim + 1), out=self.ptr[1:])
        self.post_rows = rows[order]
        self.post_w = db.weights[order]
        self.ids = db.ids
        self.norms = db.norms

    def postings(self, d: int) -> list[tuple[int, int]]:
        if not 0 < d <= self.dim:
            return []
        lo, hi = self.ptr[d], self.ptr[d + 1]
        return list(zip(self.ids[self.post_rows[lo:hi]].tolist(), self.post_w[lo:hi].tolist()))

    def __len__(self) -> int:
        return len(self.post_rows)

    def nbytes(self) -> int:
        return self.ptr.nbytes + self.post_rows.nbytes + self.post_w.nbytes + self.ids.nbytes + self.norms.nbytes


def inv_build(db: Database) -> InvertedIndex:
    return InvertedIndex(db)


def inv_search(inv: InvertedIndex, q: Descriptor, eps) -> list[SearchHit]:
    """Term-at-a-time accumulation of ``x . q``, then the exact threshold test."""
    eps = Threshold.parse(eps)
    qd, qf, qnorm = _query_arrays(q)
    qd_ok = qd <= inv.dim
    qd, qf = qd[qd_ok], qf[qd_ok]
    lo, hi = inv.ptr[qd], inv.ptr[qd + 1]
    if not len(qd) or (hi - lo).sum() == 0:
        return []
    rows = np.concatenate([inv.post_rows[a:b] for a, b in zip(lo, hi)])
    contrib = np.concatenate([inv.post_w[a:b] * f for a, b, f in zip(lo, hi, qf)])
    order = np.argsort(rows, kind="stable")
    rows, contrib = rows[order], contrib[order]
    starts = np.flatnonzero(np.concatenate([[True], rows[1:] != rows[:-1]]))
    cand = rows[starts]
    dots = np.add.reduceat(contrib, starts)
    return _accept(inv.ids[cand], dots, inv.norms[cand], qnorm, eps)
