"""Deterministic synthetic descriptor databases.

Stand-in for real chemical descriptor corpora. Entry counts are Poisson around
``density``, indices are drawn from ``[1, dim]`` (optionally with a power-law
popularity), weights are uniform in ``[1, max_weight]``. A fraction of rows
are perturbed copies of other rows, so high-threshold queries drawn from the
database have neighbours besides themselves.
"""

from __future__ import annotations

import numpy as np

from .descriptor import Database


def _dedupe(rows, dims, weights, nrows):
    order = np.lexsort((dims, rows))
    rows, dims, weights = rows[order], dims[order], weights[order]
    keep = np.ones(len(rows), dtype=bool)
    keep[1:] = (rows[1:] != rows[:-1]) | (dims[1:] != dims[:-1])
    rows, dims, weights = rows[keep], dims[keep], weights[keep]
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=nrows), out=indptr[1:])
    return indptr, dims, weights


def generate(
    n: int,
    dim: int,
    max_weight: int,
    density: float,
    seed: int = 0,
    dup_fraction: float = 0.2,
    skew: float = 0.0,
) -> Database:
    """Random database with ids ``1..n``.

    ``skew`` > 0 draws indices with probability proportional to
    ``rank ** -skew`` (rank 1 is dimension 1).
    """
    if n < 0 or dim < 1 or max_weight < 1 or density <= 0:
        raise ValueError("n must be >= 0; dim, max_weight and density must be positive")
    if not 0 <= dup_fraction < 1:
        raise ValueError("dup_fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    n_dup = int(n * dup_fraction) if n > 1 else 0
    n_base = n - n_dup

    counts = np.clip(rng.poisson(density, n_base), 1, dim)
    total = int(counts.sum())
    rows = np.repeat(np.arange(n_base, dtype=np.int64), counts)
    if skew > 0:
        p = np.arange(1, dim + 1, dtype=np.float64) ** -skew
        dims = rng.choice(dim, size=total, p=p / p.sum()) + 1
    else:
        dims = rng.integers(1, dim + 1, size=total)
    weights = rng.integers(1, max_weight + 1, size=total)
    indptr, dims, weights = _dedupe(rows, dims, weights, n_base)

    if n_dup:
        src = rng.integers(0, n_base, size=n_dup)
        c = np.diff(indptr)[src]
        starts = np.repeat(indptr[src] - np.concatenate([[0], np.cumsum(c)[:-1]]), c) + np.arange(int(c.sum()))
        drows = np.repeat(np.arange(n_base, n, dtype=np.int64), c)
        ddims = dims[starts]
        dw = weights[starts] + rng.integers(-1, 2, size=len(starts)) * (rng.random(len(starts)) < 0.25)
        dw = np.clip(dw, 1, max_weight)
        drop = rng.random(len(starts)) < 0.05
        first = np.ones(len(starts), dtype=bool)
        first[1:] = drows[1:] != drows[:-1]
        drop &= ~first
        extra = rng.random(n_dup) < 0.3
        xrows = np.arange(n_base, n, dtype=np.int64)[extra]
        xdims = rng.integers(1, dim + 1, size=len(xrows))
        xw = rng.integers(1, max_weight + 1, size=len(xrows))
        base_rows = np.repeat(np.arange(n_base, dtype=np.int64), np.diff(indptr))
        rows = np.concatenate([base_rows, drows[~drop], xrows])
        dims = np.concatenate([dims, ddims[~drop], xdims])
        weights = np.concatenate([weights, dw[~drop], xw])
        indptr, dims, weights = _dedupe(rows, dims, weights, n)

    # shuffle so copies are not adjacent to one another, then number rows 1..n
    perm = rng.permutation(n)
    db = Database(np.arange(n, dtype=np.int64), indptr, dims, weights, dim=dim).take(perm)
    return Database(np.arange(1, n + 1, dtype=np.int64), db.indptr, db.indices, db.weights, dim=dim)


def sample_queries(db: Database, k: int, seed: int = 0) -> Database:
    """``k`` distinct rows of ``db`` (all rows when ``k >= len(db)``), in row order."""
    rng = np.random.default_rng(seed)
    k = min(k, len(db))
    rows = np.sort(rng.choice(len(db), size=k, replace=False))
    return db.take(rows)
