"""Succinct per-block search index.

For every block the descriptor positions ``1..n`` form an intervals-splitting
tree. Instead of storing a summary descriptor per node, the block keeps:

* ``P_root``: for each dimension ``d`` occurring in the block, the end of its
  run in the root inverted arrays (runs are ordered by ``d``).
* per tree depth ``l``, the block's ``(position, weight)`` postings permuted
  so that every node at that depth owns a contiguous span, and inside the
  span each dimension still owns a contiguous run. The weights of that
  permutation (``E_l``) get a range-max structure; ``E_0`` is the root array.
* per depth below the leaves, one bit per posting: 1 when the posting's
  position falls in the right child. A rank dictionary over these bits maps
  a run ``[s, t]`` inside a node to the matching runs in both children.

The max weight of a dimension's run inside a node equals the node's summary
weight ``y_v[d]``, so the pruning bound matches the explicit tree exactly.

A node's span at every depth starts after all postings of lower positions,
so one offset table per block (``node_offsets[p] = postings before p``)
serves every level. Leaves above the bottom level keep their postings in
place; their bits are 0 and are never read.

All blocks share global arrays (bits, weights, rank and range-max samples);
each block owns a word-aligned stretch of them.
"""

from __future__ import annotations

import logging
import warnings
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from numba import njit

from .bitvector import RankBitVector, pack_bits, rank1_at, rank_samples
from .descriptor import Database, Descriptor, EmptyDescriptorError, Threshold, squared_norm
from .partition import Block, BlockSet, norm_window
from .rmq import blocked_max, chunk_table
from .stats import QueryStats

logger = logging.getLogger(__name__)

INT64_SAFE = 1 << 62


def weight_dtype(max_weight: int):
    if max_weight < 1 << 8:
        return np.uint8
    if max_weight < 1 << 16:
        return np.uint16
    return np.uint32


def levels_for(n: int) -> int:
    """Tree depth of a block of size ``n``: ceil(log2 n)."""
    return (int(n) - 1).bit_length() if n > 1 else 0


@njit(cache=True)
def _search_blocks(
    blocks, qd, qf, qnorm, num, den,
    b_c, b_n, b_nc, b_lev, b_row, b_ent, b_bit, b_lw, b_w, b_p, b_pc,
    rowstart, pdims, pends, words, supers, rels, weights, wtable,
    out_rows, out_dot, counters, trace,
):
    m = len(qd)
    mult = num + den
    nres = 0
    nodes = 0
    ranks = 0
    ntrace = 0
    maxlev = 0
    for bi in blocks:
        if b_lev[bi] > maxlev:
            maxlev = b_lev[bi]
    cap = m * (2 * maxlev + 4)
    tj = np.empty(cap, np.int64)
    ts = np.empty(cap, np.int64)
    tt = np.empty(cap, np.int64)
    fdepth = np.empty(maxlev + 2, np.int64)
    fa = np.empty(maxlev + 2, np.int64)
    fb = np.empty(maxlev + 2, np.int64)
    fstart = np.empty(maxlev + 2, np.int64)
    flen = np.empty(maxlev + 2, np.int64)
    for bi in blocks:
        c = b_c[bi]
        nc = b_nc[bi]
        rb = b_row[bi]
        eb = b_ent[bi]
        pb = b_p[bi]
        pc = b_pc[bi]
        rhs = num * (c + qnorm)
        # root runs of the query dimensions
        k = 0
        for j in range(m):
            pos = np.searchsorted(pdims[pb:pb + pc], qd[j])
            if pos < pc and pdims[pb + pos] == qd[j]:
                tj[k] = j
                ts[k] = (pends[pb + pos - 1] if pos > 0 else 0) + 1
                tt[k] = pends[pb + pos]
                k += 1
        sp = 0
        fdepth[0] = 0
        fa[0] = 1
        fb[0] = b_n[bi]
        fstart[0] = 0
        flen[0] = k
        sp = 1
        while sp > 0:
            sp -= 1
            depth = fdepth[sp]
            a = fa[sp]
            b = fb[sp]
            t0 = fstart[sp]
            tl = flen[sp]
            top = t0 + tl
            off = rowstart[rb + a - 1] - eb
            wbase = b_w[bi] + depth * nc + off - 1
            bound = 0
            for x in range(t0, top):
                bound += np.int64(blocked_max(weights, wtable, wbase + ts[x], wbase + tt[x])) * qf[tj[x]]
            nodes += 1
            if ntrace < trace.shape[0]:
                trace[ntrace, 0] = depth
                trace[ntrace, 1] = a
                trace[ntrace, 2] = b
                trace[ntrace, 3] = bound
                ntrace += 1
            if mult * bound < rhs:
                continue
            if a == b:
                out_rows[nres] = rb + a - 1
                out_dot[nres] = bound
                nres += 1
                continue
            mid = (a + b) // 2
            lbase = b_bit[bi] + depth * b_lw[bi] * 64 + off
            base1 = rank1_at(words, supers, rels, lbase)
            ranks += 1
            rs = top
            ls = top + tl
            nr = 0
            nl = 0
            for x in range(t0, top):
                s = ts[x]
                t = tt[x]
                r_s = rank1_at(words, supers, rels, lbase + s - 1) - base1
                r_t = rank1_at(words, supers, rels, lbase + t) - base1
                ranks += 2
                z_s = s - 1 - r_s
                z_t = t - r_t
                if z_s < z_t:
                    tj[ls + nl] = tj[x]
                    ts[ls + nl] = z_s + 1
                    tt[ls + nl] = z_t
                    nl += 1
                if r_s < r_t:
                    tj[rs + nr] = tj[x]
                    ts[rs + nr] = r_s + 1
                    tt[rs + nr] = r_t
                    nr += 1
            fdepth[sp] = depth + 1
            fa[sp] = mid + 1
            fb[sp] = b
            fstart[sp] = rs
            flen[sp] = nr
            sp += 1
            fdepth[sp] = depth + 1
            fa[sp] = a
            fb[sp] = mid
            fstart[sp] = ls
            flen[sp] = nl
            sp += 1
    counters[0] = nodes
    counters[1] = ranks
    counters[2] = ntrace
    return nres


class SearchHit(NamedTuple):
    id: int
    similarity: Fraction


class SitadIndex:
    """Database-level index: block directory plus the shared global arrays.

    Block ``b`` (in ascending norm order) is described by the ``b_*``
    directory arrays:

    ``b_c`` squared norm, ``b_n`` size, ``b_nc`` postings, ``b_lev`` levels
    with bits, ``b_row`` first row in ``ids``/``rowstart``, ``b_ent`` first
    posting, ``b_bit`` first bit (word aligned), ``b_lw`` words per level,
    ``b_w`` first weight, ``b_p``/``b_pc`` slice of ``pdims``/``pends``.
    """

    ARRAYS = (
        "b_c", "b_n", "b_nc", "b_lev", "b_row", "b_ent", "b_bit", "b_lw", "b_w", "b_p", "b_pc",
        "ids", "rowstart", "pdims", "pends", "words", "weights",
    )

    def __init__(self, dim: int, max_weight: int, **arrays):
        self.dim = int(dim)
        self.max_weight = int(max_weight)
        for name in self.ARRAYS:
            setattr(self, name, arrays[name])
        self.supers, self.rels = rank_samples(self.words)
        self.wtable = chunk_table(self.weights, int(self.b_nc.max()) if len(self.b_nc) else 0)
        self.norms = [int(c) for c in self.b_c]
        self._block_of = {c: i for i, c in enumerate(self.norms)}

    @property
    def size(self) -> int:
        return len(self.ids)

    @property
    def nblocks(self) -> int:
        return len(self.b_c)

    def block(self, c: int) -> "SitadBlockIndex":
        return SitadBlockIndex(self, self._block_of[c])

    def blocks(self):
        return [SitadBlockIndex(self, b) for b in range(self.nblocks)]

    def candidate_blocks(self, qnorm: int, eps: Threshold) -> np.ndarray:
        lo, hi = norm_window(qnorm, eps)
        i = int(np.searchsorted(self.b_c, lo, side="left"))
        j = int(np.searchsorted(self.b_c, hi, side="right"))
        return np.arange(i, j, dtype=np.int64)

    def sections(self) -> dict[str, int]:
        """Bytes held by each component (in-memory, including rebuilt samples)."""
        directory = sum(getattr(self, n).nbytes for n in self.ARRAYS[:11])
        return {
            "bitvectors": self.words.nbytes,
            "rank_samples": self.supers.nbytes + self.rels.nbytes,
            "level_weights": self.weights.nbytes,
            "rmq_samples": self.wtable.nbytes,
            "root_offsets": self.pdims.nbytes + self.pends.nbytes,
            "node_offsets": self.rowstart.nbytes,
            "id_map": self.ids.nbytes,
            "block_directory": directory,
        }

    def nbytes(self) -> int:
        return sum(self.sections().values())

    def _run(self, blocks: np.ndarray, q: Descriptor, eps: Threshold, trace_cap: int = 0):
        qd = np.fromiter((d for d, _ in q.entries), dtype=np.int64, count=len(q))
        qf = np.fromiter((f for _, f in q.entries), dtype=np.int64, count=len(q))
        qnorm = int((qf * qf).sum())
        if len(blocks):
            cmax = int(self.b_c[blocks].max())
            worst = max((eps.numerator + eps.denominator) * int(qf.sum()) * self.max_weight,
                        eps.numerator * (cmax + qnorm))
            if worst >= INT64_SAFE:
                raise OverflowError("query exceeds the 64-bit range of the search kernel")
        cap = int(self.b_n[blocks].sum()) if len(blocks) else 0
        out_rows = np.empty(cap, np.int64)
        out_dot = np.empty(cap, np.int64)
        counters = np.zeros(3, np.int64)
        trace = np.empty((trace_cap, 4), np.int64)
        nres = _search_blocks(
            blocks, qd, qf, qnorm, eps.numerator, eps.denominator,
            self.b_c, self.b_n, self.b_nc, self.b_lev, self.b_row, self.b_ent, self.b_bit,
            self.b_lw, self.b_w, self.b_p, self.b_pc,
            self.rowstart, self.pdims, self.pends, self.words, self.supers, self.rels,
            self.weights, self.wtable, out_rows, out_dot, counters, trace,
        )
        stats = QueryStats(
            selected_blocks=len(blocks),
            traversed_nodes=int(counters[0]),
            rank_ops=int(counters[1]),
            results=int(nres),
        )
        return out_rows[:nres], out_dot[:nres], qnorm, stats, trace[: counters[2]]

    def _hits(self, rows, dots, qnorm) -> list[SearchHit]:
        block_of_row = np.searchsorted(self.b_row, rows, side="right") - 1
        cs = self.b_c[block_of_row]
        hits = [
            SearchHit(i, Fraction(p, c + qnorm - p))
            for i, p, c in zip(self.ids[rows].tolist(), dots.tolist(), cs.tolist())
        ]
        hits.sort(key=lambda h: (-h.similarity, h.id))
        return hits

    def search(self, q: Descriptor, eps: "Threshold | str | float") -> tuple[list[SearchHit], QueryStats]:
        eps = Threshold.parse(eps)
        qnorm = squared_norm(q)
        if qnorm == 0:
            raise EmptyDescriptorError("empty query")
        rows, dots, qnorm, stats, _ = self._run(self.candidate_blocks(qnorm, eps), q, eps)
        return self._hits(rows, dots, qnorm), stats


class SitadBlockIndex:
    """View of one block inside a :class:`SitadIndex`."""

    def __init__(self, index: SitadIndex, b: int):
        self.index = index
        self.b = b
        self.c = int(index.b_c[b])
        self.n = int(index.b_n[b])
        self.nc = int(index.b_nc[b])
        self.levels = int(index.b_lev[b])

    def __len__(self) -> int:
        return self.n

    @property
    def ids(self) -> np.ndarray:
        r = self.index.b_row[self.b]
        return self.index.ids[r : r + self.n]

    @property
    def node_offsets(self) -> np.ndarray:
        """``node_offsets[p]``: postings of positions ``1..p`` (length n + 1)."""
        r = self.index.b_row[self.b]
        return self.index.rowstart[r : r + self.n + 1] - self.index.b_ent[self.b]

    @property
    def p_dims(self) -> np.ndarray:
        p = self.index.b_p[self.b]
        return self.index.pdims[p : p + self.index.b_pc[self.b]]

    @property
    def p_ends(self) -> np.ndarray:
        p = self.index.b_p[self.b]
        return self.index.pends[p : p + self.index.b_pc[self.b]]

    def level_words(self, level: int) -> np.ndarray:
        if not 0 <= level < self.levels:
            raise IndexError(level)
        lw = int(self.index.b_lw[self.b])
        w0 = int(self.index.b_bit[self.b]) // 64 + level * lw
        return self.index.words[w0 : w0 + lw]

    def level_bits(self, level: int) -> RankBitVector:
        return RankBitVector(self.level_words(level).copy(), self.nc)

    def level_weights(self, depth: int) -> np.ndarray:
        """``E_depth``; depth 0 is the root weight array."""
        if not 0 <= depth <= self.levels:
            raise IndexError(depth)
        w0 = int(self.index.b_w[self.b]) + depth * self.nc
        return self.index.weights[w0 : w0 + self.nc]

    def node_span(self, a: int) -> int:
        """0-based start of the node beginning at position ``a`` in any level."""
        return int(self.node_offsets[a - 1])


def root_interval(idx: SitadBlockIndex, d: int) -> tuple[int, int] | None:
    """``(s, t)`` run of dimension ``d`` in the root arrays, or None if absent."""
    dims, ends = idx.p_dims, idx.p_ends
    k = int(np.searchsorted(dims, d))
    if k == len(dims) or dims[k] != d:
        return None
    s = (int(ends[k - 1]) if k else 0) + 1
    return s, int(ends[k])


def descend(bv: RankBitVector, s: int, t: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Map a run ``[s, t]`` of a node to its left and right children.

    Positions are node-local. An output run with ``s > t`` is empty.
    """
    r_s, r_t = bv.rank1(s - 1), bv.rank1(t)
    return ((s - 1 - r_s) + 1, t - r_t), (r_s + 1, r_t)


def sitad_block_search(
    idx: SitadBlockIndex, q: Descriptor, eps: "Threshold | str", stats: QueryStats | None = None,
    trace: list | None = None,
) -> list[int]:
    """Exact answers inside one block, ascending id.

    ``trace`` receives ``(depth, s, e, bound)`` per evaluated node, in the
    same order as the reference tree search.
    """
    eps = Threshold.parse(eps)
    cap = 2 * idx.n if trace is not None else 0
    rows, _, _, st, tr = idx.index._run(np.array([idx.b], np.int64), q, eps, trace_cap=cap)
    if stats is not None:
        stats += st
    if trace is not None:
        trace.extend(tuple(int(v) for v in row) for row in tr)
    return sorted(idx.index.ids[rows].tolist())


def sitad_search(index: SitadIndex, q: Descriptor, eps) -> tuple[list[SearchHit], QueryStats]:
    return index.search(q, eps)


GROUP_POSTINGS = 1 << 20


def build_index(db: Database, dim: int | None = None) -> SitadIndex:
    """Build the succinct index for every non-empty descriptor of ``db``.

    Blocks are independent; they are processed in groups of about
    ``GROUP_POSTINGS`` postings to bound the temporary memory.
    """
    if (db.counts == 0).any():
        warnings.warn(f"excluding {int((db.counts == 0).sum())} empty descriptor(s) from the index", stacklevel=2)
    keep = np.flatnonzero(db.counts > 0)
    # rows grouped by norm, ascending external id within a block
    rows = keep[np.lexsort((keep, db.ids[keep], db.norms[keep]))]
    norms = db.norms[rows]
    R = len(rows)
    if R:
        starts = np.concatenate([[0], np.flatnonzero(np.diff(norms)) + 1])
    else:
        starts = np.zeros(0, np.int64)
    B = len(starts)
    b_n = np.diff(np.concatenate([starts, [R]])).astype(np.int64)
    b_c = norms[starts].astype(np.int64)
    b_row = starts.astype(np.int64)
    b_lev = np.array([levels_for(n) for n in b_n], dtype=np.int64)

    counts = db.counts[rows]
    rowstart = np.zeros(R + 1, np.int64)
    np.cumsum(counts, out=rowstart[1:])
    b_ent = rowstart[b_row]
    b_nc = rowstart[b_row + b_n] - b_ent
    b_lw = (b_nc + 63) // 64
    b_bit = np.zeros(B, np.int64)
    b_w = np.zeros(B, np.int64)
    if B:
        np.cumsum((b_lev * b_lw * 64)[:-1], out=b_bit[1:])
        np.cumsum(((b_lev + 1) * b_nc)[:-1], out=b_w[1:])

    wdt = weight_dtype(db.max_weight)
    weights = np.zeros(int(((b_lev + 1) * b_nc).sum()), dtype=wdt)
    bits = np.zeros(int((b_lev * b_lw * 64).sum()), dtype=bool)
    pdims, pends, pcounts = [], [], []
    b0 = 0
    while b0 < B:
        b1 = int(np.searchsorted(b_ent, b_ent[b0] + GROUP_POSTINGS, side="right"))
        b1 = max(b1, b0 + 1)
        d, e, k = _build_group(db, rows, rowstart, b0, b1, b_n, b_row, b_lev, b_ent, b_nc, b_lw, b_bit, b_w,
                            weights, bits)
        pdims.append(d)
        pends.append(e)
        pcounts.append(k)
        b0 = b1
    pdims = np.concatenate(pdims) if pdims else np.zeros(0, np.uint32)
    pends = np.concatenate(pends) if pends else np.zeros(0, np.uint32)
    b_pc = np.concatenate(pcounts).astype(np.int64) if pcounts else np.zeros(0, np.int64)
    b_p = np.zeros(B, np.int64)
    if B:
        np.cumsum(b_pc[:-1], out=b_p[1:])

    return SitadIndex(
        dim=dim if dim is not None else db.dim,
        max_weight=db.max_weight,
        b_c=b_c, b_n=b_n, b_nc=b_nc, b_lev=b_lev, b_row=b_row, b_ent=b_ent,
        b_bit=b_bit, b_lw=b_lw, b_w=b_w, b_p=b_p, b_pc=b_pc,
        ids=db.ids[rows].copy(), rowstart=rowstart, pdims=pdims, pends=pends,
        words=pack_bits(bits), weights=weights,
    )


def _build_group(db, rows, rowstart, b0, b1, b_n, b_row, b_lev, b_ent, b_nc, b_lw, b_bit, b_w, weights, bits):
    """Root runs, level bits and level weights for blocks ``b0 .. b1 - 1``."""
    r0, r1 = int(b_row[b0]), int(b_row[b1 - 1] + b_n[b1 - 1])
    e0 = int(rowstart[r0])
    grows = rows[r0:r1]
    gcounts = db.counts[grows]
    total = int(gcounts.sum())
    local_rs = rowstart[r0 : r1 + 1] - e0
    src = np.repeat(db.indptr[grows] - local_rs[:-1], gcounts) + np.arange(total)
    row_block = np.repeat(np.arange(b1 - b0, dtype=np.int32), b_n[b0:b1])
    blk = np.repeat(row_block, gcounts)
    first_row = (b_row[b0:b1] - r0).astype(np.int32)
    pos = np.repeat((np.arange(r1 - r0, dtype=np.int32) - first_row[row_block] + 1), gcounts)
    dims = db.indices[src]
    w = db.weights[src].astype(weights.dtype)
    del src, row_block

    # root order: (block, dim, position)
    order = np.lexsort((pos, dims, blk))
    pos, w, dims, blk = pos[order], w[order], dims[order], blk[order]
    del order
    ent = b_ent[b0:b1] - e0
    last = np.ones(total, dtype=bool)
    last[:-1] = (dims[1:] != dims[:-1]) | (blk[1:] != blk[:-1])
    ends_at = np.flatnonzero(last)
    pdims = dims[ends_at].astype(np.uint32)
    pends = (ends_at + 1 - ent[blk[ends_at]]).astype(np.uint32)
    pcount = np.bincount(blk[ends_at], minlength=b1 - b0)
    del dims, last, ends_at

    lev = b_lev[b0:b1][blk]
    a = np.ones(total, np.int32)
    e = b_n[b0:b1].astype(np.int32)[blk]
    idx = np.arange(total, dtype=np.int64)
    rel = idx - ent[blk]
    nc = b_nc[b0:b1]
    for level in range(int(b_lev[b0:b1].max()) + 1):
        active = lev >= level
        weights[(b_w[b0:b1] + level * nc)[blk[active]] + rel[active]] = w[active]
        mid = (a + e) // 2
        bit = (a < e) & (pos > mid)
        has_bits = lev > level
        if not has_bits.any():
            break
        bits[(b_bit[b0:b1] + level * b_lw[b0:b1] * 64)[blk[has_bits]] + rel[has_bits]] = bit[has_bits]
        # stable split of every node: left-going postings first
        base = first_row[blk]
        ns = local_rs[base + a - 1]
        ne = local_rs[base + e]
        del base
        c1 = np.zeros(total + 1, np.int64)
        np.cumsum(bit, out=c1[1:])
        ones_before = c1[:-1] - c1[ns]
        dest = np.where(bit, ns + (ne - ns) - (c1[ne] - c1[ns]) + ones_before, idx - ones_before)
        del c1, ns, ne, ones_before
        go_left = (a < e) & ~bit
        a = np.where(bit, mid + 1, a).astype(np.int32)
        e = np.where(go_left, mid, e).astype(np.int32)
        del mid, bit, go_left
        inv = np.empty(total, np.int64)
        inv[dest] = idx
        del dest
        pos, w, a, e = pos[inv], w[inv], a[inv], e[inv]
        del inv
    return pdims, pends, pcount


def build_block_index(block: Block, db: Database) -> SitadBlockIndex:
    """Index a single block on its own."""
    if len(block) == 0:
        raise ValueError("cannot index an empty block")
    index = build_index(db.take(block.rows), dim=db.dim)
    return index.block(block.c)


def blockset_of(index: SitadIndex) -> BlockSet:
    return BlockSet([Block(b.c, np.arange(b.n), b.ids) for b in index.blocks()])
