"""Binary index file.

Little-endian throughout::

    "SITD"  u32 version
    header  u64 D, M, N, block count, weight width in bytes
    dir     per block: u64 c, |B^c|, N^c, section offset
    section per block:
            i64 ids[n]
            u64 node_offsets[n + 1]
            u64 k, then k pairs (dimension, run end)
            u64 level count L
            L x u64 words[ceil(N^c / 64)]
            (L + 1) x weight[N^c]
    u32     CRC-32 of everything above

Rank and range-max samples are not stored; they are rebuilt on load.
"""

from __future__ import annotations

import io
import struct
import zlib
from typing import BinaryIO

import numpy as np

from .index import SitadIndex, levels_for, weight_dtype

MAGIC = b"SITD"
VERSION = 1
_HEAD = struct.Struct("<4sI5Q")
_DIR = struct.Struct("<4Q")


class IndexFormatError(ValueError):
    """The file is not a readable index (bad magic, version, truncation, checksum)."""


def _u64(a) -> bytes:
    return np.asarray(a, dtype="<u8").tobytes()


def dumps(index: SitadIndex) -> bytes:
    wdt = np.dtype(weight_dtype(index.max_weight)).newbyteorder("<")
    sections = []
    for blk in index.blocks():
        parts = [
            np.asarray(blk.ids, dtype="<i8").tobytes(),
            _u64(blk.node_offsets),
            _u64([len(blk.p_dims)]),
            _u64(np.column_stack([blk.p_dims, blk.p_ends]).ravel()),
            _u64([blk.levels]),
        ]
        parts += [_u64(blk.level_words(level)) for level in range(blk.levels)]
        parts += [blk.level_weights(depth).astype(wdt).tobytes() for depth in range(blk.levels + 1)]
        sections.append(b"".join(parts))
    nblocks = index.nblocks
    out = io.BytesIO()
    out.write(_HEAD.pack(MAGIC, VERSION, index.dim, index.max_weight, index.size, nblocks, wdt.itemsize))
    offset = _HEAD.size + _DIR.size * nblocks
    for b, sec in enumerate(sections):
        out.write(_DIR.pack(int(index.b_c[b]), int(index.b_n[b]), int(index.b_nc[b]), offset))
        offset += len(sec)
    for sec in sections:
        out.write(sec)
    body = out.getvalue()
    return body + struct.pack("<I", zlib.crc32(body))


def save_index(index: SitadIndex, sink: "str | BinaryIO") -> int:
    data = dumps(index)
    if isinstance(sink, str):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)
    return len(data)


class _Reader:
    def __init__(self, buf: bytes, pos: int):
        self.buf = buf
        self.pos = pos

    def take(self, dtype, count: int) -> np.ndarray:
        dtype = np.dtype(dtype)
        end = self.pos + dtype.itemsize * count
        if end > len(self.buf):
            raise IndexFormatError("truncated index section")
        arr = np.frombuffer(self.buf, dtype=dtype, count=count, offset=self.pos)
        self.pos = end
        return arr

    def u64(self) -> int:
        return int(self.take("<u8", 1)[0])


def loads(data: bytes) -> SitadIndex:
    if len(data) < _HEAD.size + 4:
        raise IndexFormatError("file too short for an index header")
    magic, version, dim, max_weight, n, nblocks, width = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise IndexFormatError("checksum mismatch")
    wdt = np.dtype(weight_dtype(max_weight)).newbyteorder("<")
    if wdt.itemsize != width:
        raise IndexFormatError("weight width does not match the header's max weight")
    if _HEAD.size + _DIR.size * nblocks > len(body):
        raise IndexFormatError("truncated block directory")

    b_c, b_n, b_nc, ids, offsets, pdims, pends, words, weights, levs = ([] for _ in range(10))
    entries = 0
    for b in range(nblocks):
        c, size, nc, sec = _DIR.unpack_from(body, _HEAD.size + _DIR.size * b)
        r = _Reader(body, sec)
        ids.append(r.take("<i8", size))
        offsets.append(r.take("<u8", size + 1).astype(np.int64) + entries)
        k = r.u64()
        pairs = r.take("<u8", 2 * k).astype(np.int64).reshape(k, 2)
        pdims.append(pairs[:, 0])
        pends.append(pairs[:, 1])
        levels = r.u64()
        if levels != levels_for(size):
            raise IndexFormatError(f"block {c}: level count {levels} does not match size {size}")
        lw = (nc + 63) // 64
        words += [r.take("<u8", lw) for _ in range(levels)]
        weights += [r.take(wdt, nc) for _ in range(levels + 1)]
        b_c.append(c)
        b_n.append(size)
        b_nc.append(nc)
        levs.append(levels)
        entries += nc
    if sum(b_n) != n:
        raise IndexFormatError("block sizes do not add up to the header count")

    b_c = np.array(b_c, dtype=np.int64)
    b_n = np.array(b_n, dtype=np.int64)
    b_nc = np.array(b_nc, dtype=np.int64)
    b_lev = np.array(levs, dtype=np.int64)
    b_lw = (b_nc + 63) // 64
    b_row = np.zeros(nblocks, np.int64)
    b_bit = np.zeros(nblocks, np.int64)
    b_w = np.zeros(nblocks, np.int64)
    b_p = np.zeros(nblocks, np.int64)
    b_pc = np.array([len(p) for p in pdims], dtype=np.int64)
    if nblocks:
        np.cumsum(b_n[:-1], out=b_row[1:])
        np.cumsum((b_lev * b_lw * 64)[:-1], out=b_bit[1:])
        np.cumsum(((b_lev + 1) * b_nc)[:-1], out=b_w[1:])
        np.cumsum(b_pc[:-1], out=b_p[1:])
    rowstart = np.zeros(n + 1, np.int64)
    for b, off in enumerate(offsets):
        rowstart[b_row[b] : b_row[b] + b_n[b] + 1] = off
    b_ent = rowstart[b_row] if nblocks else np.zeros(0, np.int64)

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype)

    return SitadIndex(
        dim=dim, max_weight=max_weight,
        b_c=b_c, b_n=b_n, b_nc=b_nc, b_lev=b_lev, b_row=b_row, b_ent=b_ent,
        b_bit=b_bit, b_lw=b_lw, b_w=b_w, b_p=b_p, b_pc=b_pc,
        ids=cat(ids, np.int64), rowstart=rowstart,
        pdims=cat(pdims, np.uint32), pends=cat(pends, np.uint32),
        words=np.concatenate(words + [np.zeros(1, "<u8")]).astype(np.uint64),
        weights=cat(weights, weight_dtype(max_weight)),
    )


def load_index(source: "str | BinaryIO") -> SitadIndex:
    if isinstance(source, str):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    return loads(data)
