"""Acceptance suite: the ten release criteria, each reported as one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (or ``python
tests/test_acceptance.py``); the summary block at the end of the pytest output
lists every criterion.
"""

import random
import time
from fractions import Fraction

import numpy as np
import pytest
from conftest import random_descriptor

from sitad import (
    Database,
    Descriptor,
    IndexFormatError,
    RankBitVector,
    SparseTableRmq,
    Threshold,
    build_index,
    build_reference_tree,
    inv_build,
    inv_search,
    ova_search,
    partition,
    reference_search,
    sitad_block_search,
    sitad_search,
)
from sitad.baselines import ova_search_records
from sitad.bench import run_bench
from sitad.partition import norm_window
from sitad.rmq import BlockedRmq
from sitad.serialize import dumps, loads
from sitad.synth import generate, sample_queries

EPS = ["0.3", "0.5", "0.9", "0.95", "0.98", "1.0"]
BLOCK_SIZES = [1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 32, 33, 63, 64, 65, 127, 128, 129]
BENCH_EPS = ["0.9", "0.95", "0.98"]


def jaccard(x: Descriptor, q: Descriptor) -> Fraction:
    xd = dict(x.entries)
    p = sum(xd.get(d, 0) * f for d, f in q.entries)
    return Fraction(p, sum(f * f for _, f in x.entries) + sum(f * f for _, f in q.entries) - p)


def instance(rng: random.Random, k: int):
    """One random database with a block of a prescribed size and a few queries."""
    dim, m = rng.randint(8, 64), rng.randint(1, 10)
    size = BLOCK_SIZES[k % len(BLOCK_SIZES)]
    n = rng.randint(max(1, size), 200)
    # the prescribed block: one weight multiset placed on varying dimensions
    base = random_descriptor(rng, dim, m, max_entries=6)
    ws = list(base.weights)
    descs = []
    for _ in range(size):
        rng.shuffle(ws)
        descs.append(Descriptor.from_pairs(zip(rng.sample(range(1, dim + 1), len(ws)), ws)))
    while len(descs) < n:
        if rng.random() < 0.2:
            descs.append(rng.choice(descs))
        else:
            descs.append(random_descriptor(rng, dim, m, max_entries=rng.randint(1, 10)))
    rng.shuffle(descs)
    recs = list(zip(rng.sample(range(1, 5 * n + 1), n), descs))
    queries = [rng.choice(descs) for _ in range(2)] + [random_descriptor(rng, dim, m, max_entries=8)]
    return recs, queries


def run_instances(count: int, seed: int = 2024):
    """Compare all engines on ``count`` instances.

    Returns the number of queries, the number of traced nodes, and the
    answer mismatches and bound mismatches found (as messages).
    """
    rng = random.Random(seed)
    checked_nodes = comparisons = 0
    answer_bad, bound_bad = [], []
    for k in range(count):
        recs, queries = instance(rng, k)
        db = Database.from_records(recs)
        index = build_index(db)
        inv = inv_build(db)
        blocks = partition(db)
        trees = {b.c: build_reference_tree(b, db) for b in blocks}
        by_id = dict(recs)
        for q in queries:
            eps = Threshold.parse(rng.choice(EPS))
            truth = ova_search_records(recs, q, eps)
            hits, _ = sitad_search(index, q, eps)
            if hits != truth or any(h.similarity != jaccard(by_id[h.id], q) for h in hits):
                answer_bad.append(f"sitad, instance {k}")
            if ova_search(db, q, eps) != truth:
                answer_bad.append(f"ova, instance {k}")
            if inv_search(inv, q, eps) != truth:
                answer_bad.append(f"inv, instance {k}")
            ref_ids = []
            for c in blocks.norm_range(*norm_window(sum(f * f for _, f in q.entries), eps)):
                ref_trace, trace = [], []
                found, _ = reference_search(trees[c], q, eps, ref_trace)
                sitad_block_search(index.block(c), q, eps, trace=trace)
                if trace != ref_trace:
                    bound_bad.append(f"block {c}, instance {k}")
                checked_nodes += len(trace)
                ref_ids += found
            if sorted(ref_ids) != sorted(h.id for h in truth):
                answer_bad.append(f"reference, instance {k}")
            comparisons += 1
    return comparisons, checked_nodes, answer_bad, bound_bad


def test_01_oracle_equivalence_and_02_bound_equivalence(criterion):
    t0 = time.perf_counter()
    comparisons, nodes, answer_bad, bound_bad = run_instances(1000)
    elapsed = time.perf_counter() - t0
    with criterion(1, "oracle equivalence (sitad, reference, inv, ova)") as c1:
        c1.detail = f"1000 instances, {comparisons} queries, {elapsed:.1f} s"
        assert not answer_bad, f"{len(answer_bad)} mismatches, first: {answer_bad[0]}"
        assert elapsed < 60, f"took {elapsed:.1f} s"
    with criterion(2, "RMQ bound equals summary bound at every node") as c2:
        c2.detail = f"{nodes} traversed nodes compared"
        assert not bound_bad, f"{len(bound_bad)} mismatches, first: {bound_bad[0]}"
        assert nodes > 0


def test_03_worked_example(criterion, worked_block):
    with criterion(3, "worked example bound = 18") as c:
        q = Descriptor(((1, 3), (3, 1), (4, 2)))
        index = build_index(worked_block)
        trace = []
        sitad_block_search(index.block(10), q, "0.5", trace=trace)
        depth, s, e, bound = trace[0]
        rmq = BlockedRmq(np.array([3, 1, 0, 0, 0, 0, 1, 1, 3, 3, 2, 3]))
        direct = rmq.max_value(1, 2) * 3 + rmq.max_value(7, 9) * 1 + rmq.max_value(10, 12) * 2
        c.detail = f"kernel root bound {bound}, direct {direct}"
        assert (depth, s, e) == (0, 1, 8)
        assert bound == direct == 18


def test_04_window_soundness(criterion):
    with criterion(4, "candidate norm window contains every answer") as c:
        rng = random.Random(4)
        answers = 0
        for _ in range(1000):
            dim, m = rng.randint(2, 16), rng.randint(1, 10)
            recs = [(i, random_descriptor(rng, dim, m, max_entries=6)) for i in range(rng.randint(1, 40))]
            q = rng.choice(recs)[1] if rng.random() < 0.5 else random_descriptor(rng, dim, m, max_entries=6)
            eps = Threshold.parse(rng.choice(EPS + ["0.1", "0.7"]))
            qn = sum(f * f for _, f in q.entries)
            lo, hi = norm_window(qn, eps)
            for _, x in recs:
                if jaccard(x, q) >= eps.value:
                    answers += 1
                    assert lo <= sum(f * f for _, f in x.entries) <= hi
        # binary vectors with c = eps * |q|^2 exactly: J = eps
        boundary = 0
        for k in range(1, 12):
            q = Descriptor(tuple((d, 1) for d in range(1, k + 1)))
            for size in range(1, k + 1):
                x = Descriptor(tuple((d, 1) for d in range(1, size + 1)))
                eps = Threshold.parse(Fraction(size, k))
                assert eps.value * k == size
                lo, hi = norm_window(k, eps)
                assert lo <= size <= hi
                assert [h.id for h in sitad_search(build_index(Database.from_records([(1, x)])), q, eps)[0]] == [1]
                boundary += 1
        # parallel vectors sit exactly on the window's quadratic boundary
        for s in range(1, 6):
            for t in range(1, 6):
                base = [(1, 1), (3, 2)]
                x = Descriptor(tuple((d, s * f) for d, f in base))
                q = Descriptor(tuple((d, t * f) for d, f in base))
                eps = Threshold.parse(jaccard(x, q))
                lo, hi = norm_window(5 * t * t, eps)
                assert lo <= 5 * s * s <= hi
                assert [h.id for h in sitad_search(build_index(Database.from_records([(7, x)])), q, eps)[0]] == [7]
                boundary += 1
        c.detail = f"{answers} answers checked, {boundary} boundary cases"


def test_05_rank_dictionary(criterion):
    with criterion(5, "rank dictionary matches prefix counts") as c:
        rng = np.random.default_rng(5)
        checked = 0
        for k in range(100):
            n = int(rng.integers(1, 1 << 16)) if k % 10 else 1 << 16
            density = [0.01, 0.5, 0.99][k % 3]
            bits = rng.random(n) < density
            bv = RankBitVector.from_bits(bits)
            prefix = np.concatenate([[0], np.cumsum(bits)])
            got = bv.rank1_array(np.arange(n + 1))
            assert np.array_equal(got, prefix)
            assert np.array_equal(np.arange(n + 1) - got, np.arange(n + 1) - prefix)
            for i in rng.integers(0, n + 1, 50):
                assert bv.rank0(int(i)) == int(i) - prefix[i] and bv.rank1(int(i)) == prefix[i]
            checked += n + 1
        full = RankBitVector.from_bits(rng.random(1 << 16) < 0.5)
        ratio = full.aux_bits / full.data_bits
        c.detail = f"{checked} positions, aux/data = {ratio:.3f} at n = 2^16"
        assert ratio <= 1


def test_06_rmq(criterion):
    with criterion(6, "range max matches linear scan") as c:
        rng = np.random.default_rng(6)
        ranges = 0
        for k in range(500):
            n = int(rng.integers(1, 129))
            values = rng.integers(0, 1 + [3, 50, 65536][k % 3], n)
            u = SparseTableRmq(values)
            b = BlockedRmq(values.astype(np.uint32))
            vals = values.tolist()
            for s in range(1, n + 1):
                best, arg = -1, 0
                for t in range(s, n + 1):
                    if vals[t - 1] > best:
                        best, arg = vals[t - 1], t
                    assert u.query(s, t) == (arg, best)
                    assert b.max_value(s, t) == best
                    ranges += 1
        c.detail = f"{ranges} ranges over 500 arrays"


@pytest.fixture(scope="module")
def bench_db():
    db = generate(100_000, 2000, 10, 16, seed=7, dup_fraction=0.2, skew=1.0)
    index = build_index(db)
    qs = sample_queries(db, 100, seed=11)
    return db, index, [qs[r] for r in range(len(qs))]


def test_07_output_sensitivity(criterion, bench_db):
    with criterion(7, "#TN, #Ranks and |I_N| shrink as eps rises (N = 1e5)") as c:
        db, index, queries = bench_db
        per_eps = {e: [index.search(q, e)[1] for q in queries] for e in BENCH_EPS}
        mean = {e: (np.mean([s.traversed_nodes for s in v]), np.mean([s.rank_ops for s in v])) for e, v in per_eps.items()}
        c.detail = "  ".join(f"eps {e}: TN {mean[e][0]:.0f} ranks {mean[e][1]:.0f}" for e in BENCH_EPS)
        for lo, hi in zip(BENCH_EPS, BENCH_EPS[1:]):
            assert mean[hi][0] <= mean[lo][0] and mean[hi][1] <= mean[lo][1]
            for a, b in zip(per_eps[lo], per_eps[hi]):
                assert b.results <= a.results


def test_08_sitad_faster_than_ova(criterion, bench_db):
    with criterion(8, "SITAd faster than OVA at eps = 0.95 (N = 1e5)") as c:
        db, index, queries = bench_db
        report = run_bench(db, queries, ["0.95"], engines=["ova", "sitad"], reps=3, index=index, verify=True)
        ova, sitad = report.row("ova", "0.95"), report.row("sitad", "0.95")
        c.detail = f"sitad {sitad.mean_ms:.2f} ms, ova {ova.mean_ms:.2f} ms"
        assert sitad.mean_ms < ova.mean_ms


@pytest.mark.slow
def test_09_build_linearity(criterion):
    with criterion(9, "build time linear in N (R^2 >= 0.95)") as c:
        sizes = [10_000, 100_000, 1_000_000]
        times = []
        build_index(generate(2000, 2000, 10, 16, seed=1, skew=1.0))  # compile outside the timing
        for n in sizes:
            db = generate(n, 2000, 10, 16, seed=n, dup_fraction=0.2, skew=1.0)
            best = float("inf")
            for _ in range(3 if n < 1_000_000 else 1):
                t0 = time.perf_counter()
                build_index(db)
                best = min(best, time.perf_counter() - t0)
            times.append(best)
            del db
        x, y = np.array(sizes, float), np.array(times)
        slope, icept = np.polyfit(x, y, 1)
        r2 = 1 - ((y - (slope * x + icept)) ** 2).sum() / ((y - y.mean()) ** 2).sum()
        c.detail = "  ".join(f"{n:.0e}: {t:.2f} s" for n, t in zip(sizes, times)) + f"  R^2 = {r2:.4f}"
        assert r2 >= 0.95


def test_10_serialization(criterion, tmp_path):
    with criterion(10, "save/load round trip and corrupt header rejection") as c:
        from sitad.cli import main

        db = generate(20_000, 500, 8, 10, seed=10, skew=0.8)
        index = build_index(db)
        again = loads(dumps(index))
        qs = sample_queries(db, 100, seed=3)
        rng = random.Random(10)
        for r in range(len(qs)):
            eps = rng.choice(EPS)
            assert index.search(qs[r], eps) == again.search(qs[r], eps)
        data = bytearray(dumps(index))
        data[0] ^= 0x20
        with pytest.raises(IndexFormatError):
            loads(bytes(data))
        bad = tmp_path / "bad.sitd"
        bad.write_bytes(bytes(data))
        qfile = tmp_path / "q.txt"
        qfile.write_text("1\t1:1\n")
        assert main(["query", "-x", str(bad), "-q", str(qfile), "-e", "0.5"]) == 2
        c.detail = "100 queries identical, corrupt magic rejected (exit 2)"


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
