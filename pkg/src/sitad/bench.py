"""Benchmark harness: time every engine over one query set and several thresholds.

Each engine is built once. Its in-memory size is reported both as the sum of
its array sizes and as the traced allocation growth while it was built. Every
``(engine, eps)`` pair runs one untimed warm-up pass and then ``reps`` timed
passes over all queries. The counters come from the last pass.
"""

from __future__ import annotations

import csv
import statistics
import time
import tracemalloc
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Callable, Sequence, TextIO

from .baselines import inv_build, inv_search, ova_search
from .descriptor import Database, Descriptor, Threshold
from .index import SearchHit, SitadIndex, build_index
from .stats import QueryStats

ENGINES = ("ova", "inv", "sitad")


def format_similarity(value: Fraction) -> str:
    """Six decimals, rounded half up from the exact fraction."""
    scaled = (value * 10**6 * 2 + 1) // 2
    whole, frac = divmod(int(scaled), 10**6)
    return f"{whole}.{frac:06d}"


@dataclass
class Engine:
    name: str
    search: Callable[[Descriptor, Threshold], tuple[list[SearchHit], QueryStats | None]]
    nbytes: int
    traced_bytes: int
    build_seconds: float


def make_engine(name: str, db: Database, index: SitadIndex | None = None) -> Engine:
    """Build ``name`` over ``db``; ``index`` short-circuits the SITAd build."""
    if name not in ENGINES:
        raise ValueError(f"unknown engine {name!r}; choose from {', '.join(ENGINES)}")
    tracemalloc.start()
    t0 = time.perf_counter()
    base = tracemalloc.get_traced_memory()[0]
    if name == "ova":
        search = lambda q, eps: (ova_search(db, q, eps), None)  # noqa: E731
        nbytes = db.nbytes()
    elif name == "inv":
        inv = inv_build(db)
        search = lambda q, eps: (inv_search(inv, q, eps), None)  # noqa: E731
        nbytes = inv.nbytes()
    else:
        sitad = index if index is not None else build_index(db)
        search = sitad.search
        nbytes = sitad.nbytes()
    elapsed = time.perf_counter() - t0
    traced = tracemalloc.get_traced_memory()[0] - base
    tracemalloc.stop()
    return Engine(name, search, nbytes, max(traced, 0), elapsed)


@dataclass
class BenchRow:
    engine: str
    eps: str
    n: int
    queries: int
    reps: int
    mean_ms: float
    std_ms: float
    index_bytes: int
    traced_bytes: int
    mean_blocks: float | None
    mean_nodes: float | None
    mean_ranks: float | None
    mean_results: float


@dataclass
class BenchReport:
    rows: list[BenchRow]
    # per (engine, eps): the QueryStats of every query from the last pass
    per_query: dict[tuple[str, str], list[QueryStats]]

    def row(self, engine: str, eps) -> BenchRow:
        key = str(Threshold.parse(eps).value)
        for r in self.rows:
            if r.engine == engine and str(Threshold.parse(r.eps).value) == key:
                return r
        raise KeyError((engine, eps))

    def write_csv(self, sink: TextIO) -> None:
        names = [f.name for f in fields(BenchRow)]
        out = csv.DictWriter(sink, fieldnames=names, lineterminator="\n")
        out.writeheader()
        for r in self.rows:
            out.writerow({k: ("" if v is None else v) for k, v in asdict(r).items()})

    def table(self) -> str:
        head = f"{'engine':<6} {'eps':>5} {'time ms':>16} {'index MB':>9} {'#B^c':>7} {'#TN':>10} {'#Ranks':>11} {'|I_N|':>8}"
        lines = [head, "-" * len(head)]

        def num(v, width, prec):
            return f"{'-':>{width}}" if v is None else f"{v:>{width}.{prec}f}"

        for r in self.rows:
            lines.append(
                f"{r.engine:<6} {r.eps:>5} {r.mean_ms:>8.3f} +- {r.std_ms:<5.3f}"
                f"{r.index_bytes / 2**20:>9.2f} {num(r.mean_blocks, 7, 1)} {num(r.mean_nodes, 10, 1)}"
                f" {num(r.mean_ranks, 11, 1)} {r.mean_results:>8.2f}"
            )
        return "\n".join(lines)


class VerificationError(AssertionError):
    """Two engines disagreed on a query's answer."""


def run_bench(
    db: Database,
    queries: Sequence[Descriptor],
    eps_list: Sequence,
    engines: Sequence[str] = ENGINES,
    reps: int = 3,
    index: SitadIndex | None = None,
    verify: bool = False,
) -> BenchReport:
    """Time ``engines`` on ``queries`` at every threshold in ``eps_list``.

    With ``verify`` every engine's answers are compared with the first
    engine's and a :class:`VerificationError` is raised on any difference.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    thresholds = [Threshold.parse(e) for e in eps_list]
    built = [make_engine(name, db, index) for name in engines]
    rows, per_query = [], {}
    for eps in thresholds:
        label = str(eps)
        reference = None
        for eng in built:
            for q in queries:  # warm-up, also compiles the kernels
                eng.search(q, eps)
            times, stats, answers = [], [], []
            for _ in range(reps):
                stats, answers = [], []
                for q in queries:
                    t0 = time.perf_counter()
                    hits, st = eng.search(q, eps)
                    times.append(time.perf_counter() - t0)
                    stats.append(st if st is not None else QueryStats(results=len(hits)))
                    answers.append(hits)
            if verify:
                if reference is None:
                    reference = answers
                elif answers != reference:
                    bad = next(i for i, (a, b) in enumerate(zip(answers, reference)) if a != b)
                    raise VerificationError(f"{eng.name} differs from {built[0].name} on query {bad} at eps={label}")
            per_query[(eng.name, label)] = stats
            counted = eng.name == "sitad"
            k = max(len(stats), 1)

            def mean(attr):
                return sum(getattr(s, attr) for s in stats) / k

            ms = [t * 1e3 for t in times] or [0.0]
            rows.append(BenchRow(
                engine=eng.name, eps=label, n=len(db), queries=len(queries), reps=reps,
                mean_ms=statistics.fmean(ms), std_ms=statistics.pstdev(ms),
                index_bytes=eng.nbytes, traced_bytes=eng.traced_bytes,
                mean_blocks=mean("selected_blocks") if counted else None,
                mean_nodes=mean("traversed_nodes") if counted else None,
                mean_ranks=mean("rank_ops") if counted else None,
                mean_results=mean("results"),
            ))
    return BenchReport(rows, per_query)
