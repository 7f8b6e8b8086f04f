"""``sitad`` command line: gen, build, query, bench.

Exit status is 0 on success, 1 for usage errors (bad flags, thresholds or
engine choices) and 2 for data errors (unreadable or malformed files).
"""

from __future__ import annotations

import argparse
import sys
import time
import warnings

from . import bench as bench_mod
from .baselines import inv_build, inv_search, ova_search
from .descriptor import Database, DescriptorError, Threshold, read_database, write_database
from .index import build_index
from .serialize import MAGIC, IndexFormatError, load_index, save_index
from .stats import QueryStats
from .synth import generate, sample_queries


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _threshold(text: str) -> Threshold:
    try:
        return Threshold.parse(text)
    except ValueError as exc:
        raise UsageError(f"bad threshold {text!r}: {exc}") from None


def _open_out(path: str | None):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline=""), True
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from None


def _read_db(path: str) -> Database:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return read_database(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except DescriptorError as exc:
        raise DataError(f"{path}: {exc}") from None
    except UnicodeDecodeError:
        raise DataError(f"{path}: neither a text database nor a SITAd index") from None


def _is_index(path: str) -> bool:
    try:
        with open(path, "rb") as fh:
            return fh.read(len(MAGIC)) == MAGIC
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _load_index(path: str):
    try:
        return load_index(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except IndexFormatError as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_gen(args) -> None:
    if args.n < 0 or args.d < 1 or args.m < 1 or args.density <= 0:
        raise UsageError("-n must be >= 0 and -d, -m, --density positive")
    if args.m > 65536:
        raise UsageError("-m must not exceed 65536")
    try:
        db = generate(args.n, args.d, args.m, args.density, seed=args.seed,
                      dup_fraction=args.dup_fraction, skew=args.skew)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out, close = _open_out(args.o)
    header = (f"synthetic descriptors n={args.n} d={args.d} m={args.m} density={args.density} "
              f"seed={args.seed} dup_fraction={args.dup_fraction} skew={args.skew}")
    try:
        write_database(db, out, header=header)
    finally:
        if close:
            out.close()


def cmd_build(args) -> None:
    db = _read_db(args.i)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        index = build_index(db)
    elapsed = time.perf_counter() - t0
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    try:
        size = save_index(index, args.o)
    except OSError as exc:
        raise DataError(f"cannot write {args.o}: {exc.strerror}") from None
    print(f"descriptors {index.size}  blocks {index.nblocks}  build {elapsed:.3f} s  file {size} bytes")
    for name, nbytes in index.sections().items():
        print(f"  {name:<16} {nbytes:>12} bytes")


def _search_fn(engine: str, source: str):
    if engine == "sitad":
        index = _load_index(source) if _is_index(source) else build_index(_read_db(source))
        return index.search
    if _is_index(source):
        raise UsageError(f"engine {engine} needs a text database, {source} is a SITAd index")
    db = _read_db(source)
    if engine == "ova":
        return lambda q, eps: (ova_search(db, q, eps), None)
    inv = inv_build(db)
    return lambda q, eps: (inv_search(inv, q, eps), None)


def cmd_query(args) -> None:
    eps = _threshold(args.e)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        search = _search_fn(args.engine, args.x)
    queries = _read_db(args.q)
    order = sorted(range(len(queries)), key=lambda r: int(queries.ids[r]))
    out, close = _open_out(args.o)
    try:
        out.write("query_id,match_id,similarity\n")
        for r in order:
            qid = int(queries.ids[r])
            q = queries[r]
            if not len(q):
                print(f"warning: query {qid} is empty and matches nothing", file=sys.stderr)
                continue
            hits, st = search(q, eps)
            for h in hits:
                out.write(f"{qid},{h.id},{bench_mod.format_similarity(h.similarity)}\n")
            if args.stats:
                st = st if st is not None else QueryStats(results=len(hits))
                print(f"query {qid} blocks={st.selected_blocks} nodes={st.traversed_nodes} "
                      f"ranks={st.rank_ops} results={st.results}", file=sys.stderr)
    finally:
        if close:
            out.close()


def _split(text: str) -> list[str]:
    return [t for t in text.replace(",", " ").split() if t]


def cmd_bench(args) -> None:
    eps_list = [_threshold(t) for t in _split(args.e)]
    engines = _split(args.engines)
    for e in engines:
        if e not in bench_mod.ENGINES:
            raise UsageError(f"unknown engine {e!r}")
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    db = _read_db(args.i)
    queries = _read_db(args.q) if args.q else sample_queries(db.nonempty(), args.sample, seed=args.seed)
    qs = [queries[r] for r in range(len(queries)) if queries.counts[r] > 0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            report = bench_mod.run_bench(db, qs, eps_list, engines, reps=args.reps, verify=args.verify)
        except bench_mod.VerificationError as exc:
            raise DataError(str(exc)) from None
    print(f"N={len(db)} queries={len(qs)} reps={args.reps}")
    print(report.table())
    if args.csv:
        out, close = _open_out(args.csv)
        try:
            report.write_csv(out)
        finally:
            if close:
                out.close()


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sitad", description="Threshold generalized-Jaccard search over sparse integer descriptors.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a synthetic descriptor database")
    g.add_argument("-n", type=int, required=True, help="number of descriptors")
    g.add_argument("-d", type=int, required=True, help="dimension")
    g.add_argument("-m", type=int, required=True, help="maximum weight")
    g.add_argument("--density", type=float, required=True, help="mean entries per descriptor")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dup-fraction", type=float, default=0.2, help="share of near-duplicate copies")
    g.add_argument("--skew", type=float, default=0.0, help="power-law exponent of index popularity")
    g.add_argument("-o", default="-", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", help="build and save a SITAd index")
    b.add_argument("-i", required=True, help="text database")
    b.add_argument("-o", required=True, help="index file")
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer a query file at one threshold")
    q.add_argument("-x", required=True, help="SITAd index file or text database")
    q.add_argument("-q", required=True, help="query file in the database format")
    q.add_argument("-e", required=True, help="threshold in (0, 1], e.g. 0.95")
    q.add_argument("--engine", choices=bench_mod.ENGINES, default="sitad")
    q.add_argument("-o", default="-", help="result CSV (default stdout)")
    q.add_argument("--stats", action="store_true", help="per-query counters on stderr")
    q.set_defaults(func=cmd_query)

    r = sub.add_parser("bench", help="time engines over thresholds")
    r.add_argument("-i", required=True, help="text database")
    r.add_argument("-q", help="query file (default: sample from the database)")
    r.add_argument("-e", default="0.9,0.95,0.98", help="comma separated thresholds")
    r.add_argument("--engines", default="ova,inv,sitad", help="comma separated engines")
    r.add_argument("--reps", type=int, default=3)
    r.add_argument("--sample", type=int, default=100, help="queries sampled when -q is absent")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--csv", help="write the report as CSV")
    r.add_argument("--verify", action="store_true", help="fail if engines disagree")
    r.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"sitad: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"sitad: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
