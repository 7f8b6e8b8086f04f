"""Work and answer size against the threshold on a synthetic database.

Builds the three engines over 100,000 generated descriptors and times them at
rising thresholds. Node and rank counts of SITAd fall with the answer size,
while the exhaustive scan does the same work at every threshold.
"""

import sys
import time

from sitad import build_index
from sitad.bench import run_bench
from sitad.synth import generate, sample_queries

n = int(sys.argv[1]) if len(sys.argv) > 1 else 100_000

t0 = time.perf_counter()
db = generate(n, 2000, 10, 16, seed=7, dup_fraction=0.2, skew=1.0)
print(f"generated {len(db)} descriptors, {db.nnz} entries in {time.perf_counter() - t0:.1f} s")

t0 = time.perf_counter()
index = build_index(db)
print(f"index built in {time.perf_counter() - t0:.2f} s over {index.nblocks} blocks")
for name, size in index.sections().items():
    print(f"  {name:<16} {size / 2**20:8.2f} MB")

qs = sample_queries(db, 100, seed=11)
queries = [qs[r] for r in range(len(qs))]
report = run_bench(db, queries, ["0.8", "0.9", "0.95", "0.98"], index=index, reps=2, verify=True)
print()
print(report.table())
