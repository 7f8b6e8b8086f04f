"""From the explicit interval tree to the rank/RMQ encoding of one block.

Eight descriptors of squared norm 10 are laid out so that the root inverted
arrays hold dimension 1 at [1, 2], dimension 3 at [7, 9] and dimension 4 at
[10, 12]. The query (1:3, 3:1, 4:2) then has root bound 18.
"""

from sitad import (
    Database,
    Descriptor,
    Threshold,
    build_index,
    build_reference_tree,
    descend,
    node_bound,
    partition,
    reference_search,
    root_interval,
    sitad_block_search,
)
from sitad.rmq import BlockedRmq

rows = [
    [(3, 1), (5, 3)],
    [(1, 3), (6, 1)],
    [(1, 1), (2, 3)],
    [(2, 1), (4, 3)],
    [(2, 1), (4, 2), (7, 2), (8, 1)],
    [(3, 1), (9, 3)],
    [(4, 3), (10, 1)],
    [(2, 1), (3, 3)],
]
db = Database.from_records([(i + 1, Descriptor(tuple(r))) for i, r in enumerate(rows)])
q = Descriptor(((1, 3), (3, 1), (4, 2)))

block = partition(db)[10]
tree = build_reference_tree(block, db)

# the explicit tree: every node keeps y_v = elementwise max of its members
for v in tree.nodes():
    pad = "  " * len(v.path)
    print(f"{pad}[{v.s},{v.e}]  y.q = {node_bound(v.y, q)}")

# the succinct block keeps only bits, weights and root run ends
blk = build_index(db).block(10)
E = blk.level_weights(0)
print("\nroot weights E:", E.tolist())
print("root bits     :", "".join(map(str, blk.level_bits(0).to_bits().astype(int))))

rmq = BlockedRmq(E)
total = 0
for d, f in q.entries:
    s, t = root_interval(blk, d)
    m = rmq.max_value(s, t)
    total += m * f
    print(f"dim {d}: run [{s},{t}] max {m} x {f}")
print("root bound =", total)

# a run moves to the children with two rank queries
s, t = root_interval(blk, 3)
(ls, lt), (rs, rt) = descend(blk.level_bits(0), s, t)
print(f"\ndim 3 run [{s},{t}] -> left [{ls},{lt}], right [{rs},{rt}]")

# both searches evaluate the same nodes with the same bounds
eps = Threshold.parse("0.5")
ref_trace, trace = [], []
print("reference:", reference_search(tree, q, eps, ref_trace)[0])
print("succinct :", sitad_block_search(blk, q, eps, trace=trace))
print("same trace:", trace == ref_trace, f"({len(trace)} nodes)")
