"""Intervals-splitting tree with explicit summary descriptors.

This is the straightforward, memory-hungry form of the block tree: every node
stores ``y_v``, the elementwise maximum of the descriptors in its interval.
``y_v . q`` upper-bounds ``x . q`` for every member ``x``, so a node whose
bound falls below the block threshold can be skipped with its whole subtree.

It is kept as a readable oracle for the succinct index, which must visit the
same nodes and compute the same bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .descriptor import Database, Descriptor, Threshold, squared_norm
from .partition import Block, passes
from .stats import QueryStats


@dataclass
class Node:
    s: int
    e: int
    y: dict[int, int]
    path: str = ""
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.s == self.e

    @property
    def mid(self) -> int:
        return (self.s + self.e) // 2


def _max_merge(a: dict[int, int], b: dict[int, int]) -> dict[int, int]:
    out = dict(a)
    for d, f in b.items():
        if f > out.get(d, 0):
            out[d] = f
    return out


@dataclass
class ReferenceTree:
    c: int
    ids: list[int]
    descriptors: list[Descriptor]
    root: Node | None = field(default=None)

    def __len__(self) -> int:
        return len(self.ids)

    def nodes(self):
        """Nodes in depth-first, left-first order."""
        stack = [self.root] if self.root else []
        while stack:
            v = stack.pop()
            yield v
            if v.right:
                stack.append(v.right)
            if v.left:
                stack.append(v.left)

    def depth(self) -> int:
        def walk(v):
            return 0 if v.is_leaf else 1 + max(walk(v.left), walk(v.right))

        return walk(self.root) if self.root else 0


def _build(descs: list[Descriptor], s: int, e: int, path: str) -> Node:
    if s == e:
        return Node(s, e, dict(descs[s - 1].entries), path)
    m = (s + e) // 2
    left = _build(descs, s, m, path + "0")
    right = _build(descs, m + 1, e, path + "1")
    return Node(s, e, _max_merge(left.y, right.y), path, left, right)


def build_reference_tree(block: Block, db: Database) -> ReferenceTree:
    if len(block) == 0:
        raise ValueError("cannot build a tree over an empty block")
    descs = [db[int(r)] for r in block.rows]
    return ReferenceTree(block.c, [int(i) for i in block.ids], descs, _build(descs, 1, len(descs), ""))


def tree_from_descriptors(ids: list[int], descs: list[Descriptor]) -> ReferenceTree:
    """Tree over an explicit block; all descriptors must share one squared norm."""
    norms = {squared_norm(x) for x in descs}
    if len(norms) != 1:
        raise ValueError("block members must share a squared norm")
    return ReferenceTree(norms.pop(), list(ids), list(descs), _build(descs, 1, len(descs), ""))


def node_bound(y: "dict[int, int] | Descriptor", q: Descriptor) -> int:
    """Sum over query entries ``(d, f)`` of ``y[d] * f``."""
    if isinstance(y, Descriptor):
        y = dict(y.entries)
    return sum(y.get(d, 0) * f for d, f in q.entries)


def reference_search(
    tree: ReferenceTree, q: Descriptor, eps: Threshold, trace: list | None = None
) -> tuple[list[int], QueryStats]:
    """Depth-first search with subtree pruning.

    ``trace``, when given, receives ``(depth, s, e, bound)`` for every
    evaluated node in visiting order.
    """
    stats = QueryStats(selected_blocks=1)
    qnorm = squared_norm(q)
    out: list[int] = []
    stack = [(tree.root, 0)]
    while stack:
        v, depth = stack.pop()
        bound = node_bound(v.y, q)
        stats.traversed_nodes += 1
        if trace is not None:
            trace.append((depth, v.s, v.e, bound))
        if not passes(bound, tree.c, qnorm, eps):
            continue
        if v.is_leaf:
            out.append(tree.ids[v.s - 1])
            continue
        stack.append((v.right, depth + 1))
        stack.append((v.left, depth + 1))
    out.sort()
    stats.results = len(out)
    return out, stats
