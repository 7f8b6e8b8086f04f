from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class QueryStats:
    """Per-query work counters.

    ``traversed_nodes`` counts nodes whose pruning bound was evaluated;
    ``rank_ops`` counts rank1 evaluations on level bitvectors.
    """

    selected_blocks: int = 0
    traversed_nodes: int = 0
    rank_ops: int = 0
    results: int = 0

    def __iadd__(self, other: "QueryStats") -> "QueryStats":
        self.selected_blocks += other.selected_blocks
        self.traversed_nodes += other.traversed_nodes
        self.rank_ops += other.rank_ops
        self.results += other.results
        return self

    def as_dict(self) -> dict[str, int]:
        return asdict(self)
