"""Threshold similarity search over sparse integer descriptors."""

from .baselines import InvertedIndex, inv_build, inv_search, ova_search
from .bitvector import RankBitVector, build_rank
from .descriptor import (
    Database,
    Descriptor,
    DescriptorError,
    EmptyDescriptorError,
    Threshold,
    dot,
    jaccard_geq,
    jaccard_value,
    parse_descriptor,
    parse_record,
    read_database,
    read_records,
    squared_norm,
    write_database,
)
from .index import (
    SearchHit,
    SitadBlockIndex,
    SitadIndex,
    build_block_index,
    build_index,
    descend,
    root_interval,
    sitad_block_search,
    sitad_search,
)
from .partition import Block, BlockSet, block_threshold, candidate_norms, partition
from .reference import ReferenceTree, build_reference_tree, node_bound, reference_search
from .rmq import BlockedRmq, SparseTableRmq, build_rmq, range_max
from .serialize import IndexFormatError, load_index, save_index
from .stats import QueryStats

__version__ = "0.1.0"
