"""Phylogenetic trees, Newick I/O and ultrametric vectors."""

from .tree import NewickError, Node, PhyloTree, emit_newick, isomorphic, parse_newick, read_newick_file
from .ultrametric import (
    CoarseType,
    DepthStats,
    NotUltrametricError,
    PairIndexMap,
    UltrametricVector,
    as_ultrametric,
    clade_support,
    coarse_type,
    cophenetic,
    depth_stats,
    is_eps_ultrametric,
    is_ultrametric,
    min_eps,
    mrca_depth,
    n_taxa,
    resolution_gap,
    subdominant_ultrametric,
    tree_from_ultrametric,
)
from .generate import random_equidistant_tree, parse_coarse_type

__all__ = [
    "CoarseType",
    "DepthStats",
    "NewickError",
    "Node",
    "NotUltrametricError",
    "PairIndexMap",
    "PhyloTree",
    "UltrametricVector",
    "as_ultrametric",
    "clade_support",
    "coarse_type",
    "cophenetic",
    "depth_stats",
    "emit_newick",
    "is_eps_ultrametric",
    "is_ultrametric",
    "isomorphic",
    "min_eps",
    "mrca_depth",
    "n_taxa",
    "parse_coarse_type",
    "parse_newick",
    "random_equidistant_tree",
    "read_newick_file",
    "resolution_gap",
    "subdominant_ultrametric",
    "tree_from_ultrametric",
]
