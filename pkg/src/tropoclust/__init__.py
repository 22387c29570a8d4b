"""Tropical k-means++ clustering of equidistant phylogenetic trees."""

from .clustering import (
    ClusterOptions,
    Clustering,
    assign,
    brute_force_optimal,
    competitive_factor,
    kmeanspp,
    lloyd,
    lloyd_maxvariant,
    seed_kmeanspp,
    update_centroids,
)
from .fermat_weber import (
    MedianResult,
    Polytrope,
    corrected_tropical_median,
    fw_polytrope,
    fw_value,
    tropical_median,
    tropical_vertices,
)
from .numeric_lp import ValidationError
from .trop_core import asym_dist, canonicalize, sym_dist, torus_equal, trop_hull_member

__version__ = "0.1.0"

__all__ = [
    "ClusterOptions",
    "Clustering",
    "MedianResult",
    "Polytrope",
    "ValidationError",
    "assign",
    "asym_dist",
    "brute_force_optimal",
    "canonicalize",
    "competitive_factor",
    "corrected_tropical_median",
    "fw_polytrope",
    "fw_value",
    "kmeanspp",
    "lloyd",
    "lloyd_maxvariant",
    "seed_kmeanspp",
    "sym_dist",
    "torus_equal",
    "trop_hull_member",
    "tropical_median",
    "tropical_vertices",
    "update_centroids",
]
