"""Random equidistant binary trees with controlled internal depths."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ..numeric_lp import ValidationError, get_field
from .tree import Node, PhyloTree
from .ultrametric import CoarseType, default_taxa

GRID = 10_000


def parse_coarse_type(text: str) -> CoarseType:
    """``"a,b|c|d"`` -> ``(("a", "b"), ("c",), ("d",))``."""
    blocks = [tuple(sorted(t.strip() for t in part.split(",") if t.strip())) for part in text.split("|")]
    if any(not b for b in blocks) or len(blocks) < 2:
        raise ValidationError(f"bad coarse type {text!r}: need at least two nonempty blocks")
    return tuple(sorted(blocks))


def _coalesce(leaves, rng) -> Node:
    active = list(leaves)
    while len(active) > 1:
        i, j = sorted(rng.choice(len(active), size=2, replace=False))
        merged = Node(children=[active[i], active[j]])
        active = [a for k, a in enumerate(active) if k not in (i, j)] + [merged]
    return active[0]


def random_equidistant_tree(
    N: int,
    omega,
    Omega,
    rng=None,
    coarse_type: Optional[Sequence[Sequence[str]]] = None,
    taxa: Optional[Sequence[str]] = None,
    field="float",
) -> PhyloTree:
    """Random binary equidistant tree of height ``Omega``.

    The topology comes from merging uniformly random pairs of clusters; with
    ``coarse_type`` given, each block is coalesced separately and the blocks
    hang from the root.  Each non-root internal node gets a depth drawn
    uniformly from ``(max(parent depth, omega), Omega)``, so every such depth
    exceeds ``omega`` and stays below ``Omega``.

    Parameters
    ----------
    rng : int, numpy Generator or None
        Seed or generator; identical seeds give identical trees.
    field : {"float", "exact"}
        In exact mode depths are drawn from a grid of ``GRID`` rational
        points strictly inside each interval.
    """
    fld = get_field(field)
    if N < 3:
        raise ValidationError("need N >= 3")
    omega = fld.scalar(omega)
    Omega = fld.scalar(Omega)
    if not 0 < omega < Omega:
        raise ValidationError("need 0 < omega < Omega")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    taxa = list(taxa) if taxa is not None else default_taxa(N)
    if len(taxa) != N or len(set(taxa)) != N:
        raise ValidationError("taxa must be N unique labels")

    if coarse_type is None:
        root = _coalesce([Node(t) for t in taxa], rng)
    else:
        blocks = [list(b) for b in coarse_type]
        if sorted(t for b in blocks for t in b) != sorted(taxa) or len(blocks) < 2:
            raise ValidationError("coarse type must partition the taxa into >= 2 blocks")
        if len(blocks) > 2:
            raise ValidationError("a binary tree has exactly two root blocks")
        root = Node(children=[_coalesce([Node(t) for t in b], rng) for b in blocks])

    def draw(lo, hi):
        if fld.exact:
            return lo + (hi - lo) * Fraction(int(rng.integers(1, GRID)), GRID)
        return float(rng.uniform(lo, hi))

    zero = fld.scalar(0)
    depth = {id(root): zero}
    for node in root.preorder():
        for child in node.children:
            if child.is_leaf():
                child.length = Omega - depth[id(node)]
            else:
                d = draw(max(depth[id(node)], omega), Omega)
                depth[id(child)] = d
                child.length = d - depth[id(node)]
    return PhyloTree(root, fld)
