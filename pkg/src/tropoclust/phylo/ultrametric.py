"""Cophenetic vectors, ultrametric checks and tree statistics.

A tree on ``N`` taxa is stored as the vector of its ``n = N(N-1)/2``
leaf-to-leaf path lengths, taxa sorted lexicographically and pairs in
lexicographic order (``ab, ac, ad, bc, bd, cd``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb, isqrt
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ..numeric_lp import Field, ValidationError, field_of
from .tree import Node, PhyloTree

FLOAT_RTOL = 1e-8


class NotUltrametricError(ValidationError):
    pass


def n_taxa(n: int) -> int:
    """Number of taxa ``N`` with ``C(N, 2) == n``; raises otherwise."""
    N = (1 + isqrt(1 + 8 * n)) // 2
    if n < 1 or comb(N, 2) != n:
        raise ValidationError(f"length {n} is not of the form N(N-1)/2")
    return N


class PairIndexMap:
    """Bijection between unordered taxon pairs and vector positions."""

    def __init__(self, taxa: Iterable[str]):
        taxa = sorted(taxa)
        if len(set(taxa)) != len(taxa):
            raise ValidationError("taxa must be unique")
        if len(taxa) < 2:
            raise ValidationError("need at least two taxa")
        self.taxa: List[str] = taxa
        self.pairs: List[Tuple[str, str]] = list(combinations(taxa, 2))
        self._index = {p: i for i, p in enumerate(self.pairs)}
        self._pos = {t: i for i, t in enumerate(taxa)}

    @classmethod
    def default(cls, n: int) -> "PairIndexMap":
        """Letters ``a, b, ...`` (or zero-padded ``t01, ...``) for a length-``n`` vector."""
        return cls(default_taxa(n_taxa(n)))

    @property
    def N(self) -> int:
        return len(self.taxa)

    @property
    def n(self) -> int:
        return len(self.pairs)

    def index(self, a: str, b: str) -> int:
        if a == b:
            raise ValidationError("a pair needs two distinct taxa")
        key = (a, b) if a < b else (b, a)
        try:
            return self._index[key]
        except KeyError:
            missing = [t for t in key if t not in self._pos]
            raise ValidationError(f"unknown taxa {missing}") from None

    def pair(self, idx: int) -> Tuple[str, str]:
        return self.pairs[idx]

    def taxon_index(self, t: str) -> int:
        try:
            return self._pos[t]
        except KeyError:
            raise ValidationError(f"unknown taxon {t!r}") from None

    def to_matrix(self, values: np.ndarray) -> np.ndarray:
        N = self.N
        M = np.empty((N, N), dtype=values.dtype)
        M[...] = values.flat[0] * 0
        for k, (a, b) in enumerate(self.pairs):
            i, j = self._pos[a], self._pos[b]
            M[i, j] = M[j, i] = values[k]
        return M

    def from_matrix(self, M: np.ndarray) -> np.ndarray:
        out = np.empty(self.n, dtype=M.dtype)
        for k, (a, b) in enumerate(self.pairs):
            out[k] = M[self._pos[a], self._pos[b]]
        return out

    def __eq__(self, other):
        return isinstance(other, PairIndexMap) and self.taxa == other.taxa

    def __repr__(self):
        return f"PairIndexMap({self.taxa})"


def default_taxa(N: int) -> List[str]:
    if N <= 26:
        return [chr(ord("a") + i) for i in range(N)]
    width = len(str(N))
    return [f"t{i + 1:0{width}d}" for i in range(N)]


@dataclass
class UltrametricVector:
    values: np.ndarray
    pairs: PairIndexMap

    def __post_init__(self):
        if len(self.values) != self.pairs.n:
            raise ValidationError("vector length does not match the pair map")

    def __getitem__(self, key):
        a, b = key
        return self.values[self.pairs.index(a, b)]

    @property
    def field(self) -> Field:
        return field_of(self.values)

    @property
    def taxa(self) -> List[str]:
        return self.pairs.taxa


def _split(u, pairs: PairIndexMap | None = None):
    if isinstance(u, UltrametricVector):
        return u.values, u.pairs
    values = u if isinstance(u, np.ndarray) else field_of(u).array(u)
    return values, pairs or PairIndexMap.default(len(values))


def _tol(values) -> float:
    if values.dtype == object:
        return 0
    return FLOAT_RTOL * (1 + float(np.abs(values).max()))


# ---------------------------------------------------------------------------
# tree <-> vector
# ---------------------------------------------------------------------------


def cophenetic(tree: PhyloTree, rtol: float = FLOAT_RTOL) -> UltrametricVector:
    """Leaf-to-leaf path lengths of an equidistant tree."""
    if not tree.is_equidistant(rtol):
        raise NotUltrametricError("tree is not equidistant")
    depth = tree.depths()
    pairs = PairIndexMap(tree.taxa)
    fld = tree.field
    out = fld.zeros(pairs.n)
    # mrca depth for every pair, via the leaf sets below each node
    below = {}
    for node in reversed(list(tree.root.preorder())):
        if node.is_leaf():
            below[id(node)] = [node]
            continue
        groups = [below[id(c)] for c in node.children]
        for gi, gj in combinations(groups, 2):
            for x in gi:
                for y in gj:
                    k = pairs.index(x.label, y.label)
                    out[k] = depth[id(x)] + depth[id(y)] - 2 * depth[id(node)]
        below[id(node)] = [x for g in groups for x in g]
    return UltrametricVector(out, pairs)


def tree_from_ultrametric(u, pairs: PairIndexMap | None = None) -> PhyloTree:
    """Equidistant tree realising an ultrametric by single-linkage merging.

    Clusters joined at distance ``d`` get a parent at depth
    ``max(u)/2 - d/2``; all clusters tied at the current smallest distance
    are merged into one (possibly multifurcating) node.
    """
    values, pairs = _split(u, pairs)
    fld = field_of(values)
    if min_eps(values, pairs) > (0 if fld.exact else np.sqrt(2.0**-52)):
        raise NotUltrametricError("vector violates the three-point condition")
    tol = _tol(values)
    N = pairs.N
    D = pairs.to_matrix(values)
    half = Fraction(1, 2) if fld.exact else 0.5

    # clusters: (node, height above leaves)
    clusters = {i: (Node(pairs.taxa[i]), values.flat[0] * 0) for i in range(N)}
    members = {i: [i] for i in range(N)}
    while len(clusters) > 1:
        keys = sorted(clusters)
        best = None
        for x, y in combinations(keys, 2):
            d = max(D[a, b] for a in members[x] for b in members[y])
            if best is None or d < best:
                best = d
        # union every cluster pair linked at the current level
        parent = {k: k for k in keys}

        def find(a):
            while parent[a] != a:
                a = parent[a]
            return a

        for x, y in combinations(keys, 2):
            d = max(D[a, b] for a in members[x] for b in members[y])
            if d - best <= tol:
                parent[find(y)] = find(x)
        groups = {}
        for k in keys:
            groups.setdefault(find(k), []).append(k)
        level = best * half
        for root_key, group in groups.items():
            if len(group) == 1:
                continue
            node = Node()
            for k in group:
                child, h = clusters.pop(k)
                child.length = level - h
                node.add_child(child)
            merged = [a for k in group for a in members.pop(k)]
            clusters[root_key] = (node, level)
            members[root_key] = merged
    ((root, _),) = clusters.values()
    root.length = None
    return PhyloTree(root, fld)


# ---------------------------------------------------------------------------
# ultrametric checks and corrections
# ---------------------------------------------------------------------------


def _triples(values, pairs: PairIndexMap):
    M = pairs.to_matrix(values)
    for i, j, k in combinations(range(pairs.N), 3):
        yield M[i, j], M[i, k], M[j, k]


def min_eps(u, pairs: PairIndexMap | None = None):
    """Smallest ``eps`` with ``(1 - eps) * max <= mid`` on every taxon triple.

    Returns ``0`` for ultrametrics and ``inf`` when a violated triple has a
    non-positive maximum (no relaxation can fix it).
    """
    values, pairs = _split(u, pairs)
    exact = values.dtype == object
    worst = values.flat[0] * 0
    for trip in _triples(values, pairs):
        hi = max(trip)
        mid = sorted(trip)[1]
        gap = hi - mid
        if gap <= 0:
            continue
        if hi <= 0:
            return float("inf")
        e = gap / hi
        if e > worst:
            worst = e
    return worst if exact else float(worst)


def is_eps_ultrametric(u, eps, pairs: PairIndexMap | None = None) -> bool:
    return min_eps(u, pairs) <= eps


def is_ultrametric(u, pairs: PairIndexMap | None = None) -> bool:
    values, pairs = _split(u, pairs)
    if values.dtype == object:
        return min_eps(values, pairs) == 0
    return min_eps(values, pairs) <= FLOAT_RTOL


def subdominant_ultrametric(u, pairs: PairIndexMap | None = None) -> UltrametricVector:
    """Largest ultrametric below ``u``: minimax path lengths in the complete graph."""
    values, pairs = _split(u, pairs)
    M = pairs.to_matrix(values)
    N = pairs.N
    for k in range(N):
        M = np.minimum(M, np.maximum(M[:, k : k + 1], M[k : k + 1, :]))
    for i in range(N):
        M[i, i] = values.flat[0] * 0
    return UltrametricVector(pairs.from_matrix(M), pairs)


# ---------------------------------------------------------------------------
# tree statistics
# ---------------------------------------------------------------------------


@dataclass
class DepthStats:
    height: object
    nu: object
    eta: object


def _halve(x, exact):
    return x * Fraction(1, 2) if exact else x * 0.5


def depth_stats(u, pairs: PairIndexMap | None = None) -> DepthStats:
    """Height, minimal non-root internal depth ``nu`` and maximal internal depth ``eta``.

    Raises
    ------
    ValidationError
        For star trees, which have no internal node below the root.
    """
    values, pairs = _split(u, pairs)
    exact = values.dtype == object
    tol = _tol(values)
    top = values.max()
    height = _halve(top, exact)
    eta = height - _halve(values.min(), exact)
    below = [v for v in values if v < top - tol]
    if not below:
        raise ValidationError("star tree: no internal node below the root, nu undefined")
    nu = height - _halve(max(below), exact)
    return DepthStats(height, nu, eta)


def mrca_depth(u, a: str, b: str, pairs: PairIndexMap | None = None):
    """Depth below the root of the most recent common ancestor of ``a`` and ``b``."""
    values, pairs = _split(u, pairs)
    exact = values.dtype == object
    return _halve(values.max(), exact) - _halve(values[pairs.index(a, b)], exact)


CoarseType = Tuple[Tuple[str, ...], ...]


def coarse_type(u, pairs: PairIndexMap | None = None) -> CoarseType:
    """Partition of the taxa into the leaf sets of the root's children."""
    values, pairs = _split(u, pairs)
    tol = _tol(values)
    top = values.max()
    parent = list(range(pairs.N))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for k, (a, b) in enumerate(pairs.pairs):
        if values[k] < top - tol:
            parent[find(pairs.taxon_index(a))] = find(pairs.taxon_index(b))
    blocks = {}
    for i, t in enumerate(pairs.taxa):
        blocks.setdefault(find(i), []).append(t)
    return tuple(sorted(tuple(sorted(b)) for b in blocks.values()))


def clade_support(trees: Sequence, clade: Iterable[str], pairs: PairIndexMap | None = None) -> float:
    """Fraction of trees in which ``clade`` is a clade (strictly closer inside than out)."""
    clade = sorted(set(clade))
    if not trees:
        raise ValidationError("no trees given")
    hits = 0
    for u in trees:
        values, pm = _split(u, pairs)
        for t in clade:
            pm.taxon_index(t)
        if not 1 < len(clade) < pm.N:
            raise ValidationError("a clade needs between 2 and N-1 taxa")
        inside = max(values[pm.index(a, b)] for a, b in combinations(clade, 2))
        others = [t for t in pm.taxa if t not in clade]
        outside = min(values[pm.index(a, c)] for a in clade for c in others)
        if inside < outside - _tol(values):
            hits += 1
    return hits / len(trees)


def resolution_gap(u, pairs: PairIndexMap | None = None):
    """Smallest ``max - min`` over taxon triples; zero when some triple is a polytomy."""
    values, pairs = _split(u, pairs)
    if pairs.N < 3:
        raise ValidationError("resolution gap needs at least three taxa")
    return min(max(t) - min(t) for t in _triples(values, pairs))


def as_ultrametric(values, pairs: PairIndexMap | None = None) -> UltrametricVector:
    values, pairs = _split(values, pairs)
    return UltrametricVector(values, pairs)
