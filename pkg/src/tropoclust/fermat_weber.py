"""Fermat-Weber sets under the asymmetric tropical distance.

The Fermat-Weber set of sites ``S`` (``m`` points of the n-torus) is the set
of ``t`` minimising ``sum_s d(s, t)``.  As an LP in ``t`` and one auxiliary
``M_s`` per site::

    min  sum_s [ sum_i (t_i - s_i) + n * M_s ]   s.t.  M_s + t_i >= s_i

Its dual is a transportation problem: ``y[s, i] >= 0`` with row sums ``n``
and column sums ``m``, maximising ``sum y[s, i] * s_i``.  We solve the dual
once; complementary slackness against that dual optimum turns the optimal
face into a system of difference constraints ``t_i - t_k <= s_i - s_k`` (one
for every support entry ``(s, i)`` and every ``k``), and the shortest-path
closure of that system is the polytrope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, gcd, isqrt
from typing import Optional

import numpy as np

from .numeric_lp import (
    EQ,
    GE,
    LE,
    Field,
    LinearProgram,
    ValidationError,
    field_of,
    solve_lp,
)
from .trop_core import TORUS_RTOL, asym_dist, torus_equal, trop_hull_member

FLOAT_EPS = 2.0**-52
SQRT_EPS = FLOAT_EPS**0.5


def as_sites(sites, fld: Field | None = None) -> np.ndarray:
    """Stack sites into an ``m x n`` array of one field."""
    if isinstance(sites, np.ndarray) and sites.ndim == 2 and fld is None:
        fld = field_of(sites)
        return fld.array(sites)
    rows = [list(np.asarray(s, dtype=object).ravel()) for s in sites]
    if not rows:
        raise ValidationError("need at least one site")
    n = len(rows[0])
    if any(len(r) != n for r in rows):
        raise ValidationError("sites differ in length")
    if fld is None:
        fld = field_of(rows)
    return fld.array(rows)


def _field(S: np.ndarray, tol=None) -> Field:
    f = field_of(S)
    if tol is not None and not f.exact:
        f = Field(f.mode, tol)
    return f


@dataclass
class Polytrope:
    """Tight difference-bound matrix: ``c[i][j] = sup (t_j - t_i)``."""

    c: np.ndarray

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def field(self) -> Field:
        return field_of(self.c)

    def contains(self, t, rtol: float = 1e-9) -> bool:
        t = np.asarray(t, dtype=self.c.dtype)
        diff = t[None, :] - t[:, None]
        if self.c.dtype == object:
            return bool(np.all(diff <= self.c))
        scale = 1 + np.abs(self.c).max()
        return bool(np.all(diff <= self.c + rtol * scale))

    def dimension(self) -> int:
        """Components of the graph joining ``i, j`` with ``c_ij + c_ji = 0``, minus one."""
        fld = self.field
        n = self.n
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        scale = 1 if fld.exact else 1 + float(np.abs(self.c).max())
        for i in range(n):
            for j in range(i + 1, n):
                s = self.c[i, j] + self.c[j, i]
                tight = s == 0 if fld.exact else abs(s) <= 1e-9 * scale
                if tight:
                    parent[find(i)] = find(j)
        return len({find(i) for i in range(n)}) - 1


@dataclass
class MedianResult:
    median: np.ndarray
    vertices: list
    fw_value: object
    dimension: int
    degenerate_drop: Optional[int] = None
    corrected: bool = False
    polytrope: Optional[Polytrope] = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# LP formulations
# ---------------------------------------------------------------------------


def _transport_lp(S: np.ndarray, fld: Field):
    m, n = S.shape
    lp = LinearProgram(objective=[-S[s, i] for s in range(m) for i in range(n)])
    lp.bounds = [(0, None)] * (m * n)
    for s in range(m):
        row = [0] * (m * n)
        for i in range(n):
            row[s * n + i] = 1
        lp.add(row, EQ, n)
    for i in range(n - 1):  # the last column sum is implied
        row = [0] * (m * n)
        for s in range(m):
            row[s * n + i] = 1
        lp.add(row, EQ, m)
    res = solve_lp(lp, fld)
    if not res.optimal:
        raise RuntimeError(f"transport LP unexpectedly {res.status}")
    return res


def _solve(S: np.ndarray, fld: Field):
    """Return ``(fw_value, support)`` with ``support[s, i]`` true on dual-optimal mass."""
    res = _transport_lp(S, fld)
    m, n = S.shape
    y = res.solution.reshape(m, n)
    value = -res.value - S.sum()
    if fld.exact:
        support = y > 0
    else:
        support = y > fld.tol * max(m, n)
        value = max(float(value), 0.0)
    return value, support


def fw_value(sites, tol=None):
    """Minimum total asymmetric distance from the sites to a single point."""
    S = as_sites(sites)
    return _solve(S, _field(S, tol))[0]


def _closure(W: np.ndarray) -> np.ndarray:
    """Floyd-Warshall shortest paths; ``W[i, j]`` bounds ``t_j - t_i``."""
    c = W.copy()
    n = c.shape[0]
    for k in range(n):
        c = np.minimum(c, c[:, k : k + 1] + c[k : k + 1, :])
    return c


def fw_polytrope(sites, tol=None) -> Polytrope:
    """Fermat-Weber polytrope as a tight difference-bound matrix."""
    S = as_sites(sites)
    fld = _field(S, tol)
    _, support = _solve(S, fld)
    m, n = S.shape
    # W[k, i] bounds t_i - t_k; every column carries dual mass, so all finite
    W = np.empty((n, n), dtype=S.dtype)
    seen = np.zeros(n, dtype=bool)
    for s in range(m):
        for i in np.flatnonzero(support[s]):
            bound = S[s, i] - S[s]
            W[:, i] = np.minimum(W[:, i], bound) if seen[i] else bound
            seen[i] = True
    if not seen.all():
        raise RuntimeError("dual solution leaves a coordinate without support")
    c = _closure(W)
    for i in range(n):
        c[i, i] = c[i, i] * 0
    if not fld.exact:
        # remove negative slack from rounding on tight cycles
        sym = c + c.T
        tight = np.abs(sym) <= 1e-9 * (1 + np.abs(c).max())
        c = np.where(tight & (sym < 0), (c - c.T) / 2, c)
    return Polytrope(c)


def fw_polytrope_lp(sites, tol=None) -> Polytrope:
    """Same polytrope via one value LP plus ``n(n-1)`` pairwise LPs.

    Slower, and kept as an independent route for cross-checking
    :func:`fw_polytrope`.
    """
    S = as_sites(sites)
    fld = _field(S, tol)
    m, n = S.shape
    value = _solve(S, fld)[0]
    nv = n + m  # t_0..t_{n-1}, M_0..M_{m-1}

    def base():
        lp = LinearProgram(objective=[0] * nv)
        for s in range(m):
            for i in range(n):
                row = [0] * nv
                row[i] = 1
                row[n + s] = 1
                lp.add(row, GE, S[s, i])
        obj = [m] * n + [n] * m
        lp.add(obj, LE, value + S.sum())
        pin = [0] * nv
        pin[n - 1] = 1
        lp.add(pin, EQ, 0)
        return lp

    c = fld.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            lp = base()
            obj = [0] * nv
            obj[j] = -1
            obj[i] = 1
            lp.objective = obj
            res = solve_lp(lp, fld)
            if not res.optimal:
                raise RuntimeError(f"pairwise LP ({i}, {j}) {res.status}")
            c[i, j] = -res.value
    return Polytrope(c)


# ---------------------------------------------------------------------------
# Vertices and medians
# ---------------------------------------------------------------------------


def _dedupe(points, rtol):
    out = []
    for p in points:
        if not any(torus_equal(p, q, rtol) for q in out):
            out.append(p)
    return out


def tropical_vertices(P: Polytrope, rtol: float = TORUS_RTOL) -> list:
    """Minimal max-plus generating set of the polytrope.

    Candidate ``j`` is the point ``-c[:, j]``: the lowest point of the
    polytrope relative to coordinate ``j``.  Candidates that are max-plus
    combinations of the others are discarded.
    """
    c = P.c
    cands = _dedupe([-c[:, j] for j in range(P.n)], rtol)
    if len(cands) == 1:
        return cands
    keep = []
    for idx, p in enumerate(cands):
        others = [q for k, q in enumerate(cands) if k != idx]
        if not trop_hull_member(p, others, rtol)[0]:
            keep.append(p)
    return keep


def _mean(points):
    total = points[0]
    for p in points[1:]:
        total = total + p
    return total / len(points)


def total_distance(sites, t):
    S = as_sites(sites)
    return sum((asym_dist(S[s], t) for s in range(S.shape[0])), S[0, 0] * 0)


def tropical_median(sites, tol=None) -> MedianResult:
    """Arithmetic mean of the tropical vertices of the Fermat-Weber set."""
    S = as_sites(sites)
    fld = _field(S, tol)
    value, _ = _solve(S, fld)
    P = fw_polytrope(S, tol)
    verts = tropical_vertices(P)
    med = _mean(verts)
    return MedianResult(
        median=med,
        vertices=verts,
        fw_value=value,
        dimension=P.dimension(),
        polytrope=P,
    )


def _n_taxa(n: int) -> Optional[int]:
    N = (1 + isqrt(1 + 8 * n)) // 2
    return N if comb(N, 2) == n else None


def dimension_bound(m: int, n: int, tree_sites: bool = True) -> int:
    """Upper bound on the Fermat-Weber dimension.

    ``min(N - 1, gcd(m, n)) - 1`` for tree sites on ``N`` taxa, otherwise
    ``gcd(m, n) - 1``.
    """
    g = gcd(m, n)
    N = _n_taxa(n) if tree_sites else None
    if N is None:
        return g - 1
    return min(N - 1, g) - 1


def _height_match(med: np.ndarray, S: np.ndarray) -> np.ndarray:
    target = sum(S[s].max() for s in range(S.shape[0])) / S.shape[0]
    return med + (target - med.max())


def corrected_tropical_median(sites, tree_mode: bool = True, tol=None) -> MedianResult:
    """Tropical median with the float-arithmetic safeguards for tree sites.

    In float mode with tree sites, when the number of sites is a multiple of
    ``n`` the site with the largest total out-distance is dropped before the
    median is taken.  Afterwards a median that is no longer a
    ``sqrt(eps)``-ultrametric is replaced by its subdominant ultrametric.
    Tree-mode medians are returned with their maximum coordinate equal to the
    mean maximum of the sites.
    """
    from .phylo.ultrametric import min_eps, subdominant_ultrametric

    S = as_sites(sites)
    fld = _field(S, tol)
    m, n = S.shape
    if tree_mode:
        if _n_taxa(n) is None:
            raise ValidationError(f"length {n} is not a number of taxon pairs")
        for s in range(m):
            if min_eps(S[s]) > SQRT_EPS:
                raise ValidationError(f"site {s} is not a sqrt(eps)-ultrametric")

    drop = None
    work = S
    if tree_mode and not fld.exact and m % n == 0 and m > 1:
        out = [sum(asym_dist(S[s], S[t]) for t in range(m)) for s in range(m)]
        drop = int(np.argmax(out))  # first maximum on ties
        work = np.delete(S, drop, axis=0)

    res = tropical_median(work, tol)
    res.degenerate_drop = drop
    if tree_mode:
        res.median = _height_match(res.median, work)
        if not fld.exact and min_eps(res.median) > SQRT_EPS:
            res.median = subdominant_ultrametric(res.median).values
            res.corrected = True
    return res
