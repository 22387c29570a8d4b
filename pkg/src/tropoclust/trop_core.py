"""Points of the tropical torus and the distances between them.

A torus point is a 1-d numpy array; two arrays are the same torus point when
their difference is a constant vector.  Arrays of ``Fraction`` (object dtype)
are handled exactly, float arrays with a relative tolerance.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .numeric_lp import Field, ValidationError, field_of

TORUS_RTOL = 1e-8


def as_point(x, fld: Field | None = None) -> np.ndarray:
    """Coerce ``x`` to a torus point of the given (or inferred) field."""
    if fld is None:
        fld = field_of(x)
    arr = fld.array(x)
    if arr.ndim != 1:
        raise ValidationError("a torus point must be one-dimensional")
    if arr.shape[0] < 1:
        raise ValidationError("a torus point needs at least one coordinate")
    return arr


def _pair(x, y):
    if isinstance(x, np.ndarray) and isinstance(y, np.ndarray) and x.dtype == y.dtype:
        xa, ya = x, y
    else:
        fld = field_of(list(np.asarray(x, dtype=object).ravel()) + list(np.asarray(y, dtype=object).ravel()))
        xa, ya = as_point(x, fld), as_point(y, fld)
    if xa.shape != ya.shape:
        raise ValidationError(f"length mismatch: {xa.shape[0]} vs {ya.shape[0]}")
    return xa, ya


def asym_dist(x, y):
    """Asymmetric tropical distance from ``x`` to ``y``.

    ``sum(y - x) + n * max(x - y)``; nonnegative, zero exactly on torus-equal
    pairs, and not symmetric.
    """
    x, y = _pair(x, y)
    diff = x - y
    return diff.max() * len(diff) - diff.sum()


def sym_dist(x, y):
    """Symmetric tropical distance ``max(x - y) - min(x - y)``."""
    x, y = _pair(x, y)
    diff = x - y
    return diff.max() - diff.min()


def torus_equal(x, y, rtol: float = TORUS_RTOL) -> bool:
    x, y = _pair(x, y)
    diff = x - y
    if diff.dtype == object:
        return bool(np.all(diff == diff[0]))
    scale = 1.0 + max(np.abs(x).max(), np.abs(y).max())
    return bool(np.abs(diff - diff.mean()).max() <= rtol * scale)


def canonicalize(x) -> np.ndarray:
    """Representative whose last coordinate is zero."""
    x = as_point(x) if not isinstance(x, np.ndarray) else x
    return x - x[-1]


def trop_combine(points: Sequence, coeffs: Sequence) -> np.ndarray:
    """Max-plus combination ``max_k (points[k] + coeffs[k])``."""
    if len(points) == 0:
        raise ValidationError("need at least one point")
    if len(points) != len(coeffs):
        raise ValidationError("points and coefficients differ in count")
    fld = field_of(list(np.asarray(points, dtype=object).ravel()) + list(coeffs))
    pts = [as_point(p, fld) for p in points]
    n = pts[0].shape[0]
    if any(p.shape[0] != n for p in pts):
        raise ValidationError("points differ in length")
    out = pts[0] + fld.scalar(coeffs[0])
    for p, c in zip(pts[1:], coeffs[1:]):
        out = np.maximum(out, p + fld.scalar(c))
    return out


def trop_hull_member(x, gens: Sequence, rtol: float = TORUS_RTOL):
    """Decide whether ``x`` lies in the max-plus span of ``gens``.

    Each generator is lifted as high as it can go while staying below ``x``;
    ``x`` is a member exactly when the maximum of the lifted generators
    recovers it.

    Returns
    -------
    (bool, list)
        Membership flag and the lifting coefficients, which witness the
        combination when the flag is set.
    """
    if len(gens) == 0:
        raise ValidationError("empty generator list")
    fld = field_of(list(np.asarray(x, dtype=object).ravel()) + list(np.asarray(gens, dtype=object).ravel()))
    xa = as_point(x, fld)
    G = [as_point(g, fld) for g in gens]
    if any(g.shape != xa.shape for g in G):
        raise ValidationError("generator length mismatch")
    coeffs = [(xa - g).min() for g in G]
    recon = trop_combine(G, coeffs)
    return torus_equal(recon, xa, rtol), coeffs


def skewness_bound(n: int) -> int:
    """Skewness ``n - 1`` of the asymmetric distance on the n-torus."""
    if int(n) != n or n < 2:
        raise ValidationError("skewness is defined for n >= 2")
    return int(n) - 1


def ball_contains(center, y, radius) -> bool:
    """Whether ``y`` lies in ``center + radius * (simplex + R·1)``.

    Checked by direct membership: shift ``y - center`` so its coordinates sum
    to ``radius`` and test nonnegativity.
    """
    c, ya = _pair(center, y)
    delta = ya - c
    n = len(delta)
    shift = (delta.sum() - radius) / n
    z = delta - shift
    if z.dtype == object:
        return bool(np.all(z >= 0))
    return bool(np.all(z >= -1e-12 * (1 + np.abs(delta).max())))


def distance_matrix(points: Sequence) -> np.ndarray:
    """Full asymmetric matrix, row = first argument."""
    pts = list(points)
    m = len(pts)
    out = np.empty((m, m), dtype=object if pts and pts[0].dtype == object else np.float64)
    for i in range(m):
        for j in range(m):
            out[i, j] = asym_dist(pts[i], pts[j])
    return out
