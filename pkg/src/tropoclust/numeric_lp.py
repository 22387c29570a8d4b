"""Numeric field abstraction and a dense two-phase simplex solver.

Two arithmetic modes are supported.  ``exact`` stores every scalar as a
:class:`fractions.Fraction` inside ``object`` numpy arrays, so all comparisons
are decidable.  ``float`` uses binary64 and compares with an absolute
tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence

import numpy as np

EXACT = "exact"
FLOAT = "float"

DEFAULT_TOL = 1e-9


class ValidationError(ValueError):
    """Raised on malformed input to a public operation."""


@dataclass(frozen=True)
class Field:
    """Arithmetic mode plus comparison tolerance.

    Parameters
    ----------
    mode : {"exact", "float"}
        Exact rationals or binary64 floats.
    tol : float
        Absolute tolerance used by comparisons in float mode.  Ignored in exact
        mode.
    """

    mode: str = FLOAT
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.mode not in (EXACT, FLOAT):
            raise ValidationError(f"unknown arithmetic mode {self.mode!r}")

    @property
    def exact(self) -> bool:
        return self.mode == EXACT

    @property
    def dtype(self):
        return object if self.exact else np.float64

    def scalar(self, value):
        if not self.exact:
            return float(value)
        if isinstance(value, Fraction):
            return value
        if isinstance(value, (float, np.floating)):
            # shortest decimal: 0.15 -> 3/20 rather than its binary expansion
            return Fraction(repr(float(value)))
        if isinstance(value, (Rational, np.integer)):
            return Fraction(int(value)) if isinstance(value, np.integer) else Fraction(value)
        return Fraction(str(value))

    def array(self, values) -> np.ndarray:
        """Convert ``values`` into an array of this field's scalars."""
        if not self.exact and isinstance(values, np.ndarray) and values.dtype.kind == "f":
            return values.astype(np.float64, copy=True)
        arr = np.asarray(values, dtype=object)
        if self.exact:
            out = np.empty(arr.shape, dtype=object)
            flat_in = arr.reshape(-1)
            flat_out = out.reshape(-1)
            for i, v in enumerate(flat_in):
                flat_out[i] = self.scalar(v)
            return out
        return arr.astype(np.float64)

    def zeros(self, shape) -> np.ndarray:
        if self.exact:
            out = np.empty(shape, dtype=object)
            out.fill(Fraction(0))
            return out
        return np.zeros(shape)

    # comparisons -----------------------------------------------------------

    def is_zero(self, a) -> bool:
        return a == 0 if self.exact else abs(a) <= self.tol

    def eq(self, a, b) -> bool:
        return self.is_zero(a - b)

    def lt(self, a, b) -> bool:
        return a < b if self.exact else a < b - self.tol

    def le(self, a, b) -> bool:
        return a <= b if self.exact else a <= b + self.tol

    def pos(self, a) -> bool:
        return self.lt(0, a)

    def neg(self, a) -> bool:
        return self.lt(a, 0)


EXACT_FIELD = Field(EXACT)
FLOAT_FIELD = Field(FLOAT)


def field_of(arr, tol: float = DEFAULT_TOL) -> Field:
    """Infer the field of an array or nested sequence.

    Object arrays and sequences made only of ints/Fractions are exact;
    anything containing a float is float.
    """
    if isinstance(arr, np.ndarray):
        if arr.dtype != object:
            return Field(FLOAT, tol) if arr.dtype.kind == "f" else EXACT_FIELD
        flat = arr.reshape(-1)
    else:
        flat = np.asarray(arr, dtype=object).reshape(-1)
    for v in flat:
        if isinstance(v, (float, np.floating)):
            return Field(FLOAT, tol)
    return EXACT_FIELD


def get_field(mode) -> Field:
    if isinstance(mode, Field):
        return mode
    if mode is None:
        return FLOAT_FIELD
    return Field(mode)


# ---------------------------------------------------------------------------
# Linear programs
# ---------------------------------------------------------------------------

LE, EQ, GE = "<=", "==", ">="


@dataclass
class Constraint:
    coeffs: Sequence
    rel: str
    rhs: object


@dataclass
class LinearProgram:
    """``minimize objective @ x`` subject to rows and per-variable bounds.

    ``bounds[j]`` is ``(lower, upper)`` with ``None`` meaning unbounded; the
    default for every variable is free.
    """

    objective: Sequence
    constraints: list = field(default_factory=list)
    bounds: Optional[list] = None

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def add(self, coeffs, rel, rhs) -> None:
        self.constraints.append(Constraint(list(coeffs), rel, rhs))

    def validate(self) -> None:
        n = self.num_vars
        if n == 0:
            raise ValidationError("objective must have at least one coefficient")
        for i, row in enumerate(self.constraints):
            if len(row.coeffs) != n:
                raise ValidationError(
                    f"constraint {i} has width {len(row.coeffs)}, expected {n}"
                )
            if row.rel not in (LE, EQ, GE):
                raise ValidationError(f"constraint {i} has unknown relation {row.rel!r}")
        if self.bounds is not None:
            if len(self.bounds) != n:
                raise ValidationError("bounds must list one (lower, upper) pair per variable")
            for bd in self.bounds:
                if len(bd) != 2:
                    raise ValidationError("each bound must be a (lower, upper) pair")


@dataclass
class LPResult:
    status: str
    value: object = None
    solution: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


class _Tableau:
    """Dense simplex tableau ``[A | b]`` with a separate cost row.

    Columns are ordered structural, slack, artificial.  Bland's rule picks the
    entering and leaving variables so every run is deterministic and cycle
    free.
    """

    def __init__(self, A, b, fld: Field, n_art_start: int):
        self.f = fld
        m, ncols = A.shape
        self.T = fld.zeros((m, ncols + 1))
        # fld.array keeps exact entries as Fractions (int / int would give floats)
        self.T[:, :ncols] = fld.array(A)
        self.T[:, ncols] = fld.array(b)
        self.m = m
        self.ncols = ncols
        self.art_start = n_art_start
        self.basis = list(range(n_art_start, n_art_start + m))
        self.pivots = 0

    def reduced_costs(self, cost):
        cb = np.array([cost[j] for j in self.basis], dtype=self.T.dtype)
        body = self.T[:, : self.ncols]
        if self.m:
            return cost - cb @ body, cb @ self.T[:, self.ncols]
        return cost.copy(), self.f.scalar(0)

    def pivot(self, r, c):
        T = self.T
        T[r] = T[r] / T[r, c]
        col = T[:, c].copy()
        col[r] = 0
        nz = np.flatnonzero(col != 0)
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        if not self.f.exact:
            T[r, c] = 1.0
            T[nz, c] = 0.0
        self.basis[r] = c
        self.pivots += 1

    def run(self, cost, allowed_limit):
        """Minimise ``cost`` over columns ``< allowed_limit``; returns status."""
        f = self.f
        thresh = 0 if f.exact else -f.tol
        while True:
            red, _ = self.reduced_costs(cost)
            mask = red[:allowed_limit] < thresh
            mask[[j for j in self.basis if j < allowed_limit]] = False
            candidates = np.flatnonzero(mask)
            if candidates.size == 0:
                return OPTIMAL
            entering = int(candidates[0])
            col = self.T[:, entering]
            rhs = self.T[:, self.ncols]
            best_r, best_ratio = -1, None
            for r in range(self.m):
                if f.pos(col[r]):
                    ratio = rhs[r] / col[r]
                    if (
                        best_r < 0
                        or ratio < best_ratio - (0 if f.exact else f.tol)
                        or (
                            f.eq(ratio, best_ratio)
                            and self.basis[r] < self.basis[best_r]
                        )
                    ):
                        best_r, best_ratio = r, ratio
            if best_r < 0:
                return UNBOUNDED
            self.pivot(best_r, entering)


def _standardise(lp: LinearProgram, fld: Field):
    """Rewrite ``lp`` as ``min c x, A x = b, x >= 0, b >= 0``.

    Returns the standard form together with the data needed to map a
    standard-form solution back to the original variables.
    """
    n = lp.num_vars
    c0 = fld.array(lp.objective)
    bounds = lp.bounds if lp.bounds is not None else [(None, None)] * n

    # each original variable x_j = shift_j + sum_k coef * z_k
    columns = []  # list of (orig index, sign)
    shift = fld.zeros(n)
    extra_rows = []  # upper-bound rows: (column index, rhs)
    for j, (lo, hi) in enumerate(bounds):
        lo = None if lo is None else fld.scalar(lo)
        hi = None if hi is None else fld.scalar(hi)
        if lo is not None:
            shift[j] = lo
            columns.append((j, 1))
            if hi is not None:
                extra_rows.append((len(columns) - 1, hi - lo))
        elif hi is not None:
            shift[j] = hi
            columns.append((j, -1))
        else:
            columns.append((j, 1))
            columns.append((j, -1))

    rows, rels, rhs = [], [], []
    for con in lp.constraints:
        coeffs = fld.array(con.coeffs)
        row = fld.zeros(len(columns))
        for k, (j, s) in enumerate(columns):
            row[k] = coeffs[j] * s
        rows.append(row)
        rels.append(con.rel)
        rhs.append(fld.scalar(con.rhs) - coeffs @ shift)
    n_orig_rows = len(rows)
    for k, bound in extra_rows:
        row = fld.zeros(len(columns))
        row[k] = fld.scalar(1)
        rows.append(row)
        rels.append(LE)
        rhs.append(bound)

    n_struct = len(columns)
    n_slack = sum(1 for r in rels if r != EQ)
    m = len(rows)
    A = fld.zeros((m, n_struct + n_slack + m))
    b = fld.zeros(m)
    flip = np.ones(m, dtype=int)
    s = n_struct
    for i in range(m):
        A[i, :n_struct] = rows[i]
        if rels[i] == LE:
            A[i, s] = 1
            s += 1
        elif rels[i] == GE:
            A[i, s] = -1
            s += 1
        b[i] = rhs[i]
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            flip[i] = -1
        A[i, n_struct + n_slack + i] = 1
    cost = fld.zeros(A.shape[1])
    for k, (j, sgn) in enumerate(columns):
        cost[k] = c0[j] * sgn
    const = c0 @ shift
    return A, b, cost, const, columns, shift, flip, n_struct + n_slack, n_orig_rows


def solve_lp(lp: LinearProgram, fld=None) -> LPResult:
    """Solve ``lp`` with two-phase simplex and Bland's rule.

    Parameters
    ----------
    lp : LinearProgram
        Problem to solve (minimisation).
    fld : Field or str, optional
        Arithmetic; inferred from the data when omitted.

    Returns
    -------
    LPResult
        ``status`` is one of ``optimal``, ``infeasible``, ``unbounded``.  On an
        optimal solve ``duals`` holds one multiplier per constraint row, signed
        so that ``objective - A.T @ duals`` are the reduced costs.
    """
    lp.validate()
    if fld is None:
        data = list(lp.objective) + [c for con in lp.constraints for c in con.coeffs]
        data += [con.rhs for con in lp.constraints]
        if lp.bounds:
            data += [v for bd in lp.bounds for v in bd if v is not None]
        fld = field_of(data)
    else:
        fld = get_field(fld)

    if lp.bounds is not None:
        for lo, hi in lp.bounds:
            if lo is not None and hi is not None and fld.lt(fld.scalar(hi), fld.scalar(lo)):
                return LPResult(INFEASIBLE)

    A, b, cost, const, columns, shift, flip, art_start, n_orig_rows = _standardise(lp, fld)
    m, ncols = A.shape
    tab = _Tableau(A, b, fld, art_start)

    # phase 1: minimise the sum of artificials
    phase1 = fld.zeros(ncols)
    phase1[art_start:] = fld.scalar(1)
    tab.run(phase1, ncols)
    _, infeas = tab.reduced_costs(phase1)
    if not fld.is_zero(infeas):
        return LPResult(INFEASIBLE, pivots=tab.pivots)

    # drive zero-level artificials out of the basis where possible
    for r in range(m):
        if tab.basis[r] >= art_start:
            for j in range(art_start):
                if not fld.is_zero(tab.T[r, j]) and j not in tab.basis:
                    tab.pivot(r, j)
                    break

    status = tab.run(cost, art_start)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, pivots=tab.pivots)

    z = fld.zeros(ncols)
    for r, j in enumerate(tab.basis):
        z[j] = tab.T[r, ncols]
    x = shift.copy()
    for k, (j, sgn) in enumerate(columns):
        x[j] = x[j] + sgn * z[k]
    value = fld.array(lp.objective) @ x

    red, _ = tab.reduced_costs(cost)
    duals = -red[art_start:] * flip
    return LPResult(OPTIMAL, value, x, duals[:n_orig_rows], tab.pivots)
