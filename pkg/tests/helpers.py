"""Shared fixtures data and small independent oracles for the test-suite."""

from fractions import Fraction as F
from itertools import product

import numpy as np
from scipy.optimize import linprog

from tropoclust.numeric_lp import EXACT_FIELD


def exact(rows):
    return EXACT_FIELD.array(rows)


LOCAL_OPT = [[1, 3, 0], [0, 3, 1], [0, 0, 1], [1, 0, 0]]


def v_alpha(alpha):
    """Columns v1..v6 of the six-point example, returned as rows."""
    a = F(alpha)
    cols = [
        [14, 13, 11 - a / 2, 10, 3, 16],
        [-7, -14, -13 - a / 2, 1, -3, -1],
        [-7, 1, 2 + a, -11, 0, -15],
    ]
    return exact([[cols[r][c] for r in range(3)] for c in range(6)])


def d_ref(x, y):
    """Asymmetric distance written straight from its defining formula."""
    n = len(x)
    return sum(y[i] - x[i] for i in range(n)) + n * max(x[i] - y[i] for i in range(n))


def fw_value_scipy(S):
    """Fermat-Weber value via the primal LP solved by HiGHS (independent of our simplex)."""
    S = np.asarray(S, dtype=float)
    m, n = S.shape
    # variables t (n, free) and M (m, free); M_s + t_i >= s_i
    c = np.concatenate([np.full(n, m), np.full(m, n)])
    A, b = [], []
    for s in range(m):
        for i in range(n):
            row = np.zeros(n + m)
            row[i] = -1
            row[n + s] = -1
            A.append(row)
            b.append(-S[s, i])
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=[(None, None)] * (n + m), method="highs")
    assert res.status == 0
    return res.fun - S.sum()


def fw_grid_min(S, lo=-6, hi=6):
    """Brute-force minimum of the total distance over an integer grid (last coordinate 0)."""
    S = [list(map(F, s)) for s in S]
    n = len(S[0])
    best = None
    for head in product(range(lo, hi + 1), repeat=n - 1):
        t = list(head) + [0]
        v = sum(d_ref(s, t) for s in S)
        best = v if best is None or v < best else best
    return best


def ultrametric_from_heights(N, rng):
    """Random exact ultrametric on N taxa via random merge heights (independent of the tree code)."""
    clusters = [[i] for i in range(N)]
    D = [[F(0)] * N for _ in range(N)]
    h = F(0)
    while len(clusters) > 1:
        i, j = sorted(rng.choice(len(clusters), size=2, replace=False))
        h += F(int(rng.integers(1, 5)))
        for a in clusters[i]:
            for b in clusters[j]:
                D[a][b] = D[b][a] = h
        clusters = [c for k, c in enumerate(clusters) if k not in (i, j)] + [clusters[i] + clusters[j]]
    return [D[a][b] for a in range(N) for b in range(a + 1, N)]


# acceptance results, printed by the terminal-summary hook in conftest.py
ACCEPTANCE_LINES = []


def report(number, ok, title, detail=""):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title}"
    if detail:
        line += f" [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
