"""Tropical k-means++: seeding, Lloyd iterations, restarts and an exact oracle.

Sites are rows of an ``m x n`` array.  Distances always run from the site to
the centroid, ``asym_dist(site, centroid)``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .fermat_weber import as_sites, corrected_tropical_median, fw_value, tropical_median
from .numeric_lp import ValidationError
from .trop_core import asym_dist

log = logging.getLogger(__name__)

MAX_BRUTE_FORCE_SITES = 10


@dataclass
class ClusterOptions:
    """Settings for one clustering run or a batch of restarts.

    ``init`` is ``"kmeans++"`` or a sequence of site indices used as the
    initial centroids.
    """

    k: int
    seed: int = 0
    max_iters: int = 1000
    init: object = "kmeans++"
    tree_mode: bool = False
    restarts: int = 1
    workers: int = 1
    tol: Optional[float] = None


@dataclass
class Clustering:
    assignment: np.ndarray
    centroids: list
    loss: object
    iterations: int
    history: list = field(default_factory=list)
    converged: bool = True
    seed: Optional[int] = None
    init_indices: Optional[list] = None

    @property
    def k(self) -> int:
        return len(self.centroids)

    def clusters(self) -> List[List[int]]:
        return [[int(i) for i in np.flatnonzero(self.assignment == j)] for j in range(self.k)]

    def sizes(self) -> List[int]:
        return [int(np.sum(self.assignment == j)) for j in range(self.k)]

    def partition(self) -> frozenset:
        """Partition of site indices, ignoring cluster labels."""
        return frozenset(frozenset(c) for c in self.clusters() if c)


# ---------------------------------------------------------------------------
# steps
# ---------------------------------------------------------------------------


def _dist_table(S, centroids):
    return [[asym_dist(S[s], c) for c in centroids] for s in range(S.shape[0])]


def seed_kmeanspp(sites, k: int, rng) -> List[int]:
    """Pick ``k`` distinct site indices by k-means++ seeding.

    The first pick is uniform; each later pick has probability proportional
    to the distance from the site to its nearest chosen site (first power,
    not squared).  Chosen sites have distance zero and so are never picked
    again; if every remaining distance is zero the pick is uniform among the
    unchosen sites.
    """
    S = as_sites(sites)
    m = S.shape[0]
    if not 1 <= k <= m:
        raise ValidationError(f"need 1 <= k <= m, got k={k}, m={m}")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    chosen = [int(rng.integers(m))]
    nearest = [asym_dist(S[s], S[chosen[0]]) for s in range(m)]
    while len(chosen) < k:
        weights = np.array([float(d) for d in nearest])
        weights[chosen] = 0.0
        total = weights.sum()
        if total > 0:
            pick = int(rng.choice(m, p=weights / total))
        else:
            free = [s for s in range(m) if s not in chosen]
            pick = free[int(rng.integers(len(free)))]
        chosen.append(pick)
        for s in range(m):
            d = asym_dist(S[s], S[pick])
            if d < nearest[s]:
                nearest[s] = d
    return chosen


def assign(sites, centroids) -> np.ndarray:
    """Index of the closest centroid for each site; ties go to the lowest index."""
    S = as_sites(sites)
    if len(centroids) == 0:
        raise ValidationError("need at least one centroid")
    table = _dist_table(S, centroids)
    out = np.empty(S.shape[0], dtype=int)
    for s, row in enumerate(table):
        best = 0
        for j in range(1, len(row)):
            if row[j] < row[best]:
                best = j
        out[s] = best
    return out


def loss_of(sites, assignment, centroids):
    S = as_sites(sites)
    return sum((asym_dist(S[s], centroids[assignment[s]]) for s in range(S.shape[0])), S[0, 0] * 0)


class MedianCache:
    """Memoises cluster medians by member set; safe to share across runs on one site set."""

    def __init__(self, S, tree_mode: bool, tol=None):
        self.S = S
        self.tree_mode = tree_mode
        self.tol = tol
        self._store: Dict[tuple, np.ndarray] = {}

    def __call__(self, members: Sequence[int]) -> np.ndarray:
        key = tuple(sorted(int(i) for i in members))
        hit = self._store.get(key)
        if hit is None:
            if len(key) == 1:
                hit = self.S[key[0]].copy()
            elif self.tree_mode:
                hit = corrected_tropical_median(self.S[list(key)], True, self.tol).median
            else:
                hit = tropical_median(self.S[list(key)], self.tol).median
            self._store[key] = hit
        return hit


def update_centroids(sites, assignment, k: int, tree_mode: bool = False, median=None) -> list:
    """Tropical median of every cluster (the M-step)."""
    S = as_sites(sites)
    median = median or MedianCache(S, tree_mode)
    out = []
    for j in range(k):
        members = np.flatnonzero(assignment == j)
        if members.size == 0:
            raise ValidationError(f"cluster {j} is empty")
        out.append(median(members))
    return out


def _max_centroid(S, members):
    return S[list(members)].max(axis=0)


def _repair_empty(S, assignment, centroids):
    """Reseed empty clusters with the site farthest from its own centroid."""
    k = len(centroids)
    while True:
        sizes = np.bincount(assignment, minlength=k)
        empty = np.flatnonzero(sizes == 0)
        if empty.size == 0:
            return
        j = int(empty[0])
        best, best_d = -1, None
        for s in range(S.shape[0]):
            if sizes[assignment[s]] < 2:
                continue
            d = asym_dist(S[s], centroids[assignment[s]])
            if best < 0 or d > best_d:
                best, best_d = s, d
        centroids[j] = S[best].copy()
        assignment[best] = j


# ---------------------------------------------------------------------------
# Lloyd iterations
# ---------------------------------------------------------------------------


def _initial_indices(S, opts: ClusterOptions, rng) -> List[int]:
    if isinstance(opts.init, str):
        if opts.init != "kmeans++":
            raise ValidationError(f"unknown init mode {opts.init!r}")
        return seed_kmeanspp(S, opts.k, rng)
    idx = [int(i) for i in opts.init]
    if len(idx) != opts.k:
        raise ValidationError("explicit init must list k site indices")
    if any(not 0 <= i < S.shape[0] for i in idx):
        raise ValidationError("init index out of range")
    return idx


def _lloyd(S, opts: ClusterOptions, centroid_fn: Callable, rng) -> Clustering:
    m = S.shape[0]
    if not 1 <= opts.k <= m:
        raise ValidationError(f"need 1 <= k <= m, got k={opts.k}, m={m}")
    init = _initial_indices(S, opts, rng)
    centroids = [S[i].copy() for i in init]
    history = []
    previous = None
    iterations = 0
    converged = False
    while iterations < opts.max_iters:
        assignment = assign(S, centroids)
        _repair_empty(S, assignment, centroids)
        iterations += 1
        history.append(loss_of(S, assignment, centroids))
        if previous is not None and np.array_equal(assignment, previous):
            converged = True
            break
        centroids = [centroid_fn(np.flatnonzero(assignment == j)) for j in range(opts.k)]
        history.append(loss_of(S, assignment, centroids))
        previous = assignment
    if not converged:
        log.warning("clustering did not converge within %d iterations", opts.max_iters)
    return Clustering(
        assignment=assignment,
        centroids=centroids,
        loss=history[-1],
        iterations=iterations,
        history=history,
        converged=converged,
        seed=opts.seed,
        init_indices=init,
    )


def lloyd(sites, opts: ClusterOptions, median=None) -> Clustering:
    """Tropical k-means: alternate nearest-centroid assignment and tropical medians.

    Stops once an assignment step leaves every site where it was.
    ``history`` holds the loss after every half-step (assignment, update,
    assignment, ...), so it never increases; ``iterations`` counts
    assignment steps.
    """
    S = as_sites(sites)
    rng = np.random.default_rng(opts.seed)
    median = median or MedianCache(S, opts.tree_mode, opts.tol)
    return _lloyd(S, opts, median, rng)


def lloyd_maxvariant(sites, opts: ClusterOptions) -> Clustering:
    """Same loop with the coordinatewise maximum as centroid."""
    S = as_sites(sites)
    rng = np.random.default_rng(opts.seed)
    return _lloyd(S, opts, lambda members: _max_centroid(S, members), rng)


# ---------------------------------------------------------------------------
# restarts
# ---------------------------------------------------------------------------


@dataclass
class RestartSummary:
    best: Clustering
    runs: list  # every Clustering, sorted by (loss, run index)
    run_seeds: list  # seed of run r, in run order
    run_ids: list  # run index of each entry of ``runs``

    @property
    def losses(self) -> list:
        return [r.loss for r in self.runs]

    def in_run_order(self) -> list:
        out = [None] * len(self.runs)
        for r, res in zip(self.run_ids, self.runs):
            out[r] = res
        return out


def run_seed(seed: int, run: int) -> int:
    """Seed of restart ``run``, derived deterministically from the base seed."""
    return int(np.random.SeedSequence([seed, run]).generate_state(1)[0])


def _one_run(args):
    S, opts, run, seed = args
    sub = ClusterOptions(**{**opts.__dict__, "seed": seed, "restarts": 1})
    res = lloyd(S, sub)
    return run, res


def kmeanspp(sites, opts: ClusterOptions, median=None) -> RestartSummary:
    """Best of ``opts.restarts`` independent k-means++ runs.

    Runs are seeded from ``(opts.seed, run index)``; results are sorted by
    ``(loss, run index)`` so the outcome does not depend on ``workers``.
    """
    S = as_sites(sites)
    seeds = [run_seed(opts.seed, r) for r in range(max(1, opts.restarts))]
    jobs = [(S, opts, r, s) for r, s in enumerate(seeds)]
    if opts.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts.workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        median = median or MedianCache(S, opts.tree_mode, opts.tol)
        results = []
        for S_, o, r, s in jobs:
            sub = ClusterOptions(**{**o.__dict__, "seed": s, "restarts": 1})
            results.append((r, lloyd(S_, sub, median)))
    results.sort(key=lambda item: (item[1].loss, item[0]))
    runs = [res for _, res in results]
    return RestartSummary(best=runs[0], runs=runs, run_seeds=seeds, run_ids=[r for r, _ in results])


# ---------------------------------------------------------------------------
# exact oracle
# ---------------------------------------------------------------------------


def _partitions(m: int, k: int):
    """Set partitions of ``range(m)`` into at most ``k`` blocks (restricted growth strings)."""
    labels = [0] * m

    def rec(i, used):
        if i == m:
            yield list(labels)
            return
        for lab in range(min(used + 1, k)):
            labels[i] = lab
            yield from rec(i + 1, max(used, lab + 1))

    if m:
        yield from rec(1, 1)


def brute_force_optimal(sites, k: int) -> Clustering:
    """Globally optimal clustering by enumerating every partition into at most ``k`` blocks."""
    S = as_sites(sites)
    m = S.shape[0]
    if m > MAX_BRUTE_FORCE_SITES:
        raise ValidationError(f"brute force is limited to {MAX_BRUTE_FORCE_SITES} sites")
    if not 1 <= k <= m:
        raise ValidationError(f"need 1 <= k <= m, got k={k}, m={m}")
    block_value: Dict[tuple, object] = {}

    def value(block):
        v = block_value.get(block)
        if v is None:
            v = fw_value(S[list(block)]) if len(block) > 1 else S[0, 0] * 0
            block_value[block] = v
        return v

    best_labels, best_loss = None, None
    for labels in _partitions(m, k):
        blocks = {}
        for s, lab in enumerate(labels):
            blocks.setdefault(lab, []).append(s)
        total = sum((value(tuple(b)) for b in blocks.values()), S[0, 0] * 0)
        if best_loss is None or total < best_loss:
            best_labels, best_loss = labels, total
    assignment = np.array(best_labels, dtype=int)
    used = int(assignment.max()) + 1
    centroids = [tropical_median(S[assignment == j]).median for j in range(used)]
    return Clustering(assignment, centroids, best_loss, iterations=0, history=[best_loss])


def competitive_factor(result, oracle):
    """``result.loss / oracle.loss``; 0/0 counts as 1 and x/0 as infinity."""
    a = result.loss if hasattr(result, "loss") else result
    b = oracle.loss if hasattr(oracle, "loss") else oracle
    if b == 0:
        return 1.0 if a == 0 else math.inf
    return a / b
