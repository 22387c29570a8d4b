from collections import Counter
from fractions import Fraction as F
from math import log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import LOCAL_OPT, exact, v_alpha
from tropoclust.clustering import (
    ClusterOptions,
    _partitions,
    assign,
    brute_force_optimal,
    competitive_factor,
    kmeanspp,
    lloyd,
    lloyd_maxvariant,
    loss_of,
    seed_kmeanspp,
    update_centroids,
)
from tropoclust.fermat_weber import fw_value, total_distance
from tropoclust.numeric_lp import ValidationError
from tropoclust.trop_core import asym_dist, torus_equal

int_sites = st.integers(2, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-4, 4), min_size=n, max_size=n), min_size=2, max_size=6)
)


def test_assign_examples():
    S = exact(LOCAL_OPT)
    assert assign(S, [S[0], S[1]]).tolist() == [0, 1, 1, 0]
    assert assign(S, [S[2]]).tolist() == [0, 0, 0, 0]
    # tie: v4 is at distance 3 from both v1 and v3
    assert assign(S[3:], [S[0], S[2]]).tolist() == [0]


def test_update_centroids():
    S = exact(LOCAL_OPT)
    cents = update_centroids(S, np.array([0, 0, 1, 1]), 2)
    assert total_distance(S[:2], cents[0]) == 2
    cents = update_centroids(S, np.array([0, 1, 1, 1]), 2)
    assert (cents[0] == S[0]).all()
    V = v_alpha(2)
    c = update_centroids(V, np.array([0, 0, 0, 0, 0, 1]), 2)
    assert torus_equal(c[0], exact([9, -6, -3]))
    with pytest.raises(ValidationError):
        update_centroids(S, np.array([0, 0, 0, 0]), 2)


def test_local_optimum():
    S = exact(LOCAL_OPT)
    res = lloyd(S, ClusterOptions(k=2, init=[0, 1]))
    assert res.partition() == {frozenset({0, 3}), frozenset({1, 2})}
    assert res.loss == 6
    assert res.converged
    best = brute_force_optimal(S, 2)
    assert best.loss == 4
    assert best.partition() == {frozenset({0, 1}), frozenset({2, 3})}
    assert competitive_factor(res, best) == F(3, 2)


def test_brute_force_edges():
    S = exact(LOCAL_OPT)
    assert brute_force_optimal(S, 4).loss == 0
    assert brute_force_optimal(S, 1).loss == fw_value(S)
    with pytest.raises(ValidationError):
        brute_force_optimal(exact([[0, 0]] * 11), 2)


def test_partition_enumeration_counts():
    # Stirling numbers: S(5,1)+S(5,2)+S(5,3) = 1 + 15 + 25
    assert sum(1 for _ in _partitions(5, 3)) == 41
    assert len({tuple(p) for p in _partitions(6, 6)}) == 203  # Bell(6)


def test_competitive_factor_edges():
    assert competitive_factor(0, 0) == 1.0
    assert competitive_factor(1, 0) == float("inf")
    assert competitive_factor(F(6), F(4)) == F(3, 2)


def test_v_alpha_first_a_step():
    V = v_alpha(2)
    first = assign(V, [V[3], V[5]])
    assert first.tolist() == [0, 0, 0, 0, 0, 1]


def test_seeding_distribution():
    S = exact(LOCAL_OPT)
    # distances to v1 from v1..v4: 0, 3, 6, 3
    assert [asym_dist(S[s], S[0]) for s in range(4)] == [0, 3, 6, 3]
    counts = Counter()
    for seed in range(10_000):
        pick = seed_kmeanspp(S, 2, np.random.default_rng(seed))
        if pick[0] == 0:
            counts[pick[1]] += 1
    total = sum(counts.values())
    assert counts[0] == 0
    for idx, p in [(1, 0.25), (2, 0.5), (3, 0.25)]:
        assert abs(counts[idx] / total - p) < 4 * (p * (1 - p) / total) ** 0.5


def test_seeding_edge_cases():
    S = exact(LOCAL_OPT)
    assert sorted(seed_kmeanspp(S, 4, 0)) == [0, 1, 2, 3]
    assert len(seed_kmeanspp(S, 1, 0)) == 1
    assert seed_kmeanspp(S, 3, 5) == seed_kmeanspp(S, 3, 5)
    with pytest.raises(ValidationError):
        seed_kmeanspp(S, 5, 0)
    same = exact([[1, 2, 3]] * 4)
    assert sorted(seed_kmeanspp(same, 4, 1)) == [0, 1, 2, 3]


@settings(max_examples=25)
@given(int_sites, st.integers(1, 3), st.integers(0, 10**6))
def test_lloyd_invariants(rows, k, seed):
    S = exact(rows)
    k = min(k, len(rows))
    res = lloyd(S, ClusterOptions(k=k, seed=seed))
    assert res.converged
    assert all(a >= b for a, b in zip(res.history, res.history[1:]))
    assert res.loss == loss_of(S, res.assignment, res.centroids)
    assert res.loss >= brute_force_optimal(S, k).loss
    # the max centroid is not a loss minimiser, so only consistency is checked
    mx = lloyd_maxvariant(S, ClusterOptions(k=k, seed=seed, max_iters=50))
    assert mx.loss == loss_of(S, mx.assignment, mx.centroids)


def test_max_variant_and_trivial_runs():
    same = exact([[1, 2, 3]] * 4)
    res = lloyd_maxvariant(same, ClusterOptions(k=1))
    assert res.iterations == 1 or res.iterations == 2
    assert res.loss == 0
    S = exact(LOCAL_OPT)
    res = lloyd_maxvariant(S, ClusterOptions(k=4, init=[0, 1, 2, 3]))
    assert [list(c) for c in res.centroids] == [list(s) for s in S]


def test_empty_cluster_repair():
    # two identical centroids: the second cluster starts empty and is reseeded
    S = exact([[0, 0, 0], [0, 0, 0], [0, 5, 0]])
    res = lloyd(S, ClusterOptions(k=2, init=[0, 1]))
    assert sorted(res.sizes()) == [1, 2]
    assert res.loss == 0


def test_option_validation():
    S = exact(LOCAL_OPT)
    with pytest.raises(ValidationError):
        lloyd(S, ClusterOptions(k=5))
    with pytest.raises(ValidationError):
        lloyd(S, ClusterOptions(k=2, init=[0]))
    with pytest.raises(ValidationError):
        lloyd(S, ClusterOptions(k=2, init="random"))


def test_nonconvergence_flag():
    V = v_alpha(2)
    res = lloyd(V, ClusterOptions(k=2, init=[3, 5], max_iters=1))
    assert not res.converged


def test_restarts_are_schedule_independent():
    rng = np.random.default_rng(0)
    S = rng.integers(-5, 6, (8, 3)).astype(float)
    one = kmeanspp(S, ClusterOptions(k=2, seed=4, restarts=6))
    two = kmeanspp(S, ClusterOptions(k=2, seed=4, restarts=6, workers=2))
    assert one.losses == two.losses
    assert one.run_ids == two.run_ids
    assert (one.best.assignment == two.best.assignment).all()
    assert one.best.loss == min(one.losses)


def test_competitive_bound_small():
    rng = np.random.default_rng(11)
    n, k = 3, 2
    bound = 2 * n * (2 + log(k))
    for _ in range(5):
        S = exact(rng.integers(-5, 6, (6, n)).tolist())
        opt = brute_force_optimal(S, k)
        summary = kmeanspp(S, ClusterOptions(k=k, seed=1, restarts=20))
        mean = sum(float(r.loss) for r in summary.runs) / 20
        assert competitive_factor(mean, float(opt.loss)) <= bound


def test_v_alpha_second_a_step_moves_v4():
    """After the first update v4 is closer to v6 than to the median of v1..v5."""
    V = v_alpha(2)
    med = exact([9, -6, -3])
    assert asym_dist(V[3], med) == 21
    assert asym_dist(V[3], V[5]) == 12
    res = lloyd(V, ClusterOptions(k=2, init=[3, 5]))
    assert res.partition() == {frozenset({0, 1, 2, 4}), frozenset({3, 5})}
