from fractions import Fraction as F
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import exact, ultrametric_from_heights
from tropoclust.numeric_lp import ValidationError
from tropoclust.phylo import (
    NewickError,
    NotUltrametricError,
    PairIndexMap,
    clade_support,
    coarse_type,
    cophenetic,
    depth_stats,
    emit_newick,
    is_eps_ultrametric,
    is_ultrametric,
    isomorphic,
    min_eps,
    mrca_depth,
    parse_coarse_type,
    parse_newick,
    random_equidistant_tree,
    read_newick_file,
    resolution_gap,
    subdominant_ultrametric,
    tree_from_ultrametric,
)
from tropoclust.trop_core import trop_combine

EXAMPLE = "(((a:1,b:1):1,c:2):1,d:3);"


# --- Newick -----------------------------------------------------------------


def test_parse_example_tree():
    t = parse_newick(EXAMPLE, "exact")
    assert t.taxa == ["a", "b", "c", "d"]
    assert t.height() == 3
    assert t.is_equidistant()
    assert emit_newick(t) == EXAMPLE


def test_parse_variants():
    cherry = parse_newick("(a:1,b:1);")
    assert cherry.taxa == ["a", "b"]
    skew = parse_newick("((a:1,b:2):1,c:2);")
    assert not skew.is_equidistant()
    # canonical order sorts children by smallest label; root length ignored
    t = parse_newick(" (d:3,(c:2,(b:1,a:1):1):1):5 ; ")
    assert emit_newick(t) == EXAMPLE
    assert emit_newick(parse_newick("(a:-0.5,b:1/2);", "exact")) == "(a:-0.5,b:0.5);"
    assert emit_newick(parse_newick("(a:1/3,b:1/3);", "exact")) == "(a:1/3,b:1/3);"


@pytest.mark.parametrize(
    "text",
    ["", "(a:1,b:1)", "(a:1,a:1);", "(a:1,b);", "(a:1,b:x);", "((a:1):1,b:2);", "(a:1,b:1);x", "a;", "(a:1,(b:1,c:1);"],
)
def test_parse_errors(text):
    with pytest.raises(NewickError):
        parse_newick(text)


def test_parse_error_position_and_missing_lengths():
    with pytest.raises(NewickError) as info:
        parse_newick("(a:1,b:1,);")
    assert info.value.position == 9
    t = parse_newick("((a,b),c);", allow_missing_lengths=True)
    assert t.taxa == ["a", "b", "c"]


def test_read_file_reports_line(tmp_path):
    p = tmp_path / "t.nwk"
    p.write_text("(a:1,b:1);\n\n(a:1,b:1;\n")
    with pytest.raises(NewickError, match=r"t\.nwk:3"):
        read_newick_file(p)


# --- cophenetic vectors -----------------------------------------------------


def test_pair_index_map():
    pm = PairIndexMap(["d", "b", "a", "c"])
    assert pm.pairs == [("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d")]
    assert pm.index("d", "b") == 4
    for k in range(pm.n):
        assert pm.index(*pm.pair(k)) == k
    with pytest.raises(ValidationError):
        pm.index("a", "z")


def test_cophenetic_examples():
    assert list(cophenetic(parse_newick(EXAMPLE, "exact")).values) == [2, 4, 6, 4, 6, 6]
    assert list(cophenetic(parse_newick("(a:1,b:1);", "exact")).values) == [2]
    assert list(cophenetic(parse_newick("(a:1,b:1,c:1);", "exact")).values) == [2, 2, 2]
    with pytest.raises(NotUltrametricError):
        cophenetic(parse_newick("((a:1,b:2):1,c:2);"))


def test_tree_from_ultrametric_examples():
    assert emit_newick(tree_from_ultrametric(exact([2, 4, 6, 4, 6, 6]))) == EXAMPLE
    assert emit_newick(tree_from_ultrametric(exact([2]))) == "(a:1,b:1);"
    assert emit_newick(tree_from_ultrametric(exact([2, 2, 2]))) == "(a:1,b:1,c:1);"
    with pytest.raises(NotUltrametricError):
        tree_from_ultrametric(exact([1, 2, 3]))


@given(st.integers(3, 7), st.integers(0, 10**6))
def test_round_trip(N, seed):
    t = random_equidistant_tree(N, F(1, 10), 1, seed, field="exact")
    u = cophenetic(t)
    back = tree_from_ultrametric(u)
    assert isomorphic(t, back)
    assert list(cophenetic(back).values) == list(u.values)
    assert isomorphic(parse_newick(emit_newick(t), "exact"), t)


# --- epsilon ultrametrics and corrections ----------------------------------


def test_min_eps_examples():
    assert min_eps(exact([2, 4, 6, 4, 6, 6])) == 0
    assert is_eps_ultrametric(exact([2, 4, 6, 4, 6, 6]), 0)
    e = min_eps(np.array([2, 4, 6, 4, 6, 5.9]))
    assert e == pytest.approx(1 - 5.9 / 6)
    assert is_ultrametric(exact([7]))
    with pytest.raises(ValidationError):
        min_eps(exact([1, 2]))


def test_subdominant_examples():
    u = exact([2, 4, 6, 4, 6, 6])
    assert list(subdominant_ultrametric(u).values) == list(u)
    out = subdominant_ultrametric(np.array([2, 4, 6, 4, 6, 5.9])).values
    assert out.tolist() == pytest.approx([2, 4, 5.9, 4, 5.9, 5.9])
    assert list(subdominant_ultrametric(exact([1, 2, 3])).values) == [1, 2, 2]


def _grid_ultrametrics(N, K):
    pm = PairIndexMap.default(N * (N - 1) // 2)
    for vals in product(range(K + 1), repeat=pm.n):
        v = exact(list(vals))
        if is_ultrametric(v, pm):
            yield v


GRID4 = list(_grid_ultrametrics(4, 4))


@given(st.lists(st.integers(0, 4), min_size=6, max_size=6))
def test_subdominant_is_maximal(vals):
    """Brute force over the integer grid: every ultrametric below u is below the closure."""
    u = exact(vals)
    sub = subdominant_ultrametric(u).values
    assert is_ultrametric(sub)
    assert all(sub <= u)
    for v in GRID4:
        if all(v <= u):
            assert all(v <= sub)


# --- statistics ---------------------------------------------------------------


def test_depth_stats_examples():
    st_ = depth_stats(exact([2, 4, 6, 4, 6, 6]))
    assert (st_.height, st_.nu, st_.eta) == (3, 1, 2)
    st_ = depth_stats(exact([2, 4, 4]))
    assert (st_.height, st_.nu, st_.eta) == (2, 1, 1)
    with pytest.raises(ValidationError):
        depth_stats(exact([2, 2, 2]))


def test_coarse_type_examples():
    assert coarse_type(exact([2, 4, 6, 4, 6, 6])) == (("a", "b", "c"), ("d",))
    assert coarse_type(exact([2, 2, 2])) == (("a",), ("b",), ("c",))
    assert coarse_type(exact([2, 4, 4])) == (("a", "b"), ("c",))
    assert parse_coarse_type("c|b,a") == (("a", "b"), ("c",))
    with pytest.raises(ValidationError):
        parse_coarse_type("a,b,c")


def test_clade_and_mrca():
    u = exact([2, 4, 6, 4, 6, 6])
    assert clade_support([u], ["a", "b"]) == 1.0
    assert clade_support([u], ["a", "d"]) == 0.0
    with pytest.raises(ValidationError):
        clade_support([u], ["a", "b", "c", "d"])
    with pytest.raises(ValidationError):
        clade_support([u], ["a", "z"])
    assert mrca_depth(u, "a", "b") == 2
    assert mrca_depth(u, "a", "d") == 0
    assert mrca_depth(u, "a", "c") == 1


def test_resolution_gap_examples():
    assert resolution_gap(exact([2, 4, 4])) == 2
    assert resolution_gap(exact([2, 2, 2])) == 0
    assert resolution_gap(exact([2, 4, 6, 4, 6, 6])) == 2


@given(st.integers(4, 7), st.integers(0, 10**6))
def test_coarse_type_blocks(N, seed):
    u = exact(ultrametric_from_heights(N, np.random.default_rng(seed)))
    ct = coarse_type(u)
    assert len(ct) >= 2
    pm = PairIndexMap.default(len(u))
    top = max(u)
    # every cross-block pair sits at the maximum
    for i, A in enumerate(ct):
        for B in ct[i + 1 :]:
            assert all(u[pm.index(a, b)] == top for a in A for b in B)


@given(st.integers(0, 10**6), st.fractions(-5, 5), st.fractions(-5, 5))
def test_coarse_type_class_is_tropically_convex(seed, lam, mu):
    rng = np.random.default_rng(seed)
    ct = (("a", "b"), ("c", "d", "e"))
    s = cophenetic(random_equidistant_tree(5, F(1, 10), 1, rng, coarse_type=ct, field="exact")).values
    t = cophenetic(random_equidistant_tree(5, F(1, 10), 2, rng, coarse_type=ct, field="exact")).values
    assert coarse_type(trop_combine([s, t], [lam, mu])) == ct


# --- generator ---------------------------------------------------------------


def test_generator_is_deterministic_and_bounded():
    a = random_equidistant_tree(4, 0.15, 1, 7)
    b = random_equidistant_tree(4, 0.15, 1, 7)
    assert emit_newick(a) == emit_newick(b)
    for seed in range(200):
        t = random_equidistant_tree(4, F(15, 100), 1, seed, field="exact")
        u = cophenetic(t)
        assert is_ultrametric(u)
        s = depth_stats(u)
        assert s.height == 1 and s.nu > F(15, 100) and s.eta <= 1
    three = random_equidistant_tree(3, 0.1, 1, 3)
    assert sum(1 for n in three.root.preorder() if not n.is_leaf()) == 2
    with pytest.raises(ValidationError):
        random_equidistant_tree(4, 1, 1, 0)
    with pytest.raises(ValidationError):
        random_equidistant_tree(4, 0.1, 1, 0, coarse_type=parse_coarse_type("a|b|c,d"))


def test_generator_respects_coarse_type():
    ct = parse_coarse_type("a,c|b,d")
    for seed in range(20):
        t = random_equidistant_tree(4, 0.15, 1, seed, coarse_type=ct)
        assert coarse_type(cophenetic(t)) == ct
