from __future__ import annotations

import io
import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from robusthedge.market import (EnumerationSizeError, GridError, GridSpec, PayoffLookupError, asian,
                                build_tree, call, enumerate_paths, eval_payoff, interpolate,
                                load_payoff_table, lookback, path_max, put, table, tail)


def test_enumerate_small_grids():
    paths = enumerate_paths(GridSpec(1, 1, 2, 0))
    assert paths == [(1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1)]
    assert enumerate_paths(GridSpec(1, 2, 1, 0)) == [(1, 0), (1, 1), (1, 2)]


def test_enumerate_count_and_values():
    paths = enumerate_paths(GridSpec(2, 4, 3, 0))
    counter = 0
    for _ in itertools.product(range(5), repeat=3):
        counter += 1
    assert len(paths) == counter == 125
    allowed = {F(0), F(1, 2), F(1), F(3, 2), F(2)}
    assert all(set(p[1:]) <= allowed and p[0] == 1 for p in paths)
    assert paths == sorted(paths)


def test_enumeration_cap_names_the_count():
    with pytest.raises(EnumerationSizeError, match=r"11\^7"):
        enumerate_paths(GridSpec(1, 10, 7, 0), cap=1000)


@pytest.mark.parametrize("kw", [dict(kappa=F(1, 4)), dict(kappa=F(1, 2)), dict(J=1, n=2), dict(M=-1), dict(n=0)])
def test_grid_validation(kw):
    base = dict(n=1, J=2, N=1, kappa=F(1, 10))
    base.update(kw)
    with pytest.raises(GridError):
        GridSpec(**base)


def test_tree_shapes():
    t = build_tree(enumerate_paths(GridSpec(1, 1, 2, 0)))
    assert [len(lv) for lv in t.levels] == [1, 2, 4]
    t = build_tree(enumerate_paths(GridSpec(1, 2, 1, 0)))
    assert [len(lv) for lv in t.levels] == [1, 3]
    t = build_tree(enumerate_paths(GridSpec(1, 2, 2, 0)))
    assert [len(lv) for lv in t.levels] == [1, 3, 9]
    assert t.node_count() == 13


def test_tree_nodes_partition_paths():
    t = build_tree(enumerate_paths(GridSpec(2, 3, 3, 0)))
    for k in range(t.N + 1):
        members = sorted(p for node in t.levels[k] for p in node.paths)
        assert members == list(range(len(t.paths)))
        assert len(t.levels[k]) == 4 ** k
    root = t.levels[0][0]
    assert sum(len(c.paths) for c in t.children(root)) == len(t.paths)


def test_payoff_examples():
    assert eval_payoff(call(1), (1, 0, 2)) == 1
    assert eval_payoff(lookback(), (1, 0, 0)) == 1
    assert eval_payoff(asian(1), (1, 2, 2)) == 1
    assert eval_payoff(put(1), (1, 2, F(1, 2))) == F(1, 2)
    assert eval_payoff(tail(2), (1, 2, 0)) == 4
    assert eval_payoff(tail(3), (1, 2, 0)) == 0


def test_table_lookup_error():
    g = table({(0,): 1, (1,): 2})
    assert eval_payoff(g, (1, 1)) == 2
    with pytest.raises(PayoffLookupError):
        eval_payoff(g, (1, 2))


def test_load_payoff_table_csv():
    text = "s_1,s_2,value\n0,0,1\n0,1,1/2\n1,0,0.25\n1,1,0\n"
    g = load_payoff_table(io.StringIO(text), 2, lipschitz=1)
    assert g.table[(F(0), F(1))] == F(1, 2)
    assert g.table[(F(1), F(0))] == F(1, 4)
    assert g.modulus(F(1, 2)) == F(1, 2)
    with pytest.raises(ValueError, match="columns"):
        load_payoff_table(io.StringIO("0,1\n"), 2)


def test_interpolate_examples():
    g = [F(0), F(1), F(4)]
    assert interpolate(g, F(3, 4), 2) == F(5, 2)
    for k in range(3):
        assert interpolate(g, F(k, 2), 2) == g[k]
    assert interpolate(g, F(7), 2) == 4
    with pytest.raises(ValueError):
        interpolate(g, -0.1, 2)


@settings(max_examples=200, deadline=None)
@given(st.fractions(min_value=0, max_value=3, max_denominator=50))
def test_interpolate_reproduces_linear(x):
    n, J = 2, 6
    g = [F(k, n) for k in range(J + 1)]
    assert interpolate(g, x, n) == x


@settings(max_examples=200, deadline=None)
@given(st.lists(st.fractions(-5, 5, max_denominator=9), min_size=4, max_size=4),
       st.integers(0, 2), st.fractions(0, 1, max_denominator=20), st.fractions(0, 1, max_denominator=20),
       st.fractions(0, 1, max_denominator=20))
def test_interpolate_linear_on_cells(g, cell, a, b, theta):
    n = 3
    x = F(cell, n) + a / n
    y = F(cell, n) + b / n
    lhs = interpolate(g, theta * x + (1 - theta) * y, n)
    rhs = theta * interpolate(g, x, n) + (1 - theta) * interpolate(g, y, n)
    assert lhs == rhs


def test_path_max():
    assert path_max((1, 0, 2)) == 2
    assert path_max((1, 1, 1)) == 1
    rng = random.Random(5)
    for _ in range(100):
        p = tuple(F(rng.randint(0, 20), 4) for _ in range(5))
        m = p[0]
        for s in p:
            m = s if s > m else m
        assert path_max(p) == m


def _sup(a, b):
    return max(abs(x - y) for x, y in zip(a, b))


def test_builtin_payoffs_respect_declared_modulus():
    rng = random.Random(11)
    payoffs = [call(1), put(F(3, 2)), asian(F(1, 2)), lookback()]
    for _ in range(1000):
        a = (F(1),) + tuple(F(rng.randint(0, 40), 10) for _ in range(3))
        b = (F(1),) + tuple(F(rng.randint(0, 40), 10) for _ in range(3))
        d = _sup(a, b)
        for g in payoffs:
            assert abs(eval_payoff(g, a) - eval_payoff(g, b)) <= g.modulus(d)


def test_lookback_is_not_one_lipschitz():
    a, b = (F(1), F(2), F(1)), (F(1), F(3), F(0))
    assert _sup(a, b) == 1
    assert abs(eval_payoff(lookback(), a) - eval_payoff(lookback(), b)) == 2
