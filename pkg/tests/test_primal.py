from __future__ import annotations

import io
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from instances import arbitrage_pricing, instance_a, random_instances
from robusthedge.dual import solve_dual, solve_penalty_dual
from robusthedge.lp import primal_residual, solve_exact
from robusthedge.market import (GridSpec, build_tree, call, constant, enumerate_paths, eval_payoff,
                                interpolate, lookback, put)
from robusthedge.pricing import CallQuotes, MeasureSet, price_static
from robusthedge.primal import (Portfolio, build_semistatic_lp, lift_portfolio, lifting_budget,
                                portfolio_from_vector, portfolio_value, read_portfolio_csv, solve_constrained, solve_primal,
                                verify_arbitrage, write_portfolio_csv)


def one_period(g_root, f=None, pts=(0, 1, 2)):
    root = (F(1),)
    static = {F(x): (f(F(x)) if f else F(0)) for x in pts}
    return Portfolio({root: g_root}, {root: max(g_root, 0)}, {root: max(-g_root, 0)}, static, None)


def test_value_static_only():
    grid = GridSpec(1, 2, 2, F(1, 10))
    c = F(7, 3)
    tree = build_tree(enumerate_paths(grid))
    pf = Portfolio({n.prefix: F(0) for n in tree.nodes()}, {n.prefix: F(0) for n in tree.nodes()},
                   {n.prefix: F(0) for n in tree.nodes()}, {x: c for x in grid.points}, None)
    assert all(portfolio_value(pf, p, grid) == c for p in tree.paths)


def test_value_single_trade_with_cost():
    grid = GridSpec(1, 2, 1, F(1, 10))
    assert portfolio_value(one_period(F(1)), (F(1), F(2)), grid) == F(9, 10)


def test_value_frictionless_linear_gain():
    grid = GridSpec(1, 2, 1, 0)
    a = F(-5, 3)
    for s in grid.points:
        assert portfolio_value(one_period(a), (F(1), s), grid) == a * (s - 1)


def test_cash_replication():
    grid, _, P = instance_a()
    res = solve_primal(grid, constant(5), P)
    assert res.value == 5
    assert solve_primal(grid, constant(0), P).value == 0


@pytest.mark.parametrize("exact", [True, False])
def test_instance_a_value(exact):
    grid, G, P = instance_a()
    res = solve_primal(grid, G, P, exact=exact)
    assert res.status == "optimal"
    if exact:
        assert res.value == F(1, 4)
        assert min(res.slacks) == 0
        assert all(s >= 0 for s in res.slacks)
    else:
        assert res.value == pytest.approx(0.25, abs=1e-12)
        assert min(res.slacks) >= -1e-8


def test_arbitrage_gives_verified_ray():
    grid, G, _ = instance_a()
    P = arbitrage_pricing(grid)
    res = solve_primal(grid, G, P)
    assert res.status == "arbitrage-unbounded"
    assert res.ray_check.valid and res.ray_slope < 0
    assert verify_arbitrage(res, grid, P)
    # the ray portfolio dominates zero on every path and costs less than zero
    pf = res.ray_portfolio
    assert all(portfolio_value(pf, p, grid) >= 0 for p in enumerate_paths(grid))
    assert price_static(P, [pf.static[x] for x in grid.points]) < 0


def test_frictionless_fixed_marginal_value():
    grid = GridSpec(2, 4, 2, 0)
    mu = [F(1, 10), F(1, 5), F(2, 5), F(1, 5), F(1, 10)]  # mean 1
    P = MeasureSet(grid.points, [mu])
    G = call(F(1, 2))
    expect = sum(w * max(x - F(1, 2), 0) for x, w in zip(grid.points, mu))
    assert solve_primal(grid, G, P).value == expect


def test_constrained_examples():
    grid = GridSpec(1, 2, 2, F(1, 10), M=F(0))
    G = lookback()
    paths = enumerate_paths(grid)
    assert solve_constrained(grid, G).value == max(eval_payoff(G, p) for p in paths)
    for M in (0, 1, 10):
        assert solve_constrained(grid.replace(M=M), constant(F(3, 2))).value == F(3, 2)


def test_constrained_matches_penalty_on_instance_a_payoff():
    grid, G, _ = instance_a(M=F(10))
    assert solve_constrained(grid, G).value == solve_penalty_dual(grid, G).value


def test_constrained_requires_finite_M():
    grid, G, _ = instance_a()
    with pytest.raises(ValueError):
        solve_constrained(grid, G)


def test_optimal_portfolios_are_normal_and_dominating():
    for inst in random_instances(12, seed=21):
        res = solve_primal(inst.grid, inst.payoff, inst.pricing)
        assert res.status == "optimal", inst.label
        pf = res.portfolio
        assert pf.is_normal()
        assert all(s >= 0 for s in res.slacks)
        if inst.grid.M is not None:
            assert all(pf.u[k] + pf.w[k] <= inst.grid.M for k in pf.u)


def test_normalized_solution_stays_feasible_with_same_cost():
    grid = GridSpec(1, 2, 2, F(1, 10), M=F(5))
    P = MeasureSet(grid.points, [[F(1, 4), F(1, 2), F(1, 4)]])
    lp = build_semistatic_lp(grid, lookback(), P)
    sol = solve_exact(lp)
    x = list(sol.x)
    # shift the static leg up by enough cash to pay for extra round trips
    bump = F(1)
    cash = 2 * grid.kappa * grid.ceiling * bump * grid.N
    for i in range(len(grid.points)):
        x[lp.var_index(f"f[{i}]")] += cash
    x[lp.var_index("cost")] += cash
    for g, u, w in lp.meta["ids"].values():
        x[u] += bump
        x[w] += bump
    assert primal_residual(lp, x) == 0
    inflated = lp.objective_value(x)
    pf = portfolio_from_vector(lp, x).normalized()
    for pre, (g, u, w) in lp.meta["ids"].items():
        x[u], x[w] = pf.u[pre], pf.w[pre]
    assert primal_residual(lp, x) == 0
    assert lp.objective_value(x) == inflated == sol.objective + cash


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.fractions(0, 5, max_denominator=7), st.fractions(0, 5, max_denominator=7)),
                min_size=2, max_size=2))
def test_normalization_preserves_increments_and_raises_value(uw):
    grid = GridSpec(1, 2, 2, F(1, 10))
    root, child = (F(1),), (F(1), F(2))
    (u0, w0), (u1, w1) = uw
    g0 = u0 - w0
    g1 = g0 + u1 - w1
    pf = Portfolio({root: g0, child: g1}, {root: u0, child: u1}, {root: w0, child: w1},
                   {x: F(0) for x in grid.points}, None)
    nf = pf.normalized()
    assert nf.is_normal()
    for pre in (root, child):
        assert nf.u[pre] - nf.w[pre] == pf.u[pre] - pf.w[pre]
    # the LP-side value charges u + w, which can only drop
    path = (F(1), F(2), F(0))
    lp_value = lambda p: (p.gamma[root] * (path[1] - path[0]) + p.gamma[child] * (path[2] - path[1])
                          - grid.kappa * (path[0] * (p.u[root] + p.w[root]) + path[1] * (p.u[child] + p.w[child])))
    assert lp_value(nf) >= lp_value(pf)


def test_monotone_in_M():
    grid = GridSpec(1, 2, 2, F(1, 10))
    P = MeasureSet(grid.points, [[F(1, 4), F(1, 2), F(1, 4)]])
    vals = [solve_primal(grid.replace(M=M), lookback(), P).value for M in (0, 1, 5, 1000)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_monotone_in_kappa():
    for inst in random_instances(6, seed=5):
        vals = [solve_primal(inst.grid.replace(kappa=k), inst.payoff, inst.pricing).value
                for k in (0, F(1, 20), F(1, 10), F(1, 5))]
        if None in vals:
            continue
        assert all(b >= a for a, b in zip(vals, vals[1:])), inst.label


def _optimal_portfolio(M=F(2)):
    grid = GridSpec(2, 4, 2, F(1, 10), M=M)
    P = MeasureSet(grid.points, [[F(1, 10), F(1, 5), F(2, 5), F(1, 5), F(1, 10)]])
    G = put(1)
    res = solve_primal(grid, G, P)
    assert res.status == "optimal"
    return grid, G, res.portfolio


def test_lift_on_grid_equals_grid_value():
    grid, G, pf = _optimal_portfolio()
    for p in enumerate_paths(grid):
        lifted = lift_portfolio(pf, p, grid)
        assert lifted.value == portfolio_value(pf, p, grid)
        assert lifted.warning is None


def test_lift_constant_path_hand_value():
    grid, G, pf = _optimal_portfolio()
    omega = (F(1),) * (grid.N + 1)
    f = [pf.static[x] for x in grid.points]
    cost, prev = F(0), F(0)
    for k in range(grid.N):
        g = pf.gamma[omega[: k + 1]]
        cost += grid.kappa * abs(g - prev)
        prev = g
    assert lift_portfolio(pf, omega, grid).value == interpolate(f, F(1), grid.n) - cost


def test_lift_budget_on_random_continuum_paths():
    grid, G, pf = _optimal_portfolio()
    budget = float(lifting_budget(grid, G))
    rng = random.Random(9)
    top = float(grid.ceiling)
    for _ in range(1000):
        omega = (1.0,) + tuple(rng.uniform(0, top) for _ in range(grid.N))
        lifted = lift_portfolio(pf, omega, grid)
        assert lifted.value >= float(eval_payoff(G, omega)) - budget - 1e-9


def test_lift_warns_outside_grid():
    grid, G, pf = _optimal_portfolio()
    res = lift_portfolio(pf, (1.0, 5.0, 1.0), grid)
    assert res.warning is not None and "grid" in res.warning


def test_portfolio_csv_round_trip():
    grid, G, pf = _optimal_portfolio()
    buf = io.StringIO()
    write_portfolio_csv(pf, buf)
    text = buf.getvalue()
    assert text.startswith("depth,prefix,gamma,u,w\n")
    assert "\ns_N,f\n" in text
    back = read_portfolio_csv(io.StringIO(text))
    assert (back.gamma, back.u, back.w, back.static) == (pf.gamma, pf.u, pf.w, pf.static)


def test_call_quote_primal_against_quoted_call():
    grid = GridSpec(1, 2, 1, F(1, 10))
    P = CallQuotes(grid.points, [(1, F(1, 5), F(3, 10))])
    res = solve_primal(grid, call(1), P)
    # buying the quoted call at its ask replicates the claim, so the ask caps the value
    assert res.value <= F(3, 10)
    assert res.value == solve_dual(grid, call(1), P).value
    # every consistent law prices the call at least at its bid
    assert res.value >= F(1, 5)
