from __future__ import annotations

import io
import random
from fractions import Fraction as F

import numpy as np
import pytest

from instances import arbitrage_pricing, instance_a, martingale_lp_value, random_instances
from robusthedge.dual import (PathMeasure, band_violations, build_penalty_dual_lp, conditional_expectation,
                              ftap_feasibility, local_arbitrage_probe, measure_from_primal, penalty_value,
                              solve_dual, solve_penalty_dual, write_measure_csv)
from robusthedge.market import (GridSpec, asian, build_tree, call, constant, enumerate_paths, eval_payoff,
                                lookback, table)
from robusthedge.pricing import MeasureSet, price_static
from robusthedge.primal import solve_constrained, solve_primal


def point_mass(paths, target):
    return PathMeasure(tuple(paths), tuple(F(int(p == target)) for p in paths))


def test_conditional_expectation_point_mass():
    grid = GridSpec(1, 2, 2, F(1, 10))
    paths = enumerate_paths(grid)
    tree = build_tree(paths)
    target = (F(1), F(2), F(1))
    q = point_mass(paths, target)
    for k in range(grid.N):
        ce = conditional_expectation(q, tree, k)
        assert ce[target[: k + 1]] == 1
        assert all(v is None for pre, v in ce.items() if pre != target[: k + 1])


def test_conditional_expectation_root_and_single_child():
    grid = GridSpec(1, 2, 1, F(1, 10))
    paths = enumerate_paths(grid)
    q = PathMeasure(tuple(paths), (F(1, 4), F(1, 2), F(1, 4)))
    assert conditional_expectation(q, build_tree(paths), 0) == {(F(1),): 1}
    # a node with a single continuation reports that continuation's terminal value
    sub = [(F(1), F(0), F(2)), (F(1), F(2), F(0))]
    q = PathMeasure(tuple(sub), (F(1, 3), F(2, 3)))
    ce = conditional_expectation(q, build_tree(sub), 1)
    assert ce == {(F(1), F(0)): 2, (F(1), F(2)): 0}


@pytest.mark.parametrize("exact", [True, False])
def test_instance_a_dual(exact):
    grid, G, P = instance_a()
    res = solve_dual(grid, G, P, exact=exact)
    assert res.status == "optimal" and res.certified
    if exact:
        assert res.value == F(1, 4)
        assert res.measure.marginal(grid.points) == [F(1, 4), F(1, 2), F(1, 4)]
    else:
        assert res.value == pytest.approx(0.25, abs=1e-12)
        assert np.allclose(res.measure.marginal(grid.points), [0.25, 0.5, 0.25], atol=1e-10)


def test_dual_value_recomputed_from_measure():
    for inst in random_instances(8, seed=3):
        grid = inst.grid.replace(M=None)
        res = solve_dual(grid, inst.payoff, inst.pricing)
        assert res.certified, (inst.label, res.certificate_problems)
        assert res.measure.expectation(lambda p: eval_payoff(inst.payoff, p)) == res.value


def test_arbitrage_pricing_infeasible_with_certificate():
    grid, G, _ = instance_a()
    P = arbitrage_pricing(grid)
    res = solve_dual(grid.replace(M=None), G, P)
    assert res.status == "infeasible"
    assert res.farkas_check.valid
    assert "mass" in res.farkas_report()
    assert solve_primal(grid, G, P).status == "arbitrage-unbounded"


def test_constant_claim_value():
    for inst in random_instances(6, seed=11):
        assert solve_dual(inst.grid, constant(F(7, 3)), inst.pricing).value == F(7, 3)


@pytest.mark.parametrize("G", [lookback(), asian(1), call(F(1, 2))])
def test_kappa_zero_matches_martingale_transport(G):
    grid = GridSpec(1, 2, 2, F(0))
    mu = [F(1, 4), F(1, 2), F(1, 4)]
    P = MeasureSet(grid.points, [mu])
    res = solve_dual(grid, G, P)
    assert res.certified
    assert float(res.value) == pytest.approx(martingale_lp_value(grid, G, mu), abs=1e-9)


def test_penalty_zero_M_is_max_payoff():
    grid = GridSpec(1, 2, 2, F(1, 10))
    for G in (lookback(), asian(F(1, 2)), call(1)):
        best = max(eval_payoff(G, p) for p in enumerate_paths(grid))
        assert solve_penalty_dual(grid, G, M=0).value == best


def test_penalty_value_examples():
    grid = GridSpec(1, 2, 2, F(1, 10))
    paths = enumerate_paths(grid)
    q = point_mass(paths, (F(1), F(0), F(0)))
    G = constant(0)
    assert penalty_value(q, 1, grid.kappa, grid, G) == F(-9, 10)
    # a martingale law pays no penalty at any M
    mart = PathMeasure(tuple(paths), tuple(F(1) if p == (F(1), F(1), F(1)) else F(0) for p in paths))
    assert penalty_value(mart, 1000, grid.kappa, grid, lookback()) == mart.expectation(
        lambda p: eval_payoff(lookback(), p))


def test_penalty_lp_optimum_matches_direct_recomputation():
    rng = random.Random(6)
    for _ in range(8):
        grid = GridSpec(rng.choice([1, 2]), 2, rng.choice([1, 2]), rng.choice([F(0), F(1, 20), F(1, 10)]))
        paths = enumerate_paths(grid)
        G = table({p[1:]: F(rng.randint(-4, 6), 2) for p in paths})
        for M in (0, 1, 10):
            res = solve_penalty_dual(grid, G, M=M)
            assert penalty_value(res.measure, M, grid.kappa, grid, G) == res.value
            fl = solve_penalty_dual(grid, G, M=M, exact=False)
            assert penalty_value(fl.measure, M, grid.kappa, grid, G) == pytest.approx(float(res.value), abs=1e-9)


def test_penalty_matches_constrained_instance_a():
    grid, G, _ = instance_a(M=F(10))
    assert solve_penalty_dual(grid, G).value == solve_constrained(grid, G).value


def test_penalty_nonincreasing_in_M_and_stabilizes():
    grid = GridSpec(1, 2, 2, F(1, 10))
    for G in (lookback(), asian(F(1, 2))):
        limit = solve_dual(grid.replace(M=None), G, None).value
        M, prev, seen = F(1, 4), None, []
        while True:
            v = solve_penalty_dual(grid, G, M=M).value
            if prev is not None:
                assert v <= prev
            seen.append(v)
            if v == limit:
                break
            prev = v
            M *= 2
            assert M < 10 ** 4, seen
        assert solve_penalty_dual(grid, G, M=2 * M).value == limit


def test_penalty_lp_requires_finite_M():
    grid = GridSpec(1, 2, 1, F(1, 10))
    with pytest.raises(ValueError):
        build_penalty_dual_lp(grid, call(1))


def test_ftap_examples():
    grid, _, P = instance_a()
    res = ftap_feasibility(grid, P)
    assert res.feasible and res.witness.marginal(grid.points) == list(P.measures[0])
    bad = arbitrage_pricing(grid)
    res = ftap_feasibility(grid, bad)
    assert not res.feasible and res.farkas_check.valid
    assert ftap_feasibility(grid, bad, kappa=F(1, 4)).feasible


def test_probe_examples():
    grid, _, P = instance_a()
    assert local_arbitrage_probe(grid, P).value == 1
    assert local_arbitrage_probe(grid, P, cell={1: 2}).value == F(1, 4)
    grid2 = GridSpec(1, 2, 2, F(1, 10))
    P2 = MeasureSet(grid2.points, [[F(0), F(1), F(0)]])
    assert local_arbitrage_probe(grid2, P2, cell={1: 0}).value == 0
    with pytest.raises(ValueError):
        local_arbitrage_probe(grid, P, cell={1: 5})


def test_weak_duality_random_pairs():
    rng = random.Random(17)
    for inst in random_instances(10, seed=8):
        hedge = solve_primal(inst.grid, inst.payoff, inst.pricing)
        pf = hedge.portfolio
        f = [pf.static[x] for x in inst.grid.points]
        # a law in the dual feasible set picked by an unrelated objective
        paths = enumerate_paths(inst.grid)
        other = table({p[1:]: F(rng.randint(-5, 5)) for p in paths})
        q = solve_dual(inst.grid.replace(M=None), other, inst.pricing).measure
        assert q is not None
        assert q.expectation(lambda p: eval_payoff(inst.payoff, p)) <= price_static(inst.pricing, f)


def test_primal_duals_form_optimal_law():
    for inst in random_instances(10, seed=13):
        if inst.grid.M is not None:
            continue
        hedge = solve_primal(inst.grid, inst.payoff, inst.pricing)
        q = measure_from_primal(hedge)
        tree = build_tree(q.paths)
        assert min(q.weights) >= 0 and q.mass() == 1
        assert band_violations(q, tree, inst.grid.kappa) == []
        assert q.expectation(lambda p: eval_payoff(inst.payoff, p)) == hedge.value


def test_nested_in_kappa():
    for inst in random_instances(6, seed=19):
        grid = inst.grid.replace(M=None)
        res = solve_dual(grid, inst.payoff, inst.pricing)
        tree = build_tree(res.measure.paths)
        for wider in (grid.kappa + F(1, 20), grid.kappa + F(1, 10)):
            assert band_violations(res.measure, tree, wider) == []
            assert solve_dual(grid, inst.payoff, inst.pricing, kappa=wider).value >= res.value


def test_kappa_out_of_range():
    grid, G, P = instance_a()
    with pytest.raises(ValueError):
        solve_dual(grid, G, P, kappa=1)


def test_measure_csv():
    grid, G, P = instance_a()
    q = solve_dual(grid, G, P).measure
    buf = io.StringIO()
    write_measure_csv(q, buf)
    assert buf.getvalue() == "s_1,weight\n0,1/4\n1,1/2\n2,1/4\n"
