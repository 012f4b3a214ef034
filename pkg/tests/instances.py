"""Shared test instances and a seeded generator of feasible random ones."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from robusthedge.market import (GridSpec, PayoffSpec, asian, build_tree, call, enumerate_paths, eval_payoff,
                                lookback, put, table)
from robusthedge.pricing import CallQuotes, MeasureSet

F = Fraction
KAPPAS = (F(0), F(1, 20), F(1, 10), F(1, 5))
MS = (F(1), F(5), None)


def instance_a(kappa=F(1, 10), M=None):
    grid = GridSpec(1, 2, 1, kappa, M)
    P = MeasureSet(grid.points, [[F(1, 4), F(1, 2), F(1, 4)]])
    return grid, call(1), P


def arbitrage_pricing(grid):
    return MeasureSet(grid.points, [[F(1, 10), F(3, 5), F(3, 10)]])


@dataclass
class Instance:
    grid: GridSpec
    payoff: PayoffSpec
    pricing: object
    label: str


def _random_law(rng: random.Random, points, target) -> list:
    """Random weights on ``points`` mixed with an end point mass to have mean ``target``."""
    w = [F(rng.randint(0, 4)) for _ in points]
    if not any(w):
        w[rng.randrange(len(w))] = F(1)
    total = sum(w)
    mu = [x / total for x in w]
    m = sum(p * x for p, x in zip(points, mu))
    if m > target:
        a = 1 - target / m
        mu = [(1 - a) * x for x in mu]
        mu[0] += a
    elif m < target:
        top = points[-1]
        a = (target - m) / (top - m)
        mu = [(1 - a) * x for x in mu]
        mu[-1] += a
    assert sum(mu) == 1 and sum(p * x for p, x in zip(points, mu)) == target
    return mu


def _random_payoff(rng: random.Random, grid: GridSpec) -> PayoffSpec:
    kind = rng.choice(["call", "put", "asian", "lookback", "table"])
    strike = F(rng.randint(0, 2 * grid.J), 2 * grid.n)
    if kind == "call":
        return call(strike)
    if kind == "put":
        return put(strike)
    if kind == "asian":
        return asian(strike)
    if kind == "lookback":
        return lookback()
    vals = {p[1:]: F(rng.randint(0, 6), rng.randint(1, 3)) for p in enumerate_paths(grid)}
    return table(vals)


def random_instance(rng: random.Random, max_N: int = 3, max_J: int = 3, calls: bool | None = None) -> Instance:
    n = rng.choice([1, 2])
    J = rng.randint(max(n, 2 if n == 1 else n), max_J)
    N = rng.randint(1, max_N)
    kappa = rng.choice(KAPPAS)
    M = rng.choice(MS)
    grid = GridSpec(n, J, N, kappa, M)
    pts = grid.points
    lo = max(1 - kappa, F(0))
    hi = min(1 + kappa, pts[-1])
    k = rng.randint(1, 2)
    measures = []
    for _ in range(k):
        t = lo + (hi - lo) * F(rng.randint(0, 4), 4)
        measures.append(_random_law(rng, pts, t))
    use_calls = rng.random() < 0.3 if calls is None else calls
    if use_calls:
        mu = measures[0]
        strikes = sorted(set(F(rng.randint(0, J), n) for _ in range(rng.randint(1, 3))))
        quotes = []
        for K in strikes:
            fair = sum(w * max(x - K, F(0)) for x, w in zip(pts, mu))
            d_bid = F(rng.randint(0, 2), 20)
            d_ask = F(rng.randint(0, 2), 20)
            quotes.append((K, fair - d_bid, fair + d_ask))
        eps = F(1, 50) if rng.random() < 0.2 else F(0)
        P = CallQuotes(pts, quotes, eps)
    else:
        eps = F(1, 50) if rng.random() < 0.2 else F(0)
        P = MeasureSet(pts, measures, eps)
    payoff = _random_payoff(rng, grid)
    label = f"{grid.describe()} payoff={payoff.kind} pricing={type(P).__name__} eps={P.epsilon}"
    return Instance(grid, payoff, P, label)


def random_instances(count: int, seed: int = 0, **kw) -> list:
    rng = random.Random(seed)
    return [random_instance(rng, **kw) for _ in range(count)]


def martingale_lp_value(grid, G, mu):
    """Brute-force frictionless OT: equality martingale rows plus a pinned marginal."""
    paths = enumerate_paths(grid)
    tree = build_tree(paths)
    rows, rhs = [], []
    for node in tree.nodes():
        r = np.zeros(len(paths))
        for p in node.paths:
            r[p] = float(paths[p][-1] - node.value)
        rows.append(r)
        rhs.append(0.0)
    for x, w in zip(grid.points, mu):
        rows.append(np.array([1.0 if p[-1] == x else 0.0 for p in paths]))
        rhs.append(float(w))
    c = -np.array([float(eval_payoff(G, p)) for p in paths])
    out = linprog(c, A_eq=np.array(rows), b_eq=np.array(rhs), bounds=(0, None), method="highs")
    assert out.status == 0
    return -out.fun


def martingale_instances(count: int, seed: int = 0) -> list:
    """Single-law pricing with mean exactly 1, feasible for every kappa >= 0."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n = rng.choice([1, 2])
        grid = GridSpec(n, rng.randint(max(n, 2), 3), rng.randint(1, 3), rng.choice(KAPPAS), rng.choice(MS))
        P = MeasureSet(grid.points, [_random_law(rng, grid.points, F(1))])
        payoff = _random_payoff(rng, grid)
        out.append(Instance(grid, payoff, P, f"{grid.describe()} payoff={payoff.kind}"))
    return out
