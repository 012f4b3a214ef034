"""Explicit constructions and the inequality checks built on them."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ._numeric import as_rational, fmt
from .dual import DualResult, solve_dual
from .market import GridSpec, PayoffSpec, tail
from .pricing import price_static, rebind
from .primal import HedgeResult, Portfolio, lifting_budget, portfolio_value, solve_primal

FLOAT_GAP_TOL = 1e-7


class ParameterError(ValueError):
    pass


class InconsistencyError(RuntimeError):
    """Primal and dual disagree about feasibility."""


# ----------------------------------------------------------------------
# Doob-type strategy

@dataclass(frozen=True)
class DoobParams:
    kappa: Fraction
    r: object = 3

    def __post_init__(self):
        object.__setattr__(self, "kappa", as_rational(self.kappa))
        if not self.r > 2:
            raise ParameterError(f"the exponent r must exceed 2, got {self.r}")
        if self.lam >= 1:
            raise ParameterError(
                f"kappa*r*c_r = {fmt(self.lam)} must be < 1; use a smaller kappa or an r closer to 2")

    @property
    def c_r(self):
        r = self.r
        return Fraction(r, r - 1) if isinstance(r, (int, Fraction)) else r / (r - 1)

    @property
    def lam(self):
        return self.kappa * self.r * self.c_r


@dataclass(frozen=True)
class DoobStrategy:
    params: DoobParams

    def static(self, x):
        c = self.params.c_r
        return (c * x) ** self.params.r - c

    def holding(self, k: int, path: Sequence):
        """Shares held after trading at time k: -r c_r (running max)^(r-1)."""
        p = self.params
        return -p.r * p.c_r * max(path[: k + 1]) ** (p.r - 1)

    def portfolio_on(self, path: Sequence) -> Portfolio:
        """The strategy restricted to a single path, in Portfolio form."""
        N = len(path) - 1
        gamma, u, w = {}, {}, {}
        prev = 0
        for k in range(N):
            pre = tuple(path[: k + 1])
            g = self.holding(k, path)
            gamma[pre] = g
            u[pre] = max(g - prev, 0 * g)
            w[pre] = max(prev - g, 0 * g)
            prev = g
        return Portfolio(gamma, u, w, {path[-1]: self.static(path[-1])}, None)


def doob_strategy(params: DoobParams) -> DoobStrategy:
    return DoobStrategy(params)


@dataclass
class DoobReport:
    n_paths: int
    min_slack: float
    worst_path: Optional[tuple]
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def sample_grid_paths(grid: GridSpec, count: int, seed: int = 0) -> list:
    """Uniform i.i.d. grid coordinates per step, prefixed by s_0 = 1."""
    rng = np.random.default_rng(seed)
    digits = rng.integers(0, grid.J + 1, size=(count, grid.N))
    return [(1.0,) + tuple(float(d) / grid.n for d in row) for row in digits]


def verify_doob(params: DoobParams, paths: Optional[Sequence] = None, grid: Optional[GridSpec] = None,
                samples: int = 10_000, seed: int = 0, rel_tol: float = 1e-9) -> DoobReport:
    """Check Y >= (1 - lambda) ||S||^r pathwise, in floating point."""
    if paths is None:
        if grid is None:
            raise ValueError("give either paths or a grid to sample from")
        paths = sample_grid_paths(grid, samples, seed)
    strat = DoobStrategy(DoobParams(params.kappa, float(params.r)))
    eval_grid = GridSpec(1, 1, 1, params.kappa)  # portfolio_value only reads kappa
    lam = float(params.lam)
    r = float(params.r)
    report = DoobReport(len(paths), math.inf, None)
    for path in paths:
        fp = tuple(float(s) for s in path)
        y = float(portfolio_value(strat.portfolio_on(fp), fp, eval_grid))
        bound = (1 - lam) * max(abs(s) for s in fp) ** r
        slack = y - bound
        if slack < report.min_slack:
            report.min_slack, report.worst_path = slack, tuple(path)
        if slack < -rel_tol * max(1.0, abs(bound)):
            report.violations.append((tuple(path), y, bound))
    return report


# ----------------------------------------------------------------------
# tail bound

@dataclass
class TailReport:
    threshold: object
    lp_value: object
    bound: object
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "optimal" and self.lp_value <= self.bound


def tail_bound_check(grid: GridSpec, P, params: DoobParams, threshold, exact: bool = True) -> TailReport:
    """Hedging cost of ||S||^2 1{||S|| >= M0} against the scaled Doob hedge cost.

    Solved without a trading bound: the Doob holdings are not capped, so the
    comparison is only meaningful in the unconstrained problem.
    """
    M0 = as_rational(threshold)
    strat = doob_strategy(params)
    f_hat = [strat.static(x) for x in grid.points]
    exact_arith = isinstance(params.r, int)
    price = price_static(P, f_hat, exact=exact and exact_arith)
    scale = (1 - params.lam) * M0 ** (params.r - 2)
    bound = price / scale
    res = solve_primal(grid.replace(M=None), tail(M0), P, exact=exact)
    return TailReport(M0, res.value, bound, res.status)


# ----------------------------------------------------------------------
# duality gap

@dataclass
class GapReport:
    primal: HedgeResult
    dual: DualResult
    gap: object
    status: str  # optimal | arbitrage
    ok: bool
    problems: list = field(default_factory=list)

    @property
    def primal_value(self):
        return self.primal.value

    @property
    def dual_value(self):
        return self.dual.value


def duality_gap(grid: GridSpec, payoff: PayoffSpec, P, exact: bool = True, tree=None) -> GapReport:
    primal = solve_primal(grid, payoff, P, exact=exact, tree=tree)
    dual = solve_dual(grid, payoff, P, exact=exact, tree=primal.lp.meta["tree"])
    problems = []
    if primal.status == "optimal" and dual.status == "optimal":
        gap = primal.value - dual.value
        if exact and gap != 0:
            problems.append(f"nonzero exact gap {gap}")
        if not exact and abs(gap) > FLOAT_GAP_TOL:
            problems.append(f"float gap {gap} exceeds {FLOAT_GAP_TOL}")
        if dual.certified is False:
            problems += dual.certificate_problems
        return GapReport(primal, dual, gap, "optimal", not problems, problems)
    if primal.status == "arbitrage-unbounded" and dual.status == "infeasible":
        if not primal.ray_check.valid:
            problems.append(f"arbitrage ray does not verify: {primal.ray_check.reason}")
        if not dual.farkas_check.valid:
            problems.append(f"infeasibility certificate does not verify: {dual.farkas_check.reason}")
        return GapReport(primal, dual, None, "arbitrage", not problems, problems)
    raise InconsistencyError(f"primal status {primal.status} paired with dual status {dual.status}")


# ----------------------------------------------------------------------
# sweeps

AXES = ("kappa", "M", "n", "J")


@dataclass
class SweepPoint:
    axis_value: object
    primal: object = None
    dual: object = None
    gap: object = None
    status: str = ""
    budget: object = None
    dual_unbounded: object = None


@dataclass
class SweepReport:
    axis: str
    points: list
    checks: list = field(default_factory=list)  # (name, passed, detail)

    @property
    def values(self) -> list:
        return [p.axis_value for p in self.points]

    @property
    def ok(self) -> bool:
        return all(p.status == "optimal" for p in self.points) and all(c[1] for c in self.checks)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis_value", "primal", "dual", "gap", "status", "budget"])
        for p in self.points:
            av = "unbounded" if p.axis_value is None else fmt(p.axis_value)
            w.writerow([av, fmt(p.primal), fmt(p.dual), fmt(p.gap), p.status, fmt(p.budget)])


def _point_grid(grid: GridSpec, axis: str, value) -> GridSpec:
    if axis == "kappa":
        return grid.replace(kappa=value)
    if axis == "M":
        return grid.replace(M=value)
    if axis == "J":
        return grid.replace(J=int(value))
    # n axis: keep the truncation level J*h fixed
    n = int(value)
    J = Fraction(grid.J * n, grid.n)
    if J.denominator != 1:
        raise ParameterError(f"J*h = {grid.ceiling} is not on the grid with n = {n}")
    return grid.replace(n=n, J=int(J))


def convergence_sweep(grid: GridSpec, payoff: PayoffSpec, P, axis: str, values: Sequence,
                      exact: bool = True) -> SweepReport:
    """Solve primal and dual along one parameter axis and check the
    monotonicity and discretization-budget relations between points."""
    if axis not in AXES:
        raise ParameterError(f"unknown sweep axis {axis!r}; expected one of {', '.join(AXES)}")
    points = []
    for v in values:
        pt = SweepPoint(v)
        points.append(pt)
        try:
            g = _point_grid(grid, axis, v)
            Pg = rebind(P, g.points)
            rep = duality_gap(g, payoff, Pg, exact=exact)
            pt.primal, pt.dual, pt.gap = rep.primal_value, rep.dual_value, rep.gap
            pt.status = rep.status if rep.ok else "gap-failure"
            pt.budget = lifting_budget(g, payoff)
            if axis == "n" and g.M is not None and rep.status == "optimal":
                pt.dual_unbounded = solve_dual(g.replace(M=None), payoff, Pg, exact=exact).value
        except InconsistencyError as exc:
            pt.status = f"inconsistent: {exc}"
        except Exception as exc:  # record and keep sweeping
            pt.status = f"error: {exc}"
    report = SweepReport(axis, points)
    good = [p for p in points if p.status == "optimal"]
    slack = 0 if exact else FLOAT_GAP_TOL
    if axis == "kappa":
        order = sorted(good, key=lambda p: as_rational(p.axis_value))
        vals = [p.dual for p in order]
        ok = all(b >= a - slack for a, b in zip(vals, vals[1:]))
        report.checks.append(("dual nondecreasing in kappa", ok, [fmt(v) for v in vals]))
    elif axis == "M":
        order = sorted(good, key=lambda p: (p.axis_value is None, as_rational(p.axis_value or 0)))
        vals = [p.primal for p in order]
        ok = all(b <= a + slack for a, b in zip(vals, vals[1:]))
        report.checks.append(("primal nonincreasing in M", ok, [fmt(v) for v in vals]))
    elif axis == "n":
        lower = [p.dual_unbounded for p in good if p.dual_unbounded is not None]
        upper = [p.primal + p.budget for p in good if p.budget is not None]
        if lower and upper:
            ok = max(lower) <= min(upper) + slack
            report.checks.append(("unconstrained dual <= constrained value + budget", ok,
                                  f"max lower {fmt(max(lower))}, min upper {fmt(min(upper))}"))
    return report
