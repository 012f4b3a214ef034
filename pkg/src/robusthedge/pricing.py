"""Sublinear pricing operators for static positions in terminal payoffs.

Two finitely parameterized forms are provided: the support function of a
finite set of terminal laws (``MeasureSet``) and super-replication by cash
and quoted calls (``CallQuotes``). Each one also emits the linear family of
terminal marginals it is dual to, which is what the transport LPs consume.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from ._numeric import as_rational, fmt_decimal
from .lp import LinearProgram, Status, solve_exact, solve_float


class PricingError(ValueError):
    pass


class StaticArbitrageError(PricingError):
    """The quotes themselves admit an arbitrage; the price is -infinity."""


@dataclass(frozen=True)
class Quote:
    strike: Fraction
    bid: Fraction
    ask: Fraction


@dataclass(frozen=True)
class MeasureSet:
    """P(f) = max_j E_{mu_j}[f] over laws on the terminal grid ``points``."""

    points: tuple
    measures: tuple
    epsilon: Fraction = Fraction(0)

    def __init__(self, points, measures, epsilon=0, check: bool = True):
        pts = tuple(as_rational(x) for x in points)
        mus = tuple(tuple(as_rational(w) for w in mu) for mu in measures)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "measures", mus)
        object.__setattr__(self, "epsilon", as_rational(epsilon))
        if not mus:
            raise PricingError("a measure set needs at least one measure")
        for j, mu in enumerate(mus):
            if len(mu) != len(pts):
                raise PricingError(f"measure {j} has {len(mu)} weights for {len(pts)} grid points")
        if self.epsilon < 0:
            raise PricingError("epsilon must be nonnegative")
        if check:
            for j, mu in enumerate(mus):
                if any(w < 0 for w in mu):
                    raise PricingError(f"measure {j} has a negative weight")
                if sum(mu) != 1:
                    raise PricingError(f"measure {j} sums to {sum(mu)}, not 1")


@dataclass(frozen=True)
class CallQuotes:
    """Static hedges from cash (price 1) plus calls bought at ask / sold at bid."""

    points: tuple
    quotes: tuple
    epsilon: Fraction = Fraction(0)

    def __init__(self, points, quotes, epsilon=0):
        pts = tuple(as_rational(x) for x in points)
        qs = []
        for q in quotes:
            if isinstance(q, Quote):
                k, b, a = q.strike, q.bid, q.ask
            elif isinstance(q, dict):
                k, b, a = q["strike"], q["bid"], q["ask"]
            else:
                k, b, a = q
            qs.append(Quote(as_rational(k), as_rational(b), as_rational(a)))
        strikes = [q.strike for q in qs]
        if len(set(strikes)) != len(strikes):
            raise PricingError("call strikes must be distinct")
        for q in qs:
            if q.bid > q.ask:
                raise PricingError(f"call {q.strike}: bid {q.bid} exceeds ask {q.ask}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "quotes", tuple(qs))
        object.__setattr__(self, "epsilon", as_rational(epsilon))
        if self.epsilon < 0:
            raise PricingError("epsilon must be nonnegative")

    def widened(self) -> tuple:
        e = self.epsilon
        return tuple(Quote(q.strike, q.bid - e, q.ask + e) for q in self.quotes)

    def call_payoff(self, i: int) -> list:
        K = self.quotes[i].strike
        return [max(x - K, Fraction(0)) for x in self.points]


PricingOperator = (MeasureSet, CallQuotes)


# ----------------------------------------------------------------------
# marginal constraint family

@dataclass(frozen=True)
class FamilyRow:
    label: str
    marginal: dict  # point index -> coefficient
    aux: dict  # aux index -> coefficient
    sense: str
    rhs: Fraction


@dataclass(frozen=True)
class MarginalConstraintFamily:
    """Linear constraints on a terminal probability vector rho (mass 1 implied).

    Auxiliary variables (e.g. mixing weights) are listed in ``aux`` as
    ``(label, lb, ub)``.
    """

    points: tuple
    aux: tuple
    rows: tuple
    epsilon: Fraction = Fraction(0)

    def add_to(self, lp: LinearProgram, marginal_exprs: Sequence[dict], prefix: str = "") -> list:
        """Add the family to ``lp`` with rho_i given by linear expressions."""
        aux_ids = [lp.add_var(prefix + lab, lb, ub) for lab, lb, ub in self.aux]
        for r in self.rows:
            coeffs: dict = {}
            for i, a in r.marginal.items():
                for v, c in marginal_exprs[i].items():
                    coeffs[v] = coeffs.get(v, 0) + a * c
            for k, a in r.aux.items():
                coeffs[aux_ids[k]] = coeffs.get(aux_ids[k], 0) + a
            lp.add_row(prefix + r.label, coeffs, r.sense, r.rhs)
        return aux_ids

    def _base_lp(self, sense: str) -> tuple:
        lp = LinearProgram("marginal_family", sense)
        rho = [lp.add_var(f"rho[{i}]") for i in range(len(self.points))]
        lp.add_row("mass", {v: 1 for v in rho}, "=", 1)
        self.add_to(lp, [{v: 1} for v in rho])
        return lp, rho

    def support_lp(self, f: Sequence) -> LinearProgram:
        """max sum rho_i f_i over the family: the support function at f."""
        lp, rho = self._base_lp("max")
        lp.set_objective({v: f[i] for i, v in enumerate(rho)})
        return lp

    def feasible(self, marginal: Optional[Sequence] = None, exact: bool = True):
        """One LP feasibility call; returns (feasible, solution)."""
        lp, rho = self._base_lp("max")
        if marginal is not None:
            for i, v in enumerate(rho):
                lp.add_row(f"fix[{i}]", {v: 1}, "=", marginal[i])
        sol = (solve_exact if exact else solve_float)(lp)
        return sol.status is Status.OPTIMAL, sol


def marginal_constraints(P, grid=None) -> MarginalConstraintFamily:
    """The family of terminal laws rho with E_rho[f] <= P(f) for all f.

    ``grid`` is accepted for symmetry with the LP builders; the terminal
    points are those bound into ``P``.
    """
    if grid is not None and tuple(grid.points) != tuple(P.points):
        raise PricingError("pricing operator is bound to a different terminal grid")
    eps = P.epsilon
    rows = []
    if isinstance(P, MeasureSet):
        aux = tuple((f"lam[{j}]", 0, None) for j in range(len(P.measures)))
        for i in range(len(P.points)):
            mix = {j: -mu[i] for j, mu in enumerate(P.measures) if mu[i] != 0}
            if eps == 0:
                rows.append(FamilyRow(f"marg[{i}]", {i: 1}, mix, "=", Fraction(0)))
            else:
                rows.append(FamilyRow(f"marg_hi[{i}]", {i: 1}, mix, "<=", eps))
                rows.append(FamilyRow(f"marg_lo[{i}]", {i: 1}, mix, ">=", -eps))
        rows.append(FamilyRow("simplex", {}, {j: 1 for j in range(len(P.measures))}, "=", Fraction(1)))
        return MarginalConstraintFamily(P.points, aux, tuple(rows), eps)
    if isinstance(P, CallQuotes):
        for i, q in enumerate(P.widened()):
            pay = {k: v for k, v in enumerate(P.call_payoff(i)) if v != 0}
            rows.append(FamilyRow(f"ask[{i}]", pay, {}, "<=", q.ask))
            rows.append(FamilyRow(f"bid[{i}]", pay, {}, ">=", q.bid))
        return MarginalConstraintFamily(P.points, (), tuple(rows), eps)
    raise TypeError(f"not a pricing operator: {type(P).__name__}")


# ----------------------------------------------------------------------
# pricing

def static_hedge_lp(P: CallQuotes, f: Sequence) -> LinearProgram:
    """min cash + sum(buy*ask - sell*bid) s.t. the hedge dominates f on the grid."""
    lp = LinearProgram("static_hedge", "min")
    cash = lp.add_var("cash", None, None)
    obj = {cash: 1}
    buys, sells = [], []
    for i, q in enumerate(P.widened()):
        b = lp.add_var(f"buy[{i}]")
        s = lp.add_var(f"sell[{i}]")
        buys.append(b)
        sells.append(s)
        obj[b] = q.ask
        obj[s] = -q.bid
    lp.set_objective(obj)
    pays = [P.call_payoff(i) for i in range(len(P.quotes))]
    for k, x in enumerate(P.points):
        coeffs = {cash: 1}
        for i in range(len(P.quotes)):
            if pays[i][k] != 0:
                coeffs[buys[i]] = pays[i][k]
                coeffs[sells[i]] = -pays[i][k]
        lp.add_row(f"dominate[{k}]", coeffs, ">=", f[k])
    return lp


def price_static(P, f: Sequence, exact: Optional[bool] = None):
    """P(f) for a grid function f aligned with ``P.points``.

    Exact by default when f is rational; floats are priced in float mode.
    """
    if len(f) != len(P.points):
        raise PricingError(f"grid function has {len(f)} values for {len(P.points)} points")
    if exact is None:
        exact = all(isinstance(v, (int, Fraction)) for v in f)
    if isinstance(P, MeasureSet) and P.epsilon == 0:
        vals = [sum((w * v for w, v in zip(mu, f) if w), 0 * f[0]) for mu in P.measures]
        return max(vals)
    if isinstance(P, CallQuotes) and P.epsilon == 0:
        lp = static_hedge_lp(P, f)
    else:
        lp = marginal_constraints(P).support_lp(f)
    sol = (solve_exact if exact else solve_float)(lp)
    if sol.status is Status.UNBOUNDED:
        raise StaticArbitrageError("static positions alone admit an arbitrage")
    if sol.status is Status.INFEASIBLE:
        # empty marginal family: the support function is -infinity
        raise StaticArbitrageError("pricing operator admits no consistent terminal law")
    return sol.objective


# ----------------------------------------------------------------------
# axiom checks

@dataclass
class AxiomReport:
    trials: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return f"axioms: {self.trials} trials, no violations"
        lines = [f"axioms: {len(self.violations)} violation(s) in {self.trials} trials"]
        lines += [f"  {v}" for v in self.violations[:20]]
        return "\n".join(lines)


def _show(v) -> str:
    return str(v) if isinstance(v, Fraction) else fmt_decimal(v)


def check_axioms(P, trials: int = 1000, seed: int = 0, exact: bool = False) -> AxiomReport:
    """Randomized checks of sub-additivity, homogeneity and P(a) = a."""
    rng = random.Random(seed)
    n = len(P.points)
    report = AxiomReport(trials)
    tol_sub, tol_hom, tol_const = 1e-9, 1e-9, 1e-12

    def draw():
        if exact:
            return [Fraction(rng.randint(-40, 40), rng.randint(1, 8)) for _ in range(n)]
        return [rng.uniform(-5.0, 5.0) for _ in range(n)]

    def price(f):
        return price_static(P, f, exact=exact)

    for t in range(trials):
        f, g = draw(), draw()
        lam = Fraction(rng.randint(1, 50), rng.randint(1, 10)) if exact else rng.uniform(0.05, 10.0)
        a = Fraction(rng.randint(-20, 20), rng.randint(1, 5)) if exact else rng.uniform(-5.0, 5.0)
        if t == 0:
            a = Fraction(1) if exact else 1.0
        try:
            pf, pg = price(f), price(g)
            pfg = price([x + y for x, y in zip(f, g)])
            plf = price([lam * x for x in f])
            pa = price([a] * n)
        except StaticArbitrageError as exc:
            report.violations.append(f"trial {t}: pricing failed ({exc})")
            continue
        if pfg > pf + pg + tol_sub:
            report.violations.append(
                f"trial {t}: subadditivity P(f+g)={_show(pfg)} > P(f)+P(g)={_show(pf + pg)}")
        if abs(plf - lam * pf) > tol_hom:
            report.violations.append(
                f"trial {t}: homogeneity P({_show(lam)}f)={_show(plf)} != {_show(lam * pf)}")
        if abs(pa - a) > tol_const:
            report.violations.append(f"trial {t}: constant a={_show(a)} priced at {_show(pa)}")
    return report


def rebind(P, points: Sequence):
    """The same operator expressed on another terminal grid.

    Measure weights move with their points; a point carrying positive mass
    must exist on the new grid. Call quotes do not depend on the grid.
    """
    pts = tuple(as_rational(x) for x in points)
    if isinstance(P, CallQuotes):
        return CallQuotes(pts, P.quotes, P.epsilon)
    where = {x: i for i, x in enumerate(pts)}
    measures = []
    for j, mu in enumerate(P.measures):
        new = [Fraction(0)] * len(pts)
        for x, w in zip(P.points, mu):
            if not w:
                continue
            if x not in where:
                raise PricingError(f"measure {j} charges {x}, which is not on the new grid")
            new[where[x]] = w
        measures.append(new)
    return MeasureSet(pts, measures, P.epsilon)
