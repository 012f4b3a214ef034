"""Super-replication LPs: semi-static hedging and constrained stock-only hedging."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

from ._numeric import as_rational, fmt
from .lp import LinearProgram, Solution, Status, solve_exact, solve_float, verify_ray
from .market import GridSpec, PayoffSpec, Tree, build_tree, enumerate_paths, eval_payoff, interpolate
from .pricing import CallQuotes, MeasureSet, price_static, StaticArbitrageError


@dataclass(frozen=True)
class Portfolio:
    """Static payoff on the terminal grid plus node-wise stock holdings.

    ``gamma[prefix]`` is the number of shares held after trading at the node
    with price history ``prefix`` = (s_0, ..., s_k); ``u``/``w`` split the
    change from the parent's holding into purchases and sales. ``static`` is
    None for the stock-only variant, whose terminal cash is ``capital``.
    """

    gamma: dict
    u: dict
    w: dict
    static: Optional[dict]
    capital: object

    def static_payoff(self, x):
        if self.static is None:
            return self.capital
        return self.static[x]

    def normalized(self) -> "Portfolio":
        """Cancel simultaneous buys and sells at every node."""
        u, w = {}, {}
        for key in self.u:
            m = min(self.u[key], self.w[key])
            u[key] = self.u[key] - m
            w[key] = self.w[key] - m
        return replace(self, u=u, w=w)

    def is_normal(self) -> bool:
        return all(min(self.u[k], self.w[k]) == 0 for k in self.u)


def portfolio_value(portfolio: Portfolio, path: Sequence, grid: GridSpec):
    """Terminal wealth: static payoff + trading gains - proportional costs."""
    kappa = grid.kappa
    N = len(path) - 1
    total = portfolio.static_payoff(path[-1])
    prev = 0
    for i in range(N):
        g = portfolio.gamma[tuple(path[: i + 1])]
        total = total + g * (path[i + 1] - path[i]) - kappa * path[i] * abs(g - prev)
        prev = g
    return total


@dataclass
class HedgeResult:
    value: object
    portfolio: Optional[Portfolio]
    status: str  # optimal | arbitrage-unbounded | infeasible-none
    slacks: Optional[list]
    solution: Solution
    lp: LinearProgram
    ray_check: object = None
    ray_portfolio: Optional[Portfolio] = None
    ray_slope: object = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _node_label(node) -> str:
    return f"{node.depth},{node.index}"


def _add_trading(lp: LinearProgram, tree: Tree, M) -> dict:
    """Holdings, increment split and (optionally) the admissibility bound."""
    ids = {}
    for node in tree.nodes():
        lab = _node_label(node)
        g = lp.add_var(f"gamma[{lab}]", None, None)
        u = lp.add_var(f"u[{lab}]")
        w = lp.add_var(f"w[{lab}]")
        ids[node.prefix] = (g, u, w)
    for node in tree.nodes():
        g, u, w = ids[node.prefix]
        coeffs = {g: 1, u: -1, w: 1}
        if node.depth > 0:
            coeffs[ids[node.prefix[:-1]][0]] = -1
        lp.add_row(f"inc[{_node_label(node)}]", coeffs, "=", 0)
        if M is not None:
            lp.add_row(f"adm[{_node_label(node)}]", {u: 1, w: 1}, "<=", M)
    return ids


def _trading_terms(path, ids, kappa) -> dict:
    coeffs: dict = {}
    for i in range(len(path) - 1):
        g, u, w = ids[tuple(path[: i + 1])]
        move = path[i + 1] - path[i]
        if move:
            coeffs[g] = coeffs.get(g, 0) + move
        if kappa and path[i]:
            coeffs[u] = coeffs.get(u, 0) - kappa * path[i]
            coeffs[w] = coeffs.get(w, 0) - kappa * path[i]
    return coeffs


def _tree_for(grid: GridSpec, tree: Optional[Tree]) -> Tree:
    return tree if tree is not None else build_tree(enumerate_paths(grid))


def build_semistatic_lp(grid: GridSpec, payoff: PayoffSpec, P, tree: Optional[Tree] = None) -> LinearProgram:
    """Minimal cost of a static terminal payoff plus admissible stock trading
    dominating ``payoff`` on every grid path."""
    tree = _tree_for(grid, tree)
    if tuple(P.points) != grid.points:
        raise ValueError("pricing operator is bound to a different terminal grid")
    lp = LinearProgram("semistatic", "min")
    pts = grid.points
    static_expr = []  # per terminal point: linear expression of the static payoff
    if isinstance(P, MeasureSet):
        f = [lp.add_var(f"f[{i}]", None, None) for i in range(len(pts))]
        static_expr = [{v: 1} for v in f]
        T = lp.add_var("cost", None, None)
        obj = {T: 1}
        for j, mu in enumerate(P.measures):
            coeffs = {T: 1}
            for i, wgt in enumerate(mu):
                if wgt:
                    coeffs[f[i]] = -wgt
            lp.add_row(f"static[{j}]", coeffs, ">=", 0)
        if P.epsilon > 0:
            c = lp.add_var("level", None, None)
            for i in range(len(pts)):
                a = lp.add_var(f"spread_up[{i}]")
                b = lp.add_var(f"spread_dn[{i}]")
                obj[a] = P.epsilon
                obj[b] = P.epsilon
                lp.add_row(f"spread[{i}]", {f[i]: 1, c: -1, a: -1, b: 1}, "=", 0)
        lp.set_objective(obj)
    elif isinstance(P, CallQuotes):
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
        for k in range(len(pts)):
            expr = {cash: 1}
            for i in range(len(P.quotes)):
                if pays[i][k]:
                    expr[buys[i]] = pays[i][k]
                    expr[sells[i]] = -pays[i][k]
            static_expr.append(expr)
    else:
        raise TypeError(f"not a pricing operator: {type(P).__name__}")

    ids = _add_trading(lp, tree, grid.M)
    point_index = {x: i for i, x in enumerate(pts)}
    for p, path in enumerate(tree.paths):
        coeffs = dict(static_expr[point_index[path[-1]]])
        for v, a in _trading_terms(path, ids, grid.kappa).items():
            coeffs[v] = coeffs.get(v, 0) + a
        lp.add_row(f"path[{p}]", coeffs, ">=", eval_payoff(payoff, path))
    lp.meta = dict(kind="semistatic", tree=tree, ids=ids, static_expr=static_expr, grid=grid)
    return lp


def build_constrained_lp(grid: GridSpec, payoff: PayoffSpec, M=None, tree: Optional[Tree] = None) -> LinearProgram:
    """Minimal initial capital for stock-only hedging with trades bounded by M."""
    M = grid.M if M is None else M
    if M is None:
        raise ValueError("the constrained problem needs a finite trading bound M")
    tree = _tree_for(grid, tree)
    lp = LinearProgram("constrained", "min")
    x = lp.add_var("capital", None, None)
    lp.set_objective({x: 1})
    ids = _add_trading(lp, tree, M)
    for p, path in enumerate(tree.paths):
        coeffs = {x: 1}
        coeffs.update(_trading_terms(path, ids, grid.kappa))
        lp.add_row(f"path[{p}]", coeffs, ">=", eval_payoff(payoff, path))
    lp.meta = dict(kind="constrained", tree=tree, ids=ids, static_expr=None, grid=grid)
    return lp


def _eval_expr(expr: dict, x: Sequence):
    return sum((a * x[v] for v, a in expr.items()), 0 * x[0])


def portfolio_from_vector(lp: LinearProgram, x: Sequence, with_shift: bool = True) -> Portfolio:
    """Read a Portfolio out of an LP point (or an LP direction)."""
    meta = lp.meta
    ids = meta["ids"]
    gamma = {pre: x[g] for pre, (g, u, w) in ids.items()}
    u = {pre: x[uu] for pre, (g, uu, w) in ids.items()}
    w = {pre: x[ww] for pre, (g, uu, ww) in ids.items()}
    if meta["static_expr"] is None:
        return Portfolio(gamma, u, w, None, x[lp.var_index("capital")])
    static = {pt: _eval_expr(e, x) for pt, e in zip(meta["grid"].points, meta["static_expr"])}
    return Portfolio(gamma, u, w, static, lp.objective_value(x))


def _solve(lp, exact):
    return solve_exact(lp) if exact else solve_float(lp)


def _finish(lp: LinearProgram, sol: Solution, payoff: PayoffSpec, grid: GridSpec, P=None) -> HedgeResult:
    tree = lp.meta["tree"]
    if sol.status is Status.INFEASIBLE:
        return HedgeResult(None, None, "infeasible-none", None, sol, lp)
    if sol.status is Status.UNBOUNDED:
        tol = 0 if sol.mode == "exact" else 1e-9
        check = verify_ray(lp, sol.x, sol.ray, tol)
        ray_pf = portfolio_from_vector(lp, sol.ray)
        res = HedgeResult(-math.inf, None, "arbitrage-unbounded", None, sol, lp,
                          ray_check=check, ray_portfolio=ray_pf, ray_slope=check.slope)
        return res
    pf = portfolio_from_vector(lp, sol.x).normalized()
    slacks = [portfolio_value(pf, path, grid) - eval_payoff(payoff, path) for path in tree.paths]
    return HedgeResult(sol.objective, pf, "optimal", slacks, sol, lp)


def solve_primal(grid: GridSpec, payoff: PayoffSpec, P, exact: bool = True,
                 tree: Optional[Tree] = None) -> HedgeResult:
    lp = build_semistatic_lp(grid, payoff, P, tree)
    return _finish(lp, _solve(lp, exact), payoff, grid, P)


def solve_constrained(grid: GridSpec, payoff: PayoffSpec, M=None, exact: bool = True,
                      tree: Optional[Tree] = None) -> HedgeResult:
    lp = build_constrained_lp(grid, payoff, M, tree)
    return _finish(lp, _solve(lp, exact), payoff, grid)


def verify_arbitrage(result: HedgeResult, grid: GridSpec, P, exact: bool = True) -> bool:
    """Check an unbounded primal ray as a trading arbitrage.

    The ray portfolio must cost strictly less than zero under P and have
    nonnegative terminal value on every grid path.
    """
    if result.status != "arbitrage-unbounded" or not result.ray_check.valid:
        return False
    pf = result.ray_portfolio
    tree = result.lp.meta["tree"]
    tol = 0 if exact else 1e-9
    if any(portfolio_value(pf, path, grid) < -tol for path in tree.paths):
        return False
    if pf.static is None:
        return pf.capital < -tol
    f = [pf.static[x] for x in grid.points]
    try:
        cost = price_static(P, f, exact=exact)
    except StaticArbitrageError:
        return True
    return cost < -tol


# ----------------------------------------------------------------------
# lifting to continuum paths

@dataclass(frozen=True)
class LiftedValue:
    value: object
    warning: Optional[str] = None


def lift_portfolio(portfolio: Portfolio, omega: Sequence, grid: GridSpec) -> LiftedValue:
    """Wealth on an arbitrary nonnegative path of the strategy that trades as
    the grid strategy would on the floor-projected history and holds the
    piecewise-linear interpolation of the static payoff."""
    if omega[0] != 1:
        raise ValueError("continuum paths start at 1")
    n, J = grid.n, grid.J
    warning = None
    proj = [Fraction(1)]
    for s in omega[1:]:
        if s < 0:
            raise ValueError("prices must be nonnegative")
        k = math.floor(s * n) if isinstance(s, Fraction) else math.floor(float(s) * n)
        if k > J or s > grid.ceiling:
            warning = f"path leaves the modeled grid (ceiling {grid.ceiling})"
            k = min(k, J)
        proj.append(Fraction(k, n))
    kappa = grid.kappa
    if portfolio.static is None:
        total = portfolio.capital
    else:
        g = [portfolio.static[x] for x in grid.points]
        total = interpolate(g, omega[-1], n)
    prev = 0
    for i in range(len(omega) - 1):
        gi = portfolio.gamma[tuple(proj[: i + 1])]
        total = total + gi * (omega[i + 1] - omega[i]) - kappa * omega[i] * abs(gi - prev)
        prev = gi
    return LiftedValue(total, warning)


def lifting_budget(grid: GridSpec, payoff: PayoffSpec):
    """m(h) + (N + 2 kappa) M N h, or None when M or the modulus is missing."""
    if grid.M is None:
        return None
    mh = payoff.modulus(grid.h)
    if mh is None:
        return None
    return mh + (grid.N + 2 * grid.kappa) * grid.M * grid.N * grid.h


# ----------------------------------------------------------------------
# export

def _num(x) -> str:
    return fmt(x)


def write_portfolio_csv(portfolio: Portfolio, fh) -> None:
    """Node rows ``depth,prefix,gamma,u,w`` then terminal rows ``s_N,f``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["depth", "prefix", "gamma", "u", "w"])
    for pre in sorted(portfolio.gamma, key=lambda p: (len(p), p)):
        w.writerow([len(pre) - 1, " ".join(_num(s) for s in pre),
                    _num(portfolio.gamma[pre]), _num(portfolio.u[pre]), _num(portfolio.w[pre])])
    if portfolio.static is None:
        w.writerow(["capital", _num(portfolio.capital)])
        return
    w.writerow(["s_N", "f"])
    for x in sorted(portfolio.static):
        w.writerow([_num(x), _num(portfolio.static[x])])


def read_portfolio_csv(fh) -> Portfolio:
    gamma, u, w, static = {}, {}, {}, {}
    capital = None
    section = None
    for row in csv.reader(fh):
        if not row:
            continue
        if row[0] == "depth":
            section = "nodes"
            continue
        if row[0] == "s_N":
            section = "static"
            continue
        if row[0] == "capital":
            capital = as_rational(row[1])
            continue
        if section == "nodes":
            pre = tuple(as_rational(s) for s in row[1].split())
            gamma[pre], u[pre], w[pre] = (as_rational(v) for v in row[2:5])
        elif section == "static":
            static[as_rational(row[0])] = as_rational(row[1])
        else:
            raise ValueError("portfolio CSV must start with a depth,prefix,gamma,u,w header")
    if capital is not None:
        return Portfolio(gamma, u, w, None, capital)
    return Portfolio(gamma, u, w, static, None)
