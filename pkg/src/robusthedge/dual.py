"""Dual problems over approximate-martingale path laws.

Band and penalty rows are written in mass-multiplied form: with
mu(v) the mass of node v at depth k, m(v) = sum_{w through v} q(w)(s_N - s_k)
and c(v) = s_k mu(v), the band reads |m(v)| <= kappa c(v). Zero-mass nodes
are then vacuous without any division.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from ._numeric import as_rational, fmt
from .lp import (LinearProgram, Solution, Status, farkas_text, solve_exact, solve_float,
                 verify_farkas)
from .market import GridSpec, PayoffSpec, Tree, build_tree, constant, enumerate_paths, eval_payoff
from .pricing import marginal_constraints


@dataclass(frozen=True)
class PathMeasure:
    """Weights q on an enumerated path list."""

    paths: tuple
    weights: tuple

    def mass(self):
        return sum(self.weights, 0 * self.weights[0])

    def expectation(self, fn: Callable):
        return sum((w * fn(p) for p, w in zip(self.paths, self.weights) if w), 0 * self.weights[0])

    def marginal(self, points: Sequence) -> list:
        idx = {x: i for i, x in enumerate(points)}
        out = [0 * self.weights[0]] * len(points)
        for p, w in zip(self.paths, self.weights):
            out[idx[p[-1]]] += w
        return out

    def support(self) -> list:
        return [(p, w) for p, w in zip(self.paths, self.weights) if w]


def node_stats(q: PathMeasure, tree: Tree):
    """Per trading node: (mass mu(v), sum of q * s_N through v)."""
    out = {}
    for node in tree.nodes():
        mu = 0 * q.weights[0]
        ms = 0 * q.weights[0]
        for p in node.paths:
            w = q.weights[p]
            if w:
                mu += w
                ms += w * tree.paths[p][-1]
        out[node.prefix] = (mu, ms)
    return out


def conditional_expectation(q: PathMeasure, tree: Tree, k: int) -> dict:
    """E_q[s_N | node] for each depth-k node; None marks a zero-mass node."""
    res = {}
    for node in tree.levels[k]:
        mu = sum((q.weights[p] for p in node.paths), 0 * q.weights[0])
        if not mu:
            res[node.prefix] = None
            continue
        res[node.prefix] = sum((q.weights[p] * tree.paths[p][-1] for p in node.paths), 0 * mu) / mu
    return res


def band_violations(q: PathMeasure, tree: Tree, kappa, tol=0) -> list:
    """Nodes where |m(v)| exceeds kappa c(v) by more than tol."""
    bad = []
    for pre, (mu, ms) in node_stats(q, tree).items():
        m = ms - pre[-1] * mu
        if abs(m) - kappa * pre[-1] * mu > tol:
            bad.append((pre, m, kappa * pre[-1] * mu))
    return bad


def penalty_value(q: PathMeasure, M, kappa, grid: GridSpec, payoff: PayoffSpec, tree: Optional[Tree] = None):
    """E_q[F] - M sum_k E_q[(|E_q[s_N|F_k] - s_k| - kappa s_k)^+], computed
    from conditional expectations rather than from an LP epigraph."""
    tree = tree if tree is not None else build_tree(q.paths)
    value = q.expectation(lambda p: eval_payoff(payoff, p))
    pen = 0 * value
    for k in range(tree.N):
        cond = conditional_expectation(q, tree, k)
        for node in tree.levels[k]:
            ce = cond[node.prefix]
            if ce is None:
                continue
            mu = sum((q.weights[p] for p in node.paths), 0 * value)
            excess = abs(ce - node.value) - kappa * node.value
            if excess > 0:
                pen += mu * excess
    return value - M * pen if M else value


@dataclass
class DualResult:
    value: object
    measure: Optional[PathMeasure]
    binding: list
    status: str  # optimal | infeasible | unbounded
    solution: Solution
    lp: LinearProgram
    certified: Optional[bool] = None
    certificate_problems: list = field(default_factory=list)
    farkas_check: object = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def farkas_report(self) -> str:
        if self.farkas_check is None:
            return ""
        return farkas_text(self.lp, self.solution.farkas, self.farkas_check)


def _dual_base(grid: GridSpec, P, kappa, M, tree: Tree, name: str, penalty: bool) -> tuple:
    lp = LinearProgram(name, "max")
    qv = [lp.add_var(f"q[{p}]") for p in range(len(tree.paths))]
    lp.add_row("mass", {v: 1 for v in qv}, "=", 1)
    tv = {}
    for node in tree.nodes():
        lab = f"{node.depth},{node.index}"
        s = node.value
        # m(v) - kappa c(v) and -m(v) - kappa c(v) as linear forms in q
        hi, lo = {}, {}
        for p in node.paths:
            sN = tree.paths[p][-1]
            a = sN - s
            b = kappa * s
            if a - b:
                hi[qv[p]] = a - b
            if -a - b:
                lo[qv[p]] = -a - b
        if penalty:
            t = lp.add_var(f"t[{lab}]")
            tv[node.prefix] = t
            hi[t] = -1
            lo[t] = -1
        lp.add_row(f"band_hi[{lab}]", hi, "<=", 0)
        lp.add_row(f"band_lo[{lab}]", lo, "<=", 0)
    if P is not None:
        idx = {x: i for i, x in enumerate(grid.points)}
        exprs = [dict() for _ in grid.points]
        for p, path in enumerate(tree.paths):
            exprs[idx[path[-1]]][qv[p]] = 1
        marginal_constraints(P, grid).add_to(lp, exprs, prefix="")
    lp.meta = dict(tree=tree, q=qv, t=tv, grid=grid, kappa=kappa, M=M)
    return lp, qv, tv


def _objective(lp, qv, tv, tree, payoff, M):
    obj = {}
    for p, path in enumerate(tree.paths):
        g = eval_payoff(payoff, path)
        if g:
            obj[qv[p]] = g
    for t in tv.values():
        obj[t] = -M
    lp.set_objective(obj)


def build_dual_lp(grid: GridSpec, payoff: PayoffSpec, P, kappa=None, tree: Optional[Tree] = None) -> LinearProgram:
    """max E_q[G] over path laws whose terminal marginal is consistent with P.

    With M unbounded the band is a hard constraint. With finite M the band
    excess is charged at rate M, which makes this the exact LP dual of the
    M-admissible hedging problem.
    """
    kappa = _kappa(grid, kappa)
    tree = tree if tree is not None else build_tree(enumerate_paths(grid))
    penalty = grid.M is not None
    lp, qv, tv = _dual_base(grid, P, kappa, grid.M, tree, "dual", penalty)
    _objective(lp, qv, tv, tree, payoff, grid.M)
    return lp


def build_penalty_dual_lp(grid: GridSpec, payoff: PayoffSpec, M=None, kappa=None,
                          tree: Optional[Tree] = None) -> LinearProgram:
    """max E_q[F] - M sum_v t(v), t(v) >= (|m(v)| - kappa c(v))^+, no marginal constraint."""
    M = grid.M if M is None else as_rational(M)
    if M is None:
        raise ValueError("the penalized dual needs a finite M")
    kappa = _kappa(grid, kappa)
    tree = tree if tree is not None else build_tree(enumerate_paths(grid))
    lp, qv, tv = _dual_base(grid, None, kappa, M, tree, "penalty_dual", True)
    _objective(lp, qv, tv, tree, payoff, M)
    return lp


def _binding(lp: LinearProgram, x, tol) -> list:
    out = []
    for i, row in enumerate(lp.rows):
        if row.label.startswith("band") and abs(lp.row_activity(i, x) - row.rhs) <= tol:
            if any(lp.vars[j].label.startswith("q[") for j in row.coeffs):
                out.append(row.label)
    return out


def _measure(lp: LinearProgram, x) -> PathMeasure:
    tree = lp.meta["tree"]
    return PathMeasure(tree.paths, tuple(x[v] for v in lp.meta["q"]))


def certify_measure(q: PathMeasure, grid: GridSpec, P, kappa, tree: Tree, exact: bool = True) -> list:
    """Problems preventing q from being an approximate-martingale law consistent with P."""
    tol = 0 if exact else 1e-9
    problems = []
    if any(w < -tol for w in q.weights):
        problems.append("negative weight")
    if abs(q.mass() - 1) > (0 if exact else 1e-10):
        problems.append(f"mass {q.mass()} != 1")
    for pre, m, c in band_violations(q, tree, kappa, tol):
        problems.append(f"band violated at {tuple(str(s) for s in pre)}: |m|={abs(m)} > {c}")
    # the marginal membership test pins rho by equalities, so it is only
    # meaningful for exact weights
    if P is not None and exact:
        ok, _ = marginal_constraints(P, grid).feasible(q.marginal(grid.points), exact=True)
        if not ok:
            problems.append("terminal marginal is not consistent with the pricing operator")
    return problems


def _run(lp, exact):
    return solve_exact(lp) if exact else solve_float(lp)


def _finish(lp: LinearProgram, sol: Solution, grid, P, kappa, certify: bool, exact: bool) -> DualResult:
    tol = 0 if sol.mode == "exact" else 1e-9
    if sol.status is Status.INFEASIBLE:
        check = verify_farkas(lp, sol.farkas, tol)
        return DualResult(None, None, [], "infeasible", sol, lp, farkas_check=check)
    if sol.status is Status.UNBOUNDED:
        return DualResult(None, None, [], "unbounded", sol, lp)
    q = _measure(lp, sol.x)
    res = DualResult(sol.objective, q, _binding(lp, sol.x, tol), "optimal", sol, lp)
    if certify:
        res.certificate_problems = certify_measure(q, grid, P, kappa, lp.meta["tree"], sol.mode == "exact")
        res.certified = not res.certificate_problems
    return res


def _kappa(grid, kappa):
    # probes may look at bands wider than the model's own kappa
    if kappa is None:
        return grid.kappa
    kappa = as_rational(kappa)
    if not 0 <= kappa < 1:
        raise ValueError(f"band width kappa must lie in [0, 1), got {kappa}")
    return kappa


def solve_dual(grid: GridSpec, payoff: PayoffSpec, P, kappa=None, exact: bool = True,
               tree: Optional[Tree] = None) -> DualResult:
    kappa = _kappa(grid, kappa)
    lp = build_dual_lp(grid, payoff, P, kappa, tree)
    # the optimizer is only a band-feasible law when no penalty is in play
    return _finish(lp, _run(lp, exact), grid, P, kappa, grid.M is None, exact)


def solve_penalty_dual(grid: GridSpec, payoff: PayoffSpec, M=None, kappa=None, exact: bool = True,
                       tree: Optional[Tree] = None) -> DualResult:
    kappa = _kappa(grid, kappa)
    lp = build_penalty_dual_lp(grid, payoff, M, kappa, tree)
    return _finish(lp, _run(lp, exact), grid, None, kappa, False, exact)


def measure_from_primal(hedge) -> PathMeasure:
    """Path-row duals of an optimal hedging LP, normalized to unit mass."""
    lp, sol = hedge.lp, hedge.solution
    tree = lp.meta["tree"]
    y = [sol.duals[lp.row_index(f"path[{p}]")] for p in range(len(tree.paths))]
    total = sum(y, 0 * y[0])
    return PathMeasure(tree.paths, tuple(v / total for v in y))


# ----------------------------------------------------------------------
# arbitrage probes

@dataclass
class FtapResult:
    feasible: bool
    witness: Optional[PathMeasure]
    dual: DualResult

    @property
    def farkas_check(self):
        return self.dual.farkas_check


def ftap_feasibility(grid: GridSpec, P, kappa=None, exact: bool = True,
                     tree: Optional[Tree] = None) -> FtapResult:
    """Is there an approximate-martingale law consistent with P?"""
    res = solve_dual(grid.replace(M=None), constant(0), P, kappa, exact=exact, tree=tree)
    return FtapResult(res.optimal, res.measure, res)


def select_cell(tree: Tree, cell) -> list:
    """Path indices of a cell given as a predicate, {k: s_k} dict or path list."""
    if callable(cell):
        return [p for p, path in enumerate(tree.paths) if cell(path)]
    if isinstance(cell, dict):
        return [p for p, path in enumerate(tree.paths)
                if all(path[k] == Fraction(v) for k, v in cell.items())]
    members = set()
    for c in cell:
        members.add(c if isinstance(c, int) else tuple(Fraction(s) for s in c))
    return [p for p, path in enumerate(tree.paths) if p in members or path in members]


@dataclass
class ProbeResult:
    value: object
    cell: list
    dual: DualResult

    @property
    def status(self) -> str:
        return self.dual.status


def local_arbitrage_probe(grid: GridSpec, P, kappa=None, cell=None, exact: bool = True,
                          tree: Optional[Tree] = None) -> ProbeResult:
    """Largest mass any consistent approximate-martingale law puts on ``cell``."""
    tree = tree if tree is not None else build_tree(enumerate_paths(grid))
    idx = select_cell(tree, cell if cell is not None else range(len(tree.paths)))
    if not idx:
        raise ValueError("cell selects no enumerated path")
    members = set(idx)
    indicator = PayoffSpec("table", table={p[1:]: Fraction(int(i in members)) for i, p in enumerate(tree.paths)})
    res = solve_dual(grid.replace(M=None), indicator, P, kappa, exact=exact, tree=tree)
    return ProbeResult(res.value, idx, res)


# ----------------------------------------------------------------------
# export

def write_measure_csv(q: PathMeasure, fh, include_zero: bool = False) -> None:
    N = len(q.paths[0]) - 1
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"s_{i}" for i in range(1, N + 1)] + ["weight"])
    for p, wt in zip(q.paths, q.weights):
        if wt or include_zero:
            w.writerow([fmt(s) for s in p[1:]] + [fmt(wt)])
