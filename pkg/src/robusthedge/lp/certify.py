"""Independent checks of solver output by direct arithmetic.

Everything here recomputes from the LinearProgram itself; nothing is taken
from solver internals. With Fraction inputs the checks are exact.
"""
from __future__ import annotations

from dataclasses import dataclass

from .model import LinearProgram, Solution


def _zero_like(vals):
    for v in vals:
        return v * 0
    return 0


def _transpose_product(lp: LinearProgram, y):
    z = [_zero_like(y)] * len(lp.vars)
    for i, row in enumerate(lp.rows):
        yi = y[i]
        if yi:
            for j, a in row.coeffs.items():
                z[j] = z[j] + a * yi
    return z


def primal_residual(lp: LinearProgram, x):
    """Largest violation of any row or bound by ``x`` (0 if feasible)."""
    worst = _zero_like(x)
    for i, row in enumerate(lp.rows):
        act = lp.row_activity(i, x)
        if row.sense == "<=":
            viol = act - row.rhs
        elif row.sense == ">=":
            viol = row.rhs - act
        else:
            viol = abs(act - row.rhs)
        if viol > worst:
            worst = viol
    for j, v in enumerate(lp.vars):
        if v.lb is not None and v.lb - x[j] > worst:
            worst = v.lb - x[j]
        if v.ub is not None and x[j] - v.ub > worst:
            worst = x[j] - v.ub
    return worst


def attach_optimality(lp: LinearProgram, sol: Solution) -> None:
    """Fill reduced costs, residuals and the dual objective of an optimal solve."""
    s = 1 if lp.sense == "min" else -1
    y = sol.duals
    x = sol.x
    zero = _zero_like(x)
    z = _transpose_product(lp, y)
    d = [lp.objective.get(j, 0) - z[j] for j in range(len(lp.vars))]
    dual_res = zero
    cs = zero
    dual_obj = zero
    for i, row in enumerate(lp.rows):
        yh = s * y[i]
        if row.sense == ">=" and yh < 0:
            dual_res = max(dual_res, -yh)
        elif row.sense == "<=" and yh > 0:
            dual_res = max(dual_res, yh)
        dual_obj = dual_obj + yh * row.rhs
        if yh:
            cs = cs + abs(yh) * abs(lp.row_activity(i, x) - row.rhs)
    for j, v in enumerate(lp.vars):
        dh = s * d[j]
        if dh > 0:
            if v.lb is None:
                dual_res = max(dual_res, dh)
            else:
                dual_obj = dual_obj + dh * v.lb
                cs = cs + dh * abs(x[j] - v.lb)
        elif dh < 0:
            if v.ub is None:
                dual_res = max(dual_res, -dh)
            else:
                dual_obj = dual_obj + dh * v.ub
                cs = cs + (-dh) * abs(x[j] - v.ub)
    sol.reduced_costs = d
    sol.primal_residual = primal_residual(lp, x)
    sol.dual_residual = dual_res
    sol.cs_residual = cs
    sol.dual_objective = s * dual_obj


@dataclass(frozen=True)
class FarkasCheck:
    valid: bool
    combined_rhs: object  # y . b
    box_sup: object  # sup over the variable box of (A^T y) . x, None if infinite
    reason: str = ""


def verify_farkas(lp: LinearProgram, y, tol=0) -> FarkasCheck:
    """Check that row multipliers ``y`` prove the LP infeasible.

    Sign convention: multipliers of ``>=`` rows are nonnegative and of ``<=``
    rows nonpositive, so every feasible x has (A^T y).x >= y.b. The
    certificate is valid when the supremum of (A^T y).x over the variable
    bounds is finite and strictly below y.b.
    """
    for i, row in enumerate(lp.rows):
        if row.sense == ">=" and y[i] < -tol:
            return FarkasCheck(False, None, None, f"row {row.label} multiplier has wrong sign")
        if row.sense == "<=" and y[i] > tol:
            return FarkasCheck(False, None, None, f"row {row.label} multiplier has wrong sign")
    z = _transpose_product(lp, y)
    rhs = sum((y[i] * row.rhs for i, row in enumerate(lp.rows)), _zero_like(y))
    sup = _zero_like(y)
    for j, v in enumerate(lp.vars):
        if z[j] > tol:
            if v.ub is None:
                return FarkasCheck(False, rhs, None, f"unbounded along {v.label}")
            sup = sup + z[j] * v.ub
        elif z[j] < -tol:
            if v.lb is None:
                return FarkasCheck(False, rhs, None, f"unbounded along {v.label}")
            sup = sup + z[j] * v.lb
    ok = sup < rhs - tol
    return FarkasCheck(ok, rhs, sup, "" if ok else "combination not violated")


@dataclass(frozen=True)
class RayCheck:
    valid: bool
    slope: object  # objective change per unit step
    reason: str = ""


def verify_ray(lp: LinearProgram, x, d, tol=0) -> RayCheck:
    """Check that x is feasible and x + t d stays feasible with improving objective."""
    if primal_residual(lp, x) > tol:
        return RayCheck(False, None, "base point infeasible")
    for i, row in enumerate(lp.rows):
        act = lp.row_activity(i, d)
        if row.sense == "=" and abs(act) > tol:
            return RayCheck(False, None, f"row {row.label} changes along ray")
        if row.sense == "<=" and act > tol:
            return RayCheck(False, None, f"row {row.label} violated along ray")
        if row.sense == ">=" and act < -tol:
            return RayCheck(False, None, f"row {row.label} violated along ray")
    for j, v in enumerate(lp.vars):
        if v.lb is not None and d[j] < -tol:
            return RayCheck(False, None, f"{v.label} leaves its lower bound")
        if v.ub is not None and d[j] > tol:
            return RayCheck(False, None, f"{v.label} leaves its upper bound")
    slope = lp.objective_value(d)
    improving = slope < -tol if lp.sense == "min" else slope > tol
    return RayCheck(improving, slope, "" if improving else "objective does not improve")


def farkas_text(lp: LinearProgram, y, check: FarkasCheck | None = None) -> str:
    """Human-readable labelled row combination."""
    lines = [f"# infeasibility certificate for {lp.name}", "# row_label multiplier"]
    for i, row in enumerate(lp.rows):
        if y[i]:
            lines.append(f"{row.label} {y[i]}")
    if check is not None:
        lines.append(f"# combined rhs y.b = {check.combined_rhs}")
        lines.append(f"# sup over bounds of (A^T y).x = {check.box_sup}")
        lines.append(f"# valid = {check.valid}")
    return "\n".join(lines) + "\n"
