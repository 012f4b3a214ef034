"""Two-phase revised simplex in float and exact rational arithmetic.

Both modes run the same pivoting logic on a standard-form image of the
LinearProgram (min c'x, Ax = b, x >= 0, b >= 0). Entering variables are
chosen by the most negative reduced cost; after ``DEGENERACY_STREAK``
consecutive degenerate pivots the rule switches to Bland's smallest-index
rule until a pivot makes progress again.

Exact mode is warm-started from the final basis of a float solve and then
continues with exact arithmetic, so every reported status, objective and
certificate is exact regardless of what the float pass did.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from .._numeric import from_mpq, to_mpq
from .model import LinearProgram, SizeError, Solution, SolverStallError, Status
from .sparse_lu import SingularBasis, SparseLU
from . import certify

DEGENERACY_STREAK = 50
MAX_PIVOTS = 10**6
EXACT_NNZ_CAP = 2000
FLOAT_TOL = 1e-9


@dataclass
class StandardForm:
    m: int
    columns: list  # sparse columns: dict row -> Fraction
    cost: list  # Fraction per column
    b: list  # Fraction per row, all >= 0
    n_struct: int  # columns before artificials
    artificial: list  # artificial column index per row, or None
    initial_basis: list  # column per row
    row_sign: list  # +1/-1 applied to original row i
    n_orig_rows: int
    var_map: list  # per original var: (shift, [(col, coef), ...])
    obj_shift: Fraction
    obj_sign: int  # +1 for min, -1 for max


def standard_form(lp: LinearProgram) -> StandardForm:
    sign = 1 if lp.sense == "min" else -1
    columns: list = []
    cost: list = []
    var_map = []
    extra_rows = []  # (column, ub - lb) for doubly bounded vars
    for j, v in enumerate(lp.vars):
        c = sign * lp.objective.get(j, Fraction(0))
        if v.lb is not None:
            k = len(columns)
            columns.append({})
            cost.append(c)
            var_map.append((v.lb, [(k, 1)]))
            if v.ub is not None:
                extra_rows.append((k, v.ub - v.lb))
        elif v.ub is not None:
            k = len(columns)
            columns.append({})
            cost.append(-c)
            var_map.append((v.ub, [(k, -1)]))
        else:
            k = len(columns)
            columns.extend([{}, {}])
            cost.extend([c, -c])
            var_map.append((Fraction(0), [(k, 1), (k + 1, -1)]))
    obj_shift = sum((sign * lp.objective.get(j, 0) * var_map[j][0] for j in range(len(lp.vars))), Fraction(0))

    m0 = len(lp.rows)
    m = m0 + len(extra_rows)
    b = [Fraction(0)] * m
    row_sign = [1] * m
    senses = []
    for i, row in enumerate(lp.rows):
        rhs = row.rhs
        for j, a in row.coeffs.items():
            shift, parts = var_map[j]
            rhs -= a * shift
            for k, coef in parts:
                columns[k][i] = columns[k].get(i, 0) + a * coef
        b[i] = rhs
        senses.append(row.sense)
    for t, (k, width) in enumerate(extra_rows):
        columns[k][m0 + t] = Fraction(1)
        b[m0 + t] = width
        senses.append("<=")
    for col in columns:
        for i in [i for i, v in col.items() if v == 0]:
            del col[i]

    slack_of = [None] * m
    for i, sense in enumerate(senses):
        if sense == "<=":
            slack_of[i] = (len(columns), 1)
            columns.append({i: Fraction(1)})
            cost.append(Fraction(0))
        elif sense == ">=":
            slack_of[i] = (len(columns), -1)
            columns.append({i: Fraction(-1)})
            cost.append(Fraction(0))
    for i in range(m):
        if b[i] < 0:
            row_sign[i] = -1
            b[i] = -b[i]
            for col in columns:
                if i in col:
                    col[i] = -col[i]
    n_struct = len(columns)
    artificial: list = [None] * m
    basis = [None] * m
    for i in range(m):
        s = slack_of[i]
        if s is not None and s[1] * row_sign[i] == 1:
            basis[i] = s[0]
        else:
            artificial[i] = len(columns)
            basis[i] = len(columns)
            columns.append({i: Fraction(1)})
            cost.append(Fraction(0))
    return StandardForm(m, columns, cost, b, n_struct, artificial, basis, row_sign,
                        m0, var_map, obj_shift, sign)


# ----------------------------------------------------------------------
# arithmetic backends

class _FloatBackend:
    tol = FLOAT_TOL
    exact = False

    def __init__(self, sf: StandardForm):
        self.m = sf.m
        n = len(sf.columns)
        A = np.zeros((sf.m, n))
        for j, col in enumerate(sf.columns):
            for i, v in col.items():
                A[i, j] = float(v)
        self.A = A
        self.b = np.array([float(v) for v in sf.b])
        self.scale = 1.0 + float(np.max(np.abs(A))) if A.size else 1.0
        self._lu = None

    def zero(self):
        return 0.0

    def cost_vector(self, costs):
        return np.array([float(c) for c in costs])

    def factor(self, basis):
        B = self.A[:, basis]
        try:
            with np.errstate(all="ignore"):
                lu = scipy.linalg.lu_factor(B, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover
            raise SingularBasis(str(exc))
        if np.min(np.abs(np.diag(lu[0]))) < 1e-13:
            raise SingularBasis("numerically singular basis")
        self._lu = lu

    def solve(self, rhs):
        return scipy.linalg.lu_solve(self._lu, rhs, check_finite=False)

    def solve_t(self, rhs):
        return scipy.linalg.lu_solve(self._lu, rhs, trans=1, check_finite=False)

    def xb(self):
        return self.solve(self.b)

    def column(self, j):
        return self.A[:, j]

    def reduced_costs(self, c, y, candidates):
        d = c - y @ self.A
        return {j: d[j] for j in candidates}

    def row_of_binv_a(self, r, candidates):
        e = np.zeros(self.m)
        e[r] = 1.0
        rho = self.solve_t(e)
        vals = rho @ self.A
        return {j: vals[j] for j in candidates}


class _ExactBackend:
    tol = 0
    exact = True

    def __init__(self, sf: StandardForm):
        self.m = sf.m
        self.cols = [{i: to_mpq(v) for i, v in col.items()} for col in sf.columns]
        self.b = [to_mpq(v) for v in sf.b]
        self.scale = 1
        self._lu = None

    def zero(self):
        return to_mpq(Fraction(0))

    def cost_vector(self, costs):
        return [to_mpq(c) for c in costs]

    def factor(self, basis):
        self._lu = SparseLU([self.cols[j] for j in basis], self.m)

    def solve(self, rhs):
        return self._lu.solve(rhs)

    def solve_t(self, rhs):
        return self._lu.solve_transpose(rhs)

    def xb(self):
        return self.solve(self.b)

    def column(self, j):
        col = [0] * self.m
        for i, v in self.cols[j].items():
            col[i] = v
        return col

    def reduced_costs(self, c, y, candidates):
        out = {}
        for j in candidates:
            acc = c[j]
            for i, v in self.cols[j].items():
                yi = y[i]
                if yi:
                    acc -= yi * v
            out[j] = acc
        return out

    def row_of_binv_a(self, r, candidates):
        e = [0] * self.m
        e[r] = 1
        rho = self.solve_t(e)
        out = {}
        for j in candidates:
            acc = 0
            for i, v in self.cols[j].items():
                if rho[i]:
                    acc += rho[i] * v
            out[j] = acc
        return out


# ----------------------------------------------------------------------

class _Engine:
    def __init__(self, sf: StandardForm, backend, max_pivots: int):
        self.sf = sf
        self.be = backend
        self.max_pivots = max_pivots
        self.pivots: list = []
        self.n = len(sf.columns)
        self.is_art = [False] * self.n
        for a in sf.artificial:
            if a is not None:
                self.is_art[a] = True

    def run(self, basis, costs, allowed):
        """Simplex iterations from a primal feasible ``basis``.

        Returns ("optimal", basis, xb, y) or ("unbounded", basis, xb, (q, dcol)).
        """
        be = self.be
        tol = be.tol
        c = be.cost_vector(costs)
        streak = 0
        basis = list(basis)
        while True:
            be.factor(basis)
            xb = be.xb()
            cb = [c[j] for j in basis]
            y = be.solve_t(np.array(cb) if not be.exact else cb)
            in_basis = set(basis)
            candidates = [j for j in range(self.n) if allowed[j] and j not in in_basis]
            d = be.reduced_costs(c, y, candidates)
            bland = streak >= DEGENERACY_STREAK
            q = None
            if bland:
                for j in candidates:
                    if d[j] < -tol:
                        q = j
                        break
            else:
                best = None
                for j in candidates:
                    if d[j] < -tol and (best is None or d[j] < best):
                        best, q = d[j], j
            if q is None:
                return "optimal", basis, xb, y
            dcol = be.solve(be.column(q))
            r = None
            best_ratio = None
            for i in range(self.sf.m):
                if dcol[i] > tol:
                    xi = xb[i] if xb[i] > 0 else 0 * dcol[i]
                    ratio = xi / dcol[i]
                    if r is None:
                        r, best_ratio = i, ratio
                        continue
                    if be.exact:
                        tie = ratio == best_ratio
                        better = ratio < best_ratio
                    else:
                        tie = abs(ratio - best_ratio) <= 1e-12 * (1 + abs(best_ratio))
                        better = ratio < best_ratio and not tie
                    if better:
                        r, best_ratio = i, ratio
                    elif tie:
                        if bland:
                            if basis[i] < basis[r]:
                                r = i
                        elif dcol[i] > dcol[r] or (dcol[i] == dcol[r] and basis[i] < basis[r]):
                            r = i
            if r is None:
                return "unbounded", basis, xb, (q, dcol)
            if best_ratio <= tol:
                streak += 1
            else:
                streak = 0
            self.pivots.append((q, basis[r]))
            basis[r] = q
            if len(self.pivots) > self.max_pivots:
                raise SolverStallError(f"simplex exceeded the pivot cap of {self.max_pivots}")

    def drive_out_artificials(self, basis, xb):
        """Pivot zero-valued artificials out of the basis where possible."""
        be = self.be
        tol = be.tol
        basis = list(basis)
        changed = True
        while changed:
            changed = False
            be.factor(basis)
            for r, j in enumerate(basis):
                if not self.is_art[j]:
                    continue
                in_basis = set(basis)
                cands = [k for k in range(self.sf.n_struct) if k not in in_basis]
                row = be.row_of_binv_a(r, cands)
                pick = None
                for k in cands:
                    val = row[k]
                    if abs(val) > (tol if be.exact else 1e-7):
                        if pick is None or (not be.exact and abs(val) > abs(row[pick])):
                            pick = k
                            if be.exact:
                                break
                if pick is not None:
                    self.pivots.append((pick, j))
                    basis[r] = pick
                    changed = True
                    break
        return basis


def _run_two_phase(sf: StandardForm, backend, max_pivots, warm_basis=None):
    eng = _Engine(sf, backend, max_pivots)
    be = backend
    art_set = {a for a in sf.artificial if a is not None}
    phase1_costs = [Fraction(1) if j in art_set else Fraction(0) for j in range(len(sf.columns))]
    all_allowed = [True] * len(sf.columns)
    basis = list(sf.initial_basis)
    if warm_basis is not None:
        try:
            be.factor(warm_basis)
            xb = be.xb()
            if all(v >= 0 for v in xb):
                basis = list(warm_basis)
        except SingularBasis:
            pass
    # phase 1
    outcome, basis, xb, y1 = eng.run(basis, phase1_costs, all_allowed)
    infeas = sum((xb[i] for i, j in enumerate(basis) if j in art_set), be.zero())
    thresh = 0 if be.exact else FLOAT_TOL * (1 + max(float(v) for v in sf.b) if sf.b else 1)
    if infeas > thresh:
        return Status.INFEASIBLE, basis, xb, y1, eng
    basis = eng.drive_out_artificials(basis, xb)
    be.factor(basis)
    xb = be.xb()
    # phase 2: nonbasic artificials may never re-enter
    allowed = [j not in art_set for j in range(len(sf.columns))]
    outcome, basis, xb, extra = eng.run(basis, sf.cost, allowed)
    if outcome == "unbounded":
        return Status.UNBOUNDED, basis, xb, extra, eng
    return Status.OPTIMAL, basis, xb, extra, eng


def _solve(lp: LinearProgram, backend_cls, max_pivots, warm_basis=None):
    sf = standard_form(lp)
    be = backend_cls(sf)
    if sf.m == 0:
        # no rows at all: x = 0 is optimal unless some cost is negative
        eng = _Engine(sf, be, max_pivots)
        neg = [j for j, c in enumerate(sf.cost) if c < 0]
        if neg:
            return sf, be, Status.UNBOUNDED, [], [], (neg[0], []), eng
        return sf, be, Status.OPTIMAL, [], [], [], eng
    status, basis, xb, extra, eng = _run_two_phase(sf, be, max_pivots, warm_basis)
    return sf, be, status, basis, xb, extra, eng


def _package(lp, sf, be, status, basis, xb, extra, eng, mode):
    """Map a standard-form outcome back onto the original LP."""
    out = from_mpq if be.exact else float
    zero = Fraction(0) if be.exact else 0.0
    one = Fraction(1) if be.exact else 1.0
    n = len(sf.columns)
    sol = Solution(status=status, mode=mode, pivots=list(eng.pivots),
                   row_labels=tuple(r.label for r in lp.rows),
                   var_labels=tuple(v.label for v in lp.vars))
    m0 = sf.n_orig_rows
    if status is Status.INFEASIBLE:
        sol.farkas = [sf.row_sign[i] * out(extra[i]) for i in range(m0)]
        return sol

    def lift(vec, with_shift):
        res = []
        for shift, parts in sf.var_map:
            v = (shift if be.exact else float(shift)) if with_shift else zero
            for k, coef in parts:
                v = v + coef * vec[k]
            res.append(v)
        return res

    xstd = [zero] * n
    for i, j in enumerate(basis):
        xstd[j] = out(xb[i])
    sol.x = lift(xstd, True)
    sol.objective = sum((a * sol.x[j] for j, a in lp.objective.items()), zero)
    if status is Status.UNBOUNDED:
        q, dcol = extra
        dstd = [zero] * n
        dstd[q] = one
        for i, j in enumerate(basis):
            dstd[j] = -out(dcol[i])
        sol.ray = lift(dstd, False)
        return sol
    s = sf.obj_sign
    sol.duals = [s * sf.row_sign[i] * out(extra[i]) for i in range(m0)]
    certify.attach_optimality(lp, sol)
    return sol


def solve_float(lp: LinearProgram, max_pivots: int = MAX_PIVOTS) -> Solution:
    """Solve in double precision; residuals are reported, not assumed."""
    res = _solve(lp, _FloatBackend, max_pivots)
    sol = _package(lp, *res, mode="float")
    sol._basis = res[3]  # used to warm-start exact mode
    sol._status_basis = res[2]
    return sol


def solve_exact(lp: LinearProgram, max_pivots: int = MAX_PIVOTS,
                nnz_cap: int = EXACT_NNZ_CAP, warm: bool = True) -> Solution:
    """Solve in exact rational arithmetic.

    A float solve supplies a starting basis; exact pivoting continues from it
    (or from the slack basis when it is unusable) until exact optimality,
    infeasibility or unboundedness is established.
    """
    if lp.nnz > nnz_cap:
        raise SizeError(f"LP has {lp.nnz} nonzeros, above the exact-mode cap of {nnz_cap}; "
                        "use float mode")
    warm_basis = None
    if warm:
        try:
            fsol = solve_float(lp, max_pivots)
            warm_basis = fsol._basis
        except (SolverStallError, SingularBasis, np.linalg.LinAlgError):
            warm_basis = None
    res = _solve(lp, _ExactBackend, max_pivots, warm_basis)
    return _package(lp, *res, mode="exact")


def solve(lp: LinearProgram, exact: bool = False, **kw) -> Solution:
    return solve_exact(lp, **kw) if exact else solve_float(lp, **kw)
