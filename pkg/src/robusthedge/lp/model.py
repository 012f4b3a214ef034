"""Linear program container and solution record."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .._numeric import as_rational


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LPError(Exception):
    """Base class for solver errors."""


class SolverStallError(LPError):
    pass


class SizeError(LPError):
    pass


class StateError(LPError):
    pass


SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class Var:
    label: str
    lb: Optional[Fraction]  # None means -inf
    ub: Optional[Fraction]  # None means +inf


@dataclass(frozen=True)
class Row:
    label: str
    coeffs: dict  # var index -> Fraction
    sense: str
    rhs: Fraction


class LinearProgram:
    """Sparse LP with labelled variables and rows.

    Coefficients are stored as Fractions; the float solver converts on entry.
    """

    def __init__(self, name: str = "lp", sense: str = "min"):
        if sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
        self.name = name
        self.sense = sense
        self.vars: list[Var] = []
        self.rows: list[Row] = []
        self.objective: dict[int, Fraction] = {}
        self._var_index: dict[str, int] = {}
        self._row_index: dict[str, int] = {}
        self.meta: dict = {}

    # -- construction -------------------------------------------------
    def add_var(self, label: str, lb=0, ub=None) -> int:
        if label in self._var_index:
            raise ValueError(f"duplicate variable label {label!r}")
        lb = None if lb is None else as_rational(lb)
        ub = None if ub is None else as_rational(ub)
        if lb is not None and ub is not None and lb > ub:
            raise ValueError(f"variable {label!r} has lb > ub")
        self.vars.append(Var(label, lb, ub))
        self._var_index[label] = len(self.vars) - 1
        return len(self.vars) - 1

    def add_row(self, label: str, coeffs: dict, sense: str, rhs=0) -> int:
        if label in self._row_index:
            raise ValueError(f"duplicate row label {label!r}")
        if sense not in SENSES:
            raise ValueError(f"bad row sense {sense!r}")
        clean = {}
        for j, a in coeffs.items():
            if not 0 <= j < len(self.vars):
                raise IndexError(f"row {label!r} references unknown variable {j}")
            a = as_rational(a)
            if a != 0:
                clean[j] = clean.get(j, 0) + a
        self.rows.append(Row(label, clean, sense, as_rational(rhs)))
        self._row_index[label] = len(self.rows) - 1
        return len(self.rows) - 1

    def set_objective(self, coeffs: dict) -> None:
        self.objective = {j: as_rational(a) for j, a in coeffs.items() if a != 0}

    def add_objective(self, j: int, a) -> None:
        a = as_rational(a)
        v = self.objective.get(j, Fraction(0)) + a
        if v == 0:
            self.objective.pop(j, None)
        else:
            self.objective[j] = v

    # -- queries --------------------------------------------------------
    def var_index(self, label: str) -> int:
        return self._var_index[label]

    def row_index(self, label: str) -> int:
        return self._row_index[label]

    @property
    def nnz(self) -> int:
        return sum(len(r.coeffs) for r in self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.vars)

    def objective_value(self, x: Sequence) -> object:
        return sum((a * x[j] for j, a in self.objective.items()), 0 * x[0] if x else 0)

    def row_activity(self, i: int, x: Sequence):
        return sum((a * x[j] for j, a in self.rows[i].coeffs.items()), 0 * x[0] if x else 0)


@dataclass
class Solution:
    """Result of a solve.

    ``duals`` holds one multiplier per row with the convention that the dual
    of a ``<=`` row in a maximization (``>=`` row in a minimization) is
    nonnegative. On infeasibility ``farkas`` holds a row combination; on
    unboundedness ``ray`` holds a direction and ``x`` a feasible point.
    """

    status: Status
    mode: str
    objective: object = None
    x: Optional[list] = None
    duals: Optional[list] = None
    reduced_costs: Optional[list] = None
    primal_residual: object = None
    dual_residual: object = None
    cs_residual: object = None
    dual_objective: object = None
    farkas: Optional[list] = None
    ray: Optional[list] = None
    pivots: list = field(default_factory=list)
    row_labels: tuple = ()
    var_labels: tuple = ()

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def value(self, label: str):
        return self.x[self.var_labels.index(label)]

    def values(self) -> dict:
        return dict(zip(self.var_labels, self.x))


def extract_duals(sol: Solution, labels: Optional[Sequence[str]] = None) -> dict:
    """Map row labels to dual values; only defined at an optimum."""
    if sol.status is not Status.OPTIMAL:
        raise StateError(f"duals requested for a solve with status {sol.status.value}")
    duals = dict(zip(sol.row_labels, sol.duals))
    if labels is None:
        return duals
    return {lab: duals[lab] for lab in labels}
