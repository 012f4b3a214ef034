"""Robust super-replication with proportional transaction costs on a price grid."""
from __future__ import annotations

from .market import GridSpec, PayoffSpec, asian, build_tree, call, constant, enumerate_paths, lookback, put, tail
from .pricing import CallQuotes, MeasureSet, check_axioms, marginal_constraints, price_static
from .primal import Portfolio, portfolio_value, solve_constrained, solve_primal
from .dual import PathMeasure, ftap_feasibility, local_arbitrage_probe, solve_dual, solve_penalty_dual
from .analysis import DoobParams, convergence_sweep, duality_gap, verify_doob

__version__ = "0.1.0"

__all__ = [
    "GridSpec", "PayoffSpec", "asian", "build_tree", "call", "constant", "enumerate_paths", "lookback", "put",
    "tail", "CallQuotes", "MeasureSet", "check_axioms", "marginal_constraints", "price_static", "Portfolio",
    "portfolio_value", "solve_constrained", "solve_primal", "PathMeasure", "ftap_feasibility",
    "local_arbitrage_probe", "solve_dual", "solve_penalty_dual", "DoobParams", "convergence_sweep",
    "duality_gap", "verify_doob",
]
