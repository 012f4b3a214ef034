"""In-repo simplex solver with float and exact rational modes."""
from .certify import FarkasCheck, RayCheck, farkas_text, primal_residual, verify_farkas, verify_ray
from .lpformat import dump, dumps
from .model import (LinearProgram, LPError, SizeError, Solution, SolverStallError, StateError,
                    Status, extract_duals)
from .simplex import solve, solve_exact, solve_float

__all__ = [
    "LinearProgram", "Solution", "Status", "LPError", "SizeError", "SolverStallError",
    "StateError", "extract_duals", "solve", "solve_exact", "solve_float", "verify_farkas",
    "verify_ray", "primal_residual", "farkas_text", "FarkasCheck", "RayCheck", "dump", "dumps",
]
