from caufrac._lp.program import (
    Constraint,
    LinearProgram,
    LPSolution,
    LPStatus,
    ProgramBuilder,
    Relation,
)
from caufrac._lp.simplex import solve, verify

__all__ = [
    "Constraint",
    "LinearProgram",
    "LPSolution",
    "LPStatus",
    "ProgramBuilder",
    "Relation",
    "solve",
    "verify",
]
