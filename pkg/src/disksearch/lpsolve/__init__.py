"""LP solving and exact certification for relaxation instances."""

from .certify import (
    CertifiedBound,
    certify,
    chord_enclosure,
    exact_basis_dual,
    verify_certificate,
    verify_dual,
)
from .solver import (
    TAU_FEAS,
    TAU_GAP,
    LpSolution,
    LpStatus,
    SolverError,
    SolverOptions,
    optimality_report,
    solve,
    solve_checked,
)

__all__ = [
    "TAU_FEAS",
    "TAU_GAP",
    "CertifiedBound",
    "LpSolution",
    "LpStatus",
    "SolverError",
    "SolverOptions",
    "certify",
    "chord_enclosure",
    "exact_basis_dual",
    "optimality_report",
    "solve",
    "solve_checked",
    "verify_certificate",
    "verify_dual",
]
