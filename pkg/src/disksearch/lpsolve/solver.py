"""Solve relaxation instances to optimality.

Two backends share one contract: ``"bundled"`` (the dual-side revised
simplex in :mod:`.simplex`, the default) and ``"highs"`` (scipy's HiGHS,
useful for cross-checking).
"""

from __future__ import annotations

import enum
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from ..relaxation import RelaxationInstance
from .simplex import DualSimplex

TAU_FEAS = 1e-9
TAU_GAP = 1e-8


class LpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


class SolverError(RuntimeError):
    """Raised when an instance that must be solvable is not."""


@dataclass(frozen=True)
class SolverOptions:
    backend: str = "bundled"
    max_iter: int = 20000
    tau_feas: float = TAU_FEAS
    tau_gap: float = TAU_GAP
    pivot_rule: str = "dantzig"

    def __post_init__(self) -> None:
        if self.backend not in ("bundled", "highs"):
            raise ValueError(f"unknown LP backend {self.backend!r}")
        if self.pivot_rule not in ("dantzig", "bland"):
            raise ValueError(f"unknown pivot rule {self.pivot_rule!r}")


@dataclass
class LpSolution:
    status: LpStatus
    objective: float
    primal: np.ndarray = field(repr=False)
    dual: np.ndarray = field(repr=False)
    iterations: int = 0
    basis: list[int] | None = field(default=None, repr=False)
    backend: str = "bundled"
    fingerprint: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def to_json_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "primal": self.primal.tolist(),
            "dual": self.dual.tolist(),
            "iterations": self.iterations,
            "basis": self.basis,
            "backend": self.backend,
            "fingerprint": self.fingerprint,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> LpSolution:
        return cls(
            status=LpStatus(d["status"]),
            objective=float(d["objective"]),
            primal=np.asarray(d["primal"], dtype=float),
            dual=np.asarray(d["dual"], dtype=float),
            iterations=int(d.get("iterations", 0)),
            basis=d.get("basis"),
            backend=d.get("backend", "bundled"),
            fingerprint=d.get("fingerprint", ""),
        )


_SOLVERS: OrderedDict[int, tuple[object, DualSimplex]] = OrderedDict()
_CACHE_SIZE = 256


def _bundled_for(inst: RelaxationInstance) -> DualSimplex:
    key = id(inst.template)
    hit = _SOLVERS.get(key)
    if hit is not None and hit[0] is inst.template:
        _SOLVERS.move_to_end(key)
        return hit[1]
    solver = DualSimplex(inst.matrix, inst.objective)
    _SOLVERS[key] = (inst.template, solver)
    if len(_SOLVERS) > _CACHE_SIZE:
        _SOLVERS.popitem(last=False)
    return solver


def solve(
    inst: RelaxationInstance,
    opts: SolverOptions | None = None,
    warm_start: list[int] | None = None,
) -> LpSolution:
    """Minimize ``z`` for ``inst``.

    ``warm_start`` is the basis of an earlier bundled solve on an instance
    with the same constraint matrix (same n, b and cost); it changes the
    pivot path but not the optimum.
    """
    opts = opts or SolverOptions()
    if opts.backend == "highs":
        sol = _solve_highs(inst, opts)
    else:
        res = _bundled_for(inst).solve(inst.rhs, basis=warm_start, max_iter=opts.max_iter,
                                       pivot_rule=opts.pivot_rule)
        status = {
            "optimal": LpStatus.OPTIMAL,
            "unbounded_dual": LpStatus.INFEASIBLE,
            "infeasible_dual": LpStatus.UNBOUNDED,
            "iteration_limit": LpStatus.ITERATION_LIMIT,
        }[res.status]
        sol = LpSolution(status=status, objective=float(res.x[inst.z_index]),
                         primal=res.x, dual=res.y, iterations=res.iterations,
                         basis=res.basis, backend="bundled")
    sol.fingerprint = inst.fingerprint()
    if sol.optimal:
        _check_optimality(inst, sol, opts)
    return sol


def _solve_highs(inst: RelaxationInstance, opts: SolverOptions) -> LpSolution:
    from scipy.optimize import linprog

    res = linprog(inst.objective, A_ub=-inst.matrix, b_ub=-inst.rhs, bounds=(0, None),
                  method="highs", options={"primal_feasibility_tolerance": opts.tau_feas,
                                           "dual_feasibility_tolerance": opts.tau_feas})
    status = {0: LpStatus.OPTIMAL, 1: LpStatus.ITERATION_LIMIT, 2: LpStatus.INFEASIBLE,
              3: LpStatus.UNBOUNDED}.get(res.status, LpStatus.ITERATION_LIMIT)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, float("nan"), np.zeros(inst.num_vars),
                          np.zeros(inst.num_rows), int(res.nit), None, "highs")
    return LpSolution(status=status, objective=float(res.fun), primal=np.asarray(res.x),
                      dual=np.maximum(-np.asarray(res.ineqlin.marginals), 0.0),
                      iterations=int(res.nit), basis=None, backend="highs")


def optimality_report(inst: RelaxationInstance, sol: LpSolution) -> dict[str, float]:
    """Floating residuals: primal/dual infeasibility, duality gap, slackness."""
    x, y = sol.primal, sol.dual
    slack = inst.matrix @ x - inst.rhs
    reduced = inst.objective - inst.matrix.T @ y
    return {
        "primal_infeasibility": float(max(0.0, -slack.min(), -x.min())),
        "dual_infeasibility": float(max(0.0, -reduced.min(), -y.min())),
        "gap": float(abs(inst.objective @ x - inst.rhs @ y)),
        "complementary_slackness": float(max(np.abs(y * slack).max(),
                                             np.abs(x * reduced).max())),
    }


def _check_optimality(inst: RelaxationInstance, sol: LpSolution, opts: SolverOptions) -> None:
    rep = optimality_report(inst, sol)
    scale = 1.0 + abs(sol.objective)
    if (rep["primal_infeasibility"] > opts.tau_feas * scale
            or rep["dual_infeasibility"] > opts.tau_feas * scale
            or rep["gap"] > opts.tau_gap * scale):
        raise SolverError(
            f"{sol.backend} solve of {inst.config.format()} reported optimal but "
            f"residuals are {rep}")


def solve_checked(inst: RelaxationInstance, opts: SolverOptions | None = None,
                  warm_start: list[int] | None = None) -> LpSolution:
    """Like :func:`solve` but raise unless the status is Optimal."""
    sol = solve(inst, opts, warm_start)
    if not sol.optimal:
        raise SolverError(f"LP for {inst.config.format()} (n={inst.n}, {inst.cost.name}) "
                          f"ended with status {sol.status.value}")
    return sol
