"""Revised primal simplex applied to the dual of ``min c.x, A x >= b, x >= 0``.

The dual ``max b.y, A^T y + s = c, y, s >= 0`` has an immediately feasible
slack basis whenever ``c >= 0`` (true for every relaxation instance), so no
phase one is needed.  The simplex multipliers of the dual are exactly the
primal variables ``x``.  Because ``A`` and ``c`` do not depend on ``b``, an
optimal basis for one right-hand side is a feasible warm start for any other.

Pricing is Dantzig's largest-coefficient rule.  The relaxation duals are
highly degenerate (the cost vector has a single nonzero), so after
``stall_limit`` pivots without progress the basic values are perturbed once;
a short dual-simplex pass on the true costs cleans up afterwards.  If the
perturbed problem stalls as well, Bland's smallest-index rule takes over
until the objective improves.  All choices are index-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse


@dataclass
class SimplexResult:
    status: str  # "optimal" | "unbounded_dual" | "iteration_limit"
    x: np.ndarray
    y: np.ndarray
    dual_objective: float
    iterations: int
    basis: list[int]


class DualSimplex:
    """Solver bound to a fixed constraint matrix and cost vector."""

    def __init__(self, A: sparse.spmatrix, c: np.ndarray) -> None:
        c = np.asarray(c, dtype=float)
        if np.any(c < 0):
            raise ValueError("slack basis requires a nonnegative cost vector")
        self.A = sparse.csr_matrix(A)
        self.dense = self.A.toarray()
        self.c = c
        self.m, self.N = self.A.shape

    def basis_matrix(self, basis: list[int]) -> np.ndarray:
        m, N = self.m, self.N
        cols = np.asarray(basis)
        B = np.zeros((N, N))
        is_y = cols < m
        B[:, is_y] = self.dense[cols[is_y]].T
        k = np.flatnonzero(~is_y)
        B[cols[k] - m, k] = 1.0
        return B

    def solve(
        self,
        b: np.ndarray,
        *,
        basis: list[int] | None = None,
        max_iter: int = 20000,
        tol: float = 1e-10,
        pivot_tol: float = 1e-9,
        refactor_every: int = 64,
        stall_limit: int = 40,
        pivot_rule: str = "dantzig",
        perturbation: float = 1e-7,
    ) -> SimplexResult:
        """Maximize ``b.y`` over the dual polyhedron.

        ``basis`` is a warm start, typically the final basis of a solve with
        another right-hand side; it stays feasible because feasibility of the
        dual does not depend on ``b``.
        """
        m, N = self.m, self.N
        b = np.asarray(b, dtype=float)
        if basis is None:
            basis = [m + k for k in range(N)]
            binv = np.eye(N)
        else:
            basis = list(basis)
            binv = np.linalg.inv(self.basis_matrix(basis))
            if np.any(binv @ self.c < -1e-9):
                basis = [m + k for k in range(N)]
                binv = np.eye(N)
        state = _State(basis=basis, binv=binv, b=b, m=m)
        status, it, perturbed = self._primal_phase(
            state, max_iter, tol, pivot_tol, refactor_every, stall_limit,
            pivot_rule, perturbation)
        if status == "optimal" and perturbed:
            status, it2 = self._cleanup_phase(state, max_iter - it, tol, pivot_tol)
            it += it2
        state.refactor(self)
        xb = state.binv @ self.c
        pi = state.binv.T @ state.cb
        y = np.zeros(m)
        cols = np.asarray(state.basis)
        is_y = cols < m
        y[cols[is_y]] = np.maximum(xb[is_y], 0.0)
        return SimplexResult(status=status, x=pi, y=y, dual_objective=float(b @ y),
                             iterations=it, basis=list(state.basis))

    def _perturbation_pattern(self) -> np.ndarray:
        # fixed, index-determined pattern in [1, 2)
        k = np.arange(self.N)
        return 1.0 + np.mod(k * 0.6180339887498949, 1.0)

    def _reduced_costs(self, state: _State, pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rc_y = state.b - self.A @ pi
        rc_y[state.in_basis[:self.m]] = 0.0
        rc_s = -pi
        rc_s[state.in_basis[self.m:]] = 0.0
        return rc_y, rc_s

    def _primal_phase(self, state, max_iter, tol, pivot_tol, refactor_every,
                      stall_limit, pivot_rule, perturbation):
        """Primal simplex on the dual; perturbs the basic values once on stalling.

        Shifting the cost vector by ``B delta`` with ``delta > 0`` keeps the
        current basis feasible while breaking the degenerate ties.
        """
        m, N = self.m, self.N
        b = state.b
        c = self.c.copy()
        price_tol = tol * (1.0 + np.abs(b))
        xb = state.binv @ c
        pi = state.binv.T @ state.cb
        bland = pivot_rule == "bland"
        perturbed = False
        stall = 0
        best_obj = float(state.cb @ xb)
        it = 0
        while it < max_iter:
            rc_y, rc_s = self._reduced_costs(state, pi)
            cand_y = rc_y > price_tol
            cand_s = rc_s > tol
            any_y, any_s = cand_y.any(), cand_s.any()
            if not (any_y or any_s):
                return "optimal", it, perturbed
            if bland:
                q = int(np.argmax(cand_y)) if any_y else m + int(np.argmax(cand_s))
            else:
                vy = vs = -np.inf
                if any_y:
                    jy = int(np.argmax(np.where(cand_y, rc_y, -np.inf)))
                    vy = rc_y[jy]
                if any_s:
                    js = int(np.argmax(np.where(cand_s, rc_s, -np.inf)))
                    vs = rc_s[js]
                q = jy if vy >= vs else m + js

            d = state.binv @ self.dense[q] if q < m else state.binv[:, q - m].copy()
            pos = d > pivot_tol
            if not pos.any():
                return "unbounded_dual", it, perturbed
            ratios = np.full(N, np.inf)
            ratios[pos] = np.maximum(xb[pos], 0.0) / d[pos]
            theta = ratios.min()
            ties = np.flatnonzero(ratios <= theta + 1e-12 * (1.0 + theta))
            if ties.size == 1:
                r = int(ties[0])
            elif bland:
                r = int(ties[np.argmin(np.asarray(state.basis)[ties])])
            else:
                r = int(ties[np.argmax(d[ties])])
            state.pivot(r, q, d)
            it += 1
            if it % refactor_every == 0:
                state.refactor(self)
            xb = state.binv @ c
            pi = state.binv.T @ state.cb

            obj = float(state.cb @ xb)
            if obj > best_obj + 1e-13 * (1.0 + abs(best_obj)):
                best_obj = obj
                stall = 0
                bland = pivot_rule == "bland"
            else:
                stall += 1
                if stall >= stall_limit:
                    stall = 0
                    if perturbed or perturbation <= 0:
                        bland = True
                    else:
                        perturbed = True
                        shift = perturbation * self._perturbation_pattern()
                        c = c + self.basis_matrix(state.basis) @ shift
                        xb = state.binv @ c
                        best_obj = float(state.cb @ xb)
        return "iteration_limit", it, perturbed

    def _cleanup_phase(self, state, max_iter, tol, pivot_tol):
        """Dual simplex on the unperturbed costs, starting from an optimal basis.

        Reduced costs do not depend on the cost vector, so the basis stays
        optimal-priced; only negative basic values need to be pivoted out.
        """
        m = self.m
        state.refactor(self)
        it = 0
        while it < max_iter:
            xb = state.binv @ self.c
            r = int(np.argmin(xb))
            if xb[r] >= -tol:
                return "optimal", it
            pi = state.binv.T @ state.cb
            rc_y, rc_s = self._reduced_costs(state, pi)
            row = state.binv[r]
            alpha_y = self.dense @ row
            alpha_s = row.copy()
            alpha_y[state.in_basis[:m]] = 0.0
            alpha_s[state.in_basis[m:]] = 0.0
            best, q = np.inf, -1
            neg = np.flatnonzero(alpha_y < -pivot_tol)
            if neg.size:
                ratios = np.minimum(rc_y[neg], 0.0) / alpha_y[neg]
                k = int(np.argmin(ratios))
                best, q = ratios[k], int(neg[k])
            neg = np.flatnonzero(alpha_s < -pivot_tol)
            if neg.size:
                ratios = np.minimum(rc_s[neg], 0.0) / alpha_s[neg]
                k = int(np.argmin(ratios))
                if ratios[k] < best:
                    best, q = ratios[k], m + int(neg[k])
            if q < 0:
                return "infeasible_dual", it
            d = state.binv @ self.dense[q] if q < m else state.binv[:, q - m].copy()
            state.pivot(r, q, d)
            it += 1
        return "iteration_limit", it


@dataclass
class _State:
    basis: list[int]
    binv: np.ndarray
    b: np.ndarray
    m: int

    def __post_init__(self) -> None:
        cols = np.asarray(self.basis)
        self.cb = np.where(cols < self.m, self.b[np.minimum(cols, self.m - 1)], 0.0)
        self.in_basis = np.zeros(self.m + len(self.basis), dtype=bool)
        self.in_basis[cols] = True

    def pivot(self, r: int, q: int, d: np.ndarray) -> None:
        row_r = self.binv[r] / d[r]
        self.binv -= np.outer(d, row_r)
        self.binv[r] = row_r
        self.in_basis[self.basis[r]] = False
        self.in_basis[q] = True
        self.basis[r] = q
        self.cb[r] = self.b[q] if q < self.m else 0.0

    def refactor(self, solver: DualSimplex) -> None:
        self.binv = np.linalg.inv(solver.basis_matrix(self.basis))


def dual_simplex_solve(A: sparse.spmatrix, b: np.ndarray, c: np.ndarray,
                       **kwargs) -> SimplexResult:
    """One-shot convenience wrapper around :class:`DualSimplex`."""
    return DualSimplex(A, c).solve(b, **kwargs)
