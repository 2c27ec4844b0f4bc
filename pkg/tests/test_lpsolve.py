from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from disksearch.cost import CostFunction
from disksearch.lpsolve import (
    CertifiedBound,
    LpSolution,
    LpStatus,
    SolverError,
    SolverOptions,
    certify,
    chord_enclosure,
    exact_basis_dual,
    optimality_report,
    solve,
    solve_checked,
    verify_certificate,
    verify_dual,
)
from disksearch.lpsolve.simplex import dual_simplex_solve
from disksearch.relaxation import Configuration, build_rel

N3 = build_rel(3, CostFunction.proj2(), Configuration((0, 1, 2), (0, 1, 0)), 1.0)
N4 = build_rel(4, CostFunction.proj2(), Configuration((0, 1, 2, 3), (1, 0, 0, 1)), 1.0)
N5 = build_rel(5, CostFunction.proj2(), Configuration((0, 2, 1, 3, 4), (0, 1, 0, 1, 1)), 1.0)
N6 = build_rel(6, CostFunction.proj2(), Configuration((0, 1, 2, 4, 3, 5), (1, 0, 0, 1, 0, 1)), 1.0)

N5_VALUE = 1 + math.sqrt(25 + 2 * math.sqrt(5)) / 2


@st.composite
def instances(draw):
    n = draw(st.integers(3, 5))
    rho = draw(st.permutations(range(n)))
    b = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    f = draw(st.sampled_from([CostFunction.proj2(), CostFunction.max_norm(),
                              CostFunction.gw(0.45)]))
    t0 = draw(st.floats(0.0, 2.0))
    return build_rel(n, f, Configuration(tuple(rho), tuple(b)), t0)


class TestSimplex:
    def test_tiny_lp(self):
        # min x + y  s.t.  x + 2y >= 2, 3x + y >= 3
        A = sparse.csr_matrix([[1.0, 2.0], [3.0, 1.0]])
        res = dual_simplex_solve(A, np.array([2.0, 3.0]), np.array([1.0, 1.0]))
        assert res.status == "optimal"
        assert res.x == pytest.approx([0.8, 0.6])
        assert res.dual_objective == pytest.approx(1.4)

    def test_unbounded_dual_means_infeasible_primal(self):
        # x >= 1 and -x >= 0 cannot both hold
        A = sparse.csr_matrix([[1.0], [-1.0]])
        res = dual_simplex_solve(A, np.array([1.0, 0.0]), np.array([1.0]))
        assert res.status == "unbounded_dual"


class TestSolve:
    @pytest.mark.parametrize("inst, expected", [
        (N3, 1 + math.sqrt(3)),
        (N4, 1 + 3 / math.sqrt(2)),
        (N5, N5_VALUE),
        (N6, 3 + math.sqrt(3) / 2),
    ], ids=["n3", "n4", "n5", "n6"])
    def test_known_values(self, inst, expected):
        sol = solve_checked(inst)
        assert sol.status is LpStatus.OPTIMAL
        assert sol.objective == pytest.approx(expected, abs=1e-8)

    @settings(max_examples=25, deadline=None)
    @given(instances())
    def test_agrees_with_highs(self, inst):
        a = solve_checked(inst)
        b = solve_checked(inst, SolverOptions(backend="highs"))
        assert a.objective == pytest.approx(b.objective, abs=1e-8)
        rep = optimality_report(inst, a)
        assert rep["complementary_slackness"] <= 1e-6
        assert rep["gap"] <= 1e-8 * (1 + abs(a.objective))

    def test_bitwise_deterministic(self):
        a, b = solve(N5), solve(N5)
        assert a.objective.hex() == b.objective.hex()
        assert np.array_equal(a.dual, b.dual)

    def test_warm_start_keeps_optimum(self):
        cold = solve(N5)
        other = build_rel(5, CostFunction.proj2(), Configuration((0, 1, 2, 4, 3), (0, 1, 0, 1, 1)), 1.0)
        warm = solve(other, warm_start=cold.basis)
        assert warm.objective == pytest.approx(solve(other).objective, abs=1e-10)

    def test_bland_rule(self):
        sol = solve(N4, SolverOptions(pivot_rule="bland"))
        assert sol.objective == pytest.approx(1 + 3 / math.sqrt(2), abs=1e-8)

    def test_iteration_limit(self):
        sol = solve(N6, SolverOptions(max_iter=3))
        assert sol.status is LpStatus.ITERATION_LIMIT
        with pytest.raises(SolverError):
            solve_checked(N6, SolverOptions(max_iter=3))

    def test_bad_options(self):
        with pytest.raises(ValueError):
            SolverOptions(backend="cplex")
        with pytest.raises(ValueError):
            SolverOptions(pivot_rule="steepest")

    def test_solution_round_trip(self):
        sol = solve(N3)
        back = LpSolution.from_json_dict(sol.to_json_dict())
        assert back.objective == sol.objective and back.basis == sol.basis
        assert np.array_equal(back.dual, sol.dual)


class TestCertify:
    @pytest.mark.parametrize("inst, expected", [
        (N3, 1 + math.sqrt(3)),
        (N5, N5_VALUE),
    ], ids=["n3", "n5"])
    def test_certified_below_optimum(self, inst, expected):
        sol = solve_checked(inst)
        cert = certify(inst, sol)
        assert cert.verified, cert.reason
        assert expected - 1e-6 <= float(cert.value) <= expected
        assert 0 <= sol.objective - float(cert.value) <= 1e-6

    def test_negated_multiplier_rejected(self):
        sol = solve_checked(N3)
        k = int(np.argmax(sol.dual))
        sol.dual[k] = -sol.dual[k]
        assert not certify(N3, sol).verified

    def test_inflated_dual_rejected(self):
        sol = solve_checked(N4)
        sol.dual = sol.dual * 1.01
        sol.basis = None
        cert = certify(N4, sol)
        assert not cert.verified

    def test_corrupt_dual_not_repaired_from_basis(self):
        sol = solve_checked(N4)
        k = int(np.argmax(sol.dual))
        sol.dual[k] *= 1.5
        cert = certify(N4, sol)
        assert not cert.verified
        assert "differs" in cert.reason or "violated" in cert.reason

    def test_fingerprint_mismatch(self):
        sol = solve_checked(N3)
        sol.fingerprint = "0" * 64
        assert not certify(N3, sol).verified

    def test_verify_round_trip_and_tamper(self):
        cert = certify(N4, solve_checked(N4))
        back = CertifiedBound.from_json_dict(cert.to_json_dict())
        again = verify_certificate(N4, back)
        assert again.verified and again.value == cert.value
        r = max(back.dual, key=back.dual.get)
        back.dual[r] *= 2
        assert not verify_certificate(N4, back).verified
        wrong_value = CertifiedBound.from_json_dict(cert.to_json_dict())
        wrong_value.value += Fraction(1, 10**9)
        assert not verify_certificate(N4, wrong_value).verified

    def test_exact_basis_dual_is_feasible(self):
        sol = solve_checked(N5)
        ok, reason, value = verify_dual(N5, exact_basis_dual(N5, sol.basis))
        assert ok, reason
        assert float(value) == pytest.approx(N5_VALUE, abs=1e-9)
        assert float(value) <= N5_VALUE + 1e-15

    def test_weak_duality_exactly(self):
        for inst in (N3, N4, N5, N6):
            cert = certify(inst, solve_checked(inst))
            assert cert.verified
            assert float(cert.value) <= solve_checked(inst).objective + 1e-12

    @pytest.mark.parametrize("k, n", [(1, 7), (3, 14), (2, 9), (4, 8)])
    def test_chord_enclosure(self, k, n):
        lo, hi = chord_enclosure(k, n)
        with mpmath.workprec(300):
            v = 2 * mpmath.sin(mpmath.pi * k / n)
            assert mpmath.mpf(lo.numerator) / lo.denominator < v
            assert v < mpmath.mpf(hi.numerator) / hi.denominator
        assert hi - lo <= Fraction(4, 2**64)
        assert lo.denominator <= 2**64
