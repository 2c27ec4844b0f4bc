"""Exact rational dual certificates for relaxation LP optima.

For ``min c.x  s.t.  A x >= b, x >= 0`` any ``y >= 0`` with ``A^T y <= c``
proves ``b.y <= OPT``.  The matrix entries are binary floats and are read
exactly as rationals.  Chord constants in ``b`` are irrational, so each is
replaced by a rational enclosure rounded in the direction that only weakens
the rhs; the certified value is therefore a valid lower bound on the true
optimum.
"""

from __future__ import annotations

import functools
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from ..relaxation import RelaxationInstance
from .simplex import DualSimplex
from .solver import LpSolution

ENCLOSURE_BITS = 64
CERT_SLACK = 1e-6
_ROUND_DENOMINATOR = 10**12


@dataclass
class CertifiedBound:
    value: Fraction
    fingerprint: str
    verified: bool
    dual: dict[int, Fraction] = field(default_factory=dict, repr=False)
    reason: str = ""
    method: str = ""

    @property
    def value_float(self) -> float:
        return float(self.value)

    def to_json_dict(self) -> dict:
        return {
            "value": {"num": str(self.value.numerator), "den": str(self.value.denominator)},
            "value_float": float(self.value),
            "fingerprint": self.fingerprint,
            "verified": self.verified,
            "method": self.method,
            "reason": self.reason,
            "dual": [{"row": r, "num": str(q.numerator), "den": str(q.denominator)}
                     for r, q in sorted(self.dual.items())],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> CertifiedBound:
        return cls(
            value=Fraction(int(d["value"]["num"]), int(d["value"]["den"])),
            fingerprint=d["fingerprint"],
            verified=bool(d["verified"]),
            dual={int(e["row"]): Fraction(int(e["num"]), int(e["den"])) for e in d["dual"]},
            reason=d.get("reason", ""),
            method=d.get("method", ""),
        )

    def digest(self) -> str:
        payload = json.dumps(self.to_json_dict()["dual"], sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


@functools.lru_cache(maxsize=4096)
def chord_enclosure(k: int, n: int, bits: int = ENCLOSURE_BITS) -> tuple[Fraction, Fraction]:
    """Rationals ``lo <= 2 sin(pi k / n) <= hi`` with denominator ``2**bits``."""
    with mpmath.workprec(4 * bits + 64):
        v = 2 * mpmath.sin(mpmath.pi * k / n)
        scaled = v * mpmath.mpf(2) ** bits
        lo = int(mpmath.floor(scaled)) - 1
        hi = int(mpmath.ceil(scaled)) + 1
    den = 1 << bits
    return Fraction(lo, den), Fraction(hi, den)


def rhs_lower_enclosure(inst: RelaxationInstance, row: int) -> Fraction:
    """A rational lower bound on the rhs of ``row``."""
    t0_coef, chords = inst.rhs_terms(row)
    total = Fraction(t0_coef) * Fraction(inst.t0)
    for coef, k in chords:
        lo, hi = chord_enclosure(k, inst.n)
        total += Fraction(coef) * (lo if coef > 0 else hi)
    return total


def verify_dual(inst: RelaxationInstance, dual: dict[int, Fraction]) -> tuple[bool, str, Fraction]:
    """Exact check of ``y >= 0`` and ``A^T y <= c``; returns (ok, reason, b_lo.y)."""
    for r, q in dual.items():
        if not 0 <= r < inst.num_rows:
            return False, f"row id {r} out of range", Fraction(0)
        if q < 0:
            return False, f"negative multiplier on {inst.row_names[r]}", Fraction(0)
    m = inst.matrix
    col_sum: dict[int, Fraction] = {}
    for r, q in dual.items():
        if q == 0:
            continue
        lo, hi = m.indptr[r], m.indptr[r + 1]
        for k in range(lo, hi):
            j = int(m.indices[k])
            col_sum[j] = col_sum.get(j, Fraction(0)) + Fraction(float(m.data[k])) * q
    c = inst.objective
    for j, s in col_sum.items():
        if s > Fraction(float(c[j])):
            return False, f"dual constraint of {inst.var_names[j]} violated by {float(s - Fraction(float(c[j]))):.3e}", Fraction(0)
    value = sum((q * rhs_lower_enclosure(inst, r) for r, q in dual.items() if q != 0),
                Fraction(0))
    return True, "", value


def _rounded_dual(y: np.ndarray) -> dict[int, Fraction]:
    out: dict[int, Fraction] = {}
    for r in np.flatnonzero(np.abs(y) > 1e-13):
        out[int(r)] = Fraction(float(y[r])).limit_denominator(_ROUND_DENOMINATOR)
    return out


def exact_basis_dual(inst: RelaxationInstance, basis: list[int]) -> dict[int, Fraction]:
    """Solve ``B y_B = c`` exactly over the rationals for a simplex basis."""
    solver = DualSimplex(inst.matrix, inst.objective)
    B = solver.basis_matrix(basis)
    N = B.shape[0]
    rows = [[Fraction(float(v)) for v in B[i]] + [Fraction(float(inst.objective[i]))]
            for i in range(N)]
    # fraction-exact Gauss-Jordan with first-nonzero pivoting
    for col in range(N):
        piv = next((r for r in range(col, N) if rows[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular basis")
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        if p != 1:
            rows[col] = [v / p for v in rows[col]]
        prow = rows[col]
        nz = [k for k in range(col, N + 1) if prow[k] != 0]
        for r in range(N):
            if r != col:
                f = rows[r][col]
                if f != 0:
                    rr = rows[r]
                    for k in nz:
                        rr[k] -= f * prow[k]
    m = inst.num_rows
    dual: dict[int, Fraction] = {}
    for k, colid in enumerate(basis):
        if colid < m and rows[k][N] != 0:
            dual[colid] = rows[k][N]
    return dual


def certify(inst: RelaxationInstance, sol: LpSolution) -> CertifiedBound:
    """Turn the floating dual of ``sol`` into an exactly verified lower bound.

    The dual is first rounded to nearby rationals.  If that misses exact
    feasibility and the solution carries a simplex basis, the basic dual is
    recomputed exactly; it is accepted only if it agrees with the supplied
    floating dual, so a corrupted dual is never silently replaced.
    """
    fp = inst.fingerprint()
    if sol.fingerprint and sol.fingerprint != fp:
        return CertifiedBound(Fraction(0), fp, False, reason="instance fingerprint mismatch")
    if not sol.optimal:
        return CertifiedBound(Fraction(0), fp, False, reason=f"status {sol.status.value}")
    if np.any(sol.dual < -1e-9):
        k = int(np.argmin(sol.dual))
        return CertifiedBound(Fraction(0), fp, False,
                              reason=f"negative multiplier on {inst.row_names[k]}")

    dual = _rounded_dual(sol.dual)
    ok, reason, value = verify_dual(inst, dual)
    method = "rounded"
    if not ok and sol.basis is not None:
        exact = exact_basis_dual(inst, sol.basis)
        drift = max((abs(float(exact.get(r, 0)) - float(sol.dual[r]))
                     for r in range(inst.num_rows)), default=0.0)
        if drift <= 1e-6:
            ok, reason, value = verify_dual(inst, exact)
            dual, method = exact, "basis"
        else:
            reason = f"{reason}; basis dual differs from supplied dual by {drift:.3e}"
    if not ok:
        return CertifiedBound(Fraction(0), fp, False, dual=dual, reason=reason, method=method)
    if float(value) > sol.objective + 1e-9 * (1 + abs(sol.objective)):
        return CertifiedBound(value, fp, False, dual=dual, method=method,
                              reason="certified value exceeds reported optimum")
    if sol.objective - float(value) > CERT_SLACK:
        return CertifiedBound(value, fp, False, dual=dual, method=method,
                              reason=f"certificate slack {sol.objective - float(value):.3e}")
    return CertifiedBound(value, fp, True, dual=dual, method=method)


def verify_certificate(inst: RelaxationInstance, cert: CertifiedBound) -> CertifiedBound:
    """Independently re-check a (possibly deserialized) certificate."""
    fp = inst.fingerprint()
    if cert.fingerprint != fp:
        return CertifiedBound(Fraction(0), fp, False, dual=cert.dual,
                              reason="instance fingerprint mismatch")
    ok, reason, value = verify_dual(inst, cert.dual)
    if ok and value != cert.value:
        ok, reason = False, "stated value does not match the dual objective"
    return CertifiedBound(value if ok else Fraction(0), fp, ok, dual=cert.dual,
                          reason=reason, method=cert.method)

