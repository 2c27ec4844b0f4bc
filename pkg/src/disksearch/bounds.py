"""Disk lower bounds assembled from n-gon relaxation minima."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from .cost import CostFunction, check_pseudo_linear, normalization
from .enumeration import SweepResult, SweepSpec, SymmetryFlags, sweep

_COS = math.cos(3 * math.pi / 14)
_SIN = math.sin(math.pi / 7)


@dataclass
class BoundReport:
    domain: str  # "ngon" | "disk"
    cost: CostFunction
    value: float
    n: int | None = None
    certified: Fraction | None = None
    provenance: dict = field(default_factory=dict)
    normalization: float = 1.0

    def __post_init__(self) -> None:
        if self.domain not in ("ngon", "disk"):
            raise ValueError(f"unknown domain {self.domain!r}")

    def to_json_dict(self) -> dict:
        return {
            "domain": self.domain,
            "cost": self.cost.to_dict(),
            "n": self.n,
            "value": self.value,
            "certified": None if self.certified is None else
            {"num": str(self.certified.numerator), "den": str(self.certified.denominator)},
            "provenance": self.provenance,
            "normalization": self.normalization,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> BoundReport:
        cert = d.get("certified")
        return cls(
            domain=d["domain"],
            cost=CostFunction.from_dict(d["cost"]),
            value=float(d["value"]),
            n=d.get("n"),
            certified=None if cert is None else Fraction(int(cert["num"]), int(cert["den"])),
            provenance=d.get("provenance", {}),
            normalization=float(d.get("normalization", 1.0)),
        )


def _check_w(w: float) -> None:
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must lie in [0, 1], got {w}")


def lift_to_disk(ngon_bound: float, n: int, f: CostFunction) -> float:
    """Disk bound from a normalized n-gon bound at t0 = 1: add pi/n.

    Valid because every term of a pseudo-linear cost shifts at the same
    rate as the normalization.  Other costs must use :func:`direct_disk_bound`.
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not check_pseudo_linear(f):
        raise ValueError(f"{f.name} is not pseudo-linear; use direct_disk_bound")
    return ngon_bound + math.pi / n


def ngon_report(result: SweepResult, f: CostFunction) -> BoundReport:
    """Normalized n-gon bound of a finished sweep at t0 = 1."""
    norm = normalization(f)
    cert = result.certificate
    return BoundReport(
        domain="ngon",
        cost=f,
        n=result.spec.n if result.spec else None,
        value=result.min_value / norm,
        certified=cert.value / Fraction(norm) if cert is not None and cert.verified else None,
        provenance={
            "path": "relaxation sweep",
            "t0": result.spec.t0 if result.spec else None,
            "argmin": result.argmin.to_dict() if result.argmin else None,
            "examined": result.examined,
        },
        normalization=norm,
    )


def disk_report(ngon: BoundReport) -> BoundReport:
    if ngon.domain != "ngon" or ngon.n is None:
        raise ValueError("disk_report expects an n-gon report")
    lift = math.pi / ngon.n
    prov = dict(ngon.provenance)
    prov.update({"path": prov.get("path", "") + " + pi/n lift", "lift": lift,
                 "ngon_value": ngon.value})
    return BoundReport(
        domain="disk",
        cost=ngon.cost,
        n=ngon.n,
        value=lift_to_disk(ngon.value, ngon.n, ngon.cost),
        certified=None if ngon.certified is None else ngon.certified + pi_over_n_lower(ngon.n),
        provenance=prov,
        normalization=ngon.normalization,
    )


def pi_over_n_lower(n: int, bits: int = 64) -> Fraction:
    """A rational strictly below pi/n."""
    with mpmath.workprec(4 * bits):
        return Fraction(int(mpmath.floor(mpmath.pi / n * 2**bits)) - 1, 1 << bits)


def direct_disk_bound(n: int, f: CostFunction, **spec_kw) -> BoundReport:
    """Disk bound by sweeping at t0 = 1 + pi/n and normalizing."""
    spec = SweepSpec(n=n, cost=f, t0=1.0 + math.pi / n,
                     flags=spec_kw.pop("flags", SymmetryFlags.full(f)), **spec_kw)
    res = sweep(spec)
    rep = ngon_report(res, f)
    rep.domain = "disk"
    rep.provenance["path"] = "relaxation sweep at t0 = 1 + pi/n"
    return rep


def weak_gw_bound() -> float:
    """Searching the whole unit circle from the centre takes at least 1 + pi."""
    return 1.0 + math.pi


def ngon_gw_bound(w: float) -> float:
    """Closed form of the normalized heptagon relaxation minimum for g_w.

    Equal to the sweep minimum for w <= 0.8 and below it for larger w.
    """
    _check_w(w)
    return 1.0 + _COS / (w + 1.0) + 5.0 * _SIN


def disk_gw_bound_n7(w: float) -> float:
    return ngon_gw_bound(w) + math.pi / 7


def combined_gw_bound(w: float) -> float:
    _check_w(w)
    return max(weak_gw_bound(), disk_gw_bound_n7(w))


def gw_crossover() -> float:
    """The w where the heptagon branch meets 1 + pi."""
    return 7 * _COS / (6 * math.pi - 35 * _SIN) - 1.0


def gw_disk_report(w: float) -> BoundReport:
    f = CostFunction.gw(w)
    ngon = ngon_gw_bound(w)
    lifted = ngon + math.pi / 7
    weak = weak_gw_bound()
    return BoundReport(
        domain="disk",
        cost=f,
        n=7,
        value=max(weak, lifted),
        provenance={
            "path": "max(weak 1+pi, heptagon closed form + pi/7)",
            "ngon_value": ngon,
            "lifted": lifted,
            "weak": weak,
            "branch": "weak" if weak >= lifted else "heptagon",
        },
        normalization=normalization(f),
    )


def w_grid(start: float = 0.0, stop: float = 1.0, step: float = 0.01) -> np.ndarray:
    if step <= 0:
        raise ValueError("step must be positive")
    k = int(math.floor((stop - start) / step + 1e-9))
    return np.round(start + step * np.arange(k + 1), 12)


def w_sweep_rows(start: float = 0.0, stop: float = 1.0, step: float = 0.01) -> list[dict]:
    from .detour import closed_form_cost

    rows = []
    for w in w_grid(start, stop, step):
        w = float(w)
        rows.append({
            "w": w,
            "ngon_bound": ngon_gw_bound(w),
            "weak_bound": weak_gw_bound(),
            "combined": combined_gw_bound(w),
            "upper_bound": closed_form_cost(w),
        })
    return rows


def write_w_sweep(path: str | os.PathLike, rows: list[dict]) -> None:
    cols = ["w", "ngon_bound", "weak_bound", "combined", "upper_bound"]
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=cols)
        wr.writeheader()
        for r in rows:
            wr.writerow({k: f"{r[k]:.6f}" if k != "w" else f"{r[k]:.4f}" for k in cols})


def bracket_crossover(rows: list[dict]) -> tuple[float, float]:
    """Consecutive grid weights between which the combined bound switches branch."""
    prev = None
    for r in rows:
        heptagon = r["ngon_bound"] + math.pi / 7 > r["weak_bound"]
        if prev is not None and prev[1] and not heptagon:
            return prev[0], r["w"]
        prev = (r["w"], heptagon)
    raise ValueError("no branch change on this grid")

