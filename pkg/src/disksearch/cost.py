"""Cost functions f(T0, T1) combining the two agents' arrival times."""

from __future__ import annotations

import enum
from collections.abc import Iterable
from dataclasses import dataclass


class CostKind(str, enum.Enum):
    PROJ2 = "proj2"
    MAX_NORM = "max"
    WEIGHTED_AVG = "gw"
    MIN = "min"


@dataclass(frozen=True)
class CostFunction:
    """One member of the family {proj2, max, g_w}.

    ``g_w(x, y) = w*x + y`` is stored unscaled; divide by :meth:`normalization`
    when reporting.  ``MIN`` is representable so that it can be rejected
    explicitly by the relaxation machinery.
    """

    kind: CostKind
    w: float | None = None

    def __post_init__(self) -> None:
        if self.kind is CostKind.WEIGHTED_AVG:
            if self.w is None or not 0.0 <= self.w <= 1.0:
                raise ValueError(f"g_w requires 0 <= w <= 1, got {self.w}")
        elif self.w is not None:
            raise ValueError(f"w only applies to g_w, not {self.kind.value}")

    @classmethod
    def proj2(cls) -> CostFunction:
        return cls(CostKind.PROJ2)

    @classmethod
    def max_norm(cls) -> CostFunction:
        return cls(CostKind.MAX_NORM)

    @classmethod
    def gw(cls, w: float) -> CostFunction:
        return cls(CostKind.WEIGHTED_AVG, float(w))

    @classmethod
    def parse(cls, name: str, w: float | None = None) -> CostFunction:
        """Build from the textual names used on the command line."""
        try:
            kind = CostKind(name.lower())
        except ValueError:
            raise ValueError(f"unknown cost function {name!r}") from None
        if kind is CostKind.WEIGHTED_AVG:
            if w is None:
                raise ValueError("cost 'gw' requires a weight w")
            return cls.gw(w)
        return cls(kind)

    @property
    def name(self) -> str:
        if self.kind is CostKind.WEIGHTED_AVG:
            return f"gw(w={self.w:g})"
        return self.kind.value

    @property
    def symmetric(self) -> bool:
        return self.kind in (CostKind.MAX_NORM, CostKind.MIN)

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind.value}
        if self.w is not None:
            d["w"] = self.w
        return d

    @classmethod
    def from_dict(cls, d: dict) -> CostFunction:
        return cls(CostKind(d["kind"]), d.get("w"))


def evaluate(f: CostFunction, x: float, y: float) -> float:
    if x < 0 or y < 0:
        raise ValueError(f"arrival times must be nonnegative, got ({x}, {y})")
    if f.kind is CostKind.PROJ2:
        return y
    if f.kind is CostKind.MAX_NORM:
        return max(x, y)
    if f.kind is CostKind.WEIGHTED_AVG:
        return f.w * x + y
    return min(x, y)


def normalization(f: CostFunction) -> float:
    """f(1, 1), the cost of an agent pair that knows the target in advance."""
    if f.kind is CostKind.WEIGHTED_AVG:
        return 1.0 + f.w
    return 1.0


def linear_terms(f: CostFunction) -> list[tuple[float, float]]:
    """Coefficient pairs (u, v) with f(x, y) = max(u*x + v*y) over the pairs."""
    if f.kind is CostKind.PROJ2:
        return [(0.0, 1.0)]
    if f.kind is CostKind.MAX_NORM:
        return [(1.0, 0.0), (0.0, 1.0)]
    if f.kind is CostKind.WEIGHTED_AVG:
        return [(f.w, 1.0)]
    raise ValueError(f"{f.kind.value} is not a maximum of linear forms")


def shift_rate(f: CostFunction) -> float:
    """Growth of every max-term when both arguments increase by one unit."""
    return max(u + v for u, v in linear_terms(f))


_DEFAULT_SAMPLES = tuple(
    (x, y, a) for x in (0.0, 0.5, 1.0, 2.3, 4.0) for y in (0.0, 0.7, 1.0, 3.1)
    for a in (0.0, 0.3, 1.7)
)


def check_pseudo_linear(
    f: CostFunction, samples: Iterable[tuple[float, float, float]] | None = None,
    tol: float = 1e-12,
) -> bool:
    """Whether f(x+a, y+a)/f(1,1) == f(x,y)/f(1,1) + a on every sample."""
    norm = normalization(f)
    if samples is None:
        samples = _DEFAULT_SAMPLES
    for x, y, a in samples:
        lhs = evaluate(f, x + a, y + a) / norm
        rhs = evaluate(f, x, y) / norm + a
        if abs(lhs - rhs) > tol * max(1.0, abs(rhs)):
            return False
    return True
