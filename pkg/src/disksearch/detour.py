"""The (a, b)-detour strategy for two agents on the unit disk under g_w.

Agent 0 walks to c(-a), searches clockwise to c(b) and returns along the
chord to c(0).  Agent 1 walks to c(-a), searches counter-clockwise to c(0),
takes the chord to c(b) and searches clockwise back to c(0).  Here
``c(t) = (cos t, sin t)``.  Below the threshold weight w0 the angles solve
a three-way balance of worst-case costs; above it the plain split (pi, 0)
is used.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi
NEWTON_TOL = 1e-13
RESIDUAL_TOL = 1e-10
_W0_BRACKET = (0.0, 0.2)


class RootFindingError(RuntimeError):
    def __init__(self, message: str, residual: float) -> None:
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class Regime(str, enum.Enum):
    BELOW = "BelowThreshold"
    ABOVE = "AboveThreshold"


def _check_w(w: float) -> None:
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must lie in [0, 1], got {w}")


def critical_angle(w: float) -> float:
    """Maximizer of 1 + t + 2 sin(t)/(w+1) on [0, pi]."""
    _check_w(w)
    return math.acos(-(w + 1.0) / 2.0)


def gamma_values(w: float, a: float, b: float) -> tuple[float, float, float]:
    _check_w(w)
    if not 0.0 < a < math.pi or not 0.0 <= b < math.pi:
        raise ValueError(f"angles out of range: a={a}, b={b}")
    s = w + 1.0
    g1 = a + 2.0 * math.sin(a) / s
    g2 = TWO_PI - a - b + 2.0 * math.sin(a + b / 2.0 + math.sin(b / 2.0)) / s
    g3 = 2.0 * math.sin(b / 2.0) + (a + b + w * (TWO_PI - a - b)) / s
    return g1, g2, g3


def _residual(w: float, v: np.ndarray) -> np.ndarray:
    g1, g2, g3 = gamma_values(w, float(v[0]), float(v[1]))
    return np.array([g1 - g2, g1 - g3])


def _newton(w: float, guess: tuple[float, float], max_iter: int = 60) -> np.ndarray:
    try:
        return _newton_steps(w, guess, max_iter)
    except ValueError as exc:
        # an iterate reached the edge of the angle domain
        raise RootFindingError(f"Newton left the angle domain for w={w}: {exc}",
                               math.inf) from exc


def _newton_steps(w: float, guess: tuple[float, float], max_iter: int) -> np.ndarray:
    v = np.array(guess, dtype=float)
    h = 1e-7
    for _ in range(max_iter):
        r = _residual(w, v)
        if np.max(np.abs(r)) < NEWTON_TOL:
            return v
        J = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            J[:, k] = (_residual(w, v + e) - _residual(w, v - e)) / (2 * h)
        step = np.linalg.solve(J, -r)
        lam = 1.0
        # damping: halve until the residual decreases and the angles stay valid
        while lam > 1e-6:
            cand = v + lam * step
            if 0 < cand[0] < math.pi and 0 <= cand[1] < math.pi and \
                    np.max(np.abs(_residual(w, cand))) < np.max(np.abs(r)):
                break
            lam /= 2.0
        else:
            break
        v = cand
    res = float(np.max(np.abs(_residual(w, v))))
    if res > RESIDUAL_TOL:
        raise RootFindingError(f"Newton did not converge for w={w}", res)
    return v


def solve_parameters(w: float, guess: tuple[float, float] = (2.0, 0.93),
                     continuation_step: float = 0.02) -> tuple[float, float]:
    """(alpha_w, beta_w) with gamma_1 = gamma_2 = gamma_3.

    Tracks the branch from w = 0 by continuation in steps of at most
    ``continuation_step``.
    """
    _check_w(w)
    v = _newton(0.0, guess)
    steps = max(1, math.ceil(w / continuation_step))
    for k in range(1, steps + 1):
        v = _newton(w * k / steps, (float(v[0]), float(v[1])))
    res = float(np.max(np.abs(_residual(w, v))))
    if res > RESIDUAL_TOL:
        raise RootFindingError(f"parameter system unsolved at w={w}", res)
    return float(v[0]), float(v[1])


_W0_CACHE: list[float] = []


def threshold_w0(tol: float = 1e-12) -> float:
    """Weight at which alpha_w reaches the critical angle."""
    if not _W0_CACHE:
        def gap(w: float) -> float:
            return solve_parameters(w)[0] - critical_angle(w)

        lo, hi = _W0_BRACKET
        if gap(lo) * gap(hi) > 0:
            raise RootFindingError("threshold not bracketed", abs(gap(hi)))
        # plain bisection, matching the definition of w0 as a sign change
        glo = gap(lo)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            gm = gap(mid)
            if (gm < 0) == (glo < 0):
                lo, glo = mid, gm
            else:
                hi = mid
        _W0_CACHE.append(0.5 * (lo + hi))
    return _W0_CACHE[0]


@dataclass(frozen=True)
class DetourParams:
    w: float
    a: float
    b: float
    regime: Regime
    d: float

    @classmethod
    def for_weight(cls, w: float) -> DetourParams:
        _check_w(w)
        w0 = threshold_w0()
        if w <= w0:
            a, b = solve_parameters(w)
            return cls(w, a, b, Regime.BELOW, a)
        return cls(w, math.pi, 0.0, Regime.ABOVE, critical_angle(w))

    def to_dict(self) -> dict:
        return {"w": self.w, "a": self.a, "b": self.b, "regime": self.regime.value,
                "d": self.d}


def closed_form_cost(w: float) -> float:
    """Worst-case normalized g_w cost of the detour strategy at its best angles."""
    _check_w(w)
    d = solve_parameters(w)[0] if w <= threshold_w0() else critical_angle(w)
    return 1.0 + d + 2.0 * math.sin(d) / (w + 1.0)


def branch_costs(w: float) -> dict[str, float | None]:
    """Both branch formulas at ``w``; below-branch is None where unsolvable."""
    _check_w(w)
    s = w + 1.0
    t = critical_angle(w)
    out: dict[str, float | None] = {"above": 1.0 + t + 2.0 * math.sin(t) / s, "below": None}
    if w <= _W0_BRACKET[1]:
        a = solve_parameters(w)[0]
        out["below"] = 1.0 + a + 2.0 * math.sin(a) / s
    return out


@dataclass(frozen=True)
class CaseCosts:
    c1: float
    c2: float
    c3: float
    c4: float
    arrival_gap: float  # 2pi - 2a - b - 2 sin(b/2)
    overlap: float  # 2a + 2b + 2 sin(b/2) - 2pi

    @property
    def side_conditions_hold(self) -> bool:
        return self.arrival_gap >= 0.0 and self.overlap >= 0.0

    @property
    def worst(self) -> float:
        return max(self.c1, self.c2, self.c3, self.c4)


def case_costs(w: float, a: float, b: float) -> CaseCosts:
    """Supremum cost of each target region when the side conditions hold."""
    _check_w(w)
    if not 0.0 < a <= math.pi or not 0.0 <= b < math.pi:
        raise ValueError(f"angles out of range: a={a}, b={b}")
    s = w + 1.0
    c1 = 1.0 + a + 2.0 * math.sin(a) / s
    c3 = 1.0 + TWO_PI - a - b + 2.0 * math.sin(a + b / 2.0 + math.sin(b / 2.0)) / s
    c4 = 1.0 + 2.0 * math.sin(b / 2.0) + (a + b + w * (TWO_PI - a - b)) / s
    return CaseCosts(c1, c1, c3, c4,
                     TWO_PI - 2 * a - b - 2 * math.sin(b / 2.0),
                     2 * a + 2 * b + 2 * math.sin(b / 2.0) - TWO_PI)


def circle(t: float | np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


@dataclass(frozen=True)
class Piece:
    kind: str  # "segment" | "arc"
    start_time: float
    length: float
    searching: bool
    p0: tuple[float, float] = (0.0, 0.0)
    p1: tuple[float, float] = (0.0, 0.0)
    angle0: float = 0.0
    sweep: float = 0.0  # signed

    @property
    def end_time(self) -> float:
        return self.start_time + self.length

    def position(self, s: np.ndarray) -> np.ndarray:
        """Positions after travelling ``s`` (clipped to the piece) along it."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        if self.kind == "arc":
            return circle(self.angle0 + math.copysign(1.0, self.sweep) * s)
        a, b = np.array(self.p0), np.array(self.p1)
        if self.length == 0.0:
            return np.broadcast_to(a, s.shape + (2,)).copy()
        return a + (s / self.length)[..., None] * (b - a)


@dataclass
class Trajectory:
    pieces: list[Piece] = field(default_factory=list)

    @property
    def end_time(self) -> float:
        return self.pieces[-1].end_time if self.pieces else 0.0

    def _append_segment(self, p0: np.ndarray, p1: np.ndarray, searching: bool) -> None:
        length = float(np.hypot(*(p1 - p0)))
        self.pieces.append(Piece("segment", self.end_time, length, searching,
                                 tuple(map(float, p0)), tuple(map(float, p1))))

    def _append_arc(self, angle0: float, sweep: float, searching: bool) -> None:
        self.pieces.append(Piece("arc", self.end_time, abs(sweep), searching,
                                 angle0=angle0, sweep=sweep))

    def position(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape + (2,))
        out[...] = self.pieces[-1].position(np.asarray(self.pieces[-1].length))
        for p in reversed(self.pieces):
            mask = (t >= p.start_time) & (t <= p.end_time)
            if mask.any():
                out[mask] = p.position(t[mask] - p.start_time)
        before = t < 0
        out[before] = 0.0
        return out

    def first_search_time(self, theta: np.ndarray) -> np.ndarray:
        """Earliest time a searching arc covers each angle (inf if never)."""
        theta = np.asarray(theta, dtype=float)
        best = np.full(theta.shape, np.inf)
        for p in self.pieces:
            if p.kind != "arc" or not p.searching or p.length == 0.0:
                continue
            off = np.mod(math.copysign(1.0, p.sweep) * (theta - p.angle0), TWO_PI)
            # angles a hair past the far end wrap; accept the endpoint itself
            off = np.where(off > TWO_PI - 1e-12, 0.0, off)
            hit = off <= p.length + 1e-12
            best = np.where(hit, np.minimum(best, p.start_time + np.minimum(off, p.length)), best)
        return best

    def breakpoints(self) -> list[float]:
        """Angles where a searching arc starts or ends."""
        out = []
        for p in self.pieces:
            if p.kind == "arc" and p.searching:
                out += [p.angle0, p.angle0 + p.sweep]
        return out


def build_trajectories(a: float, b: float) -> tuple[Trajectory, Trajectory]:
    if not 0.0 <= b <= a <= math.pi or a <= 0.0:
        raise ValueError(f"need 0 <= b <= a <= pi and a > 0, got a={a}, b={b}")
    origin = np.zeros(2)
    L, D, E = circle(-a), circle(0.0), circle(b)
    t0 = Trajectory()
    t0._append_segment(origin, L, False)
    t0._append_arc(-a, -(TWO_PI - a - b), True)
    t0._append_segment(E, D, False)
    t1 = Trajectory()
    t1._append_segment(origin, L, False)
    t1._append_arc(-a, a, True)
    t1._append_segment(D, E, False)
    t1._append_arc(b, -b, True)
    return t0, t1


def _costs_at(w: float, trajs: tuple[Trajectory, Trajectory], theta: np.ndarray
              ) -> tuple[np.ndarray, np.ndarray]:
    """Normalized g_w cost g_w(T0, T1)/(1+w) per target angle, and coverage."""
    f0 = trajs[0].first_search_time(theta)
    f1 = trajs[1].first_search_time(theta)
    covered = np.isfinite(np.minimum(f0, f1))
    finder0 = f0 <= f1
    tf = np.where(finder0, f0, f1)
    tf_safe = np.where(covered, tf, 0.0)
    target = circle(theta)
    other0 = trajs[1].position(tf_safe)
    other1 = trajs[0].position(tf_safe)
    other = np.where(finder0[:, None], other0, other1)
    jump = np.hypot(*(other - target).T)
    T0 = np.where(finder0, tf, tf + jump)
    T1 = np.where(finder0, tf + jump, tf)
    cost = (w * T0 + T1) / (w + 1.0)
    return np.where(covered, cost, np.inf), covered


def simulate_worst_case(w: float, a: float, b: float, m: int = 100_000,
                        eps: float = 1e-9) -> tuple[float, float]:
    """Sup over target angles of the normalized cost, on a grid plus breakpoints.

    The grid has ``m`` uniform angles; every searching-arc endpoint is added
    together with its neighbours at distance ``eps`` so that one-sided limits
    at previously visited points are seen.  Ties pick the smaller angle.
    """
    _check_w(w)
    if m < 1:
        raise ValueError("grid resolution must be positive")
    trajs = build_trajectories(a, b)
    theta = np.linspace(0.0, TWO_PI, m, endpoint=False)
    extra = []
    for bp in trajs[0].breakpoints() + trajs[1].breakpoints():
        extra += [bp - eps, bp, bp + eps]
    theta = np.unique(np.mod(np.concatenate([theta, np.array(extra)]), TWO_PI))
    cost, covered = _costs_at(w, trajs, theta)
    if not covered.all():
        miss = float(theta[np.flatnonzero(~covered)[0]])
        raise ValueError(f"angle {miss:.6f} is never searched for a={a}, b={b}")
    k = int(np.argmax(cost))
    return float(cost[k]), float(theta[k])


def coverage_gaps(a: float, b: float) -> list[tuple[float, float]]:
    """Uncovered sub-intervals of [0, 2pi) from the searching arcs (exact interval union)."""
    arcs = []
    for tr in build_trajectories(a, b):
        for p in tr.pieces:
            if p.kind == "arc" and p.searching and p.length > 0:
                lo = p.angle0 if p.sweep > 0 else p.angle0 + p.sweep
                lo = lo % TWO_PI
                hi = lo + p.length
                if hi > TWO_PI:
                    arcs += [(lo, TWO_PI), (0.0, hi - TWO_PI)]
                else:
                    arcs.append((lo, hi))
    arcs.sort()
    gaps, reach = [], 0.0
    for lo, hi in arcs:
        if lo > reach + 1e-12:
            gaps.append((reach, lo))
        reach = max(reach, hi)
    if reach < TWO_PI - 1e-12:
        gaps.append((reach, TWO_PI))
    return gaps


def case2_profile(w: float, a: float, b: float, samples: int = 1000) -> np.ndarray:
    """Cost while agent 0 finds the target during agent 1's first chord."""
    t = np.linspace(0.0, 2.0 * math.sin(b / 2.0), samples)
    target = circle(-2.0 * a - t)
    pos = circle(0.0) + (t / max(2.0 * math.sin(b / 2.0), 1e-300))[:, None] * \
        (circle(b) - circle(0.0))
    return 1.0 + a + t + np.hypot(*(target - pos).T) / (w + 1.0)


def case4_profile(w: float, a: float, b: float, samples: int = 1000) -> np.ndarray:
    """Cost while agent 1 finds the target on arc ED and agent 0 is on its chord."""
    span = 2 * a + 2 * b + 2 * math.sin(b / 2.0) - TWO_PI
    t = np.linspace(0.0, max(span, 0.0), samples)
    chord = 2.0 * math.sin(b / 2.0)
    pos0 = circle(b) + (t / max(chord, 1e-300))[:, None] * (circle(0.0) - circle(b))
    target = circle(span - t)
    return 1.0 + TWO_PI - a - b + t + w * np.hypot(*(pos0 - target).T) / (w + 1.0)
