"""Explicit planar schedules for a (rho, b) configuration on the n-gon.

At event i vertex rho_i is first visited by agent b_i; the other agent is at
a free point P_i.  Given the points, the earliest feasible event times follow
by a forward pass, and the cost of target rho_i is f(c0_i, c1_i) with the
non-visitor arriving after a straight jump.  Any feasible schedule bounds the
relaxation optimum of the same configuration from above.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .cost import CostFunction, evaluate
from .geometry import vertex_position
from .relaxation import Configuration

FEAS_TOL = 1e-9


@dataclass(frozen=True)
class PlanarEmbedding:
    config: Configuration
    times: tuple[float, ...]
    points: tuple[tuple[float, float], ...]  # free agent position per event

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "points",
                           tuple((float(x), float(y)) for x, y in self.points))
        n = self.config.n
        if len(self.times) != n or len(self.points) != n:
            raise ValueError(f"embedding needs {n} times and {n} points")
        if not all(math.isfinite(v) for v in self.times + sum(self.points, ())):
            raise ValueError("embedding has non-finite entries")

    @property
    def n(self) -> int:
        return self.config.n

    def labels(self) -> np.ndarray:
        """Array ``[event, agent, xy]`` of agent positions at each event."""
        n = self.n
        out = np.empty((n, 2, 2))
        for i in range(n):
            v = vertex_position(self.config.rho[i], n).as_tuple()
            bi = self.config.b[i]
            out[i, bi] = v
            out[i, 1 - bi] = self.points[i]
        return out

    def to_json_dict(self) -> dict:
        return {"config": self.config.to_dict(), "times": list(self.times),
                "points": [list(p) for p in self.points]}

    @classmethod
    def from_json_dict(cls, d: dict) -> PlanarEmbedding:
        return cls(Configuration.from_dict(d["config"]), tuple(d["times"]),
                   tuple(tuple(p) for p in d["points"]))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)

    @classmethod
    def load(cls, path: str | os.PathLike) -> PlanarEmbedding:
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass
class NlpVerdict:
    feasible: bool
    objective: float
    violations: list[str]
    arrivals: np.ndarray  # [event, agent]

    def to_json_dict(self) -> dict:
        return {"feasible": self.feasible, "objective": self.objective,
                "violations": self.violations, "arrivals": self.arrivals.tolist()}


def _arrivals(lab: np.ndarray, times: np.ndarray, b: tuple[int, ...]) -> np.ndarray:
    n = len(times)
    anchor = lab[np.arange(n), np.asarray(b)]
    gap = np.linalg.norm(lab - anchor[:, None, :], axis=2)
    return times[:, None] + gap


def _objective(arr: np.ndarray, f: CostFunction) -> float:
    return max(evaluate(f, float(c0), float(c1)) for c0, c1 in arr)


def evaluate_nlp(emb: PlanarEmbedding, f: CostFunction, t0: float) -> NlpVerdict:
    """Check every schedule constraint and return the worst target cost."""
    t = np.asarray(emb.times)
    lab = emb.labels()
    bad = []
    if t[0] < t0 - FEAS_TOL:
        bad.append(f"start: t[0]={t[0]:.9g} < t0={t0:.9g}")
    for i in range(emb.n - 1):
        dt = t[i + 1] - t[i]
        if dt < -FEAS_TOL:
            bad.append(f"order: t[{i + 1}] < t[{i}]")
        for j in (0, 1):
            need = float(np.linalg.norm(lab[i + 1, j] - lab[i, j]))
            if dt < need - FEAS_TOL:
                bad.append(f"move: agent {j}, event {i} -> {i + 1} needs {need:.9g}, "
                           f"has {dt:.9g}")
    arr = _arrivals(lab, t, emb.config.b)
    return NlpVerdict(not bad, _objective(arr, f), bad, arr)


def earliest_times(config: Configuration, points: np.ndarray, t0: float) -> np.ndarray:
    """Smallest feasible event times for the given free points."""
    n = config.n
    vert = np.array([vertex_position(config.rho[i], n).as_tuple() for i in range(n)])
    lab = np.empty((n, 2, 2))
    b = np.asarray(config.b)
    lab[np.arange(n), b] = vert
    lab[np.arange(n), 1 - b] = points
    step = np.linalg.norm(np.diff(lab, axis=0), axis=2).max(axis=1)
    return t0 + np.concatenate([[0.0], np.cumsum(step)])


def repaired(emb: PlanarEmbedding, t0: float) -> PlanarEmbedding:
    times = earliest_times(emb.config, np.asarray(emb.points), t0)
    return PlanarEmbedding(emb.config, tuple(times), emb.points)


def degenerate_embedding(config: Configuration, t0: float) -> PlanarEmbedding:
    """Both agents travel together along the visiting order."""
    n = config.n
    pts = np.array([vertex_position(config.rho[i], n).as_tuple() for i in range(n)])
    return PlanarEmbedding(config, tuple(earliest_times(config, pts, t0)),
                           tuple(map(tuple, pts)))


class _Reduced:
    """Objective as a function of the free points, times at their earliest.

    ``mu > 0`` gives a smooth convex upper approximation: norms become
    sqrt(|v|^2 + mu^2), pairwise maxima become their hyperbolic smoothing
    and the outer maximum a log-sum-exp.  ``mu = 0`` is exact.
    """

    def __init__(self, config: Configuration, f: CostFunction, t0: float) -> None:
        n = config.n
        self.n, self.f, self.t0 = n, f, t0
        self.b = np.asarray(config.b)
        self.vert = np.array([vertex_position(config.rho[i], n).as_tuple() for i in range(n)])
        # anchored agent's moves between consecutive vertices
        lab = np.empty((n, 2, 2))
        lab[np.arange(n), self.b] = self.vert
        self._lab = lab
        self.terms = None if f.kind.value == "min" else _linear(f)

    def __call__(self, flat: np.ndarray, mu: float = 0.0) -> float:
        n, b = self.n, self.b
        pts = flat.reshape(-1, 2)
        lab = self._lab.copy()
        lab[np.arange(n), 1 - b] = pts
        diff = np.diff(lab, axis=0)
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        gsq = np.einsum("ij,ij->i", pts - self.vert, pts - self.vert)
        if mu == 0.0:
            step = np.sqrt(sq).max(axis=1)
            gap = np.sqrt(gsq)
        else:
            d = np.sqrt(sq + mu * mu)
            step = 0.5 * (d[:, 0] + d[:, 1]) + np.sqrt(0.25 * (d[:, 0] - d[:, 1]) ** 2 + mu * mu)
            gap = np.sqrt(gsq + mu * mu)
        t = self.t0 + np.concatenate([[0.0], np.cumsum(step)])
        arr = np.empty((n, 2))
        arr[np.arange(n), b] = t
        arr[np.arange(n), 1 - b] = t + gap
        if self.terms is None:
            return _objective(arr, self.f)
        vals = np.max(np.stack([u * arr[:, 0] + v * arr[:, 1] for u, v in self.terms]), axis=0)
        if mu == 0.0:
            return float(vals.max())
        top = vals.max()
        return float(top + mu * np.log(np.exp((vals - top) / mu).sum()))


def _linear(f: CostFunction) -> list[tuple[float, float]]:
    from .cost import linear_terms
    return linear_terms(f)


def _pattern_search(fun, x: np.ndarray, fx: float, step: float, min_step: float,
                    budget: int, rng: np.random.Generator, directions: int,
                    rounds: int) -> tuple[np.ndarray, float, int]:
    dim = x.size
    axes = np.vstack([np.eye(dim), -np.eye(dim)])
    evals = 0
    while step > min_step and evals < budget:
        moved = False
        batches = [axes] + [None] * rounds
        for dirs in batches:
            if dirs is None:
                dirs = rng.normal(size=(directions, dim))
                dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            for d in dirs:
                cand = x + step * d
                fc = fun(cand)
                evals += 1
                if fc < fx - 1e-15:
                    x, fx, moved = cand, fc, True
                    # keep going in a successful direction while it pays
                    while evals < budget:
                        c2 = x + step * d
                        f2 = fun(c2)
                        evals += 1
                        if f2 >= fx - 1e-15:
                            break
                        x, fx = c2, f2
                        step *= 2.0
                    break
                if evals >= budget:
                    break
            if moved or evals >= budget:
                break
        if not moved:
            step /= 2.0
    return x, fx, evals


def refine_embedding(seed: PlanarEmbedding, f: CostFunction, t0: float,
                     budget: int = 200_000, mus: tuple[float, ...] = (0.1, 0.03, 0.01,
                                                                      3e-3, 1e-3, 3e-4, 1e-4,
                                                                      1e-5, 1e-6),
                     directions: int = 16, rounds: int = 2) -> PlanarEmbedding:
    """Local improvement of a feasible schedule.

    Times are always repaired to their earliest feasible values, which makes
    the objective a convex nonsmooth function of the free points.  The
    search runs a pattern search (coordinate axes plus seeded random
    directions) on a sequence of smooth upper approximations with shrinking
    ``mu``, and a final pass on the exact objective.  The best exact value
    seen is returned, so the result is feasible and never worse than the
    seed.  Deterministic for a given seed and budget.
    """
    verdict = evaluate_nlp(seed, f, t0)
    if not verdict.feasible:
        raise ValueError(f"seed is infeasible: {verdict.violations}")
    red = _Reduced(seed.config, f, t0)
    x = np.asarray(seed.points, dtype=float).ravel()
    best_x, best_f = x.copy(), red(x)
    if best_f > verdict.objective:
        return seed
    rng = np.random.default_rng(12345)
    share = max(1, budget // (len(mus) + 1))
    step = 0.25
    for mu in tuple(mus) + (0.0,):
        fun = (lambda v, mu=mu: red(v, mu))
        x, _, used = _pattern_search(fun, x, fun(x), step, max(mu, 1e-10) * 1e-2,
                                     share, rng, directions, rounds)
        exact = red(x)
        if exact < best_f:
            best_x, best_f = x.copy(), exact
        x = best_x.copy()
        step = max(10 * mu, 1e-4)
    pts = best_x.reshape(-1, 2)
    return PlanarEmbedding(seed.config, tuple(earliest_times(seed.config, pts, t0)),
                           tuple(map(tuple, pts)))


def random_feasible_embedding(config: Configuration, t0: float,
                              rng: np.random.Generator, spread: float = 1.5,
                              slack: float = 0.5) -> PlanarEmbedding:
    """Random free points with earliest times plus random nonnegative delays."""
    pts = rng.uniform(-spread, spread, size=(config.n, 2))
    t = earliest_times(config, pts, t0)
    delays = np.cumsum(rng.uniform(0.0, slack, size=config.n))
    return PlanarEmbedding(config, tuple(t + delays), tuple(map(tuple, pts)))
