"""Exhaustive sweeps of the relaxation LP over visitation configurations.

The stream of configurations is split into fixed-size blocks.  Each block
is solved by one worker (with warm starts inside the block only), and block
summaries are folded in block order, so the result does not depend on the
number of workers or on interruptions.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import math
import multiprocessing
import os
import time
from collections.abc import Iterator
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cost import CostFunction, CostKind, linear_terms
from .geometry import chord_steps
from .lpsolve import (
    CertifiedBound,
    SolverError,
    SolverOptions,
    certify,
    solve,
    solve_checked,
    verify_certificate,
)
from .lpsolve.simplex import DualSimplex
from .relaxation import Configuration, _template, build_rel, reflect_config

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
TIE_TOL = 1e-10


class SweepError(RuntimeError):
    pass


class CheckpointError(SweepError):
    pass


@dataclass(frozen=True)
class SymmetryFlags:
    fix_first_vertex: bool = True
    reflection_dedup: bool = True
    agent_swap_dedup: bool = False
    # restrict the second vertex to 1..floor((n-1)/2)+1 instead of exact dedup
    second_vertex_shortcut: bool = False

    def validate(self, f: CostFunction) -> None:
        if self.agent_swap_dedup and not f.symmetric:
            raise ValueError(f"agent-swap dedup is unsound for asymmetric cost {f.name}")
        if self.second_vertex_shortcut and self.reflection_dedup:
            raise ValueError("second_vertex_shortcut replaces reflection_dedup; enable one")
        if (self.second_vertex_shortcut or self.reflection_dedup) and not self.fix_first_vertex:
            raise ValueError("reflection dedup is defined relative to rho[0] = 0")

    @classmethod
    def full(cls, f: CostFunction) -> SymmetryFlags:
        """Every reduction that is sound for ``f``."""
        return cls(agent_swap_dedup=f.kind is CostKind.MAX_NORM)


def _rho_stream(n: int, flags: SymmetryFlags) -> Iterator[tuple[int, ...]]:
    if not flags.fix_first_vertex:
        yield from itertools.permutations(range(n))
        return
    second_max = (n - 1) // 2 + 1
    for rest in itertools.permutations(range(1, n)):
        rho = (0,) + rest
        if flags.second_vertex_shortcut and rho[1] > second_max:
            continue
        if flags.reflection_dedup:
            mirrored = tuple((n - v) % n for v in rho)
            if mirrored < rho:
                continue
        yield rho


def enumerate_configs(n: int, flags: SymmetryFlags | None = None) -> Iterator[Configuration]:
    """Configurations in lexicographic (b, rho) order.

    ``b`` is the outer key so that consecutive configurations share the LP
    constraint matrix, which is what makes warm starts effective.
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    flags = flags or SymmetryFlags()
    rhos = list(_rho_stream(n, flags))
    for b in itertools.product((0, 1), repeat=n):
        if flags.agent_swap_dedup and b[0] == 1:
            continue
        for rho in rhos:
            yield Configuration(rho, b)


def count_configs(n: int, flags: SymmetryFlags | None = None) -> int:
    flags = flags or SymmetryFlags()
    rhos = sum(1 for _ in _rho_stream(n, flags))
    bits = 2 ** (n - 1) if flags.agent_swap_dedup else 2 ** n
    return rhos * bits


@dataclass(frozen=True)
class SweepSpec:
    n: int
    cost: CostFunction
    t0: float = 1.0
    flags: SymmetryFlags = field(default_factory=SymmetryFlags)
    workers: int = 1
    checkpoint: str | None = None
    retention: str = "min-only"  # "all" | "top-k" | "min-only"
    top_k: int = 10
    block_size: int = 256
    solver: SolverOptions = field(default_factory=SolverOptions)
    certify: bool = True
    method: str = "exhaustive"  # "exhaustive" | "branch-and-bound"
    split_depth: int = 3

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if self.retention not in ("all", "top-k", "min-only"):
            raise ValueError(f"unknown retention {self.retention!r}")
        if self.method not in ("exhaustive", "branch-and-bound"):
            raise ValueError(f"unknown sweep method {self.method!r}")
        if self.method == "branch-and-bound":
            if self.retention != "min-only":
                raise ValueError("branch-and-bound skips configurations; use min-only")
            if self.solver.backend != "bundled":
                raise ValueError("branch-and-bound needs the bundled LP backend")
            if not self.flags.fix_first_vertex:
                raise ValueError("branch-and-bound assumes rho[0] = 0")
        if self.block_size < 1 or self.workers < 1:
            raise ValueError("block_size and workers must be positive")
        self.flags.validate(self.cost)

    def identity(self) -> dict:
        """Fields that determine the result (worker count and paths excluded)."""
        return {
            "n": self.n,
            "cost": self.cost.to_dict(),
            "t0": float(self.t0).hex(),
            "flags": asdict(self.flags),
            "retention": self.retention,
            "top_k": self.top_k,
            "block_size": self.block_size,
            "solver": asdict(self.solver),
            "method": self.method,
            "split_depth": self.split_depth,
        }

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.identity(), sort_keys=True).encode()).hexdigest()

    def to_dict(self) -> dict:
        d = self.identity()
        d["t0"] = self.t0
        d["workers"] = self.workers
        d["checkpoint"] = self.checkpoint
        d["certify"] = self.certify
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SweepSpec:
        return cls(
            n=int(d["n"]),
            cost=CostFunction.from_dict(d["cost"]),
            t0=float(d["t0"]) if not isinstance(d["t0"], str) else float.fromhex(d["t0"]),
            flags=SymmetryFlags(**d["flags"]),
            workers=int(d.get("workers", 1)),
            checkpoint=d.get("checkpoint"),
            retention=d["retention"],
            top_k=int(d["top_k"]),
            block_size=int(d["block_size"]),
            solver=SolverOptions(**d["solver"]),
            certify=bool(d.get("certify", True)),
            method=d.get("method", "exhaustive"),
            split_depth=int(d.get("split_depth", 3)),
        )


@dataclass
class Record:
    config: Configuration
    value: float


@dataclass
class BlockSummary:
    block: int
    count: int
    min_value: float
    argmin: Configuration | None
    records: list[Record] = field(default_factory=list)
    lp_solves: int = 0

    def to_dict(self) -> dict:
        return {
            "block": self.block,
            "count": self.count,
            "lp_solves": self.lp_solves,
            "min_value": self.min_value.hex(),
            "argmin": self.argmin.format() if self.argmin else None,
            "records": [[r.config.format(), r.value.hex()] for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: dict) -> BlockSummary:
        return cls(
            block=int(d["block"]),
            count=int(d["count"]),
            min_value=float.fromhex(d["min_value"]),
            argmin=Configuration.parse(d["argmin"]) if d["argmin"] else None,
            records=[Record(Configuration.parse(c), float.fromhex(v)) for c, v in d["records"]],
            lp_solves=int(d.get("lp_solves", 0)),
        )


@dataclass
class SweepResult:
    min_value: float
    argmin: Configuration
    examined: int
    wall_time: float
    certificate: CertifiedBound | None = None
    records: list[Record] | None = None
    complete: bool = True
    spec: SweepSpec | None = None
    lp_solves: int = 0
    incumbent: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "min_value": self.min_value,
            "argmin": self.argmin.to_dict() if self.argmin else None,
            "examined": self.examined,
            "lp_solves": self.lp_solves,
            "method": self.spec.method if self.spec else None,
            "wall_time": self.wall_time,
            "complete": self.complete,
            "certificate": self.certificate.to_json_dict() if self.certificate else None,
        }

    def write_csv(self, path: str | os.PathLike) -> None:
        if self.records is None:
            raise ValueError("per-configuration records were not retained")
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["rho", "b", "rho_1based", "objective"])
            for r in self.records:
                wr.writerow([" ".join(map(str, r.config.rho)), "".join(map(str, r.config.b)),
                             " ".join(map(str, r.config.one_indexed_rho())),
                             f"{r.value:.12f}"])


def _better(value: float, cfg: Configuration, best: float, best_cfg: Configuration | None) -> bool:
    """Strictly smaller, or tied within TIE_TOL with a lexicographically smaller (rho, b)."""
    if best_cfg is None or value < best - TIE_TOL:
        return True
    return abs(value - best) <= TIE_TOL and (cfg.rho, cfg.b) < (best_cfg.rho, best_cfg.b)


def _retain(records: list[Record], mode: str, k: int) -> list[Record]:
    if mode == "all":
        return records
    if mode == "top-k":
        return sorted(records, key=lambda r: (r.value, r.config.rho, r.config.b))[:k]
    return []


def _solve_block(args: tuple) -> BlockSummary:
    block_id, n, cost_d, t0, configs, solver_d, retention, top_k = args
    cost = CostFunction.from_dict(cost_d)
    opts = SolverOptions(**solver_d)
    best, best_cfg = math.inf, None
    records: list[Record] = []
    warm: dict[tuple[int, ...], list[int]] = {}
    for text in configs:
        cfg = Configuration.parse(text)
        inst = build_rel(n, cost, cfg, t0)
        sol = None
        try:
            sol = solve(inst, opts, warm_start=warm.get(cfg.b) if opts.backend == "bundled" else None)
        except SolverError:
            sol = None
        if sol is None or not sol.optimal:
            # retry cold with the conservative rule before giving up
            try:
                sol = solve_checked(inst, SolverOptions(**{**solver_d, "pivot_rule": "bland",
                                                          "max_iter": 4 * opts.max_iter}))
            except SolverError as exc:
                raise SweepError(f"solver failure on configuration {cfg.format()}: {exc}") from exc
        if sol.basis is not None:
            warm[cfg.b] = sol.basis
        if retention != "min-only":
            records.append(Record(cfg, sol.objective))
        if _better(sol.objective, cfg, best, best_cfg):
            best, best_cfg = sol.objective, cfg
    return BlockSummary(block_id, len(configs), best, best_cfg,
                        _retain(records, retention, top_k), lp_solves=len(configs))


def _blocks(spec: SweepSpec) -> Iterator[tuple[int, list[str]]]:
    stream = enumerate_configs(spec.n, spec.flags)
    for block_id in itertools.count():
        chunk = [c.format() for c in itertools.islice(stream, spec.block_size)]
        if not chunk:
            return
        yield block_id, chunk


# --------------------------------------------------------------------------
# Branch and bound over visiting-order prefixes.  The relaxation restricted
# to the first k events keeps a subset of the constraints of every
# completion, so its optimum bounds all of them from below.


# Solver objects and warm bases depend only on the LP matrix (a basis stays
# dual feasible for any right-hand side), so both are shared process-wide.
# Warm starts change values only at rounding level; the reported minimum is
# re-solved cold from the argmin.
_PREFIX_SOLVERS: dict[tuple, tuple[object, DualSimplex]] = {}
_PREFIX_WARM: dict[tuple, list[int]] = {}


class _PrefixSolver:
    """Prefix relaxation optima with per-b warm starts."""

    def __init__(self, n: int, f: CostFunction, t0: float, opts: SolverOptions) -> None:
        self.n, self.t0, self.opts = n, float(t0), opts
        self.terms = tuple(linear_terms(f))
        self.solves = 0

    def value(self, rho: tuple[int, ...], b: tuple[int, ...]) -> float:
        """Prefix optimum; ``-inf`` if the LP does not finish (never prunes)."""
        hit = _PREFIX_SOLVERS.get((b, self.terms))
        if hit is None:
            tpl = _template(len(b), b, self.terms)
            c = np.zeros(len(tpl.var_names))
            c[tpl.z_index] = 1.0
            hit = _PREFIX_SOLVERS[b, self.terms] = (tpl, DualSimplex(tpl.matrix, c))
        tpl, solver = hit
        chords = np.array([2.0 * math.sin(math.pi * chord_steps(rho[i], rho[k], self.n)
                                          / self.n) for i, k in tpl.event_pairs])
        rhs = tpl.rhs_t0 * self.t0 + tpl.rhs_chord @ chords
        res = solver.solve(rhs, basis=_PREFIX_WARM.get((b, self.terms)), max_iter=self.opts.max_iter,
                           pivot_rule=self.opts.pivot_rule)
        self.solves += 1
        if res.status != "optimal":
            res = solver.solve(rhs, max_iter=4 * self.opts.max_iter, pivot_rule="bland")
            self.solves += 1
            if res.status != "optimal":
                return -math.inf
        _PREFIX_WARM[b, self.terms] = res.basis
        return float(res.x[tpl.z_index])


def _children(n: int, flags: SymmetryFlags, rho: tuple[int, ...],
              b: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """One-event extensions allowed by the symmetry flags, in (vertex, bit) order."""
    k = len(rho)
    second_max = (n - 1) // 2 + 1
    for v in range(n):
        if v in rho or (k == 0 and v != 0):
            continue
        r2 = rho + (v,)
        if flags.second_vertex_shortcut and k == 1 and v > second_max:
            continue
        if flags.reflection_dedup and tuple((n - x) % n for x in r2) < r2:
            continue
        for bit in (0, 1):
            if flags.agent_swap_dedup and k == 0 and bit == 1:
                continue
            yield r2, b + (bit,)


def _split_prefixes(n: int, flags: SymmetryFlags, depth: int
                    ) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    level = [((), ())]
    for _ in range(min(depth, n)):
        level = [c for rho, b in level for c in _children(n, flags, rho, b)]
    return level


def greedy_incumbent(n: int, f: CostFunction, t0: float = 1.0,
                     flags: SymmetryFlags | None = None,
                     opts: SolverOptions | None = None) -> tuple[float, Configuration]:
    """Follow the smallest prefix bound down to a leaf: a quick upper bound on the minimum."""
    flags = flags or SymmetryFlags.full(f)
    ps = _PrefixSolver(n, f, t0, opts or SolverOptions())
    rho: tuple[int, ...] = ()
    b: tuple[int, ...] = ()
    value = math.inf
    while len(rho) < n:
        best = None
        for r2, b2 in _children(n, flags, rho, b):
            val = ps.value(r2, b2)
            if best is None or val < best[0] - TIE_TOL:
                best = (val, r2, b2)
        value, rho, b = best
    return value, Configuration(rho, b)


def _bnb_task(args: tuple) -> BlockSummary:
    block_id, n, cost_d, t0, root, flags_d, solver_d, incumbent = args
    f = CostFunction.from_dict(cost_d)
    flags = SymmetryFlags(**flags_d)
    ps = _PrefixSolver(n, f, t0, SolverOptions(**solver_d))
    best, best_cfg = incumbent, None
    leaves = 0

    def visit(rho: tuple[int, ...], b: tuple[int, ...]) -> None:
        nonlocal best, best_cfg, leaves
        val = ps.value(rho, b)
        if val > best + TIE_TOL:
            return
        if len(rho) == n:
            leaves += 1
            if val == -math.inf:
                raise SweepError(f"solver failure on configuration "
                                 f"{Configuration(rho, b).format()}")
            cfg = Configuration(rho, b)
            if best_cfg is None and val <= best + TIE_TOL or \
                    best_cfg is not None and _better(val, cfg, best, best_cfg):
                best, best_cfg = val, cfg
            return
        for r2, b2 in _children(n, flags, rho, b):
            visit(r2, b2)

    rho0, b0 = root
    visit(tuple(rho0), tuple(b0))
    return BlockSummary(block_id, leaves, best if best_cfg else math.inf, best_cfg,
                        lp_solves=ps.solves)


def _rounds(count: int) -> list[range]:
    """Task rounds of sizes 1, 1, 2, 4, ...; each round prunes against all earlier ones."""
    out, start, size = [], 0, 1
    while start < count:
        out.append(range(start, min(count, start + size)))
        start += size
        if len(out) > 1:
            size *= 2
    return out


def _work_batches(spec: SweepSpec, done: dict) -> Iterator[tuple[list[int] | None, object]]:
    """Groups of pending unit arguments; B&B groups take the current incumbent."""
    if spec.method == "exhaustive":
        yield None, lambda _inc: ((bid, spec.n, spec.cost.to_dict(), spec.t0, chunk,
                                   asdict(spec.solver), spec.retention, spec.top_k)
                                  for bid, chunk in _blocks(spec) if bid not in done)
        return
    roots = _split_prefixes(spec.n, spec.flags, spec.split_depth)
    for r in _rounds(len(roots)):
        yield list(r), lambda inc, r=r: (
            (bid, spec.n, spec.cost.to_dict(), spec.t0, roots[bid], asdict(spec.flags),
             asdict(spec.solver), inc) for bid in r if bid not in done)


def _total_units(spec: SweepSpec) -> int:
    if spec.method == "exhaustive":
        return math.ceil(count_configs(spec.n, spec.flags) / spec.block_size)
    return len(_split_prefixes(spec.n, spec.flags, spec.split_depth))


def _dispatch(args: tuple) -> BlockSummary:
    return _solve_block(args) if isinstance(args[4], list) else _bnb_task(args)


class Checkpoint:
    """JSON checkpoint: spec digest, completed-block summaries, running min."""

    def __init__(self, path: str | os.PathLike, spec: SweepSpec, total_blocks: int) -> None:
        self.path = Path(path)
        self.spec = spec
        self.total_blocks = total_blocks
        self.summaries: dict[int, BlockSummary] = {}
        # set once every block is done: exact minimum and its certificate
        self.final: dict | None = None

    def write(self) -> None:
        done = sorted(self.summaries)
        body = {
            "version": CHECKPOINT_VERSION,
            "spec_hash": self.spec.digest(),
            "spec": self.spec.to_dict(),
            "total_blocks": self.total_blocks,
            "block_bitmap": _bitmap(done, self.total_blocks),
            "running": _fold([self.summaries[b] for b in done]),
            "blocks": [self.summaries[b].to_dict() for b in done],
        }
        if self.final is not None:
            body["final"] = self.final
        text = json.dumps(body, sort_keys=True)
        payload = {"checksum": hashlib.sha256(text.encode()).hexdigest(), "body": body}
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True))
        os.replace(tmp, self.path)

    @classmethod
    def load(cls, path: str | os.PathLike) -> Checkpoint:
        p = Path(path)
        try:
            payload = json.loads(p.read_text())
            body = payload["body"]
            text = json.dumps(body, sort_keys=True)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise CheckpointError(f"unreadable checkpoint {p}: {exc}") from exc
        if hashlib.sha256(text.encode()).hexdigest() != payload.get("checksum"):
            raise CheckpointError(f"checkpoint {p} failed its checksum")
        if body.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"checkpoint version {body.get('version')} is not "
                                  f"{CHECKPOINT_VERSION}")
        spec = SweepSpec.from_dict(body["spec"])
        if spec.digest() != body["spec_hash"]:
            raise CheckpointError("checkpoint spec does not match its recorded hash")
        ck = cls(p, spec, int(body["total_blocks"]))
        for d in body["blocks"]:
            s = BlockSummary.from_dict(d)
            ck.summaries[s.block] = s
        ck.final = body.get("final")
        return ck


def _bitmap(done: list[int], total: int) -> str:
    bits = bytearray((total + 7) // 8)
    for b in done:
        bits[b // 8] |= 1 << (b % 8)
    return bits.hex()


def _fold(summaries: list[BlockSummary]) -> dict:
    best, best_cfg, count = math.inf, None, 0
    for s in summaries:
        count += s.count
        if s.argmin is not None and _better(s.min_value, s.argmin, best, best_cfg):
            best, best_cfg = s.min_value, s.argmin
    return {"min_value": best if best_cfg else None,
            "argmin": best_cfg.format() if best_cfg else None, "examined": count}


def _run(spec: SweepSpec, ck: Checkpoint | None, done: dict[int, BlockSummary],
         max_blocks: int | None, started: float) -> SweepResult:
    summaries = dict(done)
    total_blocks = _total_units(spec)
    if ck is not None and ck.final is not None and len(summaries) == total_blocks:
        return _stored_result(spec, ck, started)
    incumbent = None
    if spec.method == "branch-and-bound":
        # margin keeps the incumbent's own leaf (and its ties) inside the search
        incumbent = greedy_incumbent(spec.n, spec.cost, spec.t0, spec.flags, spec.solver)[0]
        incumbent += 1e-9

    def record(s: BlockSummary) -> None:
        summaries[s.block] = s
        if ck is not None:
            ck.summaries[s.block] = s
            ck.write()

    budget = math.inf if max_blocks is None else max_blocks
    pool = None
    if spec.workers > 1:
        pool = multiprocessing.get_context("fork").Pool(spec.workers)
    try:
        bound = incumbent
        for ids, make in _work_batches(spec, done):
            if ids is not None:
                seen = [s.min_value + 1e-9 for i, s in summaries.items()
                        if s.argmin is not None and i < ids[0]]
                bound = min([incumbent] + seen)
            args = make(bound)
            if budget != math.inf:
                args = list(itertools.islice(args, int(budget)))
                budget -= len(args)
            results = pool.imap(_dispatch, args) if pool else map(_dispatch, args)
            for s in results:
                record(s)
            if budget <= 0:
                break
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    ordered = [summaries[b] for b in sorted(summaries)]
    folded = _fold(ordered)
    complete = len(summaries) == total_blocks
    records = None
    if spec.retention != "min-only":
        records = [r for s in ordered for r in s.records]
        if spec.retention == "top-k":
            records = _retain(records, "top-k", spec.top_k)
    argmin = Configuration.parse(folded["argmin"]) if folded["argmin"] else None
    if spec.method == "branch-and-bound" and complete and argmin is not None:
        folded["min_value"] = solve_config(spec.n, spec.cost, argmin, spec.t0, spec.solver)
    result = SweepResult(
        min_value=folded["min_value"] if folded["min_value"] is not None else math.inf,
        argmin=argmin,
        examined=folded["examined"],
        wall_time=time.perf_counter() - started,
        records=records,
        complete=complete,
        spec=spec,
        lp_solves=sum(s.lp_solves for s in ordered),
        incumbent=incumbent,
    )
    if complete and argmin is None:
        raise SweepError("no configuration reached the incumbent; the search is inconsistent")
    if complete and spec.certify and argmin is not None:
        result.certificate = certify_argmin(spec, argmin)
    if complete and ck is not None:
        ck.final = {"min_value": result.min_value.hex(), "incumbent": incumbent,
                    "certificate": result.certificate.to_json_dict()
                    if result.certificate else None}
        ck.write()
    return result


def _stored_result(spec: SweepSpec, ck: Checkpoint, started: float) -> SweepResult:
    """Result of a finished checkpoint; the certificate is re-checked exactly, not re-solved."""
    ordered = [ck.summaries[b] for b in sorted(ck.summaries)]
    folded = _fold(ordered)
    argmin = Configuration.parse(folded["argmin"])
    cert = None
    if ck.final.get("certificate") is not None:
        stored = CertifiedBound.from_json_dict(ck.final["certificate"])
        cert = verify_certificate(build_rel(spec.n, spec.cost, argmin, spec.t0), stored)
        if stored.verified and not cert.verified:
            raise CheckpointError(f"stored certificate no longer verifies: {cert.reason}")
    records = None
    if spec.retention != "min-only":
        records = [r for s in ordered for r in s.records]
        if spec.retention == "top-k":
            records = _retain(records, "top-k", spec.top_k)
    return SweepResult(
        min_value=float.fromhex(ck.final["min_value"]), argmin=argmin,
        examined=folded["examined"], wall_time=time.perf_counter() - started,
        certificate=cert, records=records, complete=True, spec=spec,
        lp_solves=sum(s.lp_solves for s in ordered), incumbent=ck.final.get("incumbent"))


def certify_argmin(spec: SweepSpec, cfg: Configuration) -> CertifiedBound:
    """Re-solve ``cfg`` cold with the bundled backend and certify it exactly."""
    inst = build_rel(spec.n, spec.cost, cfg, spec.t0)
    sol = solve_checked(inst, SolverOptions(**{**asdict(spec.solver), "backend": "bundled"}))
    cert = certify(inst, sol)
    if not cert.verified:
        log.warning("certificate for %s did not verify: %s", cfg.format(), cert.reason)
    return cert


def sweep(spec: SweepSpec, max_blocks: int | None = None) -> SweepResult:
    """Minimize the relaxation optimum over every enumerated configuration.

    ``max_blocks`` stops after that many blocks (the checkpoint, if any,
    then allows :func:`resume` to finish the run).
    """
    started = time.perf_counter()
    ck = Checkpoint(spec.checkpoint, spec, _total_units(spec)) if spec.checkpoint else None
    if ck is not None:
        ck.write()
    return _run(spec, ck, {}, max_blocks, started)


def resume(path: str | os.PathLike, workers: int | None = None,
           max_blocks: int | None = None) -> SweepResult:
    """Continue a checkpointed sweep; a finished checkpoint costs no LP solves."""
    started = time.perf_counter()
    ck = Checkpoint.load(path)
    spec = ck.spec
    if workers is not None:
        spec = SweepSpec.from_dict({**spec.to_dict(), "workers": workers})
        ck.spec = spec
    return _run(spec, ck, dict(ck.summaries), max_blocks, started)


def solve_config(n: int, f: CostFunction, cfg: Configuration, t0: float = 1.0,
                 opts: SolverOptions | None = None) -> float:
    return solve_checked(build_rel(n, f, cfg, t0), opts).objective


def canonical_form(cfg: Configuration, agent_swap: bool = False) -> Configuration:
    """Lexicographically smallest (rho, b) in the rotation/reflection orbit."""
    n = cfg.n
    cands = []
    for mirror in (False, True):
        base = reflect_config(cfg) if mirror else cfg
        shift = (-base.rho[0]) % n
        cands.append(Configuration(tuple((v + shift) % n for v in base.rho), base.b))
    if agent_swap:
        cands += [Configuration(c.rho, tuple(1 - v for v in c.b)) for c in cands]
    return min(cands, key=lambda c: (c.rho, c.b))


def minimizers(result: SweepResult, tol: float = 1e-9) -> list[Configuration]:
    """Retained configurations whose value is within ``tol`` of the minimum."""
    if result.records is None:
        raise ValueError("sweep did not retain records")
    return [r.config for r in result.records if r.value <= result.min_value + tol]


def values_array(result: SweepResult) -> np.ndarray:
    if result.records is None:
        raise ValueError("sweep did not retain records")
    return np.array([r.value for r in result.records])
