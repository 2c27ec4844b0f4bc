"""Command-line entry point: ``disksearch <command> [options]``."""

from __future__ import annotations

import argparse
import contextlib
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .bounds import (
    BoundReport,
    bracket_crossover,
    disk_report,
    gw_crossover,
    gw_disk_report,
    ngon_report,
    w_sweep_rows,
    weak_gw_bound,
    write_w_sweep,
)
from .cost import CostFunction, CostKind, normalization
from .detour import (
    DetourParams,
    RootFindingError,
    branch_costs,
    case_costs,
    closed_form_cost,
    simulate_worst_case,
    threshold_w0,
)
from .embedding import PlanarEmbedding, evaluate_nlp, refine_embedding
from .enumeration import CheckpointError, SweepError, SweepSpec, SymmetryFlags, resume, sweep
from .lpsolve import (
    CertifiedBound,
    LpSolution,
    SolverError,
    SolverOptions,
    certify,
    solve_checked,
    verify_certificate,
)
from .relaxation import Configuration, build_rel

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_SOLVER = 3
EXIT_ROOT = 4
EXIT_CERT = 5

THREADS_ENV = "DISKSEARCH_THREADS"
EXTENDED_N = 8
BNB_N = 7  # "auto" switches to branch and bound from here

log = logging.getLogger("disksearch")


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: dict
    version: str = __version__
    started: str = ""
    finished: str = ""
    input_hashes: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"command": self.command, "parameters": self.parameters,
                "version": self.version, "started": self.started,
                "finished": self.finished, "input_hashes": self.input_hashes,
                "outputs": self.outputs}

    @classmethod
    def from_dict(cls, d: dict) -> RunManifest:
        return cls(**d)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _sha256(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _frac(q: Fraction | None) -> str | None:
    return None if q is None else f"{q.numerator}/{q.denominator}"


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        k = args.threads
    elif os.environ.get(THREADS_ENV):
        try:
            k = int(os.environ[THREADS_ENV])
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
    else:
        k = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else \
            (os.cpu_count() or 1)
    if k < 1:
        raise UsageError("--threads must be positive")
    return k


def _cost(args: argparse.Namespace) -> CostFunction:
    try:
        return CostFunction.parse(args.cost, args.w)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _config(args: argparse.Namespace, n: int) -> Configuration | None:
    if not getattr(args, "config", None):
        return None
    try:
        cfg = Configuration.parse(args.config, one_indexed=args.one_indexed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg.n != n:
        raise UsageError(f"--config has {cfg.n} vertices but --n is {n}")
    return cfg


def _check_n(args: argparse.Namespace) -> None:
    if args.n < 3:
        raise UsageError("--n must be at least 3")
    if args.n >= EXTENDED_N and not getattr(args, "config", None):
        if not args.extended:
            raise UsageError(f"sweeps with n >= {EXTENDED_N} take hours; pass --extended "
                             "and --checkpoint PATH")
        if not args.checkpoint:
            raise UsageError("--extended sweeps require --checkpoint PATH")


def _emit(args: argparse.Namespace, manifest: RunManifest, payload: dict) -> None:
    manifest.finished = _now()
    if args.out:
        manifest.outputs.append(args.out)
    doc = dict(payload)
    doc["manifest"] = manifest.to_dict()
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    if args.json:
        print(text, file=getattr(args, "_stdout", sys.stdout))


def _manifest(args: argparse.Namespace, inputs: tuple[str, ...] = ()) -> RunManifest:
    params = {k: v for k, v in vars(args).items() if k != "func" and not k.startswith("_")}
    return RunManifest(command=args.command, parameters=params, started=_now(),
                       input_hashes={p: _sha256(p) for p in inputs if p})


def _method(args: argparse.Namespace) -> str:
    if args.method != "auto":
        return args.method
    # per-configuration exports and the external backend need the full sweep
    if args.csv or args.backend != "bundled" or args.n < BNB_N:
        return "exhaustive"
    return "branch-and-bound"


def _spec(args: argparse.Namespace, f: CostFunction, t0: float) -> SweepSpec:
    method = _method(args)
    if method == "branch-and-bound" and (args.csv or args.backend != "bundled"):
        raise UsageError("branch-and-bound keeps only the minimum and needs --backend "
                         "bundled; drop --csv or use --method exhaustive")
    return SweepSpec(
        n=args.n, cost=f, t0=t0, flags=SymmetryFlags.full(f), workers=_threads(args),
        checkpoint=args.checkpoint, retention="all" if args.csv else "min-only",
        block_size=args.block_size, solver=SolverOptions(backend=args.backend),
        method=method)


def _print_report(rep: BoundReport) -> None:
    kind = "disk" if rep.domain == "disk" else f"{rep.n}-gon"
    print(f"{kind} lower bound ({rep.cost.name}): {_fmt(rep.value)}")
    arg = rep.provenance.get("argmin")
    if arg:
        print(f"argmin rho={tuple(arg['rho_1based'])} (1-indexed) "
              f"b={''.join(map(str, arg['b']))}")
    if rep.certified is not None:
        print(f"certified >= {_fmt(float(rep.certified))} ({_frac(rep.certified)})")


def _ngon(args: argparse.Namespace, f: CostFunction) -> tuple[BoundReport, dict]:
    """Either one LP (``--config``) or a full sweep; the result is certified."""
    cfg = _config(args, args.n)
    if cfg is not None:
        inst = build_rel(args.n, f, cfg, args.t0)
        sol = solve_checked(inst, SolverOptions(backend=args.backend))
        if sol.backend != "bundled":
            sol = solve_checked(inst)
        cert = certify(inst, sol)
        norm = normalization(f)
        rep = BoundReport(
            domain="ngon", cost=f, n=args.n, value=sol.objective / norm,
            certified=cert.value / Fraction(norm) if cert.verified else None,
            provenance={"path": "single relaxation LP", "t0": args.t0,
                        "argmin": cfg.to_dict(), "examined": 1},
            normalization=norm)
        extra = {"certificate": cert.to_json_dict()}
        if args.save_solution:
            Path(args.save_solution).write_text(json.dumps({
                "instance": {"n": args.n, "cost": f.to_dict(), "config": cfg.to_dict(),
                             "t0": args.t0, "fingerprint": inst.fingerprint()},
                "solution": sol.to_json_dict()}))
        return rep, extra
    spec = _spec(args, f, args.t0)
    res = sweep(spec)
    if args.csv:
        res.write_csv(args.csv)
    rep = ngon_report(res, f)
    return rep, {"certificate": res.certificate.to_json_dict() if res.certificate else None,
                 "sweep": res.to_json_dict()}


def cmd_ngon_bound(args: argparse.Namespace) -> int:
    f = _cost(args)
    _check_n(args)
    manifest = _manifest(args)
    rep, extra = _ngon(args, f)
    _print_report(rep)
    cert = extra.get("certificate")
    _emit(args, manifest, {"report": rep.to_json_dict(), **extra})
    if not cert or not cert["verified"]:
        print(f"certification failed: {cert['reason'] if cert else 'no certificate'}",
              file=sys.stderr)
        return EXIT_CERT
    print("certificate verified")
    return EXIT_OK


def cmd_disk_bound(args: argparse.Namespace) -> int:
    f = _cost(args)
    manifest = _manifest(args, (args.from_result,) if args.from_result else ())
    if args.from_result:
        doc = json.loads(Path(args.from_result).read_text())
        ngon = BoundReport.from_json_dict(doc["report"])
        if ngon.cost != f or ngon.n != args.n:
            raise UsageError("--from-result holds a bound for a different n or cost")
        rep = disk_report(ngon)
        extra: dict = {}
    elif f.kind is CostKind.WEIGHTED_AVG and args.n == 7 and not args.sweep:
        rep = gw_disk_report(f.w)
        extra = {}
    else:
        _check_n(args)
        args.t0 = 1.0
        args.config = None
        ngon, extra = _ngon(args, f)
        rep = disk_report(ngon)
        if f.kind is CostKind.WEIGHTED_AVG:
            weak = weak_gw_bound()
            rep.provenance.update({"weak": weak, "lifted": rep.value,
                                   "branch": "weak" if weak >= rep.value else "relaxation"})
            if weak >= rep.value:
                rep.value, rep.certified = weak, None
    _print_report(rep)
    _emit(args, manifest, {"report": rep.to_json_dict(), **extra})
    cert = extra.get("certificate")
    if cert is not None and not cert["verified"]:
        print(f"certification failed: {cert['reason']}", file=sys.stderr)
        return EXIT_CERT
    return EXIT_OK


def cmd_sweep_w(args: argparse.Namespace) -> int:
    if args.step <= 0:
        raise UsageError("--step must be positive")
    manifest = _manifest(args)
    rows = w_sweep_rows(args.start, args.stop, args.step)
    manifest.outputs.append(args.csv_out)
    manifest.finished = _now()
    try:
        with open(args.csv_out, "w") as fh:
            fh.write("# manifest: " + json.dumps(manifest.to_dict(), sort_keys=True) + "\n")
        tmp = args.csv_out + ".body"
        write_w_sweep(tmp, rows)
        with open(args.csv_out, "a") as fh, open(tmp) as body:
            fh.write(body.read())
        os.remove(tmp)
    except OSError as exc:
        raise UsageError(f"cannot write {args.csv_out}: {exc}") from None
    print(f"wrote {len(rows)} rows to {args.csv_out}")
    try:
        lo, hi = bracket_crossover(rows)
        print(f"branch crossover in ({lo:.4f}, {hi:.4f}); closed form {_fmt(gw_crossover())}")
    except ValueError:
        print("no branch crossover on this grid")
    return EXIT_OK


def cmd_detour(args: argparse.Namespace) -> int:
    w = args.w
    if not 0.0 <= w <= 1.0:
        raise UsageError("--w must lie in [0, 1]")
    manifest = _manifest(args)
    if (args.a is None) != (args.b is None):
        raise UsageError("give both --a and --b or neither")
    if args.a is None:
        p = DetourParams.for_weight(w)
    else:
        p = DetourParams(w, args.a, args.b, None, args.a)  # type: ignore[arg-type]
    closed = closed_form_cost(w)
    cc = case_costs(w, p.a, p.b)
    regime = p.regime.value if p.regime else "explicit"
    print(f"regime: {regime}")
    print(f"w0 = {threshold_w0():.9f}")
    print(f"a = {_fmt(p.a)}  b = {_fmt(p.b)}  d = {_fmt(p.d)}")
    print("case costs: " + "  ".join(f"c{k}={_fmt(v)}" for k, v in
                                     enumerate((cc.c1, cc.c2, cc.c3, cc.c4), 1)))
    print(f"side conditions hold: {cc.side_conditions_hold}")
    print(f"closed-form cost: {_fmt(closed)}")
    payload = {"params": {**p.to_dict(), "regime": regime},
               "case_costs": {"c1": cc.c1, "c2": cc.c2, "c3": cc.c3, "c4": cc.c4,
                              "arrival_gap": cc.arrival_gap, "overlap": cc.overlap,
                              "side_conditions_hold": cc.side_conditions_hold},
               "closed_form": closed, "branches": branch_costs(w)}
    if args.simulate:
        sim, theta = simulate_worst_case(w, p.a, p.b, args.grid)
        ref = closed if args.a is None else cc.worst
        print(f"simulated worst case: {_fmt(sim)} at theta={_fmt(theta)} "
              f"(delta {sim - ref:+.6f})")
        payload["simulation"] = {"value": sim, "theta": theta, "grid": args.grid,
                                 "delta": sim - ref}
    _emit(args, manifest, payload)
    return EXIT_OK


def _load_instance(doc: dict):
    inst_d = doc["instance"]
    f = CostFunction.from_dict(inst_d["cost"])
    cfg = Configuration.from_dict(inst_d["config"])
    return build_rel(int(inst_d["n"]), f, cfg, float(inst_d["t0"])), inst_d


def cmd_certify(args: argparse.Namespace) -> int:
    manifest = _manifest(args, (args.input,))
    try:
        doc = json.loads(Path(args.input).read_text())
        inst, inst_d = _load_instance(doc)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    if inst_d.get("fingerprint") and inst_d["fingerprint"] != inst.fingerprint():
        print("instance hash mismatch: the stored descriptor builds a different LP",
              file=sys.stderr)
        return EXIT_CERT
    if "certificate" in doc:
        cert = verify_certificate(inst, CertifiedBound.from_json_dict(doc["certificate"]))
    else:
        cert = certify(inst, LpSolution.from_json_dict(doc["solution"]))
    print(f"verified: {cert.verified}")
    if cert.verified:
        print(f"certified lower bound: {_fmt(float(cert.value))} ({_frac(cert.value)})")
    else:
        print(f"reason: {cert.reason}")
    _emit(args, manifest, {"instance": inst_d, "certificate": cert.to_json_dict()})
    return EXIT_OK if cert.verified else EXIT_CERT


def cmd_verify_embedding(args: argparse.Namespace) -> int:
    f = _cost(args)
    manifest = _manifest(args, (args.input,))
    try:
        emb = PlanarEmbedding.load(args.input)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    verdict = evaluate_nlp(emb, f, args.t0)
    payload: dict = {"verdict": verdict.to_json_dict(), "embedding": emb.to_json_dict()}
    print(f"feasible: {verdict.feasible}")
    for v in verdict.violations:
        print(f"  violated {v}")
    print(f"objective: {_fmt(verdict.objective / normalization(f))}")
    if args.refine and verdict.feasible:
        ref = refine_embedding(emb, f, args.t0, budget=args.budget)
        rv = evaluate_nlp(ref, f, args.t0)
        print(f"refined objective: {_fmt(rv.objective / normalization(f))}")
        payload["refined"] = {"verdict": rv.to_json_dict(), "embedding": ref.to_json_dict()}
    lp = solve_checked(build_rel(emb.n, f, emb.config, args.t0)).objective
    print(f"relaxation value: {_fmt(lp / normalization(f))}")
    payload["relaxation_value"] = lp
    _emit(args, manifest, payload)
    return EXIT_OK if verdict.feasible else EXIT_ARGS


def cmd_resume(args: argparse.Namespace) -> int:
    manifest = _manifest(args, (args.checkpoint,))
    threads = _threads(args) if args.threads is not None or os.environ.get(THREADS_ENV) \
        else None
    res = resume(args.checkpoint, workers=threads)
    spec = res.spec
    rep = ngon_report(res, spec.cost)
    _print_report(rep)
    print(f"configurations examined: {res.examined}; complete: {res.complete}")
    cert = res.certificate
    _emit(args, manifest, {"report": rep.to_json_dict(), "sweep": res.to_json_dict()})
    if res.complete and (cert is None or not cert.verified):
        print("certification failed", file=sys.stderr)
        return EXIT_CERT
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default: ${THREADS_ENV} or all CPUs)")
    p.add_argument("--out", help="write the JSON result (with run manifest) here")
    p.add_argument("--json", action="store_true", help="also print the JSON result")


def _cost_args(p: argparse.ArgumentParser, default: str | None = "proj2") -> None:
    p.add_argument("--cost", choices=["proj2", "max", "gw"], default=default)
    p.add_argument("--w", type=float, default=None, help="weight for --cost gw")


def _sweep_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--extended", action="store_true",
                   help=f"allow sweeps with n >= {EXTENDED_N}")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--backend", choices=["bundled", "highs"], default="bundled")
    p.add_argument("--block-size", type=int, default=256)
    p.add_argument("--method", choices=["auto", "exhaustive", "branch-and-bound"],
                   default="auto",
                   help=f"auto: exhaustive below n={BNB_N} or with --csv, else branch and bound")
    p.add_argument("--csv", default=None, help="export every configuration's value")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="disksearch", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ngon-bound", help="relaxation lower bound on the n-gon")
    _sweep_args(p)
    _cost_args(p)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--config", default=None, help='single configuration "rho;b"')
    p.add_argument("--one-indexed", action="store_true", help="--config rho is 1-based")
    p.add_argument("--save-solution", default=None, help="write instance + LP solution")
    _common(p)
    p.set_defaults(func=cmd_ngon_bound)

    p = sub.add_parser("disk-bound", help="lower bound on the disk")
    _sweep_args(p)
    _cost_args(p)
    p.add_argument("--sweep", action="store_true",
                   help="for g_w on the heptagon, sweep instead of the closed form")
    p.add_argument("--from-result", default=None, help="lift a saved ngon-bound result")
    _common(p)
    p.set_defaults(func=cmd_disk_bound, config=None, one_indexed=False, save_solution=None)

    p = sub.add_parser("sweep-w", help="CSV of g_w bounds over a grid of weights")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--csv-out", required=True)
    _common(p)
    p.set_defaults(func=cmd_sweep_w)

    p = sub.add_parser("detour", help="upper bound of the detour strategy for g_w")
    p.add_argument("--w", type=float, required=True)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--grid", type=int, default=100_000)
    _common(p)
    p.set_defaults(func=cmd_detour)

    p = sub.add_parser("certify", help="exact dual certificate for a saved LP solution")
    p.add_argument("--input", required=True)
    _common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify-embedding", help="evaluate (and refine) a planar schedule")
    p.add_argument("--input", required=True)
    _cost_args(p)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--refine", action="store_true")
    p.add_argument("--budget", type=int, default=200_000)
    _common(p)
    p.set_defaults(func=cmd_verify_embedding)

    p = sub.add_parser("resume", help="continue a checkpointed sweep")
    p.add_argument("--checkpoint", required=True)
    _common(p)
    p.set_defaults(func=cmd_resume)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ARGS if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "json", False):
            # keep stdout a single JSON document; progress text goes to stderr
            args._stdout = sys.stdout
            with contextlib.redirect_stdout(sys.stderr):
                return args.func(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except RootFindingError as exc:
        print(f"root finding failed: {exc}", file=sys.stderr)
        return EXIT_ROOT
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (SolverError, SweepError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
