"""End-to-end acceptance checks, one printed PASS/FAIL line per criterion.

The heavy runs (n = 7 exhaustive, n = 8 and n = 9 branch-and-bound) take
several minutes on one core; everything goes through the command line where
a criterion is phrased in terms of a command.
"""

from __future__ import annotations

import csv
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from disksearch.cli import EXIT_OK, main
from disksearch.cost import CostFunction, shift_rate
from disksearch.detour import (
    branch_costs,
    case_costs,
    closed_form_cost,
    simulate_worst_case,
    solve_parameters,
    threshold_w0,
    DetourParams,
)
from disksearch.embedding import (
    degenerate_embedding,
    evaluate_nlp,
    random_feasible_embedding,
    refine_embedding,
)
from disksearch.enumeration import (
    SweepSpec,
    canonical_form,
    enumerate_configs,
    solve_config,
    sweep,
)
from disksearch.lpsolve import CertifiedBound, verify_certificate
from disksearch.relaxation import Configuration, build_rel, reflect_config, rotate_config

from conftest import ALL_COSTS

PROJ2 = CostFunction.proj2()
S7, C7 = math.sin(math.pi / 7), math.cos(3 * math.pi / 14)

CLOSED = {
    3: 1 + math.sqrt(3),
    4: 1 + 3 / math.sqrt(2),
    5: 1 + math.sqrt(25 + 2 * math.sqrt(5)) / 2,
    6: 3 + math.sqrt(3) / 2,
    7: 1 + C7 + 5 * S7,
    8: 1 + math.sqrt(2) / 2 + 6 * math.sin(math.pi / 8),
    9: 1 + math.sqrt(3) / 2 + math.cos(math.pi / 18) + 4 * math.sin(math.pi / 9),
}
QUOTED = {3: 2.73205, 4: 3.12132, 5: 3.71441, 6: 3.86603, 7: 3.95125, 8: 4.00321, 9: 4.21891}
KNOWN_ARGMIN = {
    3: "1,2,3;010",
    4: "1,2,3,4;1001",
    5: "1,3,2,4,5;01011",
    6: "1,2,3,5,4,6;100101",
    7: "1,2,3,7,4,6,5;1001010",
    8: "1,2,3,8,4,6,5,7;10010101",
    9: "1,2,3,9,4,8,5,7,6;100101010",
}


def known_config(n: int) -> Configuration:
    return Configuration.parse(KNOWN_ARGMIN[n], one_indexed=True)


def verdict(capsys, k: int, checks: list[tuple[str, bool]]) -> None:
    failed = [label for label, ok in checks if not ok]
    line = f"CRITERION {k}: {'FAIL' if failed else 'PASS'}"
    if failed:
        line += " -- " + "; ".join(failed)
    with capsys.disabled():
        print("\n" + line)
    assert not failed, failed


def cli(*argv: str) -> int:
    return main(list(argv))


def load_csv(path) -> list[tuple[Configuration, float]]:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [(Configuration(tuple(int(v) for v in r["rho"].split()),
                           tuple(int(v) for v in r["b"])), float(r["objective"])) for r in rows]


def minimizer_classes(rows, tol: float = 1e-9) -> set[Configuration]:
    low = min(v for _, v in rows)
    return {canonical_form(c) for c, v in rows if v <= low + tol}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """ngon-bound results for n = 3..7 with every configuration exported."""
    d = tmp_path_factory.mktemp("acc")
    out: dict = {}
    started = time.perf_counter()
    for n in (3, 4, 5, 6):
        code = cli("ngon-bound", "--n", str(n), "--cost", "proj2",
                   "--out", str(d / f"r{n}.json"), "--csv", str(d / f"r{n}.csv"))
        out[n] = (code, json.loads((d / f"r{n}.json").read_text()), load_csv(d / f"r{n}.csv"))
    out["small_seconds"] = time.perf_counter() - started
    code = cli("ngon-bound", "--n", "7", "--cost", "proj2", "--method", "exhaustive",
               "--out", str(d / "r7.json"), "--csv", str(d / "r7.csv"))
    out[7] = (code, json.loads((d / "r7.json").read_text()), load_csv(d / "r7.csv"))
    return out


def test_criterion_1_small_n(runs, capsys):
    checks = []
    for n in (3, 4, 5, 6):
        code, doc, rows = runs[n]
        value = doc["report"]["value"]
        checks.append((f"n={n} exit {code}", code == EXIT_OK))
        checks.append((f"n={n} value {value:.7f} vs closed form",
                       abs(value - CLOSED[n]) <= 1e-5 and abs(value - QUOTED[n]) <= 1e-5))
        checks.append((f"n={n} known configuration not among minimizers",
                       canonical_form(known_config(n)) in minimizer_classes(rows)))
    checks.append((f"runtime {runs['small_seconds']:.1f}s > 60s", runs["small_seconds"] <= 60.0))
    verdict(capsys, 1, checks)


def test_criterion_2_heptagon(runs, capsys):
    code, doc, rows = runs[7]
    value = doc["report"]["value"]
    argmin = Configuration.from_dict(doc["sweep"]["argmin"])
    verdict(capsys, 2, [
        (f"exit {code}", code == EXIT_OK),
        (f"examined {doc['sweep']['examined']} != 46080", doc["sweep"]["examined"] == 46080),
        (f"rows {len(rows)} != 46080", len(rows) == 46080),
        (f"value {value:.7f}", abs(value - QUOTED[7]) <= 1e-5 and abs(value - CLOSED[7]) <= 1e-5),
        (f"argmin {argmin.format()} differs from the known minimizer up to symmetry",
         canonical_form(argmin) == canonical_form(known_config(7))),
        ("known configuration not among minimizers",
         canonical_form(known_config(7)) in minimizer_classes(rows)),
    ])


def test_criterion_3_extended(tmp_path, capsys):
    checks = []
    for n in (8, 9):
        out = tmp_path / f"r{n}.json"
        code = cli("ngon-bound", "--n", str(n), "--cost", "proj2", "--extended",
                   "--checkpoint", str(tmp_path / f"ck{n}.json"), "--out", str(out))
        doc = json.loads(out.read_text())
        value = doc["report"]["value"]
        checks.append((f"n={n} exit {code}", code == EXIT_OK))
        checks.append((f"n={n} value {value:.7f}",
                       abs(value - QUOTED[n]) <= 1e-5 and abs(value - CLOSED[n]) <= 1e-5))
        checks.append((f"n={n} certificate not verified", doc["certificate"]["verified"]))
        known_value = solve_config(n, PROJ2, known_config(n))
        checks.append((f"n={n} known configuration value {known_value:.9f} is not minimal",
                       abs(known_value - value) <= 1e-9))
    disk = tmp_path / "d9.json"
    code = cli("disk-bound", "--n", "9", "--cost", "proj2", "--from-result",
               str(tmp_path / "r9.json"), "--out", str(disk))
    dvalue = json.loads(disk.read_text())["report"]["value"]
    checks.append((f"disk-bound exit {code}", code == EXIT_OK))
    checks.append((f"disk bound {dvalue:.7f} vs 4.56798", abs(dvalue - 4.56798) <= 1e-5))
    verdict(capsys, 3, checks)


def _tampered(cert: CertifiedBound) -> list[CertifiedBound]:
    rows = sorted(cert.dual)
    big = max(rows, key=lambda r: cert.dual[r])
    scaled = dict(cert.dual)
    scaled[big] = scaled[big] * 2
    dropped = dict(cert.dual)
    del dropped[big]
    lifted = CertifiedBound(cert.value + Fraction(1, 10**9), cert.fingerprint, True,
                            dict(cert.dual), method=cert.method)
    return [CertifiedBound(cert.value, cert.fingerprint, True, scaled, method=cert.method),
            CertifiedBound(cert.value, cert.fingerprint, True, dropped, method=cert.method),
            lifted,
            CertifiedBound(cert.value, "0" * 64, True, dict(cert.dual), method=cert.method)]


def test_criterion_4_certification(runs, capsys):
    checks = []
    for n in (3, 4, 5, 6, 7):
        _, doc, _ = runs[n]
        cert = CertifiedBound.from_json_dict(doc["certificate"])
        argmin = Configuration.from_dict(doc["sweep"]["argmin"])
        inst = build_rel(n, PROJ2, argmin, 1.0)
        again = verify_certificate(inst, cert)
        value = doc["report"]["value"]
        gap = value - float(cert.value)
        checks.append((f"n={n} certificate rejected: {again.reason}", again.verified))
        checks.append((f"n={n} certified value is {gap:.3e} below the optimum",
                       cert.value == again.value and -1e-12 <= gap <= 1e-6))
        for k, bad in enumerate(_tampered(cert)):
            checks.append((f"n={n} tampered certificate {k} accepted",
                           not verify_certificate(inst, bad).verified))
    verdict(capsys, 4, checks)


GW_GRID = [round(0.1 * k, 10) for k in range(11)]


def combined_formula(w: float) -> float:
    return max(1 + math.pi, 1 + math.pi / 7 + C7 / (w + 1) + 5 * S7)


def test_criterion_5_weighted(tmp_path, capsys):
    checks = []
    for w in GW_GRID:
        out = tmp_path / f"gw{w}.json"
        code = cli("disk-bound", "--n", "7", "--cost", "gw", "--w", str(w), "--out", str(out))
        value = json.loads(out.read_text())["report"]["value"]
        checks.append((f"w={w} exit {code}", code == EXIT_OK))
        checks.append((f"w={w} closed-form path {value:.7f}",
                       abs(value - combined_formula(w)) <= 1e-5))
        # independent route: the full relaxation sweep behind the formula
        out = tmp_path / f"gw{w}-sweep.json"
        code = cli("disk-bound", "--n", "7", "--cost", "gw", "--w", str(w), "--sweep",
                   "--out", str(out))
        value = json.loads(out.read_text())["report"]["value"]
        checks.append((f"w={w} sweep exit {code}", code == EXIT_OK))
        checks.append((f"w={w} sweep path {value:.7f}", abs(value - combined_formula(w)) <= 1e-5))
    csv_out = tmp_path / "w.csv"
    cli("sweep-w", "--csv-out", str(csv_out))
    with open(csv_out) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    switch = [float(a["w"]) for a, b in zip(rows, rows[1:])
              if float(a["combined"]) > 1 + math.pi + 1e-6 >= float(b["combined"])]
    checks.append((f"crossover bracket starts at {switch}", switch == [0.49]))
    wstar = 7 * C7 / (6 * math.pi - 35 * S7) - 1
    checks.append((f"exact crossover {wstar:.6f}", 0.49 < wstar < 0.50))
    verdict(capsys, 5, checks)


def test_criterion_6_detour(tmp_path, capsys):
    checks = []
    out0, out1 = tmp_path / "d0.json", tmp_path / "d1.json"
    c0 = cli("detour", "--w", "0", "--out", str(out0))
    c1 = cli("detour", "--w", "1", "--out", str(out1))
    v0 = json.loads(out0.read_text())["closed_form"]
    v1 = json.loads(out1.read_text())["closed_form"]
    checks.append((f"detour exits {c0}, {c1}", c0 == c1 == EXIT_OK))
    checks.append((f"w=0 cost {v0:.7f}", abs(v0 - 4.81854) <= 1e-4))
    checks.append((f"w=1 cost {v1!r} is not 1+pi", v1 == 1 + math.pi))
    w0 = threshold_w0()
    checks.append((f"w0 = {w0:.8f}", abs(w0 - 0.0456911) <= 1e-5))
    branches = branch_costs(w0)
    jump = abs(branches["below"] - branches["above"])
    checks.append((f"branches differ by {jump:.3e} at w0", jump <= 1e-6))
    eps = 1e-9
    side = abs(closed_form_cost(w0 - eps) - closed_form_cost(min(w0 + eps, 1.0)))
    checks.append((f"closed form jumps {side:.3e} across w0", side <= 1e-6))
    for w in (0.0, 0.02, w0):
        a, b = solve_parameters(w)
        c = case_costs(w, a, b)
        spread = max(c.c1, c.c3, c.c4) - min(c.c1, c.c3, c.c4)
        checks.append((f"w={w:.7g} case spread {spread:.3e}", spread <= 1e-9))
    verdict(capsys, 6, checks)


def test_criterion_7_simulation(capsys):
    checks = []
    for w in (0.0, 0.02, threshold_w0(), 0.1, 0.5, 1.0):
        p = DetourParams.for_weight(w)
        started = time.perf_counter()
        sim, _ = simulate_worst_case(w, p.a, p.b, m=100_000)
        took = time.perf_counter() - started
        delta = abs(sim - closed_form_cost(w))
        checks.append((f"w={w:.7g} simulation off by {delta:.3e}", delta <= 5e-3))
        checks.append((f"w={w:.7g} simulation took {took:.1f}s", took <= 30.0))
    verdict(capsys, 7, checks)


def _records(res):
    return [(r.config, r.value.hex()) for r in res.records]


def test_criterion_8_properties(runs, capsys):
    checks = []
    rng = np.random.default_rng(20261014)
    for f in ALL_COSTS:
        for n in (3, 4, 5):
            one = sweep(SweepSpec(n=n, cost=f, retention="all", workers=1, block_size=32))
            many = sweep(SweepSpec(n=n, cost=f, retention="all", workers=3, block_size=32))
            same = (one.min_value.hex() == many.min_value.hex() and one.argmin == many.argmin
                    and _records(one) == _records(many)
                    and one.certificate.value == many.certificate.value)
            checks.append((f"{f.name} n={n} worker counts disagree", same))

            configs = list(enumerate_configs(n))
            picks = rng.choice(len(configs), size=min(12, len(configs)), replace=False)
            worst = 0.0
            for i in picks:
                cfg = configs[int(i)]
                base = solve_config(n, f, cfg)
                for mirror in (False, True):
                    c = reflect_config(cfg) if mirror else cfg
                    for k in range(n):
                        worst = max(worst, abs(solve_config(n, f, rotate_config(c, k)) - base))
            checks.append((f"{f.name} n={n} symmetric images differ by {worst:.3e}",
                           worst <= 1e-9))

        s = shift_rate(f)
        worst = 0.0
        for n in (3, 4, 5):
            configs = list(enumerate_configs(n))
            for i in rng.choice(len(configs), size=6, replace=False):
                cfg = configs[int(i)]
                base = solve_config(n, f, cfg, 1.0)
                for x in (0.25, 1.5, 4.0):
                    worst = max(worst, abs(solve_config(n, f, cfg, 1.0 + x) - base - s * x))
        checks.append((f"{f.name} t0 shift error {worst:.3e}", worst <= 1e-8))

        bad = 0
        for _ in range(100):
            n = int(rng.integers(3, 6))
            configs = list(enumerate_configs(n))
            cfg = configs[int(rng.integers(len(configs)))]
            t0 = float(rng.uniform(0.5, 3.0))
            emb = random_feasible_embedding(cfg, t0, rng)
            verdict_nlp = evaluate_nlp(emb, f, t0)
            if not verdict_nlp.feasible or verdict_nlp.objective < solve_config(n, f, cfg, t0) - 1e-9:
                bad += 1
        checks.append((f"{f.name} {bad} random embeddings beat the relaxation", bad == 0))

    _, doc, rows = runs[6]
    low = min(v for _, v in rows)
    seeds = [c for c, v in rows if v <= low + 1e-9]
    best = min(evaluate_nlp(refine_embedding(degenerate_embedding(c, 1.0), PROJ2, 1.0),
                            PROJ2, 1.0).objective for c in seeds)
    checks.append((f"n=6 refined objective {best:.7f} over {len(seeds)} minimizers",
                   best <= 3 + math.sqrt(3) / 2 + 1e-3))
    verdict(capsys, 8, checks)
