"""The metric relaxation LP for a fixed (rho, b) visitation configuration.

Points are labelled ``(agent j, event i)``.  The label whose agent visits
vertex ``rho[i]`` first (``j == b[i]``) is *anchored* at that vertex; the
other agent's label at the same event is *free*.  Pairwise distances between
labels form a pseudo-metric whose anchored-anchored entries are the fixed
chord lengths; all other entries are LP variables.

Every constraint is stored as ``row . x >= rhs`` over nonnegative variables
and the objective is ``min z``.
"""

from __future__ import annotations

import functools
import hashlib
import itertools
import json
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .cost import CostFunction, linear_terms
from .geometry import chord_length, chord_steps


@dataclass(frozen=True, order=True)
class Configuration:
    """Visitation order ``rho`` (0-indexed vertices) and first-visitor bits ``b``."""

    rho: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", tuple(int(v) for v in self.rho))
        object.__setattr__(self, "b", tuple(int(v) for v in self.b))
        n = len(self.rho)
        if n < 3:
            raise ValueError(f"configuration needs at least 3 vertices, got {n}")
        if sorted(self.rho) != list(range(n)):
            raise ValueError(f"rho={self.rho} is not a permutation of 0..{n - 1}")
        if len(self.b) != n or any(v not in (0, 1) for v in self.b):
            raise ValueError(f"b={self.b} is not a bit string of length {n}")

    @property
    def n(self) -> int:
        return len(self.rho)

    @classmethod
    def from_one_indexed(cls, rho: Sequence[int], b: Sequence[int]) -> Configuration:
        return cls(tuple(v - 1 for v in rho), tuple(b))

    def one_indexed_rho(self) -> tuple[int, ...]:
        return tuple(v + 1 for v in self.rho)

    @classmethod
    def parse(cls, text: str, one_indexed: bool = False) -> Configuration:
        """Parse ``"0,1,2;0,1,0"`` (or ``"0 1 2;010"``) into a configuration."""
        try:
            rho_part, b_part = text.split(";")
        except ValueError:
            raise ValueError(f"expected 'rho;b', got {text!r}") from None
        rho = [int(tok) for tok in rho_part.replace(",", " ").split()]
        b_tokens = b_part.replace(",", " ").split()
        if len(b_tokens) == 1 and len(b_tokens[0]) > 1:
            b_tokens = list(b_tokens[0])
        b = [int(tok) for tok in b_tokens]
        if one_indexed:
            return cls.from_one_indexed(rho, b)
        return cls(tuple(rho), tuple(b))

    def format(self) -> str:
        return ",".join(map(str, self.rho)) + ";" + "".join(map(str, self.b))

    def to_dict(self) -> dict:
        return {
            "rho": list(self.rho),
            "b": list(self.b),
            "rho_1based": list(self.one_indexed_rho()),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Configuration:
        return cls(tuple(d["rho"]), tuple(d["b"]))


def reflect_config(cfg: Configuration) -> Configuration:
    """Mirror every vertex ``i -> (n - i) mod n``; ``b`` is unchanged."""
    n = cfg.n
    return Configuration(tuple((n - v) % n for v in cfg.rho), cfg.b)


def rotate_config(cfg: Configuration, shift: int) -> Configuration:
    n = cfg.n
    return Configuration(tuple((v + shift) % n for v in cfg.rho), cfg.b)


def swap_agents(cfg: Configuration) -> Configuration:
    return Configuration(cfg.rho, tuple(1 - v for v in cfg.b))


# --------------------------------------------------------------------------
# Label / variable catalog


def label_id(agent: int, event: int) -> int:
    return 2 * event + agent


def label_name(lab: int) -> str:
    return f"L{lab % 2}_{lab // 2 + 1}"


@dataclass(frozen=True)
class _Template:
    """Structure of REL for fixed (n, b, cost): everything except the rhs values."""

    n: int
    var_names: tuple[str, ...]
    n_t: int
    c_offset: int
    z_index: int
    pair_var: dict  # (lab_p, lab_q) with p < q -> variable id, or -1 for constants
    matrix: sparse.csr_matrix
    rhs_t0: np.ndarray  # coefficient of t0 in each rhs
    rhs_chord: sparse.csr_matrix  # rows x event-pairs, coefficient of each chord
    event_pairs: tuple[tuple[int, int], ...]
    row_names: tuple[str, ...]
    row_kinds: tuple[str, ...]


def _event_pair_index(n: int) -> dict[tuple[int, int], int]:
    return {p: k for k, p in enumerate(itertools.combinations(range(n), 2))}


@functools.lru_cache(maxsize=512)
def _template(n: int, b: tuple[int, ...], terms: tuple[tuple[float, float], ...]) -> _Template:
    names: list[str] = [f"t[{i + 1}]" for i in range(n)]
    c_offset = len(names)
    for i in range(n):
        for j in (0, 1):
            names.append(f"c[{j},{i + 1}]")

    anchored = [label_id(b[i], i) for i in range(n)]
    is_anchor = np.zeros(2 * n, dtype=bool)
    is_anchor[anchored] = True

    ev_index = _event_pair_index(n)
    pair_var: dict[tuple[int, int], int] = {}
    for p, q in itertools.combinations(range(2 * n), 2):
        if is_anchor[p] and is_anchor[q]:
            pair_var[(p, q)] = -1
        else:
            pair_var[(p, q)] = len(names)
            names.append(f"d[{label_name(p)},{label_name(q)}]")
    z_index = len(names)
    names.append("z")

    rows_i: list[int] = []
    cols_i: list[int] = []
    vals: list[float] = []
    crow: list[int] = []
    ccol: list[int] = []
    cval: list[float] = []
    t0_coef: list[float] = []
    row_names: list[str] = []
    row_kinds: list[str] = []

    def dist_term(p: int, q: int) -> tuple[int, int]:
        """(variable id or -1, event-pair id or -1) for the distance d(p, q)."""
        if p > q:
            p, q = q, p
        v = pair_var[(p, q)]
        if v >= 0:
            return v, -1
        return -1, ev_index[(p // 2, q // 2)]

    def add_row(terms_: list[tuple[int, float]], dists: list[tuple[int, int, float]],
                t0: float, name: str, kind: str) -> None:
        """Append ``sum terms + sum coef*d(p,q) >= t0*t0_value``; constants go to the rhs."""
        r = len(row_names)
        acc: dict[int, float] = {}
        for v, a in terms_:
            acc[v] = acc.get(v, 0.0) + a
        for p, q, a in dists:
            if p == q:
                continue
            v, e = dist_term(p, q)
            if v >= 0:
                acc[v] = acc.get(v, 0.0) + a
            else:
                crow.append(r)
                ccol.append(e)
                cval.append(-a)
        for v, a in acc.items():
            if a != 0.0:
                rows_i.append(r)
                cols_i.append(v)
                vals.append(a)
        t0_coef.append(t0)
        row_names.append(name)
        row_kinds.append(kind)

    add_row([(0, 1.0)], [], 1.0, "start", "start")
    for i in range(n - 1):
        add_row([(i + 1, 1.0), (i, -1.0)], [], 0.0, f"order[{i + 2}]", "order")
    for i in range(n - 1):
        for j in (0, 1):
            add_row([(i + 1, 1.0), (i, -1.0)],
                    [(label_id(j, i + 1), label_id(j, i), -1.0)], 0.0,
                    f"move[{j},{i + 2}]", "move")
    for i in range(n):
        for j in (0, 1):
            add_row([(c_offset + 2 * i + j, 1.0), (i, -1.0)],
                    [(label_id(j, i), anchored[i], -1.0)], 0.0,
                    f"reach[{j},{i + 1}]", "reach")
    for p, q, r in itertools.combinations(range(2 * n), 3):
        if is_anchor[p] and is_anchor[q] and is_anchor[r]:
            continue
        # d(x, y) <= d(x, m) + d(m, y) for each choice of the long side (x, y).
        for x, y, m in ((p, q, r), (p, r, q), (q, r, p)):
            add_row([], [(x, m, 1.0), (m, y, 1.0), (x, y, -1.0)], 0.0,
                     f"tri[{label_name(x)},{label_name(m)},{label_name(y)}]", "triangle")
    for i in range(n):
        for k, (u, v) in enumerate(terms):
            tt = [(z_index, 1.0)]
            if u:
                tt.append((c_offset + 2 * i, -u))
            if v:
                tt.append((c_offset + 2 * i + 1, -v))
            add_row(tt, [], 0.0, f"obj[{i + 1},{k}]", "objective")

    m = len(row_names)
    matrix = sparse.csr_matrix((vals, (rows_i, cols_i)), shape=(m, len(names)))
    matrix.sort_indices()
    rhs_chord = sparse.csr_matrix((cval, (crow, ccol)), shape=(m, len(ev_index)))
    return _Template(
        n=n,
        var_names=tuple(names),
        n_t=n,
        c_offset=c_offset,
        z_index=z_index,
        pair_var=pair_var,
        matrix=matrix,
        rhs_t0=np.asarray(t0_coef),
        rhs_chord=rhs_chord,
        event_pairs=tuple(ev_index),
        row_names=tuple(row_names),
        row_kinds=tuple(row_kinds),
    )


@dataclass(frozen=True)
class RelaxationInstance:
    """Sparse LP ``min z  s.t.  A x >= rhs,  x >= 0`` for one configuration."""

    cost: CostFunction
    config: Configuration
    t0: float
    template: _Template = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    chord_steps: np.ndarray = field(repr=False)  # steps k of each event pair under rho

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def matrix(self) -> sparse.csr_matrix:
        return self.template.matrix

    @property
    def var_names(self) -> tuple[str, ...]:
        return self.template.var_names

    @property
    def row_names(self) -> tuple[str, ...]:
        return self.template.row_names

    @property
    def row_kinds(self) -> tuple[str, ...]:
        return self.template.row_kinds

    @property
    def num_vars(self) -> int:
        return len(self.template.var_names)

    @property
    def num_rows(self) -> int:
        return len(self.template.row_names)

    @property
    def objective(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        c[self.template.z_index] = 1.0
        return c

    @property
    def z_index(self) -> int:
        return self.template.z_index

    def t_index(self, event: int) -> int:
        """Variable id of t_event (1-based event)."""
        return event - 1

    def c_index(self, agent: int, event: int) -> int:
        return self.template.c_offset + 2 * (event - 1) + agent

    def d_index(self, p: int, q: int) -> int:
        """Variable id of the distance between labels p and q; -1 if it is a constant."""
        if p > q:
            p, q = q, p
        return self.template.pair_var[(p, q)]

    def rhs_terms(self, row: int) -> tuple[float, list[tuple[float, int]]]:
        """The rhs of ``row`` as (t0 coefficient, [(coefficient, chord steps k)])."""
        chord = self.template.rhs_chord
        lo, hi = chord.indptr[row], chord.indptr[row + 1]
        terms = [(float(chord.data[k]), int(self.chord_steps[chord.indices[k]]))
                 for k in range(lo, hi)]
        return float(self.template.rhs_t0[row]), terms

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps({
            "n": self.n,
            "cost": self.cost.to_dict(),
            "config": self.config.to_dict(),
            "t0": self.t0.hex(),
        }, sort_keys=True).encode())
        m = self.matrix
        for arr in (m.indptr, m.indices):
            h.update(np.ascontiguousarray(arr, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(m.data, dtype=np.float64).tobytes())
        h.update(np.ascontiguousarray(self.rhs, dtype=np.float64).tobytes())
        return h.hexdigest()

    def to_json_dict(self) -> dict:
        """Debug/pipeline form: variable names and sparse rows."""
        m = self.matrix
        rows = []
        for r in range(self.num_rows):
            lo, hi = m.indptr[r], m.indptr[r + 1]
            t0c, chords = self.rhs_terms(r)
            rows.append({
                "name": self.row_names[r],
                "kind": self.row_kinds[r],
                "coefficients": [[int(m.indices[k]), float(m.data[k])] for k in range(lo, hi)],
                "relation": ">=",
                "rhs": float(self.rhs[r]),
                "rhs_terms": {"t0": t0c, "chords": [[a, k] for a, k in chords]},
            })
        return {
            "n": self.n,
            "cost": self.cost.to_dict(),
            "config": self.config.to_dict(),
            "t0": self.t0,
            "sense": "min",
            "objective": {"z": self.z_index},
            "variables": [{"id": k, "name": nm, "lower": 0.0}
                          for k, nm in enumerate(self.var_names)],
            "constraints": rows,
            "fingerprint": self.fingerprint(),
        }

    def to_lp_text(self) -> str:
        """CPLEX-LP text, readable by common third-party solvers."""
        def vname(k: int) -> str:
            return (self.var_names[k].replace("[", "(").replace("]", ")")
                    .replace(",", "_"))

        m = self.matrix
        out = ["\\ " + f"REL n={self.n} cost={self.cost.name} config={self.config.format()} "
               f"t0={self.t0!r}", "Minimize", f" obj: {vname(self.z_index)}", "Subject To"]
        for r in range(self.num_rows):
            lo, hi = m.indptr[r], m.indptr[r + 1]
            parts = []
            for k in range(lo, hi):
                a = float(m.data[k])
                sign = "-" if a < 0 else "+"
                parts.append(f"{sign} {abs(a)!r} {vname(int(m.indices[k]))}")
            body = " ".join(parts).lstrip("+ ")
            out.append(f" r{r}: {body} >= {float(self.rhs[r])!r}")
        out.append("Bounds")
        out.extend(f" {vname(k)} >= 0" for k in range(self.num_vars))
        out.append("End")
        return "\n".join(out) + "\n"


def _check_args(n: int, cfg: Configuration, t0: float) -> None:
    if cfg.n != n:
        raise ValueError(f"configuration has {cfg.n} vertices, expected {n}")
    if not t0 >= 0.0:
        raise ValueError(f"t0 must be nonnegative, got {t0}")


def build_rel(n: int, f: CostFunction, cfg: Configuration, t0: float) -> RelaxationInstance:
    """Assemble the relaxation LP for configuration ``cfg`` started at time ``t0``."""
    _check_args(n, cfg, t0)
    terms = tuple(linear_terms(f))
    tpl = _template(n, cfg.b, terms)
    rho = cfg.rho
    steps = np.array([chord_steps(rho[i], rho[k], n) for i, k in tpl.event_pairs])
    chords = np.array([chord_length(0, int(s), n) for s in steps])
    rhs = tpl.rhs_t0 * float(t0) + tpl.rhs_chord @ chords
    return RelaxationInstance(cost=f, config=cfg, t0=float(t0), template=tpl,
                              rhs=np.asarray(rhs, dtype=float), chord_steps=steps)


def constraint_residuals(inst: RelaxationInstance, x: np.ndarray) -> np.ndarray:
    """``A x - rhs``; nonnegative entries mean the row is satisfied."""
    return inst.matrix @ x - inst.rhs


def feasible_witness(inst: RelaxationInstance) -> np.ndarray:
    """Both agents walk together along the polygon path ``rho``.

    Each free label is placed at its event's vertex, so every distance equals
    the chord between the corresponding vertices.
    """
    n, rho = inst.n, inst.config.rho
    x = np.zeros(inst.num_vars)
    t = float(inst.t0)
    for i in range(n):
        if i > 0:
            t += chord_length(rho[i - 1], rho[i], n)
        x[inst.t_index(i + 1)] = t
        x[inst.c_index(0, i + 1)] = t
        x[inst.c_index(1, i + 1)] = t
    for (p, q), v in inst.template.pair_var.items():
        if v >= 0:
            x[v] = chord_length(rho[p // 2], rho[q // 2], n)
    x[inst.z_index] = max(
        u * x[inst.c_index(0, i + 1)] + w * x[inst.c_index(1, i + 1)]
        for i in range(n) for u, w in linear_terms(inst.cost)
    )
    return x
