"""QAOA circuits for MaxCut.

Two routes produce the same QASM text:

* :func:`direct_qasm` rebuilds the gate list from the Hamiltonian terms for
  every parameter set (one Trotterization per circuit);
* :func:`build_scaffold` Trotterizes once into a template whose rotation
  angles are placeholders such as ``rz(-1*$g0)``; :func:`ground` then only
  substitutes numbers.

Cost layer convention: each edge ``(i, j, w)`` becomes ``cx i,j; rz(-w*gamma) j;
cx i,j``, i.e. ``exp(+i gamma w Z_i Z_j / 2)``, which equals
``exp(-i gamma w (I - Z_i Z_j) / 2)`` up to a global phase. The mixer is
``rx(2*beta)`` on every qubit.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .errors import ParameterError
from .qasm import CircuitIR, Op, emit, format_angle


@dataclass(frozen=True)
class QaoaParams:
    gammas: tuple
    betas: tuple

    def __post_init__(self):
        gammas = tuple(float(x) for x in self.gammas)
        betas = tuple(float(x) for x in self.betas)
        if not gammas or len(gammas) != len(betas):
            raise ParameterError(
                f"need p >= 1 gammas and betas of equal length, got {len(gammas)} and {len(betas)}"
            )
        if not all(math.isfinite(x) for x in gammas + betas):
            raise ParameterError("QAOA parameters must be finite")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "betas", betas)

    @property
    def p(self):
        return len(self.gammas)

    def to_vector(self):
        return list(self.gammas) + list(self.betas)

    @classmethod
    def from_vector(cls, vec):
        vec = list(vec)
        if len(vec) % 2:
            raise ParameterError(f"parameter vector must have even length, got {len(vec)}")
        p = len(vec) // 2
        return cls(tuple(vec[:p]), tuple(vec[p:]))


class HamiltonianTerm(NamedTuple):
    kind: str  # "zz" or "x"
    qubits: tuple
    coefficient: float = 1.0

    @property
    def tag(self):
        return f"{self.kind}({','.join(str(q) for q in self.qubits)})"


def cost_terms(g):
    """One ``zz`` term per edge, standing for ``w * (I - Z_i Z_j) / 2``."""
    return [HamiltonianTerm("zz", (u, v), w) for u, v, w in g.edges]


def mixer_terms(n):
    return [HamiltonianTerm("x", (i,), 1.0) for i in range(n)]


def _trotter_ops(term, angle):
    """Gate sequence for ``exp(-i angle * term)`` restricted to the QAOA term kinds."""
    if term.kind == "zz":
        i, j = term.qubits
        return [Op("cx", (i, j)), Op("rz", (j,), -term.coefficient * angle), Op("cx", (i, j))]
    if term.kind == "x":
        (i,) = term.qubits
        return [Op("rx", (i,), 2 * term.coefficient * angle)]
    raise ParameterError(f"unknown term kind {term.kind!r}")


def build_circuit(g, params, measure=True):
    """Gate-level QAOA circuit with numeric angles, Trotterized from scratch."""
    n = g.num_nodes
    if n < 1:
        raise ParameterError("graph must have at least one node")
    ops = [Op("h", (q,)) for q in range(n)]
    cost = cost_terms(g)
    mixer = mixer_terms(n)
    for gamma, beta in zip(params.gammas, params.betas):
        for term in cost:
            ops.extend(_trotter_ops(term, gamma))
        for term in mixer:
            ops.extend(_trotter_ops(term, beta))
    return CircuitIR(n, tuple(ops), tuple(range(n)) if measure else ())


def direct_qasm(g, params):
    return emit(build_circuit(g, params))


def _fmt_coef(c):
    c = float(c)
    if c.is_integer() and abs(c) < 2**53:
        return str(int(c))
    return format_angle(c)


_SLOT = re.compile(r"\((?:([-+0-9.eE]+)\*)?\$([gb])(\d+)\)")


@dataclass(frozen=True)
class CircuitScaffold:
    qasm_template: str
    p: int
    num_qubits: int
    term_tag: str | None = None
    _pieces: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        pieces = []
        last = 0
        for m in _SLOT.finditer(self.qasm_template):
            coef = float(m.group(1)) if m.group(1) else 1.0
            idx = int(m.group(3))
            if idx >= self.p:
                raise ParameterError(f"placeholder ${m.group(2)}{idx} exceeds p={self.p}")
            pieces.append(self.qasm_template[last : m.start()] + "(")
            pieces.append((coef, m.group(2), idx))
            last = m.end() - 1
        pieces.append(self.qasm_template[last:])
        object.__setattr__(self, "_pieces", tuple(pieces))

    def placeholders(self):
        return sorted({(p[1], p[2]) for p in self._pieces if isinstance(p, tuple)})

    def to_dict(self, term_tags=()):
        return {
            "template": self.qasm_template,
            "p": self.p,
            "n": self.num_qubits,
            "term_tags": list(term_tags) or ([self.term_tag] if self.term_tag else []),
        }

    def save(self, path, term_tags=()):
        Path(path).write_text(json.dumps(self.to_dict(term_tags), indent=2) + "\n")

    @classmethod
    def from_dict(cls, data):
        tags = data.get("term_tags") or [None]
        return cls(data["template"], int(data["p"]), int(data["n"]), tags[0] if len(tags) == 1 else None)


def build_scaffold(g, p, term_tag=None):
    """Trotterize once, leaving ``$g{l}`` / ``$b{l}`` placeholders in the angles."""
    n = g.num_nodes
    if p < 1 or n < 1:
        raise ParameterError(f"need p >= 1 and n >= 1, got p={p}, n={n}")
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{n}];", f"creg c[{n}];"]
    lines += [f"h q[{q}];" for q in range(n)]
    cost = cost_terms(g)
    for layer in range(p):
        for term in cost:
            i, j = term.qubits
            lines.append(f"cx q[{i}],q[{j}];")
            lines.append(f"rz({_fmt_coef(-term.coefficient)}*$g{layer}) q[{j}];")
            lines.append(f"cx q[{i}],q[{j}];")
        lines += [f"rx(2*$b{layer}) q[{q}];" for q in range(n)]
    lines += [f"measure q[{q}] -> c[{q}];" for q in range(n)]
    return CircuitScaffold("\n".join(lines) + "\n", p, n, term_tag)


def ground(scaffold, params):
    """Substitute numeric angles into a scaffold; pure text work, no re-Trotterization."""
    if params.p != scaffold.p:
        raise ParameterError(f"scaffold has p={scaffold.p}, parameters have p={params.p}")
    values = {"g": params.gammas, "b": params.betas}
    cache = {}
    out = []
    for piece in scaffold._pieces:
        if isinstance(piece, str):
            out.append(piece)
            continue
        text = cache.get(piece)
        if text is None:
            coef, fam, idx = piece
            text = cache[piece] = format_angle(coef * values[fam][idx])
        out.append(text)
    return "".join(out)


def batch_ground(scaffold, param_sets):
    return [ground(scaffold, params) for params in param_sets]


class TermProgram(NamedTuple):
    terms: tuple
    tag: str
    qasm: str


def per_term_programs(scaffold, terms, params, grouped=False):
    """Grounded measurement programs for a list of Z-diagonal terms.

    Per-term mode yields one program per term; since every ``zz`` term is
    diagonal in the computational basis, all programs share the same circuit
    text. Grouped mode collapses the commuting terms into a single program.
    """
    for t in terms:
        if t.kind != "zz":
            raise ParameterError(f"only Z-diagonal terms are supported, got {t.tag}")
        if any(not 0 <= q < scaffold.num_qubits for q in t.qubits):
            raise ParameterError(f"term {t.tag} does not fit {scaffold.num_qubits} qubits")
    qasm = ground(scaffold, params)
    if grouped:
        return [TermProgram(tuple(terms), "grouped", qasm)]
    return [TermProgram((t,), t.tag, qasm) for t in terms]
