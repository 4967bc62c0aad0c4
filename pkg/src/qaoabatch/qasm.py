"""OpenQASM 2.0 emitter and parser for the small gate set used by QAOA circuits.

Supported: ``OPENQASM 2.0;``, ``include "qelib1.inc";``, one ``qreg`` and at most
one ``creg`` of the same size, gates ``h x rx rz cx cz``, terminal ``measure``
of every qubit, ``//`` comments. Anything else is rejected with its location.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ParameterError, QasmError, UnsupportedGateError

SINGLE_QUBIT = frozenset({"h", "x"})
ROTATIONS = frozenset({"rx", "rz"})
TWO_QUBIT = frozenset({"cx", "cz"})
GATES = SINGLE_QUBIT | ROTATIONS | TWO_QUBIT

_REJECTED_STATEMENTS = frozenset({"gate", "opaque", "if", "barrier", "reset"})


class Op(NamedTuple):
    gate: str
    qubits: tuple
    angle: float | None = None


@dataclass(frozen=True)
class CircuitIR:
    num_qubits: int
    ops: tuple = ()
    measured: tuple = field(default=())

    def __post_init__(self):
        ops = tuple(self.ops)
        for op in ops:
            _check_op(op, self.num_qubits)
        measured = tuple(sorted(set(self.measured)))
        if measured and measured != tuple(range(self.num_qubits)):
            raise ParameterError("measurement must cover all qubits or none")
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "measured", measured)

    @property
    def is_measured(self):
        return bool(self.measured)

    @property
    def gate_count(self):
        return len(self.ops)

    def two_qubit_count(self):
        return sum(1 for op in self.ops if op.gate in TWO_QUBIT)


def _check_op(op, n):
    if op.gate not in GATES:
        raise ParameterError(f"unsupported gate {op.gate!r}")
    arity = 2 if op.gate in TWO_QUBIT else 1
    if len(op.qubits) != arity:
        raise ParameterError(f"{op.gate} takes {arity} qubit(s), got {op.qubits}")
    for q in op.qubits:
        if not 0 <= q < n:
            raise ParameterError(f"qubit {q} out of range for {n} qubits")
    if arity == 2 and op.qubits[0] == op.qubits[1]:
        raise ParameterError(f"{op.gate} operands must be distinct")
    if op.gate in ROTATIONS:
        if op.angle is None or not math.isfinite(op.angle):
            raise ParameterError(f"{op.gate} needs a finite angle, got {op.angle}")
    elif op.angle is not None:
        raise ParameterError(f"{op.gate} takes no angle")


def format_angle(x):
    """Shortest decimal literal that reads back to the same double."""
    return repr(float(x))


def emit(circuit):
    n = circuit.num_qubits
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{n}];", f"creg c[{n}];"]
    for gate, qubits, angle in circuit.ops:
        if angle is not None:
            lines.append(f"{gate}({format_angle(angle)}) q[{qubits[0]}];")
        elif len(qubits) == 2:
            lines.append(f"{gate} q[{qubits[0]}],q[{qubits[1]}];")
        else:
            lines.append(f"{gate} q[{qubits[0]}];")
    for q in circuit.measured:
        lines.append(f"measure q[{q}] -> c[{q}];")
    return "\n".join(lines) + "\n"


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<real>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<sym>[;,()\[\]+\-])
    """,
    re.VERBOSE,
)


class _Tok(NamedTuple):
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text):
    toks = []
    pos, line, line_start = 0, 1, 0
    end = len(text)
    match = _TOKEN.match
    while pos < end:
        m = match(text, pos)
        if m is None:
            raise QasmError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0
        self.qreg = None
        self.nq = 0
        self.creg = None
        self.ops = []
        self.measured = set()

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise QasmError(msg, tok.line, tok.col)

    def expect(self, text, kind=None):
        tok = self.next()
        if tok.text != text or (kind and tok.kind != kind):
            shown = tok.text or "end of input"
            raise QasmError(f"expected {text!r}, found {shown!r}", tok.line, tok.col)
        return tok

    def expect_kind(self, kind, what):
        tok = self.next()
        if tok.kind != kind:
            shown = tok.text or "end of input"
            raise QasmError(f"expected {what}, found {shown!r}", tok.line, tok.col)
        return tok

    def integer(self):
        tok = self.expect_kind("real", "integer")
        if not tok.text.isdigit():
            self.fail(f"expected integer, found {tok.text!r}", tok)
        return int(tok.text), tok

    def parse(self):
        self.expect("OPENQASM")
        ver = self.expect_kind("real", "version number")
        if ver.text not in ("2.0", "2"):
            self.fail(f"unsupported OpenQASM version {ver.text}", ver)
        self.expect(";")
        while self.peek().kind != "eof":
            self.statement()
        if self.qreg is None:
            self.fail("missing qreg declaration")
        measured = tuple(sorted(self.measured))
        if measured and len(measured) != self.nq:
            self.fail("partial measurement is not supported; measure all qubits or none")
        return CircuitIR(self.nq, tuple(self.ops), measured)

    def statement(self):
        tok = self.next()
        if tok.kind != "ident":
            self.fail(f"expected statement, found {tok.text!r}", tok)
        word = tok.text
        if word == "include":
            path = self.expect_kind("string", "file name")
            if path.text != '"qelib1.inc"':
                self.fail(f"unsupported include {path.text}", path)
            self.expect(";")
        elif word == "qreg":
            if self.qreg is not None:
                self.fail("only one qreg is supported", tok)
            self.qreg = self.expect_kind("ident", "register name").text
            self.expect("[")
            self.nq, size_tok = self.integer()
            if self.nq < 1:
                self.fail("qreg size must be positive", size_tok)
            self.expect("]")
            self.expect(";")
        elif word == "creg":
            if self.creg is not None:
                self.fail("only one creg is supported", tok)
            self.creg = self.expect_kind("ident", "register name").text
            self.expect("[")
            self.csize, _ = self.integer()
            self.expect("]")
            self.expect(";")
        elif word == "measure":
            self.measure(tok)
        elif word in GATES:
            self.gate(tok)
        elif word in _REJECTED_STATEMENTS:
            self.fail(f"unsupported statement '{word}'", tok)
        else:
            raise UnsupportedGateError(word, tok.line, tok.col)

    def angle(self):
        self.expect("(")
        sign = 1.0
        while self.peek().text in ("+", "-"):
            if self.next().text == "-":
                sign = -sign
        tok = self.expect_kind("real", "decimal angle literal")
        self.expect(")")
        value = sign * float(tok.text)
        if not math.isfinite(value):
            self.fail("angle is not finite", tok)
        return value

    def operand(self, allow_register=False):
        name = self.expect_kind("ident", "qubit operand")
        if self.qreg is None:
            self.fail("gate before qreg declaration", name)
        if name.text != self.qreg:
            self.fail(f"unknown register '{name.text}'", name)
        if self.peek().text != "[":
            if allow_register:
                return None
            self.fail("expected '[' after register name")
        self.next()
        idx, idx_tok = self.integer()
        if idx >= self.nq:
            self.fail(f"qubit index {idx} out of range for qreg of size {self.nq}", idx_tok)
        self.expect("]")
        return idx

    def gate(self, tok):
        if self.measured:
            self.fail("gates after measurement are not supported", tok)
        g = tok.text
        angle = self.angle() if g in ROTATIONS else None
        if g in TWO_QUBIT:
            a = self.operand()
            self.expect(",")
            b_tok = self.peek()
            b = self.operand()
            if a == b:
                self.fail(f"{g} operands must be distinct", b_tok)
            self.ops.append(Op(g, (a, b)))
        else:
            q = self.operand(allow_register=True)
            targets = range(self.nq) if q is None else (q,)
            for t in targets:
                self.ops.append(Op(g, (t,), angle))
        self.expect(";")

    def measure(self, tok):
        if self.creg is None:
            self.fail("measure before creg declaration", tok)
        q = self.operand(allow_register=True)
        self.expect_kind("arrow", "'->'")
        cname = self.expect_kind("ident", "classical register")
        if cname.text != self.creg:
            self.fail(f"unknown register '{cname.text}'", cname)
        if q is None:
            if self.peek().text == "[":
                self.fail("register-wide measure needs a register-wide target")
            if self.csize != self.nq:
                self.fail("creg size must match qreg size", cname)
            self.measured.update(range(self.nq))
        else:
            self.expect("[")
            c, c_tok = self.integer()
            if c != q:
                self.fail(f"measure q[{q}] must target c[{q}]", c_tok)
            if c >= self.csize:
                self.fail(f"bit index {c} out of range for creg of size {self.csize}", c_tok)
            self.expect("]")
            self.measured.add(q)
        self.expect(";")


def parse(text):
    """Parse OpenQASM text (``str`` or UTF-8 ``bytes``) into a :class:`CircuitIR`."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise QasmError(f"input is not valid UTF-8 ({exc.reason})", 0, 0) from None
    return _Parser(_tokenize(text)).parse()
