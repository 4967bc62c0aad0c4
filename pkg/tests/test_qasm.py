import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaoabatch.errors import QasmError, UnsupportedGateError
from qaoabatch.qasm import CircuitIR, Op, emit, parse

BELL = """OPENQASM 2.0;
include "qelib1.inc";
qreg q[2];
creg c[2];
h q[0];
cx q[0],q[1];
measure q[0] -> c[0];
measure q[1] -> c[1];
"""


def test_emit_single_h():
    text = emit(CircuitIR(1, (Op("h", (0,)),), (0,)))
    assert "h q[0];" in text
    assert "measure q[0] -> c[0];" in text


def test_emit_angle_literal():
    text = emit(CircuitIR(1, (Op("rz", (0,), math.pi),)))
    assert "rz(3.141592653589793) q[0];" in text


def test_parse_bell():
    ir = parse(BELL)
    assert ir.num_qubits == 2
    assert ir.ops == (Op("h", (0,)), Op("cx", (0, 1)))
    assert ir.is_measured


def test_parse_register_measure_and_comments():
    text = BELL.replace("measure q[0] -> c[0];\nmeasure q[1] -> c[1];", "measure q -> c; // all")
    assert parse(text) == parse(BELL)


def test_unsupported_gate_location():
    text = BELL.replace("cx q[0],q[1];", "u3(0.1,0.2,0.3) q[1];")
    with pytest.raises(UnsupportedGateError) as info:
        parse(text)
    assert "u3" in str(info.value)
    assert info.value.line == 6


@pytest.mark.parametrize("bad", [
    "OPENQASM 2.0;\nqreg q[2];\nh q[2];\n",  # index out of range
    "OPENQASM 2.0;\nqreg q[2];\ncx q[0],q[0];\n",  # repeated operand
    "OPENQASM 2.0;\nqreg q[2];\nh q[0]\n",  # missing semicolon
    "OPENQASM 2.0;\nqreg q[1];\nmeasure q[0] -> c[0];\nh q[0];\n",  # gate after measure
    "OPENQASM 2.0;\nqreg q[1];\nbarrier q;\n",
    "OPENQASM 3.0;\nqreg q[1];\n",
    "OPENQASM 2.0;\nqreg q[1];\nrz(1e999) q[0];\n",
    "",
])
def test_rejects(bad):
    with pytest.raises(QasmError) as info:
        parse(bad)
    assert info.value.line >= 0


angles = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def circuits(draw):
    n = draw(st.integers(1, 6))
    ops = []
    for _ in range(draw(st.integers(0, 25))):
        gate = draw(st.sampled_from(["h", "x", "rx", "rz", "cx", "cz"]))
        if gate in ("cx", "cz"):
            if n < 2:
                continue
            a, b = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
            ops.append(Op(gate, (a, b)))
        elif gate in ("rx", "rz"):
            ops.append(Op(gate, (draw(st.integers(0, n - 1)),), draw(angles)))
        else:
            ops.append(Op(gate, (draw(st.integers(0, n - 1)),)))
    measured = tuple(range(n)) if draw(st.booleans()) else ()
    return CircuitIR(n, tuple(ops), measured)


@settings(max_examples=200, deadline=None)
@given(circuits())
def test_round_trip(c):
    back = parse(emit(c))
    assert back == c
    # bit-exact angles, including the sign of zero
    for a, b in zip(back.ops, c.ops):
        if a.angle is not None:
            assert math.copysign(1, a.angle) == math.copysign(1, b.angle)
    assert emit(back) == emit(c)


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=300))
def test_parser_fuzz_bytes(data):
    try:
        parse(data.decode("utf-8", errors="replace"))
    except QasmError:
        pass


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="OPENQASM2.0;qreg[]hcxrzmeasu->(),\n 0123456789$", max_size=120))
def test_parser_fuzz_tokens(text):
    try:
        parse(text)
    except QasmError:
        pass
