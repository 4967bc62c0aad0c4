import math
import re

import numpy as np
import pytest
import scipy.linalg

from oracles import dense_probabilities, embed, total_variation
from qaoabatch.circuits import (
    QaoaParams,
    batch_ground,
    build_circuit,
    build_scaffold,
    cost_terms,
    direct_qasm,
    ground,
    per_term_programs,
)
from qaoabatch.errors import ParameterError
from qaoabatch.graph import Graph, complete_graph, gnp_graph
from qaoabatch.optimize import expectation_from_counts
from qaoabatch.qasm import parse
from qaoabatch.sim.backends import execute, sv_optimized
from qaoabatch.sim.statevector import exact_probabilities, probability_vector

EDGE = Graph(2, ((0, 1),))


def test_cost_terms():
    assert [(t.kind, t.qubits, t.coefficient) for t in cost_terms(EDGE)] == [("zz", (0, 1), 1.0)]
    assert len(cost_terms(complete_graph(3))) == 3
    assert cost_terms(Graph(2, ((0, 1, 2.5),)))[0].coefficient == 2.5


def test_scaffold_counts_single_edge():
    t = build_scaffold(EDGE, 1).qasm_template
    assert t.count("cx ") == 2 and t.count("h ") == 2
    assert t.count("$g0") == 1 and t.count("$b0") == 2
    assert "rz(-1*$g0) q[1];" in t


def test_scaffold_counts_k3_p2():
    t = build_scaffold(complete_graph(3), 2).qasm_template
    assert t.count("cx ") == 12
    assert set(re.findall(r"\$[gb]\d+", t)) == {"$g0", "$g1", "$b0", "$b1"}


def test_ground_literal():
    text = ground(build_scaffold(EDGE, 1), QaoaParams((0.5,), (0.25,)))
    assert "rz(-0.5) q[1];" in text and "rx(0.5) q[0];" in text


def test_ground_matches_direct_build():
    rng = np.random.default_rng(3)
    for seed in range(5):
        g = gnp_graph(7, 0.5, seed)
        params = QaoaParams(tuple(rng.uniform(-3, 3, 2)), tuple(rng.uniform(-3, 3, 2)))
        text = ground(build_scaffold(g, 2), params)
        assert parse(text) == build_circuit(g, params)
        assert text == direct_qasm(g, params)


def test_ground_layer_mismatch():
    with pytest.raises(ParameterError):
        ground(build_scaffold(EDGE, 2), QaoaParams((0.1,), (0.2,)))


def test_batch_ground_order_and_purity():
    s = build_scaffold(complete_graph(4), 1)
    ps = [QaoaParams((0.1 * i,), (0.2 * i,)) for i in range(10)]
    out = batch_ground(s, ps)
    assert out == [ground(s, x) for x in ps] == batch_ground(s, ps)


def test_gate_count_formula():
    g = gnp_graph(9, 0.4, 1)
    p, n, e = 3, g.num_nodes, g.num_edges
    ir = build_circuit(g, QaoaParams((0.1,) * p, (0.2,) * p))
    assert ir.gate_count == n + p * (3 * e) + p * n
    # layer order: cost then mixer, p times
    kinds = ["m" if op.gate == "rx" else "c" for op in ir.ops[n:]]
    assert kinds == (["c"] * 3 * e + ["m"] * n) * p


def test_zero_angles_uniform():
    g = gnp_graph(6, 0.5, 0)
    probs = probability_vector(parse(ground(build_scaffold(g, 2), QaoaParams((0, 0), (0, 0)))))
    assert np.allclose(probs, 1 / 64)
    dist = exact_probabilities(build_circuit(g, QaoaParams((0.0,), (0.0,))))
    assert math.isclose(expectation_from_counts(cost_terms(g), dist), g.num_edges / 2)


def test_sign_convention_against_hamiltonian():
    # one layer equals exp(-i b H_M) exp(-i g H_C) H^n|0>, H_C = sum w (I - ZZ)/2
    g = Graph(3, ((0, 1, 1.0), (1, 2, 0.7), (0, 2, 1.3)))
    gamma, beta = 0.9, 0.4
    z = np.diag([1.0, -1.0])
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    hc = sum(w * (np.eye(8) - embed(3, {u: z, v: z})) / 2 for u, v, w in g.edges)
    hm = sum(embed(3, {q: x}) for q in range(3))
    psi = np.full(8, 1 / math.sqrt(8), dtype=complex)
    psi = scipy.linalg.expm(-1j * beta * hm) @ scipy.linalg.expm(-1j * gamma * hc) @ psi
    ir = build_circuit(g, QaoaParams((gamma,), (beta,)))
    assert total_variation(np.abs(psi) ** 2, dense_probabilities(ir)) < 1e-12
    assert total_variation(np.abs(psi) ** 2, probability_vector(ir)) < 1e-12


def test_per_term_programs():
    g = complete_graph(3)
    s = build_scaffold(g, 1)
    params = QaoaParams((0.7,), (0.3,))
    terms = cost_terms(g)
    progs = per_term_programs(s, terms, params)
    assert len(progs) == 3 and len({p.qasm for p in progs}) == 1
    assert len({p.tag for p in progs}) == 3
    grouped = per_term_programs(s, terms, params, grouped=True)
    assert len(grouped) == 1
    per_term = sum(
        expectation_from_counts(p.terms, execute(sv_optimized(), parse(p.qasm), 2000, 11)) for p in progs
    )
    together = expectation_from_counts(terms, execute(sv_optimized(), parse(grouped[0].qasm), 2000, 11))
    assert math.isclose(per_term, together)
