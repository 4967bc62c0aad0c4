"""
Three ways to sample a QAOA circuit
===================================

The same circuit runs on the state-vector simulator in two modes and on
the matrix product state simulator. All three map shot k to the same
uniform draw, so for one seed their counts agree exactly whenever the MPS
bond dimension is large enough to be exact.
"""

import time

from qaoabatch.circuits import QaoaParams, batch_ground, build_circuit, build_scaffold, direct_qasm
from qaoabatch.graph import circulant_graph, complete_graph
from qaoabatch.qasm import emit, parse
from qaoabatch.sim import execute, mps, sv_naive, sv_optimized

g = circulant_graph(10, (1, 2))
circuit = build_circuit(g, QaoaParams((0.4, 0.7), (0.3, 0.2)))
print(f"{circuit.num_qubits} qubits, {circuit.gate_count} gates")

# the IR round-trips through OpenQASM 2.0 text
assert parse(emit(circuit)) == circuit
print(emit(circuit).splitlines()[4])

shots = 2000
results = {}
for kind in (sv_optimized(), sv_naive(), mps(32), mps(2)):
    t0 = time.perf_counter()
    results[str(kind)] = execute(kind, circuit, shots, seed=7)
    print(f"{str(kind):14s} {1000 * (time.perf_counter() - t0):8.1f} ms  "
          f"top outcome {results[str(kind)].most_frequent()}")

print("optimized == naive:", results["sv_optimized"] == results["sv_naive"])
print("optimized == mps(32):", results["sv_optimized"] == results["mps(32)"])
print("optimized == mps(2) (truncated):", results["sv_optimized"] == results["mps(2)"])

# %%
# Scaffolds
# ---------
# Building a circuit means Trotterizing every cost term again. A scaffold
# does that once with placeholder angles; grounding is string substitution.

k5 = complete_graph(5)
scaffold = build_scaffold(k5, 2)
params = [QaoaParams((0.1 * i, 0.2), (0.3, 0.05 * i)) for i in range(500)]

t0 = time.perf_counter()
grounded = batch_ground(scaffold, params)
t_scaffold = time.perf_counter() - t0
t0 = time.perf_counter()
direct = [direct_qasm(k5, x) for x in params]
t_direct = time.perf_counter() - t0
print(f"500 circuits: scaffold {1000 * t_scaffold:.1f} ms, direct {1000 * t_direct:.1f} ms")
assert grounded == direct
