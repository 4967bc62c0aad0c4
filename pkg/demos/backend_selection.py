"""
Choosing a simulator per circuit
================================

Small circuits sampled many times want the state vector, wide shallow ones
can be cheaper as an MPS, and per-shot re-simulation is almost never right.
Two policies pick for us: ``estimated`` looks the answer up in runtime
profiles fitted on this machine, ``timed`` races the candidates on the
circuit itself.
"""

import time

from qaoabatch import bench
from qaoabatch.qasm import parse
from qaoabatch.sim import mps, sv_naive, sv_optimized
from qaoabatch.sim.batch import execute_circuit
from qaoabatch.sim.selection import calibrate, select_backend_estimated

# fitting profiles takes a few seconds
profiles = calibrate([sv_optimized(), sv_naive(), mps(64)], seed=0)
for p in profiles:
    print(f"{str(p.backend):14s} evolve {p.evolve:.2e}  sample {p.sample:.2e}")

circuits = bench.mixed_batch(12, (4, 16), 2000, seed=1)
for i, (qasm, shots) in enumerate(circuits):
    ir = parse(qasm)
    picked = select_backend_estimated(ir, shots, profiles)
    t0 = time.perf_counter()
    counts = execute_circuit(ir, shots, i, "timed")
    dt = 1000 * (time.perf_counter() - t0)
    print(f"n={ir.num_qubits:2d} gates={ir.gate_count:4d}  estimated -> {str(picked):14s} "
          f"timed -> {counts.metadata['backend']:14s} ({dt:.0f} ms)")
