"""Benchmark harnesses: scaffold grounding, multi-shot sampling, mixed batches.

Each harness returns plain row dicts suitable for CSV output plus a summary.
"""
from __future__ import annotations

import csv
import math
import time

import numpy as np

from .circuits import QaoaParams, batch_ground, build_circuit, build_scaffold, direct_qasm
from .errors import SelectionError
from .graph import circulant_graph, complete_graph, gnp_graph, regular_graph
from .qasm import emit, parse
from .sim.backends import BackendKind, execute, mps, prepare, sv_naive, sv_optimized
from .sim.batch import execute_circuit
from .sim.statevector import Abandoned, Budget

BATCH_FIELDS = ("circuit_id", "n", "G", "shots", "policy", "backend", "wall_ms", "pass")


def random_params(rng, p, count):
    return [
        QaoaParams(tuple(rng.uniform(0, 2 * math.pi, p)), tuple(rng.uniform(0, math.pi, p)))
        for _ in range(count)
    ]


def batch_gen(n=5, count=1500, p=2, seed=0):
    """Time ``count`` grounded circuits from one scaffold against ``count`` direct builds."""
    g = complete_graph(n)
    params = random_params(np.random.default_rng(seed), p, count)
    t0 = time.perf_counter()
    scaffold = build_scaffold(g, p)
    grounded = batch_ground(scaffold, params)
    t_scaffold = time.perf_counter() - t0
    t0 = time.perf_counter()
    direct = [direct_qasm(g, x) for x in params]
    t_direct = time.perf_counter() - t0
    if grounded != direct:
        raise AssertionError("grounded and direct circuits differ")
    rows = [
        {"method": "scaffold", "circuits": count, "wall_ms": 1000 * t_scaffold},
        {"method": "direct", "circuits": count, "wall_ms": 1000 * t_direct},
    ]
    return rows, {"speedup": t_direct / t_scaffold}


def multishot(qubits=12, shots=5000, p=1, seed=0):
    """Optimized (evolve once) against naive (evolve per shot) state-vector sampling."""
    g = circulant_graph(qubits, (1, 2))
    circuit = build_circuit(g, random_params(np.random.default_rng(seed), p, 1)[0])
    rows, counts = [], {}
    for kind in (sv_optimized(), sv_naive()):
        t0 = time.perf_counter()
        counts[kind.name] = execute(kind, circuit, shots, seed)
        rows.append({"backend": str(kind), "qubits": qubits, "gates": circuit.gate_count,
                     "shots": shots, "wall_ms": 1000 * (time.perf_counter() - t0)})
    ratio = rows[1]["wall_ms"] / rows[0]["wall_ms"]
    return rows, {"ratio": ratio, "identical_counts": counts["sv_optimized"] == counts["sv_naive"]}


def mixed_batch(count=60, n_range=(4, 20), shots=5000, seed=0):
    """Deterministic QAOA circuits of assorted width, depth, and topology as QASM."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        kind = i % 3
        if kind == 0:
            g = gnp_graph(n, min(1.0, 3.0 / max(n - 1, 1)), int(rng.integers(2**31)))
        elif kind == 1 and n >= 5:
            g = circulant_graph(n, (1, 2))
        else:
            g = regular_graph(n, 2, int(rng.integers(2**31))) if n >= 3 else complete_graph(n)
        p = int(rng.integers(1, 3))
        out.append((emit(build_circuit(g, random_params(rng, p, 1)[0])), shots))
    return out


def _run_one(ir, shots, seed, policy, profiles=None, candidates=None, budget=None):
    t0 = time.perf_counter()
    if budget is None:
        counts = execute_circuit(ir, shots, seed, policy, profiles, candidates)
    else:
        kind = BackendKind.parse(policy)
        budget = Budget(budget, t0, project=False)
        counts = prepare(kind, ir, budget).sample(shots, seed, budget)
    return counts, time.perf_counter() - t0


def _row(i, ir, shots, policy, counts, dt, stage):
    return {"circuit_id": i, "n": ir.num_qubits, "G": ir.gate_count, "shots": shots, "policy": str(policy),
            "backend": counts.metadata["backend"], "wall_ms": 1000 * dt, "pass": stage}


def run_policy(circuits, policy, seed=0, profiles=None, candidates=None, abandon_after=None):
    """Run a batch sequentially under one policy, timing every circuit.

    With ``abandon_after`` (seconds, fixed backends only), stop as soon as the
    running total passes it and mark the result incomplete; used to drop
    hopeless fixed baselines.
    """
    rows, total = [], 0.0
    for i, (qasm, shots) in enumerate(circuits):
        ir = parse(qasm)
        budget = None if abandon_after is None else abandon_after - total
        try:
            counts, dt = _run_one(ir, shots, seed ^ i, policy, profiles, candidates, budget)
        except Abandoned:
            return rows, abandon_after, False
        total += dt
        rows.append(_row(i, ir, shots, policy, counts, dt, "fixed"))
    return rows, total, True


def run_paired(circuits, policies, seed=0, profiles=None, candidates=None):
    """Run every circuit under each policy back to back, rotating the order.

    Timing drift on a shared machine then hits all policies alike, which a
    pass per policy cannot guarantee.
    """
    rows, totals = [], {str(p): 0.0 for p in policies}
    for i, (qasm, shots) in enumerate(circuits):
        ir = parse(qasm)
        for k in range(len(policies)):
            policy = policies[(i + k) % len(policies)]
            counts, dt = _run_one(ir, shots, seed ^ i, policy, profiles, candidates)
            totals[str(policy)] += dt
            rows.append(_row(i, ir, shots, policy, counts, dt, "paired"))
    return rows, totals


def batch_benchmark(circuits, profiles=None, candidates=None, seed=0, factor=1.2):
    """Runtime of each fixed backend, then of ``estimated`` and ``timed``.

    The fixed backends run one pass each; one whose running total passes
    ``factor`` times the best complete total so far is stopped, since it can
    no longer be the reference. The best fixed backend is then timed again,
    paired circuit by circuit with the automatic policies, and the ratios
    come from that paired pass. Every candidate first runs the smallest
    circuit untimed, so one-off warm-up costs do not land on whichever
    policy happens to go first.
    """
    candidates = [BackendKind.parse(c) for c in (candidates or (sv_optimized(), sv_naive(), mps(64)))]
    small = min(circuits, key=lambda c: len(c[0]))
    for kind in candidates:
        execute_circuit(parse(small[0]), small[1], seed, kind)
    rows, totals, best, ref = [], {}, math.inf, None
    for kind in candidates:
        r, total, complete = run_policy(circuits, kind, seed,
                                        abandon_after=factor * best if best < math.inf else None)
        rows += r
        totals[str(kind)] = {"seconds": total, "complete": complete}
        if complete and total < best:
            best, ref = total, kind
    if ref is None:
        raise SelectionError({str(k): "no fixed backend completed the batch" for k in candidates})
    policies = [ref] + (["estimated"] if profiles else []) + ["timed"]
    r, paired = run_paired(circuits, policies, seed, profiles, candidates)
    rows += r
    ref_seconds = paired[str(ref)]
    for policy in policies[1:]:
        totals[policy] = {"seconds": paired[policy], "complete": True,
                          "ratio_to_best": paired[policy] / ref_seconds}
    return rows, {"best_fixed": str(ref), "best_fixed_seconds": ref_seconds, "totals": totals}


def write_rows(path, rows, fields=None):
    fields = fields or list(rows[0])
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
