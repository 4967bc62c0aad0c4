"""Batch execution with per-circuit backend selection."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor

from ..errors import ConfigurationError, ParameterError
from ..qasm import CircuitIR, parse
from .backends import BackendKind, execute, mps, sv_naive, sv_optimized
from .selection import select_backend_estimated, timed_trial

DEFAULT_CANDIDATES = (sv_optimized(), sv_naive(), mps(64))


def parse_policy(policy):
    """``"timed"``, ``"estimated"``, or a backend name such as ``"mps(32)"`` (fixed)."""
    if isinstance(policy, BackendKind):
        return "fixed", policy
    text = str(policy).strip()
    if text in ("timed", "estimated"):
        return text, None
    if text.startswith("fixed:"):
        text = text[len("fixed:"):]
    return "fixed", BackendKind.parse(text)


def execute_circuit(circuit, shots, seed, policy="sv_optimized", profiles=None, candidates=None):
    """Run one circuit (QASM text or IR) under a selection policy."""
    mode, kind = parse_policy(policy)
    t0 = time.perf_counter()
    if not isinstance(circuit, CircuitIR):
        circuit = parse(circuit)
    if mode == "fixed":
        counts = execute(kind, circuit, shots, seed)
    elif mode == "timed":
        kind, prepared, _ = timed_trial(circuit, shots, candidates or DEFAULT_CANDIDATES, seed)
        counts = prepared.sample(shots, seed)
    else:
        if not profiles:
            raise ConfigurationError("policy 'estimated' requires calibrated profiles")
        kind = select_backend_estimated(circuit, shots, profiles)
        counts = execute(kind, circuit, shots, seed)
    counts.metadata.update(
        backend=str(kind), policy=mode, wall_ms=1000.0 * (time.perf_counter() - t0)
    )
    return counts


def run_batch(circuits, policy="sv_optimized", parallelism=1, seed=0, profiles=None,
              candidates=None, seeds=None):
    """Execute ``(qasm, shots)`` pairs, returning results in input order.

    Circuit ``i`` uses seed ``seed ^ i`` unless explicit ``seeds`` are given.
    A failing circuit leaves its exception in its slot; the rest still run.
    """
    if parallelism < 1:
        raise ParameterError(f"parallelism must be >= 1, got {parallelism}")
    circuits = list(circuits)
    if seeds is None:
        seeds = [seed ^ i for i in range(len(circuits))]
    elif len(seeds) != len(circuits):
        raise ParameterError("seeds must match circuits one to one")
    parse_policy(policy)

    def one(i):
        qasm, shots = circuits[i]
        try:
            return execute_circuit(qasm, shots, seeds[i], policy, profiles, candidates)
        except Exception as exc:  # captured per slot
            return exc

    if parallelism == 1 or len(circuits) <= 1:
        return [one(i) for i in range(len(circuits))]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, range(len(circuits))))
