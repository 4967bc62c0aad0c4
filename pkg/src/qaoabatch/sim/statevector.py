"""Dense state-vector simulation.

Amplitudes are stored in a flat array of length ``2**n`` with qubit 0 as the
most significant index bit, so basis index ``i`` prints as
``format(i, f"0{n}b")`` with qubit 0 leftmost.

Sampling draws one uniform variate per shot and inverts the cumulative
distribution, so the optimized mode (evolve once) and the naive mode
(re-evolve for every shot) return identical counts for the same seed.
"""
from __future__ import annotations

import math
import time

import numpy as np

from ..errors import CapacityError, ContractError, ParameterError
from .counts import counts_from_indices

MAX_QUBITS = 26
PRUNE_BELOW = 1e-12
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class Abandoned(Exception):
    """Raised when a simulation passes its deadline (used by timed selection)."""


class Budget:
    """Wall-time allowance for a trial run.

    Besides the hard limit, a run is abandoned once it has done at least
    ``MIN_PROGRESS`` of its work and the elapsed time extrapolated over all
    of it already exceeds the allowance.
    """

    MIN_PROGRESS = 0.01

    def __init__(self, seconds, start=None, project=True):
        self.seconds = seconds
        self.start = time.perf_counter() if start is None else start
        self.project = project

    def check(self, done=0, total=0):
        elapsed = time.perf_counter() - self.start
        if elapsed > self.seconds:
            raise Abandoned()
        if (self.project and total and done >= self.MIN_PROGRESS * total
                and elapsed * total / done > self.seconds):
            raise Abandoned()


def _check_deadline(deadline, done=0, total=0):
    if deadline is not None:
        deadline.check(done, total)


def _apply(state, n, op):
    gate, qubits, angle = op
    if len(qubits) == 1:
        q = qubits[0]
        v = state.reshape(1 << q, 2, 1 << (n - q - 1))
        a, b = v[:, 0, :], v[:, 1, :]
        if gate == "rz":
            a *= complex(math.cos(angle / 2), -math.sin(angle / 2))
            b *= complex(math.cos(angle / 2), math.sin(angle / 2))
        elif gate == "h":
            s = a + b
            b -= a
            b *= -_INV_SQRT2
            s *= _INV_SQRT2
            a[...] = s
        elif gate == "rx":
            c, s = math.cos(angle / 2), -1j * math.sin(angle / 2)
            new_a = c * a + s * b
            b *= c
            b += s * a
            a[...] = new_a
        elif gate == "x":
            tmp = a.copy()
            a[...] = b
            b[...] = tmp
        else:  # pragma: no cover - guarded by CircuitIR validation
            raise ParameterError(f"unsupported gate {gate}")
        return
    c, t = qubits
    lo, hi = min(c, t), max(c, t)
    v = state.reshape(1 << lo, 2, 1 << (hi - lo - 1), 2, 1 << (n - hi - 1))
    if gate == "cz":
        v[:, 1, :, 1, :] *= -1
        return
    if c < t:
        sub0, sub1 = v[:, 1, :, 0, :], v[:, 1, :, 1, :]
    else:
        sub0, sub1 = v[:, 0, :, 1, :], v[:, 1, :, 1, :]
    tmp = sub0.copy()
    sub0[...] = sub1
    sub1[...] = tmp


def evolve_steps(circuit):
    """Generator form of :func:`evolve`: yields ``(done, total, state)`` after
    every gate and returns the final state."""
    n = circuit.num_qubits
    if n > MAX_QUBITS:
        raise CapacityError(f"state-vector backend limited to {MAX_QUBITS} qubits, got {n}")
    state = np.zeros(1 << n, dtype=np.complex128)
    state[0] = 1.0
    total = len(circuit.ops)
    for k, op in enumerate(circuit.ops):
        _apply(state, n, op)
        yield k + 1, total, state
    return state


def drive(steps, deadline=None):
    """Run a step generator to completion, checking ``deadline`` after each step."""
    while True:
        try:
            done, total, _ = next(steps)
        except StopIteration as stop:
            return stop.value
        _check_deadline(deadline, done, total)


def evolve(circuit, deadline=None):
    """Return the final state vector of ``circuit`` applied to ``|0...0>``."""
    return drive(evolve_steps(circuit), deadline)


def probability_vector(circuit, deadline=None):
    state = evolve(circuit, deadline)
    return state.real**2 + state.imag**2


def exact_probabilities(circuit):
    """Map bitstring -> probability, dropping entries below ``1e-12``."""
    probs = probability_vector(circuit)
    n = circuit.num_qubits
    idx = np.flatnonzero(probs >= PRUNE_BELOW)
    return {format(int(i), f"0{n}b"): float(probs[i]) for i in idx}


def uniforms(seed, shots):
    return np.random.default_rng(seed).random(shots)


def cumulative(probs):
    return np.cumsum(probs)


def sample_from_cdf(cdf, u):
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(cdf) - 1)


def sample_indices(probs, u):
    return sample_from_cdf(cumulative(probs), u)


def _require_measured(circuit, shots):
    if not circuit.is_measured:
        raise ContractError("circuit has no terminal measurement")
    if shots < 1:
        raise ParameterError(f"shots must be >= 1, got {shots}")
    if circuit.num_qubits > MAX_QUBITS:
        raise CapacityError(
            f"state-vector backend limited to {MAX_QUBITS} qubits, got {circuit.num_qubits}"
        )


def run_statevector(circuit, shots, seed=0, mode="optimized"):
    """Sample ``shots`` measurement outcomes.

    ``optimized`` evolves once and samples every shot from the same
    distribution; ``naive`` re-simulates the circuit for each shot.
    """
    _require_measured(circuit, shots)
    n = circuit.num_qubits
    u = uniforms(seed, shots)
    if mode == "optimized":
        idx = sample_indices(probability_vector(circuit), u)
    elif mode == "naive":
        idx = np.empty(shots, dtype=np.int64)
        for k in range(shots):
            idx[k] = sample_indices(probability_vector(circuit), u[k : k + 1])[0]
    else:
        raise ParameterError(f"unknown state-vector mode {mode!r}")
    return counts_from_indices(idx, n, shots, {"backend": f"sv_{mode}"})
