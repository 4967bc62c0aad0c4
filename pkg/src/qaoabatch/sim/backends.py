"""Backend kinds and a uniform prepare-then-sample interface over them."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..errors import CapacityError, ContractError, ParameterError
from . import statevector as sv
from .counts import counts_from_indices
from .mps import MPS

SV_OPTIMIZED = "sv_optimized"
SV_NAIVE = "sv_naive"
MPS_NAME = "mps"

_MPS_RE = re.compile(r"^mps\((\d+)\)$")


@dataclass(frozen=True)
class BackendKind:
    name: str
    max_bond: int | None = None

    def __post_init__(self):
        if self.name not in (SV_OPTIMIZED, SV_NAIVE, MPS_NAME):
            raise ParameterError(f"unknown backend {self.name!r}")
        if self.name == MPS_NAME:
            if self.max_bond is None or self.max_bond < 1:
                raise ParameterError("mps backend needs max_bond >= 1")
        elif self.max_bond is not None:
            raise ParameterError(f"{self.name} takes no max_bond")

    def __str__(self):
        return f"mps({self.max_bond})" if self.name == MPS_NAME else self.name

    @classmethod
    def parse(cls, text):
        if isinstance(text, BackendKind):
            return text
        m = _MPS_RE.match(text.strip())
        if m:
            return cls(MPS_NAME, int(m.group(1)))
        return cls(text.strip())


def sv_optimized():
    return BackendKind(SV_OPTIMIZED)


def sv_naive():
    return BackendKind(SV_NAIVE)


def mps(max_bond=64):
    return BackendKind(MPS_NAME, max_bond)


# incremented by every prepare(); tests use it to count backend executions
EXECUTIONS = {"count": 0}


class Prepared:
    """A circuit made ready to sample on one backend.

    ``payload`` is the cumulative distribution for ``sv_optimized``, the MPS
    for ``mps`` and nothing for ``sv_naive``.
    """

    def __init__(self, kind, circuit, payload):
        self.kind = kind
        self.circuit = circuit
        self.payload = payload

    def sample_indices(self, u, deadline=None):
        name = self.kind.name
        if name == SV_OPTIMIZED:
            return sv.sample_from_cdf(self.payload, u)
        if name == MPS_NAME:
            return self.payload.sample_indices(u)
        out = np.empty(len(u), dtype=np.int64)
        for k in range(len(u)):
            probs = sv.probability_vector(self.circuit, deadline)
            out[k] = sv.sample_indices(probs, u[k : k + 1])[0]
        return out

    def sample(self, shots, seed, deadline=None):
        idx = self.sample_indices(sv.uniforms(seed, shots), deadline)
        meta = {"backend": str(self.kind)}
        if self.kind.name == MPS_NAME:
            meta["truncation_loss"] = self.payload.truncation_loss
        return counts_from_indices(idx, self.circuit.num_qubits, shots, meta)


def prepare_steps(kind, circuit):
    """Generator form of :func:`prepare`.

    Yields ``(done, total, state)`` while the state evolves and returns the
    :class:`Prepared`. For ``sv_naive`` the steps are one evolution, the
    cost of a single shot.
    """
    EXECUTIONS["count"] += 1
    if not circuit.is_measured:
        raise ContractError("circuit has no terminal measurement")
    if kind.name == MPS_NAME:
        state = yield from MPS(circuit.num_qubits, kind.max_bond).apply_circuit_steps(circuit)
        state.move_center(0)
        return Prepared(kind, circuit, state)
    state = yield from sv.evolve_steps(circuit)
    if kind.name == SV_NAIVE:
        return Prepared(kind, circuit, None)
    return Prepared(kind, circuit, sv.cumulative(state.real**2 + state.imag**2))


def prepare(kind, circuit, deadline=None):
    """Run the expensive part once: evolve the state (optimized backends only)."""
    if kind.name == SV_NAIVE:
        EXECUTIONS["count"] += 1
        if not circuit.is_measured:
            raise ContractError("circuit has no terminal measurement")
        if circuit.num_qubits > sv.MAX_QUBITS:
            raise CapacityError(
                f"state-vector backend limited to {sv.MAX_QUBITS} qubits, got {circuit.num_qubits}"
            )
        return Prepared(kind, circuit, None)
    return sv.drive(prepare_steps(kind, circuit), deadline)


def execute(kind, circuit, shots, seed):
    if shots < 1:
        raise ParameterError(f"shots must be >= 1, got {shots}")
    return prepare(kind, circuit).sample(shots, seed)
