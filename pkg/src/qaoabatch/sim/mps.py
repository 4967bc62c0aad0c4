"""Matrix product state simulation with bounded bond dimension.

Each site tensor has legs ``(left, physical, right)``. The state keeps a
single orthogonality center; two-site gates move the center onto the gate
before the SVD so truncation is optimal in the 2-norm. Gates on
non-neighbouring qubits are routed by swapping the far qubit next to the
near one and back.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import ContractError, NumericError, ParameterError
from .counts import counts_from_indices
from .statevector import drive, uniforms

_SV_CUTOFF = 1e-14

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def _rx(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def single_qubit_matrix(gate, angle):
    if gate == "h":
        return _H
    if gate == "x":
        return _X
    if gate == "rx":
        return _rx(angle)
    if gate == "rz":
        return _rz(angle)
    raise ParameterError(f"not a single-qubit gate: {gate}")


def _svd(m):
    """Thin SVD. LAPACK's divide-and-conquer driver occasionally fails to
    converge on nearly rank-deficient input; the transpose or a rescaled copy
    almost always goes through."""
    for scale in (1.0, 3.0, 1.0 / 3.0):
        try:
            u, s, vh = np.linalg.svd(m * scale, full_matrices=False)
            return u, s / scale, vh
        except np.linalg.LinAlgError:
            pass
        try:
            a, s, b = np.linalg.svd(m.T * scale, full_matrices=False)
            return b.T, s / scale, a.T
        except np.linalg.LinAlgError:
            pass
    raise NumericError("SVD did not converge")


class MPS:
    """Open-boundary MPS over qubits, initialised to ``|0...0>``."""

    def __init__(self, num_qubits, max_bond):
        if max_bond < 1:
            raise ParameterError(f"max_bond must be >= 1, got {max_bond}")
        self.n = num_qubits
        self.max_bond = int(max_bond)
        zero = np.zeros((1, 2, 1), dtype=complex)
        zero[0, 0, 0] = 1.0
        self.tensors = [zero.copy() for _ in range(num_qubits)]
        self.center = 0
        self.truncation_loss = 0.0

    @property
    def bond_dims(self):
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self):
        other = MPS.__new__(MPS)
        other.n, other.max_bond = self.n, self.max_bond
        other.tensors = [t.copy() for t in self.tensors]
        other.center, other.truncation_loss = self.center, self.truncation_loss
        return other

    def move_center(self, site):
        t = self.tensors
        while self.center < site:
            c = self.center
            a = t[c]
            q, r = np.linalg.qr(a.reshape(a.shape[0] * 2, a.shape[2]))
            t[c] = q.reshape(a.shape[0], 2, q.shape[1])
            t[c + 1] = np.tensordot(r, t[c + 1], axes=(1, 0))
            self.center += 1
        while self.center > site:
            c = self.center
            a = t[c]
            q, r = np.linalg.qr(a.reshape(a.shape[0], 2 * a.shape[2]).T)
            t[c] = q.T.reshape(q.shape[1], 2, a.shape[2])
            t[c - 1] = np.tensordot(t[c - 1], r.T, axes=(2, 0))
            self.center -= 1

    def apply_single(self, u, site):
        self.tensors[site] = np.einsum("ij,ajb->aib", u, self.tensors[site])

    def apply_adjacent(self, u4, site):
        """Apply a 4x4 gate to ``(site, site + 1)`` (``site`` is the high bit of the gate index)."""
        self.move_center(site)
        a, b = self.tensors[site], self.tensors[site + 1]
        chi_l, chi_r = a.shape[0], b.shape[2]
        theta = np.tensordot(a, b, axes=(2, 0)).reshape(chi_l, 4, chi_r)
        theta = np.einsum("ij,ajb->aib", u4, theta).reshape(chi_l * 2, 2 * chi_r)
        uu, s, vh = _svd(theta)
        keep = int(np.count_nonzero(s > _SV_CUTOFF * s[0])) if s[0] > 0 else 1
        keep = max(1, min(keep, self.max_bond))
        total = float(np.sum(s**2))
        kept = float(np.sum(s[:keep] ** 2))
        if keep < len(s) and total > 0:
            self.truncation_loss += (total - kept) / total
        s = s[:keep]
        if kept > 0:
            s = s * math.sqrt(total / kept)
        self.tensors[site] = uu[:, :keep].reshape(chi_l, 2, keep)
        self.tensors[site + 1] = (s[:, None] * vh[:keep]).reshape(keep, 2, chi_r)
        self.center = site + 1

    def apply_two(self, u4, q0, q1):
        """Apply ``u4`` with ``q0`` as the high bit of its index, routing with swaps."""
        if q0 > q1:
            q0, q1 = q1, q0
            u4 = _SWAP @ u4 @ _SWAP
        for k in range(q1 - 1, q0, -1):
            self.apply_adjacent(_SWAP, k)
        self.apply_adjacent(u4, q0)
        for k in range(q0 + 1, q1):
            self.apply_adjacent(_SWAP, k)

    def apply_circuit_steps(self, circuit):
        """Apply ``circuit`` gate by gate, yielding ``(done, total, self)``.

        Progress is counted in adjacent two-site updates, the dominant cost.
        """
        work = np.cumsum([2 * abs(q[1] - q[0]) - 1 if len(q) == 2 else 0.05 for _, q, _ in circuit.ops])
        total = float(work[-1]) if len(work) else 0.0
        for k, (gate, qubits, angle) in enumerate(circuit.ops):
            if gate == "cx":
                self.apply_two(_CX, *qubits)
            elif gate == "cz":
                self.apply_two(_CZ, *qubits)
            else:
                self.apply_single(single_qubit_matrix(gate, angle), qubits[0])
            yield float(work[k]), total, self
        return self

    def apply_circuit(self, circuit, deadline=None):
        return drive(self.apply_circuit_steps(circuit), deadline)

    def norm_squared(self):
        self.move_center(0)
        return float(np.sum(np.abs(self.tensors[0]) ** 2))

    def to_statevector(self):
        psi = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            psi = np.tensordot(psi, t, axes=(1, 0)).reshape(-1, t.shape[2])
        return psi.reshape(-1)

    def sample_indices(self, u):
        """Sequential conditional sampling, one uniform per shot, all shots at once.

        Walking the qubits in order with an unnormalised running prefix keeps
        the draw an inverse-CDF lookup over basis indices, so results match the
        state-vector sampler for the same uniforms. The MPS itself is not
        modified beyond a canonical-form shift.
        """
        norm2 = self.norm_squared()
        shots = len(u)
        target = np.asarray(u) * norm2
        env = np.ones((shots, 1), dtype=complex)
        cum = np.zeros(shots)
        idx = np.zeros(shots, dtype=np.int64)
        rows = np.arange(shots)
        for t in self.tensors:
            w = np.einsum("sa,abc->sbc", env, t)
            p0 = np.sum(w[:, 0, :].real ** 2 + w[:, 0, :].imag ** 2, axis=1)
            bit = (target >= cum + p0).astype(np.int64)
            cum += np.where(bit == 1, p0, 0.0)
            idx = idx * 2 + bit
            env = w[rows, bit, :]
        return idx


def run_mps(circuit, shots, seed=0, max_bond=64):
    """Evolve once as an MPS, then sample every shot from the retained state."""
    if not circuit.is_measured:
        raise ContractError("circuit has no terminal measurement")
    if shots < 1:
        raise ParameterError(f"shots must be >= 1, got {shots}")
    state = MPS(circuit.num_qubits, max_bond).apply_circuit(circuit)
    idx = state.sample_indices(uniforms(seed, shots))
    meta = {
        "backend": f"mps({max_bond})",
        "truncation_loss": state.truncation_loss,
        "max_bond_used": max(state.bond_dims, default=1),
    }
    return counts_from_indices(idx, circuit.num_qubits, shots, meta)


def mps_probabilities(circuit, max_bond):
    psi = MPS(circuit.num_qubits, max_bond).apply_circuit(circuit).to_statevector()
    return psi.real**2 + psi.imag**2
