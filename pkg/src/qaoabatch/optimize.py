"""Variational parameter search in ask/tell form, expectation estimation, and
checkpointing.

Both optimizers minimize, so QAOA objectives are passed in as the negated
expected cut. Parameter vectors are ``[gamma_1..gamma_p, beta_1..beta_p]``.
"""
from __future__ import annotations

import copy
import json
import math
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .circuits import QaoaParams
from .errors import ContractError, IntegrityError, ParameterError, PoisonedPointError

CHECKPOINT_VERSION = 1

NM_REFLECT = 1.0
NM_EXPAND = 2.0
NM_CONTRACT = 0.5
NM_SHRINK = 0.5


def expectation_from_counts(terms, counts):
    """Estimated expected cut: ``sum_w w * P(bits i and j differ)``.

    ``counts`` is a :class:`MeasurementCounts` or any mapping from bitstring to
    a non-negative weight (shot counts or exact probabilities).
    """
    mapping = getattr(counts, "counts", counts)
    if not mapping:
        raise ContractError("cannot estimate an expectation from empty counts")
    keys = list(mapping)
    weights = np.array([mapping[k] for k in keys], dtype=float)
    total = weights.sum()
    if total <= 0:
        raise ContractError("counts carry no weight")
    n = len(keys[0])
    bits = np.frombuffer("".join(keys).encode("ascii"), dtype=np.uint8).reshape(len(keys), n) - 48
    value = 0.0
    for term in terms:
        if term.kind != "zz":
            raise ContractError(f"only zz terms can be estimated from Z-basis counts, got {term.tag}")
        i, j = term.qubits
        if max(i, j) >= n:
            raise ContractError(f"term {term.tag} needs {max(i, j) + 1} bits, counts have {n}")
        value += term.coefficient * float(weights[bits[:, i] != bits[:, j]].sum()) / total
    return value


@dataclass
class OptimizerState:
    method: str  # "monte_carlo" or "nelder_mead"
    p: int
    rng_state: dict
    max_iterations: int
    samples: int = 0
    iteration: int = 0
    evaluated: list = field(default_factory=list)  # [[vector, value], ...]
    best: list | None = None  # [vector, value]
    pending: list = field(default_factory=list)
    simplex: list | None = None  # [[vector, value], ...], sorted ascending
    phase: str = ""
    aux: dict = field(default_factory=dict)
    tolerance: float = 1e-4
    converged: bool = False

    @property
    def done(self):
        return self.converged or self.iteration >= self.max_iterations

    def pending_params(self):
        return [QaoaParams.from_vector(v) for v in self.pending]

    def best_params(self):
        return None if self.best is None else QaoaParams.from_vector(self.best[0])


def _record(state, points, values):
    if len(values) != len(points):
        raise ParameterError(f"expected {len(points)} objective values, got {len(values)}")
    values = [float(v) for v in values]
    for x, v in zip(points, values):
        if math.isnan(v):
            raise PoisonedPointError(QaoaParams.from_vector(x))
        state.evaluated.append([list(x), v])
        if state.best is None or v < state.best[1]:
            state.best = [list(x), v]
    return values


# ---------------------------------------------------------------- Monte Carlo


def monte_carlo_init(p, samples, seed=0, max_iterations=1):
    rng = np.random.default_rng(seed)
    return OptimizerState("monte_carlo", p, rng.bit_generator.state, max_iterations, samples=samples)


def monte_carlo_step(state, n_samples=None):
    """Draw ``gamma ~ U[0, 2pi)``, ``beta ~ U[0, pi)`` parameter sets for one batch."""
    n_samples = state.samples if n_samples is None else n_samples
    if n_samples < 1:
        raise ParameterError(f"n_samples must be >= 1, got {n_samples}")
    state = copy.deepcopy(state)
    rng = np.random.default_rng()
    rng.bit_generator.state = state.rng_state
    gammas = rng.uniform(0.0, 2 * math.pi, size=(n_samples, state.p))
    betas = rng.uniform(0.0, math.pi, size=(n_samples, state.p))
    state.rng_state = rng.bit_generator.state
    state.pending = [list(g) + list(b) for g, b in zip(gammas.tolist(), betas.tolist())]
    return state, state.pending_params()


def absorb(state, values):
    """Ingest objective values for ``state.pending`` and advance one iteration."""
    state = copy.deepcopy(state)
    _record(state, state.pending, values)
    state.pending = []
    state.iteration += 1
    return state


# ---------------------------------------------------------------- Nelder-Mead


def nelder_mead_init(x0, step=0.1, max_iterations=100, tolerance=1e-4, seed=0):
    """Start from ``x0`` (``QaoaParams`` or vector); first ask is the ``2p+1`` simplex."""
    vec = x0.to_vector() if isinstance(x0, QaoaParams) else [float(v) for v in x0]
    dim = len(vec)
    points = [list(vec)]
    for i in range(dim):
        pt = list(vec)
        pt[i] += step
        points.append(pt)
    rng = np.random.default_rng(seed)
    state = OptimizerState(
        "nelder_mead", dim // 2 if dim % 2 == 0 else dim, rng.bit_generator.state, max_iterations,
        pending=points, phase="init", tolerance=tolerance,
    )
    return state, [list(pt) for pt in points]


def _sorted_simplex(simplex):
    return sorted(simplex, key=lambda e: e[1])


def _propose(state):
    s = state.simplex = _sorted_simplex(state.simplex)
    if s[-1][1] - s[0][1] < state.tolerance:
        state.converged = True
    if state.done:
        state.pending, state.phase = [], "done"
        return []
    pts = np.array([e[0] for e in s])
    centroid = pts[:-1].mean(axis=0)
    xr = centroid + NM_REFLECT * (centroid - pts[-1])
    state.aux = {"centroid": centroid.tolist()}
    state.phase = "reflect"
    state.pending = [xr.tolist()]
    return [list(state.pending[0])]


def _replace_worst(state, x, v):
    state.simplex[-1] = [list(x), v]
    state.iteration += 1
    return _propose(state)


def _shrink(state):
    best = np.array(state.simplex[0][0])
    state.phase = "shrink"
    state.pending = [(best + NM_SHRINK * (np.array(e[0]) - best)).tolist() for e in state.simplex[1:]]
    return [list(x) for x in state.pending]


def nelder_mead_step(state, values):
    """Tell the values of ``state.pending``; returns ``(state', next points)``.

    An empty list of points means the search has converged (value spread
    below tolerance) or hit ``max_iterations``.
    """
    state = copy.deepcopy(state)
    points = state.pending
    values = _record(state, points, values)
    phase = state.phase
    if phase == "init":
        state.simplex = [[list(x), v] for x, v in zip(points, values)]
        return state, _propose(state)
    if phase == "shrink":
        state.simplex = [state.simplex[0]] + [[list(x), v] for x, v in zip(points, values)]
        state.iteration += 1
        return state, _propose(state)
    if phase == "done":
        return state, []

    c = np.array(state.aux["centroid"])
    worst = np.array(state.simplex[-1][0])
    f_best, f_second, f_worst = state.simplex[0][1], state.simplex[-2][1], state.simplex[-1][1]
    x, fx = points[0], values[0]
    if phase == "reflect":
        if f_best <= fx < f_second:
            return state, _replace_worst(state, x, fx)
        if fx < f_best:
            xe = c + NM_EXPAND * (np.array(x) - c)
            state.aux.update(xr=list(x), fr=fx)
            state.phase, state.pending = "expand", [xe.tolist()]
        elif fx < f_worst:
            xc = c + NM_CONTRACT * (np.array(x) - c)
            state.aux.update(fr=fx)
            state.phase, state.pending = "contract_out", [xc.tolist()]
        else:
            xc = c + NM_CONTRACT * (worst - c)
            state.phase, state.pending = "contract_in", [xc.tolist()]
        return state, [list(state.pending[0])]
    if phase == "expand":
        if fx < state.aux["fr"]:
            return state, _replace_worst(state, x, fx)
        return state, _replace_worst(state, state.aux["xr"], state.aux["fr"])
    if phase == "contract_out":
        if fx <= state.aux["fr"]:
            return state, _replace_worst(state, x, fx)
        return state, _shrink(state)
    if phase == "contract_in":
        if fx < f_worst:
            return state, _replace_worst(state, x, fx)
        return state, _shrink(state)
    raise ParameterError(f"unknown Nelder-Mead phase {phase!r}")  # pragma: no cover


def minimize(objective, state, first_points=None):
    """Drive ``state`` to completion against a plain callable (vector -> float)."""
    points = first_points if first_points is not None else list(state.pending)
    while True:
        if state.method == "monte_carlo":
            if state.done:
                return state
            state, params = monte_carlo_step(state)
            state = absorb(state, [objective(p.to_vector()) for p in params])
        else:
            if not points:
                return state
            state, points = nelder_mead_step(state, [objective(x) for x in points])


# ---------------------------------------------------------------- checkpoints


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def checkpoint(state):
    """Serialize to versioned JSON with a CRC32 over the canonical state encoding."""
    body = asdict(state)
    crc = zlib.crc32(_canonical(body).encode())
    return _canonical({"version": CHECKPOINT_VERSION, "crc32": crc, "state": body}).encode()


def restore(blob):
    try:
        doc = json.loads(blob)
        body = doc["state"]
        crc = doc["crc32"]
        version = doc["version"]
    except (ValueError, KeyError, TypeError) as exc:
        raise IntegrityError(f"checkpoint is not decodable: {exc}") from None
    if version != CHECKPOINT_VERSION:
        raise IntegrityError(f"unsupported checkpoint version {version!r}")
    if zlib.crc32(_canonical(body).encode()) != crc:
        raise IntegrityError("checkpoint checksum mismatch")
    try:
        return OptimizerState(**body)
    except TypeError as exc:
        raise IntegrityError(f"checkpoint fields do not match: {exc}") from None


def save_checkpoint(path, state):
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(checkpoint(state))
    tmp.replace(path)


def load_checkpoint(path):
    return restore(Path(path).read_bytes())
