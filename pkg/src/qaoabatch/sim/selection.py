"""Automatic backend selection.

Two strategies:

* timed trial: race a one-shot run of every candidate, time a short sampling
  burst, and extrapolate each candidate's total cost for the requested shot
  count;
* estimated: evaluate a calibrated complexity model, without executing
  anything.

Runtime models (``G`` gates, ``S`` shots, ``chi = min(max_bond, 2**(n//2))``)::

    sv_optimized   c * 2**n * G + s * (2**n + S)
    sv_naive       S * (c * 2**n * G + s * 2**n)
    mps            c * G * chi**3 + s * S * n * chi**2

The constants ``c`` and ``s`` are fitted in log space with the exponents held
fixed. Circuit topology beyond the gate count is ignored on purpose.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..errors import CalibrationError, ConfigurationError, QaoaBatchError, SelectionError
from . import statevector as sv
from .backends import MPS_NAME, SV_NAIVE, SV_OPTIMIZED, BackendKind, prepare, prepare_steps

BURST_SHOTS = 64
CALIBRATION_SHOTS = 1000
CALIBRATION_SIZES = (4, 8, 12, 16)
# fractions of a trial's work at which the sampling cost is re-measured
PROBE_AT = (0.01, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75)
# the gate rate is refreshed over windows of this fraction of the work
RATE_WINDOW = 0.02
COMMIT_AT = 0.05


def chi_eff(kind, n):
    return min(kind.max_bond, 2 ** (n // 2))


def evolve_feature(kind, n, gates):
    if kind.name == MPS_NAME:
        return gates * chi_eff(kind, n) ** 3
    return (2.0**n) * gates


def sample_feature(kind, n, shots):
    if kind.name == MPS_NAME:
        return shots * n * chi_eff(kind, n) ** 2
    if kind.name == SV_NAIVE:
        return 2.0**n
    return 2.0**n + shots


@dataclass(frozen=True)
class BackendProfile:
    backend: BackendKind
    evolve: float
    sample: float
    calibrated_at: str = ""

    def __post_init__(self):
        if not (self.evolve > 0 and self.sample > 0):
            raise CalibrationError(f"profile constants must be positive for {self.backend}")

    def predict(self, n, gates, shots):
        k = self.backend
        t = self.evolve * evolve_feature(k, n, gates) + self.sample * sample_feature(k, n, shots)
        return shots * t if k.name == SV_NAIVE else t

    def to_dict(self):
        return {
            "backend": str(self.backend),
            "constants": {"evolve": self.evolve, "sample": self.sample},
            "calibrated_at": self.calibrated_at,
        }

    @classmethod
    def from_dict(cls, data):
        c = data["constants"]
        return cls(BackendKind.parse(data["backend"]), float(c["evolve"]), float(c["sample"]),
                   data.get("calibrated_at", ""))


def dumps_profiles(profiles):
    doc = {"version": 1, "profiles": [p.to_dict() for p in profiles]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_profiles(path, profiles):
    Path(path).write_text(dumps_profiles(profiles))


def load_profiles(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != 1:
        raise ConfigurationError(f"unsupported profile file version {doc.get('version')!r}")
    return [BackendProfile.from_dict(p) for p in doc["profiles"]]


def fit_log_constant(features, times):
    """Intercept of ``log t = log c + log feature`` (slope fixed at 1).

    Residuals are weighted by runtime: the tiny circuits are dominated by
    interpreter overhead rather than the modelled cost, and the expensive ones
    are what a batch's total time depends on.
    """
    if len(features) < 3:
        raise CalibrationError(f"need at least 3 timing points, got {len(features)}")
    f = np.asarray(features, dtype=float)
    t = np.maximum(np.asarray(times, dtype=float), 1e-9)
    return float(np.exp(np.average(np.log(t) - np.log(f), weights=t)))


def fit_profile(kind, samples, calibrated_at=""):
    """Fit a profile from ``(n, gates, shots, t_evolve, t_sample)`` records."""
    samples = list(samples)
    c = fit_log_constant([evolve_feature(kind, s[0], s[1]) for s in samples], [s[3] for s in samples])
    # naive sampling cost per shot is one CDF build, the same measurement as sv_optimized
    s_feat = [
        (2.0 ** s[0] + s[2]) if kind.name == SV_NAIVE else sample_feature(kind, s[0], s[2])
        for s in samples
    ]
    s = fit_log_constant(s_feat, [x[4] for x in samples])
    return BackendProfile(kind, c, s, calibrated_at)


def micro_suite(seed=0, sizes=CALIBRATION_SIZES):
    """Deterministic QAOA-shaped calibration circuits of varied width and gate count."""
    from ..circuits import QaoaParams, build_circuit
    from ..graph import gnp_graph

    rng = np.random.default_rng(seed)
    out = []
    for n in sizes:
        for density in (2.0, 4.0):
            for p in (1, 2):
                g = gnp_graph(n, min(1.0, density / max(n - 1, 1)), int(rng.integers(2**31)))
                params = QaoaParams(tuple(rng.uniform(0, 2 * math.pi, p)), tuple(rng.uniform(0, math.pi, p)))
                out.append(build_circuit(g, params))
    return out


def _time(fn):
    t0 = time.perf_counter()
    out = fn()
    return time.perf_counter() - t0, out


def measure(kind, circuit, shots=CALIBRATION_SHOTS):
    """Return ``(t_evolve, t_sample)`` for one circuit on one backend."""
    prep_kind = BackendKind(SV_OPTIMIZED) if kind.name == SV_NAIVE else kind
    t_evolve, prepared = _time(lambda: prepare(prep_kind, circuit))
    if kind.name == SV_NAIVE:
        # one CDF build plus the lookups, the per-shot cost of a naive run
        t_sample, _ = _time(lambda: sv.sample_from_cdf(sv.cumulative(prepared.payload), sv.uniforms(0, shots)))
    else:
        t_sample, _ = _time(lambda: prepared.sample_indices(sv.uniforms(0, shots)))
    return t_evolve, t_sample


def calibrate(backends, seed=0, sizes=CALIBRATION_SIZES, shots=CALIBRATION_SHOTS):
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    suite = micro_suite(seed, sizes)
    profiles = []
    for kind in backends:
        kind = BackendKind.parse(kind)
        records = []
        for circuit in suite:
            t_e, t_s = measure(kind, circuit, shots)
            records.append((circuit.num_qubits, circuit.gate_count, shots, t_e, t_s))
        profiles.append(fit_profile(kind, records, stamp))
    return profiles


def select_backend_estimated(circuit, shots, profiles):
    """Pure lookup: argmin of predicted runtime, first profile wins ties."""
    if not profiles:
        raise ConfigurationError("estimated selection needs at least one calibrated profile")
    n, gates = circuit.num_qubits, circuit.gate_count
    best, best_t = None, math.inf
    for prof in profiles:
        if prof.backend.name != MPS_NAME and n > sv.MAX_QUBITS:
            continue
        t = prof.predict(n, gates, shots)
        if t < best_t:
            best, best_t = prof.backend, t
    if best is None:
        raise ConfigurationError(f"no profiled backend can run {n} qubits")
    return best


class _Runner:
    """One candidate's trial, advanced a gate at a time.

    Besides the evolution itself it keeps a projection of the candidate's
    total cost: the remaining work at the most recent gate rate, plus a
    sampling cost measured by drawing a small burst from the partially
    evolved state (the sampling cost depends on the state's size and, for
    MPS, its bond dimensions, not on its amplitudes).

    A state vector costs the same per gate throughout, so its projection is
    an estimate. An MPS gets more expensive as entanglement builds up, so
    its projection only bounds the cost from below.
    """

    def __init__(self, kind, circuit, shots, seed):
        self.kind, self.shots, self.seed = kind, shots, seed
        self.naive = kind.name == SV_NAIVE
        self.steady = kind.name != MPS_NAME
        self.steps = prepare_steps(kind, circuit)
        self.elapsed = 0.0
        self.done = self.total = 0
        self.mark = (0.0, 0.0)
        self.rate = None
        self.probes = 0
        self.sample_fixed = self.sample_shot = None
        self.prepared = self.prediction = None
        self.state = None

    def projection(self):
        if self.prediction is not None:
            return self.prediction
        if self.sample_shot is None:
            return None
        evolve = self.elapsed + (self.total - self.done) * self.rate
        if self.naive:
            return self.shots * (evolve + self.sample_fixed + self.sample_shot)
        return evolve + self.sample_fixed + self.shots * self.sample_shot

    def lower_bound(self):
        p = self.projection()
        if p is not None:
            return p
        return self.shots * self.elapsed if self.naive else self.elapsed

    @property
    def fraction(self):
        return self.done / self.total if self.total else 0.0

    def step(self):
        """Advance one gate; return True once the trial has finished."""
        t0 = time.perf_counter()
        try:
            self.done, self.total, self.state = next(self.steps)
        except StopIteration as stop:
            self.elapsed += time.perf_counter() - t0
            self._finish(stop.value)
            return True
        self.elapsed += time.perf_counter() - t0
        e0, d0 = self.mark
        if self.probes < len(PROBE_AT) and self.done >= PROBE_AT[self.probes] * self.total:
            self.probes += 1
            self._probe()
        elif self.done - d0 < RATE_WINDOW * self.total:
            return False
        self.rate = (self.elapsed - e0) / max(self.done - d0, 1e-12)
        self.mark = (self.elapsed, self.done)
        return False

    def _probe(self):
        u = sv.uniforms(self.seed, BURST_SHOTS)
        if self.kind.name == MPS_NAME:
            self.sample_fixed = 0.0
            self.sample_shot = _time(lambda: self.state.sample_indices(u))[0] / BURST_SHOTS
        elif self.sample_shot is None:
            a = self.state
            self.sample_fixed, cdf = _time(lambda: sv.cumulative(a.real**2 + a.imag**2))
            self.sample_shot = _time(lambda: sv.sample_from_cdf(cdf, u))[0] / BURST_SHOTS

    def _finish(self, prepared):
        self.prepared = prepared
        if self.naive:
            a = self.state
            t, _ = _time(lambda: sv.sample_indices(a.real**2 + a.imag**2, sv.uniforms(self.seed, 1)))
            self.prediction = self.shots * (self.elapsed + t)
            return
        t, _ = _time(lambda: prepared.sample_indices(sv.uniforms(self.seed, 1)))
        t1 = self.elapsed + t
        if self.shots == 1:
            self.prediction = t1
            return
        t_burst, _ = _time(lambda: prepared.sample_indices(sv.uniforms(self.seed, BURST_SHOTS)))
        self.prediction = t1 + (self.shots - 1) * t_burst / BURST_SHOTS


def timed_trial(circuit, shots, candidates, seed=0):
    """Run the timed selection and return ``(kind, prepared_state, predictions)``.

    Every candidate starts a one-shot trial. On a single core the trials are
    raced: the candidate with the lowest projected (or, before it has one,
    elapsed) cost advances next, and a candidate is dropped once that cost
    exceeds a finished candidate's prediction or the projection of a
    state-vector candidate at least ``COMMIT_AT`` of the way through. The winner's
    evolved state is returned for reuse. ``predictions`` holds the finished
    candidates' extrapolated totals.
    """
    if not candidates:
        raise ConfigurationError("timed selection needs at least one candidate")
    causes = {}
    active = [_Runner(BackendKind.parse(k), circuit, shots, seed) for k in candidates]
    finished = []
    while active:
        bar = min((r.prediction for r in finished), default=math.inf)
        for r in active:
            if r.steady and r.fraction >= COMMIT_AT and r.projection() is not None:
                bar = min(bar, r.projection())
        keep = []
        for r in active:
            if r.lower_bound() > bar:
                causes[str(r.kind)] = "abandoned: cannot beat the current best"
            else:
                keep.append(r)
        active = keep
        if not active:
            break
        runner = min(active, key=_Runner.lower_bound)
        try:
            if runner.step():
                finished.append(runner)
                active.remove(runner)
        except QaoaBatchError as exc:
            causes[str(runner.kind)] = str(exc)
            active.remove(runner)
    if not finished:
        raise SelectionError(causes)
    best = min(finished, key=lambda r: r.prediction)
    return best.kind, best.prepared, {str(r.kind): r.prediction for r in finished}


def select_backend_timed(circuit, shots, candidates, seed=0):
    return timed_trial(circuit, shots, candidates, seed)[0]
