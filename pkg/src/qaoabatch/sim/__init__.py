"""Circuit simulation: state-vector and MPS backends, backend selection, batches."""
from .backends import BackendKind, execute, mps, prepare, sv_naive, sv_optimized
from .batch import DEFAULT_CANDIDATES, execute_circuit, parse_policy, run_batch
from .counts import MeasurementCounts
from .mps import MPS, mps_probabilities, run_mps
from .selection import (
    BackendProfile,
    calibrate,
    fit_profile,
    load_profiles,
    save_profiles,
    select_backend_estimated,
    select_backend_timed,
)
from .statevector import exact_probabilities, probability_vector, run_statevector

__all__ = [
    "BackendKind",
    "BackendProfile",
    "DEFAULT_CANDIDATES",
    "MPS",
    "MeasurementCounts",
    "calibrate",
    "exact_probabilities",
    "execute",
    "execute_circuit",
    "fit_profile",
    "load_profiles",
    "mps",
    "mps_probabilities",
    "parse_policy",
    "prepare",
    "probability_vector",
    "run_batch",
    "run_mps",
    "run_statevector",
    "save_profiles",
    "select_backend_estimated",
    "select_backend_timed",
    "sv_naive",
    "sv_optimized",
]
