"""Job orchestration: gateway, workers, scheduling, and the end-to-end workflow."""
from .client import GatewayClient, JobFailed, LocalExecutor
from .config import GatewayConfig, WorkerConfig, load_config
from .gateway import Gateway, GatewayServer, submission
from .jobs import BatchJob, CircuitSlot, JobStore, WorkerRecord, build_job, compress_qasm, decompress_qasm
from .scheduler import Assignment, circuit_cost, schedule
from .worker import Worker
from .workflow import OptimizerConfig, run_workflow

__all__ = [
    "Assignment",
    "BatchJob",
    "CircuitSlot",
    "Gateway",
    "GatewayClient",
    "GatewayConfig",
    "GatewayServer",
    "JobFailed",
    "JobStore",
    "LocalExecutor",
    "OptimizerConfig",
    "Worker",
    "WorkerConfig",
    "WorkerRecord",
    "build_job",
    "circuit_cost",
    "compress_qasm",
    "decompress_qasm",
    "load_config",
    "run_workflow",
    "schedule",
    "submission",
]
