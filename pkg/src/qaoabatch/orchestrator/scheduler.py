"""Least-loaded assignment of circuits to workers, grouped into rounds."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigurationError
from ..qasm import parse
from ..sim.selection import select_backend_estimated
from .jobs import decompress_qasm


@dataclass(frozen=True)
class Assignment:
    circuit_id: str
    worker_id: str
    round: int
    cost: float


def circuit_cost(qasm, shots, profiles=None):
    """Predicted runtime from calibrated profiles when available, else gate count."""
    ir = parse(qasm)
    if profiles:
        kind = select_backend_estimated(ir, shots, profiles)
        prof = next(p for p in profiles if p.backend == kind)
        return prof.predict(ir.num_qubits, ir.gate_count, shots)
    return float(ir.gate_count)


def slot_cost(slot, profiles=None):
    if profiles:
        return circuit_cost(decompress_qasm(slot.qasm), slot.shots, profiles)
    return slot.cost


def schedule(items, workers, base_load=None):
    """Assign ``(circuit_id, cost)`` items to workers.

    Items are taken in descending cost (ties by circuit id) and each goes to
    the worker with the smallest projected load per unit capacity, ties by
    worker order. The k-th circuit on a worker of capacity c runs in round
    ``k // c``. ``workers`` is a sequence of ``(worker_id, capacity)``;
    ``base_load`` optionally seeds the loads with work already in flight.
    """
    workers = list(workers)
    if not workers:
        raise ConfigurationError("no live workers to schedule on")
    load = {w: float((base_load or {}).get(w, 0.0)) for w, _ in workers}
    count = {w: 0 for w, _ in workers}
    plan = []
    for cid, cost in sorted(items, key=lambda it: (-it[1], it[0])):
        wid, cap = min(workers, key=lambda wc: (load[wc[0]] + cost) / wc[1])
        plan.append(Assignment(cid, wid, count[wid] // cap, cost))
        load[wid] += cost
        count[wid] += 1
    return plan


def loads(plan):
    out = {}
    for a in plan:
        out[a.worker_id] = out.get(a.worker_id, 0) + 1
    return out
