"""Executors with one interface: in-process (:class:`LocalExecutor`) or remote
(:class:`GatewayClient`).

Both accept ``(qasm, shots)`` pairs, fix circuit ``i``'s seed to ``seed ^ i``
at submission, and return per-circuit :class:`MeasurementCounts` ordered by
circuit id, so the two are interchangeable in a workflow.
"""
from __future__ import annotations

import time

from ..errors import JobNotFound, PayloadTooLarge, QaoaBatchError, SubmissionError
from ..sim.counts import MeasurementCounts
from . import transport
from .gateway import Gateway, submission
from .jobs import TERMINAL
from .worker import run_slot


class JobFailed(QaoaBatchError):
    def __init__(self, job_id, errors):
        self.job_id = job_id
        self.errors = errors
        super().__init__(f"job {job_id} failed for {len(errors)} circuit(s): "
                         f"{next(iter(errors.values()), '')}")


def _decode(doc):
    return {cid: MeasurementCounts.from_dict(r) for cid, r in doc["results"].items()}


class _Executor:
    def run(self, circuits, seed=0, policy="sv_optimized", timeout=600.0):
        """Submit, wait, and return counts in submission order."""
        circuits = list(circuits)
        if not circuits:
            return []
        job_id = self.submit(circuits, seed=seed, policy=policy)
        self.wait(job_id, timeout)
        doc = self.results_doc(job_id)
        if doc["errors"]:
            raise JobFailed(job_id, doc["errors"])
        res = _decode(doc)
        return [res[cid] for cid in sorted(res)]

    def results(self, job_id):
        return _decode(self.results_doc(job_id))


class LocalExecutor(_Executor):
    """Runs every submission synchronously in-process with the worker's code path."""

    def __init__(self):
        self.gateway = Gateway()

    def submit(self, circuits, seed=0, policy="sv_optimized", idempotency_key=None, metadata=None):
        job_id = self.gateway.submit(submission(circuits, seed, policy, idempotency_key, metadata))
        store = self.gateway.store
        job = store.get(job_id)
        if job.status in TERMINAL:
            return job_id
        for slot in job.slots.values():
            item = {"circuit_id": slot.circuit_id, "qasm": slot.qasm, "shots": slot.shots, "seed": slot.seed}
            reply = run_slot(item, job.policy)
            if "error" in reply:
                store.update_slot(job_id, slot.circuit_id, status="failed", error=reply["error"], attempts=1)
            else:
                counts = MeasurementCounts.from_dict(reply)
                store.update_slot(job_id, slot.circuit_id, status="complete", result=counts.to_dict(),
                                  attempts=1)
        return job_id

    def status(self, job_id):
        return self.gateway.status(job_id)

    def results_doc(self, job_id):
        return self.gateway.results(job_id)

    def wait(self, job_id, timeout=None):
        return self.status(job_id)


class GatewayClient(_Executor):
    def __init__(self, url, timeout=30.0, poll=0.05):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.poll = poll

    def _call(self, method, path, body=None):
        try:
            return transport.request(method, self.url + path, body, self.timeout)
        except transport.RemoteError as exc:
            kind, msg, ids = exc.doc.get("error"), exc.doc.get("message", str(exc)), exc.doc.get("circuit_ids", [])
            if exc.status == 404 and kind == "JobNotFound":
                raise JobNotFound(path.split("/")[2]) from None
            if exc.status == 413:
                raise PayloadTooLarge(msg, ids) from None
            if kind == "SubmissionError":
                raise SubmissionError(msg, ids) from None
            raise

    def submit(self, circuits, seed=0, policy="sv_optimized", idempotency_key=None, metadata=None):
        doc = submission(circuits, seed, policy, idempotency_key, metadata)
        return self._call("POST", "/jobs", doc)["job_id"]

    def status(self, job_id):
        return self._call("GET", f"/jobs/{job_id}")

    def results_doc(self, job_id):
        return self._call("GET", f"/jobs/{job_id}/results")

    def health(self):
        return self._call("GET", "/healthz")

    def wait(self, job_id, timeout=600.0):
        deadline = time.monotonic() + timeout
        while True:
            snap = self.status(job_id)
            if snap["status"] in TERMINAL:
                return snap
            if time.monotonic() > deadline:
                raise TimeoutError(f"job {job_id} still {snap['status']} after {timeout} s")
            time.sleep(self.poll)
