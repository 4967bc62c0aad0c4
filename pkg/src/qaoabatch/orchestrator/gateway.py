"""The gateway: job intake, scheduling, push dispatch to workers, result collection.

All job-state mutation happens under the store lock (single writer); network
calls to workers are made outside it.
"""
from __future__ import annotations

import logging
import threading
import time
import uuid

from ..errors import ConfigurationError, ContractError, QaoaBatchError, SubmissionError
from ..sim.counts import MeasurementCounts
from ..sim.selection import load_profiles
from . import transport
from .config import GatewayConfig
from .jobs import (
    COMPLETE, FAILED, QUEUED, RUNNING, TERMINAL, JobStore, WorkerRecord, build_job, circuit_id,
    compress_qasm,
)
from .scheduler import schedule, slot_cost

log = logging.getLogger(__name__)

MAX_BACKOFF = 2.0


class Gateway:
    def __init__(self, config=None, store=None, clock=time.monotonic):
        self.config = config or GatewayConfig()
        self.store = store or JobStore(self.config.journal)
        self.profiles = load_profiles(self.config.profiles) if self.config.profiles else None
        self.clock = clock
        self.workers = {}
        self.inflight = {}  # worker_id -> {(job_id, circuit_id): cost}
        self.completed_by = {}  # worker_id -> number of results accepted
        self._wake = threading.Event()
        self._stop = threading.Event()
        self._thread = None
        self._backoff = 0.0

    # ------------------------------------------------------------ jobs

    def submit(self, doc):
        key = doc.get("idempotency_key")
        with self.store.lock:
            if key and key in self.store.idempotency:
                return self.store.idempotency[key]
        job = build_job(doc)
        job_id = self.store.add(job, key)
        self._wake.set()
        return job_id

    def status(self, job_id):
        with self.store.lock:
            return self.store.get(job_id).snapshot()

    def results(self, job_id):
        with self.store.lock:
            job = self.store.get(job_id)
            return {
                "version": 1,
                "job_id": job_id,
                "status": job.status,
                "results": {cid: job.slots[cid].result for cid in sorted(job.slots)
                            if job.slots[cid].status == COMPLETE},
                "errors": {cid: job.slots[cid].error for cid in sorted(job.slots)
                           if job.slots[cid].status == FAILED},
            }

    # ------------------------------------------------------------ workers

    def register(self, address, capacity, worker_id=None):
        if int(capacity) < 1:
            raise ConfigurationError(f"worker capacity must be >= 1, got {capacity}")
        wid = worker_id or uuid.uuid4().hex[:8]
        with self.store.lock:
            self.workers[wid] = WorkerRecord(wid, address.rstrip("/"), int(capacity), self.clock())
            self.inflight.setdefault(wid, {})
        self._wake.set()
        return wid

    def heartbeat(self, worker_id):
        with self.store.lock:
            w = self._worker(worker_id)
            w.last_heartbeat = self.clock()

    def _worker(self, wid):
        try:
            return self.workers[wid]
        except KeyError:
            raise ConfigurationError(f"unknown worker {wid!r}") from None

    def live_workers(self):
        now = self.clock()
        return [w for w in sorted(self.workers.values(), key=lambda w: w.worker_id)
                if w.live(now, self.config.heartbeat_interval)]

    def report(self, worker_id, payload):
        """Worker callback. Each slot is filled at most once; counts that do
        not sum to the requested shots are rejected as corrupt."""
        accepted = 0
        with self.store.lock:
            w = self._worker(worker_id)
            w.last_heartbeat = self.clock()
            job_id = payload["job_id"]
            job = self.store.get(job_id)
            held = self.inflight.setdefault(worker_id, {})
            for item in payload["results"]:
                cid = item["circuit_id"]
                held.pop((job_id, cid), None)
                slot = job.slots.get(cid)
                if slot is None or slot.status in TERMINAL:
                    continue  # duplicate or stale delivery
                owner = slot.worker == worker_id
                if "error" in item:
                    if owner:  # a failure from a superseded attempt changes nothing
                        self._retry(job_id, slot, f"worker {worker_id}: {item['error']}")
                    continue
                try:
                    counts = MeasurementCounts.from_dict(item)
                    if counts.total_shots != slot.shots:
                        raise ContractError(f"got {counts.total_shots} shots, expected {slot.shots}")
                except (ContractError, KeyError, TypeError, ValueError) as exc:
                    if owner:
                        self._retry(job_id, slot, f"corrupt result from {worker_id}: {exc}")
                    continue
                self.store.update_slot(job_id, cid, status=COMPLETE, result=counts.to_dict(),
                                       worker=worker_id, error=None)
                self.completed_by[worker_id] = self.completed_by.get(worker_id, 0) + 1
                accepted += 1
            w.inflight = len(held)
        self._wake.set()
        return accepted

    def _retry(self, job_id, slot, cause):
        if slot.attempts >= self.config.max_attempts:
            self.store.update_slot(job_id, slot.circuit_id, status=FAILED, worker=None,
                                   error=f"gave up after {slot.attempts} attempts; last: {cause}")
        else:
            self.store.update_slot(job_id, slot.circuit_id, status=QUEUED, worker=None, error=cause)

    # ------------------------------------------------------------ dispatch

    def _reclaim(self):
        """Requeue work held by dead workers or running past the timeout."""
        now = self.clock()
        live = {w.worker_id for w in self.live_workers()}
        for wid, held in self.inflight.items():
            for (job_id, cid) in list(held):
                slot = self.store.get(job_id).slots[cid]
                dead = wid not in live
                late = now - slot.dispatched_at > self.config.timeout
                if slot.status in TERMINAL or slot.worker != wid:
                    del held[(job_id, cid)]
                elif dead or late:
                    del held[(job_id, cid)]
                    self._retry(job_id, slot, f"worker {wid} {'lost' if dead else 'timed out'}")
            if wid in self.workers:
                self.workers[wid].inflight = len(held)

    def plan(self, job_id, workers=None):
        """Schedule every queued circuit of a job over the live workers (a preview)."""
        with self.store.lock:
            job = self.store.get(job_id)
            workers = workers or [(w.worker_id, w.capacity) for w in self.live_workers()]
            items = [(s.circuit_id, slot_cost(s, self.profiles))
                     for s in job.slots.values() if s.status == QUEUED]
            return schedule(items, workers)

    def tick(self):
        """One scheduling pass; returns the number of circuits sent."""
        batches = {}
        with self.store.lock:
            self._reclaim()
            live = [w for w in self.live_workers() if w.free > 0]
            if not live:
                return 0
            free = {w.worker_id: w.free for w in live}
            for job in self.store.jobs.values():
                if not any(free.values()):
                    break
                queued = [s for s in job.slots.values() if s.status == QUEUED]
                if not queued:
                    continue
                items = [(s.circuit_id, slot_cost(s, self.profiles)) for s in queued]
                base = {wid: sum(self.inflight[wid].values()) for wid in free}
                plan = schedule(items, [(w.worker_id, w.capacity) for w in live], base)
                now = self.clock()
                for a in plan:
                    if free[a.worker_id] == 0:
                        continue
                    free[a.worker_id] -= 1
                    slot = job.slots[a.circuit_id]
                    slot.dispatched_at = now
                    self.store.update_slot(job.job_id, slot.circuit_id, status=RUNNING,
                                           worker=a.worker_id, attempts=slot.attempts + 1)
                    self.inflight[a.worker_id][(job.job_id, slot.circuit_id)] = a.cost
                    batches.setdefault((a.worker_id, job.job_id), []).append({
                        "circuit_id": slot.circuit_id, "qasm": slot.qasm, "shots": slot.shots,
                        "seed": slot.seed, "attempt": slot.attempts,
                    })
            for w in live:
                w.inflight = len(self.inflight[w.worker_id])
            policies = {job_id: self.store.get(job_id).policy for _, job_id in batches}
            addresses = {wid: self.workers[wid].address for wid, _ in batches}
        sent = 0
        for (wid, job_id), circuits in batches.items():
            body = {"version": 1, "job_id": job_id, "worker_id": wid,
                    "policy": policies[job_id], "circuits": circuits}
            try:
                transport.request("POST", f"{addresses[wid]}/execute", body, timeout=10.0)
                sent += len(circuits)
            except QaoaBatchError as exc:
                log.warning("dispatch to %s failed: %s", wid, exc)
                self._dispatch_failed(wid, job_id, circuits, str(exc))
        return sent

    def _dispatch_failed(self, wid, job_id, circuits, cause):
        with self.store.lock:
            if wid in self.workers:
                self.workers[wid].last_heartbeat = float("-inf")  # treat as dead until it re-registers
            held = self.inflight.get(wid, {})
            job = self.store.get(job_id)
            for c in circuits:
                held.pop((job_id, c["circuit_id"]), None)
                slot = job.slots[c["circuit_id"]]
                if slot.status == RUNNING and slot.worker == wid:
                    self._retry(job_id, slot, f"dispatch to {wid} failed: {cause}")

    def pending(self):
        with self.store.lock:
            return any(s.status not in TERMINAL for j in self.store.jobs.values() for s in j.slots.values())

    def _loop(self):
        while not self._stop.is_set():
            try:
                sent = self.tick()
            except Exception:  # keep the dispatcher alive; the next tick retries
                log.exception("dispatcher tick failed")
                sent = 0
            if sent or not self.pending():
                self._backoff = 0.0
            elif not self.live_workers():
                # queued work but nowhere to run it: back off
                self._backoff = min(MAX_BACKOFF, max(0.05, 2 * self._backoff))
            wait = self._backoff or min(0.05, self.config.heartbeat_interval)
            self._wake.wait(wait)
            self._wake.clear()

    def start(self):
        self._thread = threading.Thread(target=self._loop, name="dispatcher", daemon=True)
        self._thread.start()

    def stop(self):
        self._stop.set()
        self._wake.set()
        if self._thread:
            self._thread.join(timeout=5)
        self.store.close()

    # ------------------------------------------------------------ http

    def router(self):
        r = transport.Router()
        r.add("POST", "/jobs", lambda m, b: (201, {"job_id": self.submit(b)}))
        r.add("GET", "/jobs/([^/]+)", lambda m, b: (200, self.status(m.group(1))))
        r.add("GET", "/jobs/([^/]+)/results", lambda m, b: (200, self.results(m.group(1))))
        r.add("POST", "/workers/register", lambda m, b: (200, {
            "worker_id": self.register(b["address"], b.get("capacity", 1), b.get("worker_id")),
            "heartbeat_interval": self.config.heartbeat_interval,
        }))
        r.add("POST", "/workers/([^/]+)/heartbeat", lambda m, b: (200, {"ok": self.heartbeat(m.group(1)) is None}))
        r.add("POST", "/workers/([^/]+)/results", lambda m, b: (200, {"accepted": self.report(m.group(1), b)}))
        r.add("GET", "/healthz", lambda m, b: (200, self.health()))
        return r

    def health(self):
        with self.store.lock:
            return {"status": "ok", "live_workers": len(self.live_workers()), "jobs": len(self.store.jobs)}


class GatewayServer:
    """Gateway plus its HTTP front end and dispatcher thread."""

    def __init__(self, config=None):
        self.gateway = Gateway(config)
        cfg = self.gateway.config
        self.httpd = transport.serve(self.gateway.router(), cfg.host, cfg.port, cfg.max_request_bytes)
        self._thread = None

    @property
    def url(self):
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self):
        self.gateway.start()
        self._thread = threading.Thread(target=self.httpd.serve_forever, name="gateway-http", daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        self.gateway.stop()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def submission(circuits, seed=0, policy="sv_optimized", idempotency_key=None, metadata=None,
               circuit_ids=None):
    """Build a POST /jobs document from ``(qasm, shots)`` pairs."""
    circuits = list(circuits)
    if not circuits:
        raise SubmissionError("no circuits to submit")
    ids = list(circuit_ids) if circuit_ids is not None else [circuit_id(i) for i in range(len(circuits))]
    doc = {
        "version": 1,
        "seed": int(seed),
        "policy": str(policy),
        "metadata": dict(metadata or {}),
        "circuits": [{"circuit_id": cid, "qasm": compress_qasm(q), "shots": int(s)}
                     for cid, (q, s) in zip(ids, circuits)],
    }
    if idempotency_key:
        doc["idempotency_key"] = idempotency_key
    return doc
