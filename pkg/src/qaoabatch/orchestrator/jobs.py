"""Batch jobs, compressed QASM payloads, and the journaled job store."""
from __future__ import annotations

import base64
import gzip
import io
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import IntegrityError, JobNotFound, PayloadTooLarge, QasmError, SubmissionError
from ..qasm import parse
from ..sim.counts import MeasurementCounts

QUEUED, SCHEDULED, RUNNING, COMPLETE, FAILED = "queued", "scheduled", "running", "complete", "failed"
TERMINAL = (COMPLETE, FAILED)

MAX_CIRCUIT_BYTES = 4 << 20  # decompressed QASM per circuit
MAX_CIRCUITS = 100_000


def compress_qasm(text):
    """gzip (fixed mtime, so identical text gives identical bytes) then base64."""
    return base64.b64encode(gzip.compress(text.encode(), mtime=0)).decode("ascii")


def decompress_qasm(blob, limit=MAX_CIRCUIT_BYTES):
    raw = base64.b64decode(blob, validate=True)
    with gzip.GzipFile(fileobj=io.BytesIO(raw)) as fh:
        data = fh.read(limit + 1)
    if len(data) > limit:
        raise PayloadTooLarge(f"circuit exceeds {limit} bytes after decompression")
    return data.decode("utf-8")


def circuit_id(index):
    return f"c{index:05d}"


@dataclass
class CircuitSlot:
    circuit_id: str
    qasm: str  # compressed
    shots: int
    seed: int
    status: str = QUEUED
    attempts: int = 0
    worker: str | None = None
    dispatched_at: float = 0.0
    result: dict | None = None
    error: str | None = None
    cost: float = 1.0

    def snapshot(self):
        return {
            "circuit_id": self.circuit_id,
            "status": self.status,
            "attempts": self.attempts,
            "worker": self.worker,
            "error": self.error,
        }


@dataclass
class BatchJob:
    job_id: str
    slots: dict  # circuit_id -> CircuitSlot, insertion order = submission order
    policy: str = "sv_optimized"
    created_at: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def status(self):
        states = [s.status for s in self.slots.values()]
        if all(s == COMPLETE for s in states):
            return COMPLETE
        if all(s in TERMINAL for s in states):
            return FAILED
        if all(s == QUEUED for s in states):
            return QUEUED
        if any(s in (RUNNING, COMPLETE, FAILED) for s in states):
            return RUNNING
        return SCHEDULED

    def snapshot(self):
        tally = {}
        for s in self.slots.values():
            tally[s.status] = tally.get(s.status, 0) + 1
        return {
            "version": 1,
            "job_id": self.job_id,
            "status": self.status,
            "created_at": self.created_at,
            "policy": self.policy,
            "metadata": self.metadata,
            "tally": tally,
            "circuits": [self.slots[c].snapshot() for c in sorted(self.slots)],
        }

    def results(self):
        """Completed counts keyed by circuit id; partial while the job runs."""
        return {
            cid: MeasurementCounts.from_dict(self.slots[cid].result)
            for cid in sorted(self.slots)
            if self.slots[cid].status == COMPLETE
        }


@dataclass
class WorkerRecord:
    worker_id: str
    address: str
    capacity: int
    last_heartbeat: float = 0.0
    inflight: int = 0

    def live(self, now, interval, misses=3):
        return now - self.last_heartbeat <= misses * interval

    @property
    def free(self):
        return max(0, self.capacity - self.inflight)


def build_job(doc, job_id=None, now=None):
    """Validate a submission document and turn it into a :class:`BatchJob`.

    Validation is all-or-nothing: one bad circuit rejects the whole
    submission, naming every offending circuit id.
    """
    circuits = doc.get("circuits") or []
    if not circuits:
        raise SubmissionError("submission has no circuits")
    if len(circuits) > MAX_CIRCUITS:
        raise PayloadTooLarge(f"at most {MAX_CIRCUITS} circuits per job, got {len(circuits)}")
    seed = int(doc.get("seed", 0))
    bad, oversized, slots = [], [], {}
    for i, c in enumerate(circuits):
        cid = str(c.get("circuit_id") or circuit_id(i))
        if cid in slots:
            raise SubmissionError(f"duplicate circuit id {cid!r}", [cid])
        try:
            shots = int(c["shots"])
            if shots < 1:
                raise ValueError("shots must be positive")
            ir = parse(decompress_qasm(c["qasm"]))
            if not ir.is_measured:
                raise QasmError("circuit has no terminal measurement")
        except PayloadTooLarge:
            oversized.append(cid)
            continue
        except (KeyError, TypeError, ValueError, OSError, EOFError, QasmError):
            bad.append(cid)
            continue
        slot_seed = int(c["seed"]) if "seed" in c else seed ^ i
        slots[cid] = CircuitSlot(cid, c["qasm"], shots, slot_seed, cost=float(ir.gate_count))
    if oversized:
        raise PayloadTooLarge(f"{len(oversized)} circuit(s) exceed the size limit", oversized)
    if bad:
        raise SubmissionError(f"{len(bad)} circuit(s) failed validation", bad)
    return BatchJob(
        job_id or uuid.uuid4().hex[:16],
        slots,
        str(doc.get("policy", "sv_optimized")),
        now or time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        dict(doc.get("metadata") or {}),
    )


class JobStore:
    """Job table backed by an append-only JSON-lines journal.

    Every mutation is appended and fsynced before it is applied in memory, so
    replaying the journal after a crash reconstructs a consistent table. A torn
    final line (crash mid-write) is dropped on replay. Without a path the store
    is memory-only.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self.jobs = {}
        self.idempotency = {}
        self.lock = threading.RLock()
        self._fh = None
        if self.path:
            if self.path.exists():
                self._replay()
            self._fh = open(self.path, "a", encoding="utf-8")

    # journal --------------------------------------------------------------

    def _append(self, record):
        if self._fh is None:
            return
        self._fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def _replay(self):
        lines = self.path.read_bytes().split(b"\n")
        good = 0
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except ValueError:
                if i >= len(lines) - 2:  # torn tail from an interrupted write
                    break
                raise IntegrityError(f"journal line {i + 1} is corrupt") from None
            self._apply(rec)
            good = i + 1
        # drop the torn tail so later appends start on a clean line
        keep = b"\n".join(lines[:good])
        if keep and not keep.endswith(b"\n"):
            keep += b"\n"
        self.path.write_bytes(keep)
        for job in self.jobs.values():
            for slot in job.slots.values():
                if slot.status in (SCHEDULED, RUNNING):  # in-flight work died with the process
                    slot.status, slot.worker = QUEUED, None

    def _apply(self, rec):
        op = rec["op"]
        if op == "submit":
            slots = {c["circuit_id"]: CircuitSlot(**c) for c in rec["circuits"]}
            job = BatchJob(rec["job_id"], slots, rec["policy"], rec["created_at"], rec["metadata"])
            self.jobs[job.job_id] = job
            if rec.get("key"):
                self.idempotency[rec["key"]] = job.job_id
        elif op == "slot":
            slot = self.jobs[rec["job_id"]].slots[rec["circuit_id"]]
            for k in ("status", "attempts", "worker", "result", "error"):
                if k in rec:
                    setattr(slot, k, rec[k])
        else:
            raise IntegrityError(f"unknown journal op {op!r}")

    def close(self):
        if self._fh:
            self._fh.close()
            self._fh = None

    # table ----------------------------------------------------------------

    def add(self, job, key=None):
        """Insert ``job``; with a known idempotency ``key`` the existing id is returned."""
        with self.lock:
            if key and key in self.idempotency:
                return self.idempotency[key]
            rec = {
                "op": "submit",
                "job_id": job.job_id,
                "policy": job.policy,
                "created_at": job.created_at,
                "metadata": job.metadata,
                "key": key,
                "circuits": [
                    {"circuit_id": s.circuit_id, "qasm": s.qasm, "shots": s.shots, "seed": s.seed,
                     "cost": s.cost}
                    for s in job.slots.values()
                ],
            }
            self._append(rec)
            self._apply(rec)
            return job.job_id

    def get(self, job_id):
        with self.lock:
            try:
                return self.jobs[job_id]
            except KeyError:
                raise JobNotFound(job_id) from None

    def update_slot(self, job_id, circuit_id, **changes):
        with self.lock:
            rec = {"op": "slot", "job_id": job_id, "circuit_id": circuit_id, **changes}
            durable = {"status", "result", "error"} & changes.keys()
            if durable:  # scheduling chatter is not worth an fsync
                self._append(rec)
            self._apply(rec)
