"""Worker node: accepts pushed circuit batches, simulates them, posts results back."""
from __future__ import annotations

import logging
import queue
import threading
import time

from ..errors import QaoaBatchError
from ..sim.batch import execute_circuit
from ..sim.selection import load_profiles
from . import transport
from .config import WorkerConfig
from .jobs import decompress_qasm

log = logging.getLogger(__name__)

RESULT_RETRIES = 5


def run_slot(item, policy, profiles=None):
    """Execute one pushed circuit; the reply item carries counts or an error string."""
    try:
        counts = execute_circuit(decompress_qasm(item["qasm"]), int(item["shots"]), int(item["seed"]),
                                 policy, profiles)
    except Exception as exc:  # reported back to the gateway, which decides on retries
        return {"circuit_id": item["circuit_id"], "attempt": item.get("attempt", 0),
                "error": f"{type(exc).__name__}: {exc}"}
    return {"circuit_id": item["circuit_id"], "attempt": item.get("attempt", 0), **counts.to_dict()}


class Worker:
    def __init__(self, config=None):
        self.config = config or WorkerConfig()
        self.profiles = load_profiles(self.config.profiles) if self.config.profiles else None
        self.worker_id = self.config.worker_id
        self.queue = queue.Queue()
        self.executed = 0
        self._stop = threading.Event()
        self._killed = False
        self._threads = []
        router = transport.Router()
        router.add("POST", "/execute", lambda m, b: (202, {"accepted": self.accept(b)}))
        router.add("GET", "/healthz", lambda m, b: (200, {
            "status": "ok", "worker_id": self.worker_id, "queued": self.queue.qsize(),
            "executed": self.executed,
        }))
        self.httpd = transport.serve(router, self.config.host, self.config.port)

    @property
    def url(self):
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def accept(self, body):
        if self._killed:
            raise QaoaBatchError("worker is shutting down")
        for item in body["circuits"]:
            self.queue.put((body["job_id"], body.get("policy", "sv_optimized"), item))
        return len(body["circuits"])

    def register(self):
        doc = transport.request("POST", f"{self.config.gateway}/workers/register", {
            "address": self.url, "capacity": self.config.capacity, "worker_id": self.worker_id,
        })
        self.worker_id = doc["worker_id"]
        return self.worker_id

    def _execute_loop(self):
        while not self._stop.is_set():
            try:
                job_id, policy, item = self.queue.get(timeout=0.1)
            except queue.Empty:
                continue
            reply = run_slot(item, policy, self.profiles)
            if self._killed:
                return
            self.executed += 1
            self._post(f"/workers/{self.worker_id}/results", {"job_id": job_id, "results": [reply]})

    def _post(self, path, body):
        for attempt in range(RESULT_RETRIES):
            try:
                return transport.request("POST", f"{self.config.gateway}{path}", body)
            except transport.Unreachable:
                time.sleep(0.2 * (attempt + 1))
            except transport.RemoteError as exc:
                if exc.status == 400 and "unknown worker" in str(exc):
                    self.register()  # gateway restarted and forgot us
                    continue
                log.warning("gateway rejected %s: %s", path, exc)
                return None
        log.warning("giving up on %s", path)
        return None

    def _heartbeat_loop(self):
        while not self._stop.wait(self.config.heartbeat_interval):
            if not self._killed:
                self._post(f"/workers/{self.worker_id}/heartbeat", {})

    def start(self):
        self._threads.append(threading.Thread(target=self.httpd.serve_forever, daemon=True))
        self._threads[-1].start()
        self.register()
        for i in range(self.config.capacity):
            self._threads.append(threading.Thread(target=self._execute_loop, daemon=True, name=f"exec-{i}"))
        self._threads.append(threading.Thread(target=self._heartbeat_loop, daemon=True))
        for t in self._threads[1:]:
            t.start()
        return self

    def stop(self):
        self._stop.set()
        self.httpd.shutdown()
        self.httpd.server_close()

    def kill(self):
        """Simulate a crash: drop in-flight work, stop answering and heartbeating."""
        self._killed = True
        self.stop()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
