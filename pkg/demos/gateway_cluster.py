"""
A gateway and two workers on loopback
=====================================

The gateway accepts batches of compressed QASM, schedules them over the
registered workers, and collects counts. Seeds are fixed per circuit at
submission, so the results match an in-process run exactly, even when a
worker dies halfway through.

The same services run as separate processes with ``qaoabatch serve`` and
``qaoabatch worker --gateway http://HOST:PORT``.
"""

import time

from qaoabatch.bench import mixed_batch
from qaoabatch.orchestrator import (
    GatewayClient,
    GatewayConfig,
    GatewayServer,
    LocalExecutor,
    Worker,
    WorkerConfig,
)

circuits = mixed_batch(80, (4, 10), 1000, seed=3)
local = LocalExecutor().run(circuits, seed=5)

server = GatewayServer(GatewayConfig(port=0, heartbeat_interval=0.5)).start()
workers = [Worker(WorkerConfig(gateway=server.url, heartbeat_interval=0.5, capacity=2)).start()
           for _ in range(2)]
client = GatewayClient(server.url)
print("gateway", server.url, client.health())

job_id = client.submit(circuits, seed=5)
while client.status(job_id)["tally"].get("complete", 0) < 20:
    time.sleep(0.01)
print("partial results so far:", len(client.results(job_id)))

# pull the plug on one worker; its circuits go back in the queue
workers[0].kill()
snap = client.wait(job_id, timeout=120)
print("final status:", snap["status"], snap["tally"])

remote = client.results(job_id)
same = [remote[cid] for cid in sorted(remote)] == local
print("identical to the in-process run:", same)
print("completed per worker:", server.gateway.completed_by)

workers[1].stop()
server.stop()
