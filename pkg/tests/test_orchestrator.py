import json
import threading
import time

import pytest

from qaoabatch.baseline import gw_solve
from qaoabatch.circuits import QaoaParams, build_circuit
from qaoabatch.errors import (
    ConfigurationError,
    IntegrityError,
    JobNotFound,
    PayloadTooLarge,
    SubmissionError,
)
from qaoabatch.graph import circulant_graph, complete_graph, gnp_graph, max_cut_bruteforce
from qaoabatch.orchestrator import (
    Gateway,
    GatewayClient,
    GatewayConfig,
    GatewayServer,
    JobStore,
    LocalExecutor,
    OptimizerConfig,
    Worker,
    WorkerConfig,
    build_job,
    compress_qasm,
    decompress_qasm,
    load_config,
    run_workflow,
    schedule,
    submission,
)
from qaoabatch.orchestrator.jobs import COMPLETE, FAILED, QUEUED, RUNNING
from qaoabatch.orchestrator.scheduler import loads
from qaoabatch.qasm import emit

BELL = 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\ncreg c[2];\nh q[0];\ncx q[0],q[1];\nmeasure q -> c;\n'


def qaoa_qasm(n, seed, p=1):
    g = circulant_graph(n, (1, 2)) if n >= 5 else complete_graph(n)
    x = QaoaParams(tuple(0.3 + 0.1 * seed + 0.05 * l for l in range(p)), tuple(0.2 + 0.01 * l for l in range(p)))
    return emit(build_circuit(g, x))


def small_batch(count, shots=200):
    return [(qaoa_qasm(3 + i % 5, i), shots) for i in range(count)]


# ---------------------------------------------------------------- payloads


def test_compress_round_trip_and_is_deterministic():
    blob = compress_qasm(BELL)
    assert decompress_qasm(blob) == BELL
    assert compress_qasm(BELL) == blob


def test_decompress_limit():
    big = BELL + "// " + "x" * 5000 + "\n"
    with pytest.raises(PayloadTooLarge):
        decompress_qasm(compress_qasm(big), limit=1000)


def test_three_bell_circuits_make_a_queued_job():
    job = build_job(submission([(BELL, 100)] * 3))
    assert len(job.slots) == 3
    assert job.status == QUEUED
    assert job.results() == {}


def test_one_malformed_circuit_rejects_the_whole_submission():
    doc = submission([(BELL, 100)] * 10)
    doc["circuits"][6]["qasm"] = compress_qasm(BELL.replace("cx q[0],q[1]", "cx q[0],q[7]"))
    with pytest.raises(SubmissionError) as err:
        build_job(doc)
    assert err.value.circuit_ids == ["c00006"]


def test_garbage_payload_and_bad_shots_are_named():
    doc = submission([(BELL, 100)] * 3)
    doc["circuits"][0]["qasm"] = "not base64 at all!"
    doc["circuits"][2]["shots"] = 0
    with pytest.raises(SubmissionError) as err:
        build_job(doc)
    assert err.value.circuit_ids == ["c00000", "c00002"]


def test_unmeasured_circuit_is_rejected():
    doc = submission([(BELL.replace("measure q -> c;\n", ""), 10)])
    with pytest.raises(SubmissionError):
        build_job(doc)


def test_oversized_circuit_is_a_limit_error():
    huge = BELL + "// " + "y" * (5 << 20) + "\n"
    with pytest.raises(PayloadTooLarge) as err:
        build_job(submission([(BELL, 10), (huge, 10)]))
    assert err.value.circuit_ids == ["c00001"]


def test_empty_submission_rejected():
    with pytest.raises(SubmissionError):
        submission([])
    with pytest.raises(SubmissionError):
        build_job({"circuits": []})


def test_seeds_fixed_at_submit():
    job = build_job(submission([(BELL, 10)] * 4, seed=9))
    assert [s.seed for s in job.slots.values()] == [9 ^ i for i in range(4)]


# ---------------------------------------------------------------- store


def test_idempotency_key_returns_same_job(tmp_path):
    gw = Gateway(store=JobStore(tmp_path / "j.log"))
    a = gw.submit(submission([(BELL, 10)], idempotency_key="k1"))
    b = gw.submit(submission([(BELL, 10), (BELL, 10)], idempotency_key="k1"))
    c = gw.submit(submission([(BELL, 10)], idempotency_key="k2"))
    assert a == b != c
    gw.store.close()
    again = JobStore(tmp_path / "j.log")
    assert again.idempotency == {"k1": a, "k2": c}


def test_unknown_job_not_found():
    gw = Gateway()
    with pytest.raises(JobNotFound):
        gw.status("nope")
    with pytest.raises(JobNotFound):
        gw.results("nope")


def test_fresh_job_status_queued():
    gw = Gateway()
    job_id = gw.submit(submission([(BELL, 10)] * 2))
    snap = gw.status(job_id)
    assert snap["status"] == QUEUED
    assert snap["tally"] == {QUEUED: 2}
    assert gw.results(job_id)["results"] == {}


def _journal(path):
    store = JobStore(path)
    a = store.add(build_job(submission([(BELL, 10)] * 3, seed=1), job_id="jobA"), "key-a")
    store.add(build_job(submission([(BELL, 20)] * 2, seed=2), job_id="jobB"))
    store.update_slot(a, "c00000", status=RUNNING, worker="w1", attempts=1)
    store.update_slot(a, "c00000", status=COMPLETE, result={"counts": {"00": 10}, "total_shots": 10})
    store.update_slot(a, "c00001", status=RUNNING, worker="w2", attempts=1)
    store.update_slot("jobB", "c00001", status=FAILED, error="boom")
    store.close()


def _table(store):
    return {
        jid: [(s.circuit_id, s.status, s.attempts, s.worker, s.result, s.error) for s in job.slots.values()]
        for jid, job in store.jobs.items()
    }, dict(store.idempotency)


def test_journal_replays_consistently_at_every_truncation(tmp_path):
    full = tmp_path / "full.log"
    _journal(full)
    data = full.read_bytes()
    lines = data.split(b"\n")
    expected = {}
    for k in range(len(lines)):
        ref = tmp_path / f"ref{k}.log"
        ref.write_bytes(b"".join(line + b"\n" for line in lines[:k] if line))
        expected[k] = _table(JobStore(ref))
    cut = tmp_path / "cut.log"
    for offset in range(len(data) + 1):
        cut.write_bytes(data[:offset])
        store = JobStore(cut)
        k = data[:offset].count(b"\n")
        if data[:offset].split(b"\n")[-1] == lines[k] != b"":
            k += 1  # record complete, only its newline lost
        assert _table(store) == expected[k], offset
        for job in store.jobs.values():
            assert all(s.status != RUNNING for s in job.slots.values())
        store.close()


def test_journal_append_after_torn_tail(tmp_path):
    path = tmp_path / "j.log"
    _journal(path)
    data = path.read_bytes()
    path.write_bytes(data[:-7])
    store = JobStore(path)
    store.update_slot("jobA", "c00002", status=COMPLETE, result={"counts": {"11": 10}, "total_shots": 10})
    store.close()
    replayed = JobStore(path)
    assert replayed.get("jobA").slots["c00002"].status == COMPLETE


def test_journal_corruption_mid_file_is_an_error(tmp_path):
    path = tmp_path / "j.log"
    _journal(path)
    lines = path.read_bytes().split(b"\n")
    lines[1] = lines[1][:20]
    path.write_bytes(b"\n".join(lines))
    with pytest.raises(IntegrityError):
        JobStore(path)


def test_replay_requeues_inflight_work(tmp_path):
    path = tmp_path / "j.log"
    _journal(path)
    store = JobStore(path)
    job = store.get("jobA")
    assert job.slots["c00000"].status == COMPLETE
    assert job.slots["c00001"].status == QUEUED
    assert job.slots["c00001"].worker is None
    assert store.get("jobB").slots["c00001"].error == "boom"


# ---------------------------------------------------------------- scheduler


def test_schedule_heavy_circuit_alone():
    plan = schedule([("a", 4.0), ("b", 1.0), ("c", 1.0)], [("w1", 1), ("w2", 1)])
    by_worker = {}
    for x in plan:
        by_worker.setdefault(x.worker_id, []).append(x.circuit_id)
    assert sorted(by_worker.values()) == [["a"], ["b", "c"]]


def test_schedule_one_worker_three_rounds_in_descending_cost():
    plan = schedule([("x", 1.0), ("y", 5.0), ("z", 3.0)], [("w", 1)])
    assert [(a.circuit_id, a.round) for a in plan] == [("y", 0), ("z", 1), ("x", 2)]


def test_schedule_four_equal_on_two_workers_capacity_two():
    plan = schedule([(f"c{i}", 2.0) for i in range(4)], [("w1", 2), ("w2", 2)])
    assert loads(plan) == {"w1": 2, "w2": 2}
    assert {a.round for a in plan} == {0}


@pytest.mark.parametrize("count", [1, 2, 7, 30, 101])
def test_schedule_balance_for_uniform_circuits(count):
    plan = schedule([(f"c{i:03d}", 1.0) for i in range(count)], [("a", 2), ("b", 2), ("c", 2)])
    per = loads(plan)
    counts = [per.get(w, 0) for w in "abc"]
    assert max(counts) - min(counts) <= 1


def test_schedule_is_deterministic_and_needs_workers():
    items = [(f"c{i}", float(i % 3)) for i in range(9)]
    assert schedule(items, [("a", 1), ("b", 2)]) == schedule(items, [("a", 1), ("b", 2)])
    with pytest.raises(ConfigurationError):
        schedule(items, [])


def test_gateway_plan_uses_gate_counts():
    gw = Gateway()
    small, big = qaoa_qasm(3, 0), qaoa_qasm(8, 0, p=2)
    job_id = gw.submit(submission([(small, 10), (big, 10), (small, 10)]))
    plan = gw.plan(job_id, workers=[("w1", 1), ("w2", 1)])
    heavy = [a for a in plan if a.circuit_id == "c00001"][0]
    assert [a.worker_id for a in plan].count(heavy.worker_id) == 1


# ---------------------------------------------------------------- gateway accounting


class FakeClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now


def _running(gw, job_id, cid, wid):
    slot = gw.store.get(job_id).slots[cid]
    gw.store.update_slot(job_id, cid, status=RUNNING, worker=wid, attempts=slot.attempts + 1)
    gw.inflight[wid][(job_id, cid)] = 1.0


def test_heartbeat_liveness_window():
    clock = FakeClock()
    gw = Gateway(GatewayConfig(heartbeat_interval=5.0), clock=clock)
    gw.register("http://127.0.0.1:1", 2, "w1")
    clock.now = 15.0
    assert [w.worker_id for w in gw.live_workers()] == ["w1"]
    clock.now = 15.1
    assert gw.live_workers() == []
    gw.heartbeat("w1")
    assert len(gw.live_workers()) == 1


def test_no_live_workers_parks_job_in_queue():
    gw = Gateway()
    job_id = gw.submit(submission([(BELL, 10)] * 2))
    assert gw.tick() == 0
    assert gw.status(job_id)["status"] == QUEUED


def test_register_rejects_zero_capacity():
    with pytest.raises(ConfigurationError):
        Gateway().register("http://x", 0)


def test_corrupt_counts_are_rejected():
    gw = Gateway()
    gw.register("http://127.0.0.1:1", 1, "w1")
    job_id = gw.submit(submission([(BELL, 10)]))
    _running(gw, job_id, "c00000", "w1")
    bad = {"circuit_id": "c00000", "counts": {"00": 4, "11": 5}, "total_shots": 10}
    assert gw.report("w1", {"job_id": job_id, "results": [bad]}) == 0
    slot = gw.store.get(job_id).slots["c00000"]
    assert slot.status == QUEUED
    assert "corrupt" in slot.error


def test_retries_exhausted_fail_the_slot():
    gw = Gateway(GatewayConfig(max_attempts=3))
    gw.register("http://127.0.0.1:1", 1, "w1")
    job_id = gw.submit(submission([(BELL, 10)]))
    for _ in range(3):
        _running(gw, job_id, "c00000", "w1")
        gw.report("w1", {"job_id": job_id, "results": [{"circuit_id": "c00000", "error": "oops"}]})
    doc = gw.results(job_id)
    assert doc["status"] == FAILED
    assert "gave up after 3 attempts" in doc["errors"]["c00000"]


def test_dead_worker_work_is_requeued():
    clock = FakeClock()
    gw = Gateway(GatewayConfig(heartbeat_interval=1.0), clock=clock)
    gw.register("http://127.0.0.1:1", 1, "w1")
    job_id = gw.submit(submission([(BELL, 10)]))
    _running(gw, job_id, "c00000", "w1")
    clock.now = 10.0
    with gw.store.lock:
        gw._reclaim()
    slot = gw.store.get(job_id).slots["c00000"]
    assert slot.status == QUEUED
    assert "lost" in slot.error


def test_exactly_once_under_concurrent_callbacks():
    gw = Gateway()
    for w in ("w1", "w2", "w3"):
        gw.register("http://127.0.0.1:1", 4, w)
    n = 40
    job_id = gw.submit(submission([(BELL, 10)] * n))
    items = [{"circuit_id": f"c{i:05d}", "counts": {"00": 6, "11": 4}, "total_shots": 10} for i in range(n)]
    accepted = []

    def deliver(wid):
        for it in items:
            accepted.append(gw.report(wid, {"job_id": job_id, "results": [it]}))

    threads = [threading.Thread(target=deliver, args=(w,)) for w in ("w1", "w2", "w3") * 2]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sum(accepted) == n
    assert sum(gw.completed_by.values()) == n
    assert gw.status(job_id)["status"] == COMPLETE
    assert len(gw.results(job_id)["results"]) == n


# ---------------------------------------------------------------- config


def test_config_env_overrides_file(tmp_path):
    path = tmp_path / "w.json"
    path.write_text(json.dumps({"capacity": 3, "heartbeat_interval": 2.0}))
    cfg = load_config(WorkerConfig, path, env={"QAOABATCH_CAPACITY": "5", "QAOABATCH_WORKER_ID": "wx"})
    assert (cfg.capacity, cfg.heartbeat_interval, cfg.worker_id) == (5, 2.0, "wx")
    cfg = load_config(WorkerConfig, path, env={"QAOABATCH_CAPACITY": "5"}, capacity=7)
    assert cfg.capacity == 7


def test_config_errors(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ConfigurationError):
        load_config(GatewayConfig, path, env={})
    with pytest.raises(ConfigurationError):
        load_config(GatewayConfig, env={"QAOABATCH_PORT": "eighty"})
    with pytest.raises(ConfigurationError):
        load_config(GatewayConfig, tmp_path / "missing.json", env={})


# ---------------------------------------------------------------- loopback services


@pytest.fixture
def cluster():
    cfg = GatewayConfig(port=0, heartbeat_interval=0.2, timeout=30.0)
    server = GatewayServer(cfg).start()
    workers = [Worker(WorkerConfig(gateway=server.url, heartbeat_interval=0.2, capacity=2,
                                   worker_id=f"w{i}")).start() for i in (1, 2)]
    yield server, workers
    for w in workers:
        w.stop()
    server.stop()


def test_gateway_matches_local_execution(cluster):
    server, workers = cluster
    circuits = small_batch(24)
    remote = GatewayClient(server.url).run(circuits, seed=5, timeout=60)
    local = LocalExecutor().run(circuits, seed=5)
    assert [c.to_json() for c in remote] == [c.to_json() for c in local]
    assert sum(w.executed for w in workers) >= 24
    done = server.gateway.completed_by
    assert done.get("w1", 0) > 0 and done.get("w2", 0) > 0
    assert sum(done.values()) == 24


def test_killed_worker_results_unchanged(cluster):
    server, workers = cluster
    circuits = small_batch(60)
    client = GatewayClient(server.url)
    job_id = client.submit(circuits, seed=11)
    deadline = time.monotonic() + 30
    while client.status(job_id)["tally"].get(COMPLETE, 0) < 6 and time.monotonic() < deadline:
        time.sleep(0.01)
    workers[0].kill()
    client.wait(job_id, timeout=60)
    remote = client.results(job_id)
    local = LocalExecutor().run(circuits, seed=11)
    assert [remote[c].to_json() for c in sorted(remote)] == [c.to_json() for c in local]


def test_client_errors_over_http(cluster):
    server, _ = cluster
    client = GatewayClient(server.url)
    with pytest.raises(JobNotFound):
        client.status("missing")
    bad = [(BELL, 10), (BELL.replace("h q[0]", "frob q[0]"), 10)]
    with pytest.raises(SubmissionError) as err:
        client.submit(bad)
    assert err.value.circuit_ids == ["c00001"]
    assert client.health()["live_workers"] == 2


# ---------------------------------------------------------------- workflow


def test_workflow_small_graph_bounds():
    g = gnp_graph(8, 0.5, 3)
    opt = OptimizerConfig("monte_carlo", samples=30)
    assignment, cut, report = run_workflow(g, 8, 1, opt, LocalExecutor(), shots=500, seed=1)
    best, _ = max_cut_bruteforce(g)
    assert report["num_clusters"] == 1
    assert g.num_edges / 2 <= cut <= best
    assert len(assignment) == 8


def test_workflow_ring30_cap6_against_gw(tmp_path):
    g = circulant_graph(30, (1, 2))
    opt = OptimizerConfig("monte_carlo", samples=100, max_iterations=1)
    _, cut, report = run_workflow(g, 6, 2, opt, LocalExecutor(), shots=1000, seed=0, run_dir=tmp_path)
    gw_cut, _ = gw_solve(g, 0)
    assert all(len(c["nodes"]) <= 6 for c in report["clusters"])
    assert cut >= 0.8 * gw_cut
    assert json.loads((tmp_path / "report.json").read_text())["cut"] == cut


def test_workflow_local_and_gateway_agree(cluster):
    server, _ = cluster
    g = circulant_graph(12, (1, 2))
    opt = OptimizerConfig("monte_carlo", samples=12)
    a1, c1, r1 = run_workflow(g, 6, 1, opt, LocalExecutor(), shots=300, seed=4)
    a2, c2, r2 = run_workflow(g, 6, 1, opt, GatewayClient(server.url), shots=300, seed=4)
    assert a1 == a2 and c1 == c2
    assert [c["final_counts"] for c in r1["clusters"]] == [c["final_counts"] for c in r2["clusters"]]


class FlakyExecutor(LocalExecutor):
    """Raises on the n-th run call, like a crash mid-optimization."""

    def __init__(self, fail_at):
        super().__init__()
        self.calls = 0
        self.fail_at = fail_at

    def run(self, circuits, seed=0, policy="sv_optimized", timeout=600.0):
        self.calls += 1
        if self.calls == self.fail_at:
            raise RuntimeError("simulated crash")
        return super().run(circuits, seed, policy, timeout)


def test_workflow_resumes_from_checkpoint(tmp_path):
    g = circulant_graph(10, (1, 2))
    opt = OptimizerConfig("nelder_mead", max_iterations=8)
    clean = run_workflow(g, 5, 1, opt, LocalExecutor(), shots=400, seed=2, run_dir=tmp_path / "clean")
    with pytest.raises(RuntimeError):
        run_workflow(g, 5, 1, opt, FlakyExecutor(6), shots=400, seed=2, run_dir=tmp_path / "crash")
    resumed = run_workflow(g, 5, 1, opt, LocalExecutor(), shots=400, seed=2, run_dir=tmp_path / "crash")
    assert resumed[0] == clean[0] and resumed[1] == clean[1]
    for a, b in zip(clean[2]["clusters"], resumed[2]["clusters"]):
        assert a["best_params"] == b["best_params"]
        assert a["evaluations"] == b["evaluations"]
        assert a["final_counts"] == b["final_counts"]
