"""Command-line entry point: ``qaoabatch <command> [subcommand] [options]``.

Every command writes versioned JSON/CSV into ``--out`` (a run directory),
prints a short summary to stdout, and on failure prints a JSON error document
to stderr and exits nonzero.
"""
from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
from pathlib import Path

from . import bench
from .baseline import (
    FAMILY_PRESETS,
    cut_ratio_experiment,
    gw_solve,
    plot_script,
    summarize_ratios,
    write_ratio_csv,
)
from .errors import QaoaBatchError
from .graph import Graph, generate
from .partition import partition
from .sim.backends import BackendKind
from .sim.selection import calibrate, dumps_profiles, load_profiles


def _ints(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _floats(text):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _out(args, name):
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _graph_from(args):
    if getattr(args, "graph", None):
        return Graph.load(args.graph)
    params = {}
    if args.family == "circulant":
        params["offsets"] = _ints(args.offsets)
    if args.family in ("gnp", "bipartite"):
        params["p"] = args.p_edge
    if args.family == "regular":
        params["d"] = args.degree
    if args.family in ("gnp", "regular", "bipartite"):
        params["seed"] = args.seed
    return generate(args.family, args.n, **params)


def _add_graph_source(p, required=False):
    src = p.add_argument_group("graph")
    src.add_argument("--graph", help="graph JSON file")
    src.add_argument("--family", default="circulant",
                     choices=["circulant", "gnp", "regular", "bipartite", "star", "complete"])
    src.add_argument("--n", type=int, default=30)
    src.add_argument("--offsets", default="1,2", help="circulant offsets, comma separated")
    src.add_argument("--p-edge", type=float, default=0.3, help="edge probability (gnp, bipartite)")
    src.add_argument("--degree", type=int, default=4, help="degree (regular)")


# ---------------------------------------------------------------- commands


def cmd_graph_gen(args):
    g = _graph_from(args)
    path = _out(args, args.name)
    g.save(path)
    print(f"graph: {g.num_nodes} nodes, {g.num_edges} edges -> {path}")


def cmd_partition(args):
    g = _graph_from(args)
    plan = partition(g, args.cap, args.seed)
    plan.save(_out(args, "partition.json"))
    sizes = [c.size for c in plan.clusters]
    print(f"partition: {plan.num_clusters} clusters, sizes {sizes}, {len(plan.cut_edges)} cut edges")


def cmd_qaoa_run(args):
    from .orchestrator import GatewayClient, LocalExecutor, OptimizerConfig, run_workflow

    g = _graph_from(args)
    opt = OptimizerConfig(args.optimizer, args.samples, args.iterations)
    executor = LocalExecutor() if args.executor == "local" else GatewayClient(args.executor)
    _, cut, report = run_workflow(g, args.cap, args.layers, opt, executor, args.shots, args.seed,
                                  args.objective, args.policy, args.out)
    print(f"qaoa: {report['num_clusters']} clusters, {report['circuits']} circuits, global cut {cut:g}")


def cmd_gw_solve(args):
    g = _graph_from(args)
    cut, assignment = gw_solve(g, args.seed)
    _write_json(_out(args, "gw.json"), {"version": 1, "cut": cut, "assignment": list(assignment)})
    print(f"{cut:g}")


def cmd_bench_ratio(args):
    families = [f for f in args.families.split(",") if f]
    for f in families:
        if f not in FAMILY_PRESETS:
            raise QaoaBatchError(f"unknown family {f!r}; known: {sorted(FAMILY_PRESETS)}")
    records = cut_ratio_experiment(families, _ints(args.sizes), _floats(args.fractions),
                                   range(args.seed, args.seed + args.seeds))
    write_ratio_csv(_out(args, "ratio.csv"), records)
    _out(args, "ratio.gp").write_text(plot_script("ratio.csv"))
    summary = summarize_ratios(records)
    _write_json(_out(args, "ratio_summary.json"), {
        "version": 1,
        "summary": [{"family": f, "k_fraction": k, **v} for (f, k), v in summary.items()],
    })
    for (f, k), v in summary.items():
        print(f"{f:10s} k={k:<5} median={v['median']:.4f} below_one={v['below_one']:.2f}")


def cmd_bench_batch_gen(args):
    rows, s = bench.batch_gen(args.nodes, args.count, args.layers, args.seed)
    bench.write_rows(_out(args, "batch_gen.csv"), rows)
    print(f"scaffold {rows[0]['wall_ms']:.1f} ms, direct {rows[1]['wall_ms']:.1f} ms, "
          f"speedup {s['speedup']:.1f}x")


def cmd_bench_multishot(args):
    rows, s = bench.multishot(args.qubits, args.shots, args.layers, args.seed)
    bench.write_rows(_out(args, "multishot.csv"), rows)
    print(f"optimized {rows[0]['wall_ms']:.1f} ms, naive {rows[1]['wall_ms']:.1f} ms, "
          f"ratio {s['ratio']:.0f}x")


def cmd_bench_batch(args):
    profiles = load_profiles(args.profiles) if args.profiles else None
    circuits = bench.mixed_batch(args.circuits, (args.min_qubits, args.max_qubits), args.shots, args.seed)
    candidates = [BackendKind.parse(c) for c in args.candidates.split(";")]
    rows, s = bench.batch_benchmark(circuits, profiles, candidates, args.seed)
    bench.write_rows(_out(args, "batch.csv"), rows, bench.BATCH_FIELDS)
    _write_json(_out(args, "batch_summary.json"), {"version": 1, **s})
    for name, t in s["totals"].items():
        tag = "" if t["complete"] else " (stopped)"
        print(f"{name:14s} {t['seconds']:8.2f} s{tag}")


def cmd_calibrate(args):
    kinds = [BackendKind.parse(c) for c in args.backends.split(";")]
    profiles = calibrate(kinds, args.seed)
    path = _out(args, "profiles.json")
    path.write_text(dumps_profiles(profiles))
    for p in profiles:
        print(f"{p.backend}: evolve {p.evolve:.3e}, sample {p.sample:.3e}")


def _wait_forever(stop):
    done = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: done.set())
    done.wait()
    stop()


def cmd_serve(args):
    from .orchestrator import GatewayConfig, GatewayServer, load_config

    cfg = load_config(GatewayConfig, args.config, host=args.host, port=args.port, journal=args.journal,
                      profiles=args.profiles)
    server = GatewayServer(cfg).start()
    print(f"gateway listening on {server.url}", flush=True)
    _wait_forever(server.stop)


def cmd_worker(args):
    from .orchestrator import Worker, WorkerConfig, load_config

    cfg = load_config(WorkerConfig, args.config, host=args.host, port=args.port, gateway=args.gateway,
                      capacity=args.capacity, worker_id=args.worker_id, profiles=args.profiles)
    worker = Worker(cfg).start()
    print(f"worker {worker.worker_id} on {worker.url} -> {cfg.gateway}", flush=True)
    _wait_forever(worker.stop)


# ---------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(prog="qaoabatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def leaf(subparsers, name, fn, help_text):
        p = subparsers.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="run", help="run directory for output files")
        p.set_defaults(fn=fn)
        return p

    graph = sub.add_parser("graph", help="graph utilities").add_subparsers(dest="sub", required=True)
    p = leaf(graph, "gen", cmd_graph_gen, "generate a benchmark graph")
    _add_graph_source(p)
    p.add_argument("--name", default="graph.json")

    p = leaf(sub, "partition", cmd_partition, "spectral partition under a qubit cap")
    _add_graph_source(p)
    p.add_argument("--cap", type=int, default=6)

    qaoa = sub.add_parser("qaoa", help="partitioned QAOA").add_subparsers(dest="sub", required=True)
    p = leaf(qaoa, "run", cmd_qaoa_run, "run the full partition/optimize/aggregate workflow")
    _add_graph_source(p)
    p.add_argument("--cap", type=int, default=6)
    p.add_argument("--layers", "-p", type=int, default=2)
    p.add_argument("--optimizer", default="monte_carlo", choices=["monte_carlo", "nelder_mead"])
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--iterations", type=int)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--objective", default="sampled", choices=["sampled", "exact"])
    p.add_argument("--policy", default="sv_optimized")
    p.add_argument("--executor", default="local", help="'local' or a gateway URL")

    gw = sub.add_parser("gw", help="Goemans-Williamson baseline").add_subparsers(dest="sub", required=True)
    p = leaf(gw, "solve", cmd_gw_solve, "solve MaxCut with GW rounding")
    _add_graph_source(p)

    b = sub.add_parser("bench", help="benchmarks").add_subparsers(dest="sub", required=True)
    p = leaf(b, "ratio", cmd_bench_ratio, "partitioned/unpartitioned GW cut-ratio sweep")
    p.add_argument("--families", default=",".join(FAMILY_PRESETS))
    p.add_argument("--sizes", default="24,40,60")
    p.add_argument("--fractions", default="0.25,0.5,0.75")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at --seed")
    p = leaf(b, "batch-gen", cmd_bench_batch_gen, "scaffold grounding versus direct builds")
    p.add_argument("--nodes", type=int, default=5)
    p.add_argument("--count", type=int, default=1500)
    p.add_argument("--layers", "-p", type=int, default=2)
    p = leaf(b, "multishot", cmd_bench_multishot, "optimized versus naive multi-shot sampling")
    p.add_argument("--qubits", type=int, default=12)
    p.add_argument("--shots", type=int, default=5000)
    p.add_argument("--layers", "-p", type=int, default=1)
    p = leaf(b, "batch", cmd_bench_batch, "mixed batch under fixed and automatic backend selection")
    p.add_argument("--circuits", type=int, default=60)
    p.add_argument("--min-qubits", type=int, default=4)
    p.add_argument("--max-qubits", type=int, default=20)
    p.add_argument("--shots", type=int, default=5000)
    p.add_argument("--profiles", help="profiles JSON from 'calibrate' (enables the estimated policy)")
    p.add_argument("--candidates", default="sv_optimized;sv_naive;mps(64)", help="';'-separated backends")

    p = leaf(sub, "calibrate", cmd_calibrate, "fit backend runtime profiles on this machine")
    p.add_argument("--backends", default="sv_optimized;sv_naive;mps(64)", help="';'-separated backends")

    for name, fn, help_text in (("serve", cmd_serve, "run the gateway"), ("worker", cmd_worker, "run a worker")):
        p = leaf(sub, name, fn, help_text)
        p.add_argument("--config", help="JSON config file (QAOABATCH_* env vars override it)")
        p.add_argument("--host")
        p.add_argument("--port", type=int)
        p.add_argument("--profiles")
        if name == "serve":
            p.add_argument("--journal")
        else:
            p.add_argument("--gateway")
            p.add_argument("--capacity", type=int)
            p.add_argument("--worker-id")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except (QaoaBatchError, OSError, ValueError, KeyError) as exc:
        doc = {"error": type(exc).__name__, "message": str(exc)}
        ids = getattr(exc, "circuit_ids", None)
        if ids:
            doc["circuit_ids"] = ids
        print(json.dumps(doc), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
