"""End-to-end partitioned QAOA: partition, optimize each subgraph, aggregate."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..circuits import QaoaParams, batch_ground, build_scaffold, cost_terms, ground
from ..errors import ParameterError
from ..graph import cut_size
from ..optimize import (
    absorb,
    expectation_from_counts,
    load_checkpoint,
    monte_carlo_init,
    monte_carlo_step,
    nelder_mead_init,
    nelder_mead_step,
    save_checkpoint,
)
from ..partition import aggregate, partition
from ..qasm import parse
from ..sim.statevector import exact_probabilities
from .client import LocalExecutor


@dataclass
class OptimizerConfig:
    method: str = "monte_carlo"  # or "nelder_mead"
    samples: int = 100
    max_iterations: int | None = None  # 1 for Monte Carlo, 100 for Nelder-Mead
    x0: tuple | None = None  # Nelder-Mead start, [gammas..., betas...]
    step: float = 0.1
    tolerance: float = 1e-4

    def __post_init__(self):
        if self.method not in ("monte_carlo", "nelder_mead"):
            raise ParameterError(f"unknown optimizer {self.method!r}")
        if self.max_iterations is None:
            self.max_iterations = 1 if self.method == "monte_carlo" else 100


def _seed(*parts):
    return int(np.random.SeedSequence([int(x) for x in parts]).generate_state(1)[0])


class _Evaluator:
    """Negated expected cut for batches of parameter vectors."""

    def __init__(self, scaffold, terms, objective, executor, shots, policy):
        self.scaffold, self.terms = scaffold, terms
        self.objective, self.executor = objective, executor
        self.shots, self.policy = shots, policy
        self.circuits = 0

    def __call__(self, points, seed):
        params = [QaoaParams.from_vector(x) for x in points]
        texts = batch_ground(self.scaffold, params)
        self.circuits += len(texts)
        if self.objective == "exact":
            dists = [exact_probabilities(parse(t)) for t in texts]
        else:
            dists = self.executor.run([(t, self.shots) for t in texts], seed=seed, policy=self.policy)
        return [-expectation_from_counts(self.terms, d) for d in dists]


def _optimize(evaluate, config, p, seed, index, ckpt):
    state = load_checkpoint(ckpt) if ckpt and ckpt.exists() else None
    if config.method == "monte_carlo":
        state = state or monte_carlo_init(p, config.samples, _seed(seed, index), config.max_iterations)
        while not state.done:
            state, params = monte_carlo_step(state)
            values = evaluate([x.to_vector() for x in params], _seed(seed, index, len(state.evaluated)))
            state = absorb(state, values)
            if ckpt:
                save_checkpoint(ckpt, state)
        return state
    if state is None:
        x0 = config.x0 or [0.5] * p + [0.25] * p
        if len(x0) != 2 * p:
            raise ParameterError(f"x0 needs {2 * p} entries, got {len(x0)}")
        state, _ = nelder_mead_init(x0, config.step, config.max_iterations, config.tolerance,
                                    _seed(seed, index))
    points = list(state.pending)
    while points:
        values = evaluate(points, _seed(seed, index, len(state.evaluated)))
        state, points = nelder_mead_step(state, values)
        if ckpt:
            save_checkpoint(ckpt, state)
    return state


def run_workflow(g, qubit_cap, p, optimizer=None, executor=None, shots=1000, seed=0,
                 objective="sampled", policy="sv_optimized", run_dir=None):
    """Partition ``g``, optimize QAOA on every subgraph, and aggregate one global cut.

    ``objective`` is ``"sampled"`` (expectation from executor counts) or
    ``"exact"`` (expectation from exact probabilities). Either way, each
    subgraph's answer is the most frequent bitstring of its best parameter
    set, sampled through the executor. Optimizer state is checkpointed into
    ``run_dir`` after every absorbed iteration, and an existing checkpoint is
    resumed. Returns ``(assignment, cut, report)``.
    """
    if objective not in ("sampled", "exact"):
        raise ParameterError(f"objective must be 'sampled' or 'exact', got {objective!r}")
    optimizer = optimizer or OptimizerConfig()
    executor = executor or LocalExecutor()
    run_dir = Path(run_dir) if run_dir else None
    if run_dir:
        (run_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    plan = partition(g, qubit_cap, seed)
    subs, clusters, circuits = [], [], 0
    for idx, cluster in enumerate(plan.clusters):
        sub = cluster.graph
        info = {"index": idx, "nodes": list(cluster.nodes), "edges": sub.num_edges}
        if sub.num_edges == 0:
            subs.append((0,) * sub.num_nodes)
            clusters.append({**info, "bitstring": "0" * sub.num_nodes, "evaluations": 0})
            continue
        scaffold = build_scaffold(sub, p)
        evaluate = _Evaluator(scaffold, cost_terms(sub), objective, executor, shots, policy)
        ckpt = run_dir / "checkpoints" / f"cluster_{idx:03d}.json" if run_dir else None
        state = _optimize(evaluate, optimizer, p, seed, idx, ckpt)
        best = state.best_params()
        final = executor.run([(ground(scaffold, best), shots)], seed=_seed(seed, idx, 1 << 30),
                             policy=policy)[0]
        bits = final.most_frequent()
        subs.append(tuple(int(b) for b in bits))
        circuits += evaluate.circuits + 1
        clusters.append({
            **info,
            "best_expectation": -state.best[1],
            "best_params": {"gammas": list(best.gammas), "betas": list(best.betas)},
            "evaluations": len(state.evaluated),
            "bitstring": bits,
            "final_counts": final.to_dict(),
        })
    assignment = aggregate(g, plan, subs)
    cut = cut_size(g, assignment)
    report = {
        "version": 1,
        "num_nodes": g.num_nodes,
        "num_edges": g.num_edges,
        "num_clusters": plan.num_clusters,
        "cut_edges": len(plan.cut_edges),
        "p": p,
        "optimizer": asdict(optimizer),
        "objective": objective,
        "shots": shots,
        "seed": seed,
        "circuits": circuits,
        "clusters": clusters,
        "assignment": list(assignment),
        "cut": cut,
        "wall_s": time.perf_counter() - t0,
    }
    if run_dir:
        (run_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
        plan.save(run_dir / "partition.json")
    return tuple(assignment), cut, report
