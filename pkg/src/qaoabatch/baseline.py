"""Goemans-Williamson MaxCut baseline and the partitioned/unpartitioned
cut-ratio sweep.

The SDP relaxation is solved in low-rank form: each node gets a unit vector
in ``R^r`` with ``r = ceil(sqrt(2n))`` and we ascend
``sum_uv w_uv (1 - x_u.x_v) / 2`` by gradient steps followed by row
renormalization. With step ``1 / (2 * max weighted degree)`` every step is a
power-method step on the positive semidefinite matrix ``4*d_max*I - A``, so the
relaxed objective never decreases.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .graph import cut_size, generate
from .partition import aggregate, partition

GW_MAX_ITER = 5000
GW_TOL = 1e-7
GW_HYPERPLANES = 100

CSV_FIELDS = ("family", "n", "k_fraction", "seed", "c_part", "c_unpart", "ratio")

# graph families of the cut-ratio sweep; the name is what lands in the CSV
FAMILY_PRESETS = {
    "circulant": ("circulant", {"offsets": (1, 4)}),
    "gnp": ("gnp", {"p": 0.3}),
    "regular-4": ("regular", {"d": 4}),
    "bipartite": ("bipartite", {"p": 1.0}),
    "star": ("star", {}),
}


@dataclass
class Relaxation:
    vectors: np.ndarray
    objective: float
    history: list
    iterations: int


def _relaxed_value(adj, total_w, x):
    return 0.5 * (total_w - 0.5 * float(np.sum(adj * (x @ x.T))))


def gw_relax(g, seed=0, max_iter=GW_MAX_ITER, tol=GW_TOL, rank=None):
    """Low-rank projected gradient ascent on the MaxCut SDP relaxation."""
    n = g.num_nodes
    r = rank or max(1, math.ceil(math.sqrt(2 * n)))
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, r))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    adj = g.adjacency()
    total_w = g.total_weight()
    value = _relaxed_value(adj, total_w, x)
    history = [value]
    d_max = float(np.max(np.sum(np.abs(adj), axis=1))) if n else 0.0
    if d_max == 0.0:
        return Relaxation(x, value, history, 0)
    step = 1.0 / (2.0 * d_max)
    it = 0
    for it in range(1, max_iter + 1):
        x = x - 0.5 * step * (adj @ x)
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        new = _relaxed_value(adj, total_w, x)
        history.append(new)
        done = abs(new - value) <= tol * max(abs(value), 1e-12)
        value = new
        if done:
            break
    return Relaxation(x, value, history, it)


def round_hyperplanes(g, vectors, seed=0, count=GW_HYPERPLANES):
    """Best of ``count`` random-hyperplane roundings; the first maximizer wins ties."""
    n, r = vectors.shape
    rng = np.random.default_rng([seed, 1])
    planes = rng.normal(size=(r, count))
    sides = (vectors @ planes < 0).astype(np.int8)  # n x count
    us, vs, ws = g.edge_arrays()
    values = (ws[:, None] * (sides[us] != sides[vs])).sum(axis=0) if len(ws) else np.zeros(count)
    best = int(np.argmax(values))
    return float(values[best]), tuple(int(b) for b in sides[:, best])


def gw_solve(g, seed=0, hyperplanes=GW_HYPERPLANES):
    """Goemans-Williamson cut: relaxation plus best-of-``hyperplanes`` rounding."""
    if g.num_nodes < 1:
        raise ParameterError("graph must have at least one node")
    relax = gw_relax(g, seed)
    return round_hyperplanes(g, relax.vectors, seed, hyperplanes)


def subproblem_cap(n, k_fraction):
    if not 0.0 < k_fraction <= 1.0:
        raise ParameterError(f"k_fraction must be in (0, 1], got {k_fraction}")
    return max(2, int(math.floor(k_fraction * n + 0.5)))


def gw_partitioned(g, k_fraction, seed=0):
    """Partition to ``k_fraction * n`` nodes per cluster, solve each with GW, merge."""
    plan = partition(g, subproblem_cap(g.num_nodes, k_fraction), seed)
    subs = [gw_solve(c.graph, seed)[1] for c in plan.clusters]
    assignment = aggregate(g, plan, subs)
    return cut_size(g, assignment), assignment


@dataclass
class CutRatioRecord:
    family: str
    n: int
    k_fraction: float
    seed: int
    c_part: float
    c_unpart: float
    ratio: float


def family_graph(family, n, seed):
    if family not in FAMILY_PRESETS:
        raise ParameterError(f"unknown experiment family {family!r}; known: {sorted(FAMILY_PRESETS)}")
    kind, params = FAMILY_PRESETS[family]
    params = dict(params)
    if kind in ("gnp", "regular", "bipartite"):
        params["seed"] = seed
    return generate(kind, n, **params)


def cut_ratio_experiment(families, sizes, fractions, seeds, progress=None):
    """Full Cartesian sweep; one record per (family, n, fraction, seed)."""
    records = []
    for family in families:
        for n in sizes:
            for seed in seeds:
                g = family_graph(family, n, seed)
                c_unpart = gw_solve(g, seed)[0]
                for frac in fractions:
                    c_part = gw_partitioned(g, frac, seed)[0]
                    ratio = c_part / c_unpart if c_unpart > 0 else float("nan")
                    records.append(CutRatioRecord(family, n, frac, seed, c_part, c_unpart, ratio))
                    if progress:
                        progress(records[-1])
    return records


def write_ratio_csv(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for r in records:
            writer.writerow([r.family, r.n, r.k_fraction, r.seed, r.c_part, r.c_unpart, r.ratio])


def read_ratio_csv(path):
    with open(path, newline="") as fh:
        return [
            CutRatioRecord(row["family"], int(row["n"]), float(row["k_fraction"]), int(row["seed"]),
                           float(row["c_part"]), float(row["c_unpart"]), float(row["ratio"]))
            for row in csv.DictReader(fh)
        ]


def summarize_ratios(records):
    """Median ratio and fraction below 1, per ``(family, k_fraction)`` and per fraction overall."""
    out = {}
    keys = {(r.family, r.k_fraction) for r in records} | {("*", r.k_fraction) for r in records}
    for fam, frac in sorted(keys):
        vals = np.array([r.ratio for r in records
                         if r.k_fraction == frac and (fam == "*" or r.family == fam)])
        out[(fam, frac)] = {"median": float(np.median(vals)), "below_one": float(np.mean(vals < 1.0)),
                            "count": int(vals.size)}
    return out


def plot_script(csv_name):
    """A gnuplot script that scatters ratio against n, one panel per fraction."""
    return "\n".join([
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set multiplot layout 3,1",
        *[
            f"set title 'k = {f}n'; plot '{csv_name}' using "
            f"(($3=={f})?$2:1/0):7 with points title 'cut ratio'"
            for f in (0.75, 0.5, 0.25)
        ],
        "unset multiplot",
        "",
    ])

