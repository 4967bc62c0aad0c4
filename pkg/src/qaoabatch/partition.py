"""Spectral partitioning of a graph into qubit-capped clusters, and aggregation
of per-cluster MaxCut solutions back into one global assignment."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, NumericError, ParameterError, PartitionError
from .graph import Graph, cut_size

EIGEN_MAX_NODES = 2048
KMEANS_MAX_ITER = 300
EXHAUSTIVE_MAX_CLUSTERS = 16


@dataclass(frozen=True)
class Cluster:
    nodes: tuple  # local index -> global node id
    graph: Graph

    @property
    def size(self):
        return len(self.nodes)


@dataclass(frozen=True)
class PartitionPlan:
    num_clusters: int
    labels: tuple
    clusters: tuple
    cut_edges: tuple

    @property
    def subgraphs(self):
        return [c.graph for c in self.clusters]

    def to_dict(self):
        return {
            "version": 1,
            "num_clusters": self.num_clusters,
            "labels": list(self.labels),
            "clusters": [{"nodes": list(c.nodes), "graph": c.graph.to_dict()} for c in self.clusters],
            "cut_edges": [list(e) for e in self.cut_edges],
        }

    @classmethod
    def from_dict(cls, data):
        clusters = tuple(
            Cluster(tuple(c["nodes"]), Graph.from_dict(c["graph"])) for c in data["clusters"]
        )
        return cls(
            int(data["num_clusters"]),
            tuple(data["labels"]),
            clusters,
            tuple(tuple(e) for e in data["cut_edges"]),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


def normalized_laplacian(g):
    """``I - D^-1/2 A D^-1/2``; isolated nodes get a zero inverse-sqrt degree."""
    a = g.adjacency()
    deg = a.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    return np.eye(g.num_nodes) - inv_sqrt[:, None] * a * inv_sqrt[None, :]


def spectral_embed(g, k):
    """Rows of the ``k`` lowest eigenvectors of the normalized Laplacian, scaled to unit length."""
    n = g.num_nodes
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    if n > EIGEN_MAX_NODES:
        raise CapacityError(f"dense eigensolver limited to {EIGEN_MAX_NODES} nodes, got {n}")
    try:
        _, vecs = np.linalg.eigh(normalized_laplacian(g))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    emb = vecs[:, :k].copy()
    norms = np.linalg.norm(emb, axis=1)
    nz = norms > 1e-12
    emb[nz] /= norms[nz, None]
    emb[~nz] = 0.0
    return emb


def _kmeans_pp(points, k, rng):
    n = len(points)
    centers = [int(rng.integers(n))]
    d2 = np.sum((points - points[centers[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            # every remaining point coincides with a chosen center
            free = np.setdiff1d(np.arange(n), centers)
            nxt = int(rng.choice(free))
        else:
            nxt = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            nxt = min(nxt, n - 1)
        centers.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[centers].astype(float)


def _repair_empty(points, labels, k):
    while True:
        sizes = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(sizes == 0)
        if empty.size == 0:
            return labels
        big = int(np.argmax(sizes))
        members = np.flatnonzero(labels == big)
        centroid = points[members].mean(axis=0)
        far = members[int(np.argmax(np.sum((points[members] - centroid) ** 2, axis=1)))]
        labels[far] = empty[0]


def kmeans(points, k, seed=0, max_iter=KMEANS_MAX_ITER):
    """Lloyd's algorithm with k-means++ seeding; every returned cluster is nonempty."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n = len(points)
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(points, k, rng)
    labels = None
    for _ in range(max_iter):
        dist = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new = _repair_empty(points, np.argmin(dist, axis=1), k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.array([points[labels == c].mean(axis=0) for c in range(k)])
    return labels.astype(int)


def _build_plan(g, labels, k):
    members = [[] for _ in range(k)]
    for node, lab in enumerate(labels):
        members[lab].append(node)
    clusters = tuple(Cluster(tuple(m), g.subgraph(m)) for m in members)
    cut = tuple((u, v, w) for u, v, w in g.edges if labels[u] != labels[v])
    return PartitionPlan(k, tuple(int(x) for x in labels), clusters, cut)


def partition(g, qubit_cap, seed=0):
    """Split ``g`` into clusters of at most ``qubit_cap`` nodes.

    Starts at ``ceil(n / qubit_cap)`` clusters and adds one cluster at a time
    until spectral k-means yields no oversized cluster.
    """
    if qubit_cap < 2:
        raise ParameterError(f"qubit_cap must be >= 2, got {qubit_cap}")
    n = g.num_nodes
    if n == 0:
        return PartitionPlan(0, (), (), ())
    deg = g.degrees(weighted=False)
    active = [i for i in range(n) if deg[i] > 0]
    isolated = [i for i in range(n) if deg[i] == 0]
    core = g.subgraph(active)
    k = max(1, math.ceil(n / qubit_cap))
    while k <= n:
        labels = np.zeros(n, dtype=int)
        if active:
            kc = min(k, len(active))
            if kc == 1:
                core_labels = np.zeros(len(active), dtype=int)
            else:
                core_labels = kmeans(spectral_embed(core, kc), kc, seed)
            labels[active] = core_labels
        sizes = np.bincount(labels[active], minlength=k) if active else np.zeros(k, dtype=int)
        for node in isolated:
            c = int(np.argmin(sizes))
            labels[node] = c
            sizes[c] += 1
        if sizes.max() <= qubit_cap and np.all(sizes > 0):
            return _build_plan(g, labels, k)
        k += 1
    raise PartitionError(f"could not satisfy qubit cap {qubit_cap} for {n} nodes")  # pragma: no cover


def _merge(plan, sub_solutions):
    if len(sub_solutions) != plan.num_clusters:
        raise ParameterError(f"expected {plan.num_clusters} sub-solutions, got {len(sub_solutions)}")
    bits = np.zeros(len(plan.labels), dtype=np.int8)
    for c, (cluster, sol) in enumerate(zip(plan.clusters, sub_solutions)):
        sol = np.asarray(sol, dtype=np.int8).reshape(-1)
        if sol.size != cluster.size:
            raise ParameterError(
                f"cluster {c} has {cluster.size} nodes but its solution has length {sol.size}"
            )
        bits[list(cluster.nodes)] = sol
    return bits


def _apply_flips(plan, bits, flips):
    out = bits.copy()
    labels = np.asarray(plan.labels)
    for c, f in enumerate(flips):
        if f:
            mask = labels == c
            out[mask] = 1 - out[mask]
    return out


def _cross_weights(plan, bits):
    """Per ordered cluster pair: weight cut as-is (same) and weight cut if one side flips."""
    k = plan.num_clusters
    keep = np.zeros((k, k))
    flip = np.zeros((k, k))
    for u, v, w in plan.cut_edges:
        cu, cv = plan.labels[u], plan.labels[v]
        if bits[u] != bits[v]:
            keep[cu, cv] += w
            keep[cv, cu] += w
        else:
            flip[cu, cv] += w
            flip[cv, cu] += w
    return keep, flip


def aggregate(g, plan, sub_solutions):
    """Merge per-cluster assignments, choosing a global flip for each cluster.

    Clusters are visited largest first; each keeps or flips its bits to
    maximize the cut against the clusters already fixed. The naive merge
    without flips is returned instead if it happens to cut more.
    """
    bits = _merge(plan, sub_solutions)
    k = plan.num_clusters
    if k <= 1:
        return tuple(int(b) for b in bits)
    keep, flip = _cross_weights(plan, bits)
    order = sorted(range(k), key=lambda c: (-plan.clusters[c].size, c))
    flips = [0] * k
    fixed = [order[0]]
    for c in order[1:]:
        # edge (c, d) is cut when flips differ XOR it was uncut, else when equal
        gain_keep = sum(keep[c, d] if flips[d] == 0 else flip[c, d] for d in fixed)
        gain_flip = sum(flip[c, d] if flips[d] == 0 else keep[c, d] for d in fixed)
        flips[c] = 1 if gain_flip > gain_keep else 0
        fixed.append(c)
    merged = _apply_flips(plan, bits, flips)
    if cut_size(g, bits) > cut_size(g, merged):
        merged = bits
    return tuple(int(b) for b in merged)


def aggregate_exhaustive(g, plan, sub_solutions):
    """Best flip pattern over all ``2^(k-1)`` choices (cluster 0 pinned)."""
    k = plan.num_clusters
    if k > EXHAUSTIVE_MAX_CLUSTERS:
        raise CapacityError(f"exhaustive aggregation limited to {EXHAUSTIVE_MAX_CLUSTERS} clusters")
    bits = _merge(plan, sub_solutions)
    best, best_bits = -1.0, bits
    for rest in itertools.product((0, 1), repeat=max(k - 1, 0)):
        cand = _apply_flips(plan, bits, (0,) + rest)
        val = cut_size(g, cand)
        if val > best:
            best, best_bits = val, cand
    return tuple(int(b) for b in best_bits)
