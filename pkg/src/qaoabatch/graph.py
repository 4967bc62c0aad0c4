"""Undirected weighted graphs, benchmark generators and cut metrics.

Graph files are JSON objects ``{"n": int, "edges": [[u, v, w], ...]}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapacityError, ParameterError

BRUTEFORCE_MAX_NODES = 24
_REGULAR_RETRIES = 2000


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with nodes ``0..num_nodes-1``.

    Edges are normalized to ``u < v`` and stored sorted by ``(u, v)``.
    """

    num_nodes: int
    edges: tuple = field(default=())

    def __post_init__(self):
        n = int(self.num_nodes)
        if n < 0:
            raise ParameterError(f"num_nodes must be non-negative, got {n}")
        seen = {}
        for e in self.edges:
            if len(e) == 2:
                u, v, w = e[0], e[1], 1.0
            elif len(e) == 3:
                u, v, w = e
            else:
                raise ParameterError(f"edge must be (u, v) or (u, v, w), got {e!r}")
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise ParameterError(f"edge ({u}, {v}) out of range for {n} nodes")
            if u == v:
                raise ParameterError(f"self-loop on node {u}")
            if not math.isfinite(w):
                raise ParameterError(f"non-finite weight on edge ({u}, {v})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ParameterError(f"parallel edge {key}")
            seen[key] = w
        object.__setattr__(self, "num_nodes", n)
        object.__setattr__(self, "edges", tuple((u, v, seen[(u, v)]) for u, v in sorted(seen)))

    @property
    def n(self):
        return self.num_nodes

    @property
    def num_edges(self):
        return len(self.edges)

    def total_weight(self):
        return float(sum(w for _, _, w in self.edges))

    def degrees(self, weighted=True):
        deg = np.zeros(self.num_nodes)
        for u, v, w in self.edges:
            inc = w if weighted else 1.0
            deg[u] += inc
            deg[v] += inc
        return deg

    def adjacency(self):
        a = np.zeros((self.num_nodes, self.num_nodes))
        for u, v, w in self.edges:
            a[u, v] = a[v, u] = w
        return a

    def edge_arrays(self):
        """Return ``(us, vs, ws)`` numpy arrays for vectorized evaluation."""
        if not self.edges:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0)
        us, vs, ws = zip(*self.edges)
        return np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64), np.array(ws, dtype=float)

    def subgraph(self, nodes):
        """Induced subgraph on ``nodes`` (in the given order), relabelled ``0..len-1``."""
        index = {g: i for i, g in enumerate(nodes)}
        sub = [(index[u], index[v], w) for u, v, w in self.edges if u in index and v in index]
        return Graph(len(nodes), tuple(sub))

    def to_dict(self):
        return {"n": self.num_nodes, "edges": [[u, v, w] for u, v, w in self.edges]}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed graph document: {exc}") from exc

    def to_json(self):
        return json.dumps(self.to_dict())

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def complete_graph(n):
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def circulant_graph(n, offsets):
    offsets = sorted(set(int(o) for o in offsets))
    if not offsets:
        raise ParameterError("circulant offsets must be nonempty")
    for o in offsets:
        if not 1 <= o <= n // 2:
            raise ParameterError(f"circulant offset {o} not in 1..{n // 2}")
    edges = set()
    for i in range(n):
        for o in offsets:
            j = (i + o) % n
            edges.add((min(i, j), max(i, j)))
    return Graph(n, tuple(edges))


def gnp_graph(n, p, seed):
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"edge probability {p} not in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph(n, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))


def regular_graph(n, d, seed):
    """Random ``d``-regular graph from the pairing model, rejecting loops and multi-edges."""
    if d < 0 or d >= n or (n * d) % 2:
        raise ParameterError(f"no {d}-regular graph on {n} nodes")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), d)
    for _ in range(_REGULAR_RETRIES):
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        keys = {(min(a, b), max(a, b)) for a, b in pairs.tolist()}
        if len(keys) == len(pairs):
            return Graph(n, tuple(keys))
    raise ParameterError(f"pairing model failed for d={d}, n={n} after {_REGULAR_RETRIES} tries")


def bipartite_graph(n, p, seed, n1=None):
    n1 = n // 2 if n1 is None else int(n1)
    if not 0 <= n1 <= n:
        raise ParameterError(f"bipartite side size {n1} not in 0..{n}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"edge probability {p} not in [0, 1]")
    rng = np.random.default_rng(seed)
    left, right = np.meshgrid(np.arange(n1), np.arange(n1, n), indexing="ij")
    keep = rng.random(left.shape) < p
    return Graph(n, tuple(zip(left[keep].tolist(), right[keep].tolist())))


def star_graph(n):
    return Graph(n, tuple((0, i) for i in range(1, n)))


def generate(family, n, **params):
    """Build a graph of a named benchmark family.

    Families and their parameters: ``circulant(offsets)``, ``gnp(p, seed)``,
    ``regular(d, seed)``, ``bipartite(p, seed, n1=None)``, ``star``, ``complete``.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    try:
        if family == "circulant":
            return circulant_graph(n, params["offsets"])
        if family == "gnp":
            return gnp_graph(n, params["p"], params.get("seed", 0))
        if family == "regular":
            return regular_graph(n, params["d"], params.get("seed", 0))
        if family == "bipartite":
            return bipartite_graph(n, params["p"], params.get("seed", 0), params.get("n1"))
    except KeyError as exc:
        raise ParameterError(f"family {family!r} requires parameter {exc.args[0]!r}") from None
    if family == "star":
        return star_graph(n)
    if family == "complete":
        return complete_graph(n)
    raise ParameterError(f"unknown graph family {family!r}")


def _as_bits(g, assignment):
    bits = np.asarray(assignment, dtype=np.int8).reshape(-1)
    if bits.size != g.num_nodes:
        raise ParameterError(f"assignment has length {bits.size}, graph has {g.num_nodes} nodes")
    return bits


def cut_size(g, assignment):
    """Total weight of edges whose endpoints sit on different sides."""
    bits = _as_bits(g, assignment)
    us, vs, ws = g.edge_arrays()
    return float(np.sum(ws * (bits[us] != bits[vs])))


def complement(assignment):
    return tuple(1 - int(b) for b in assignment)


def max_cut_bruteforce(g, chunk_bits=20):
    """Exact maximum cut by exhaustive scan with node 0 pinned to side 0.

    Assignments are enumerated as integers with node 0 as the most significant
    bit, so the first maximizer found is the lowest bitstring value.
    """
    n = g.num_nodes
    if n > BRUTEFORCE_MAX_NODES:
        raise CapacityError(f"brute force limited to {BRUTEFORCE_MAX_NODES} nodes, got {n}")
    if n <= 1 or not g.edges:
        return 0.0, tuple([0] * n)
    total = 1 << (n - 1)
    step = 1 << min(chunk_bits, n - 1)
    best_val, best_code = -1.0, 0
    for start in range(0, total, step):
        codes = np.arange(start, min(start + step, total), dtype=np.int64)
        vals = np.zeros(codes.size)
        for u, v, w in g.edges:
            vals += w * (((codes >> (n - 1 - u)) ^ (codes >> (n - 1 - v))) & 1)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_code = float(vals[i]), int(codes[i])
    bits = tuple((best_code >> (n - 1 - i)) & 1 for i in range(n))
    return best_val, bits
