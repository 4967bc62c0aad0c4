"""Partitioned QAOA for MaxCut: graph partitioning, circuit batches, simulation
backends and a gateway/worker execution service."""

__version__ = "0.1.0"
