from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError


@dataclass
class MeasurementCounts:
    """Bitstring histogram; qubit 0 is the leftmost character.

    ``metadata`` (backend, wall time, truncation loss) is informational and
    excluded from equality.
    """

    counts: dict
    total_shots: int
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.counts = {k: int(v) for k, v in sorted(self.counts.items())}
        if sum(self.counts.values()) != self.total_shots:
            raise ContractError(
                f"counts sum to {sum(self.counts.values())}, expected {self.total_shots}"
            )
        if len({len(k) for k in self.counts}) > 1:
            raise ContractError("bitstring keys have mixed lengths")

    @property
    def num_qubits(self):
        return len(next(iter(self.counts))) if self.counts else 0

    def most_frequent(self):
        """Bitstring with the highest count; ties go to the lowest bitstring."""
        return max(self.counts.items(), key=lambda kv: (kv[1], [-int(c) for c in kv[0]]))[0]

    def probabilities(self):
        return {k: v / self.total_shots for k, v in self.counts.items()}

    def to_dict(self):
        return {"counts": dict(self.counts), "total_shots": self.total_shots}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data, metadata=None):
        return cls(dict(data["counts"]), int(data["total_shots"]), dict(metadata or {}))


def counts_from_indices(indices, n, shots, metadata=None):
    values, freq = np.unique(np.asarray(indices, dtype=np.int64), return_counts=True)
    counts = {format(int(v), f"0{n}b"): int(c) for v, c in zip(values, freq)}
    return MeasurementCounts(counts, int(shots), dict(metadata or {}))
