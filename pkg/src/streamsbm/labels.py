from dataclasses import dataclass, field

import numpy as np

SPECTRAL, GREEDY, RANDOM = 0, 1, 2
PROVENANCE_NAMES = ("spectral", "greedy", "random")


@dataclass
class ClusterAssignment:
    """Labels ``0..K-1`` for the nodes in ``nodes`` (sorted ids)."""
    nodes: np.ndarray
    labels: np.ndarray
    K: int
    provenance: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.provenance is None:
            self.provenance = np.full(len(self.nodes), SPECTRAL, dtype=np.int8)
        if len(self.labels) != len(self.nodes):
            raise ValueError("one label per node required")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.K):
            raise ValueError("labels out of range")
        if len(self.nodes) > 1 and np.any(np.diff(self.nodes) <= 0):
            order = np.argsort(self.nodes, kind="stable")
            self.nodes, self.labels = self.nodes[order], self.labels[order]
            self.provenance = np.asarray(self.provenance)[order]
            if np.any(np.diff(self.nodes) == 0):
                raise ValueError("duplicate node in assignment")

    def __len__(self):
        return len(self.nodes)

    def label_of(self, v):
        i = int(np.searchsorted(self.nodes, v))
        if i >= len(self.nodes) or self.nodes[i] != v:
            raise KeyError(v)
        return int(self.labels[i])

    def clusters(self):
        return [self.nodes[self.labels == k] for k in range(self.K)]

    def merge(self, other):
        return ClusterAssignment(np.concatenate([self.nodes, other.nodes]),
                                 np.concatenate([self.labels, other.labels]), self.K,
                                 np.concatenate([self.provenance, other.provenance]))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("node_id,label,provenance\n")
            for v, l, p in zip(self.nodes, self.labels, self.provenance):
                fh.write(f"{v},{l},{PROVENANCE_NAMES[p]}\n")
