"""One-pass, memory-limited clustering engines.

Columns arrive in blocks of ``B``. Each block is clustered on its own with
:func:`classify_green` and aligned with the clusters found so far by edge
density. The offline engine keeps a node-to-cluster edge count matrix and
finishes with a greedy relabelling of every node; the online engine keeps
only the first block's partition and emits each block's labels as soon as
the block is done.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import rng as _rng
from .labels import ClusterAssignment, GREEDY, RANDOM, SPECTRAL
from .memory import MemoryMeter, index_bits, label_bits
from .sbm import AdjacencyColumn, ObservedGraph
from .spectral import DEFAULT_MAX_CENTERS, classify_green

_SEED_SUBSAMPLE, _SEED_BLOCK, _SEED_TIES = 31, 32, 33


class ConfigError(ValueError):
    pass


@dataclass
class StreamConfig:
    """Engine parameters. ``p`` is the intra-cluster edge probability.

    With ``p=None`` and ``estimate_p=True`` the engines plug in the mean
    column weight of the first ``ceil(sqrt(n))`` columns divided by ``n``.
    """
    n: int
    h_n: float
    T: int = None
    p: float = None
    estimate_p: bool = False

    def __post_init__(self):
        if self.T is None:
            self.T = self.n
        if self.h_n <= 0:
            raise ConfigError("h_n must be positive")
        if not 0 < self.T <= self.n:
            raise ConfigError("need 0 < T <= n")
        if self.p is None and not self.estimate_p:
            raise ConfigError("p is required unless estimate_p is set")
        if self.p is not None and not 0 < self.p <= 1:
            raise ConfigError("p must lie in (0, 1]")

    @property
    def subsample_threshold(self):
        return self.n ** (1.0 / 3.0)

    def keep_probability(self, p=None):
        p = self.p if p is None else p
        return min(1.0, self.subsample_threshold / (self.n * p))

    def block_size(self, p=None):
        p = self.p if p is None else p
        return int(math.floor(self.n * self.h_n / (min(self.n * p, self.subsample_threshold) * math.log(self.n))))

    def check(self, K, p=None):
        B = self.block_size(p)
        if B < K:
            raise ConfigError(f"block size B={B} is smaller than K={K}")
        if self.T < B:
            raise ConfigError(f"T={self.T} is smaller than the block size B={B}")
        return B


def h_for_block_size(n, p, B):
    """Smallest ``h_n`` (up to rounding slack) giving block size ``B``."""
    return (B + 0.5) * min(n * p, n ** (1.0 / 3.0)) * math.log(n) / n


def subsample_column(col, n, p, seed):
    """Keep each entry independently with probability ``min(1, n^(1/3) / (n p))``."""
    if p <= 0:
        raise ValueError("p must be positive")
    keep = min(1.0, n ** (1.0 / 3.0) / (n * p))
    if keep >= 1.0 or len(col.neighbors) == 0:
        return col
    u = _rng.hash_uniform(seed, col.node_id, col.neighbors)
    return AdjacencyColumn(col.node_id, col.neighbors[u < keep])


class _BlockReader:
    """Pulls subsampled blocks off a stream and charges them to the meter."""

    def __init__(self, stream, config, K, seed, meter):
        self.stream, self.config, self.meter = stream, config, meter
        self.n = stream.n
        self.sub_seed = _rng.child_seed(seed, _SEED_SUBSAMPLE)
        self.pending = []
        p = config.p
        if p is None:
            k = min(config.T, max(1, math.ceil(math.sqrt(self.n))))
            self.pending = [stream.next_column() for _ in range(k)]
            p = max(np.mean([len(c) for c in self.pending]) / self.n, 1.0 / self.n)
        self.p = p
        self.B = config.check(K, p)
        self.blocks = config.T // self.B
        self.bits = index_bits(self.n)

    def read(self):
        cols = []
        for _ in range(self.B):
            raw = self.pending.pop(0) if self.pending else self.stream.next_column()
            c = subsample_column(raw, self.n, self.p, self.sub_seed)
            cols.append(c)
        entries = sum(len(c) for c in cols)
        self.meter.charge("buffer", entries * self.bits, 8 * (entries + len(cols)))
        return cols


def _cluster_block(cols, n, K, seed, tau, meter, max_centers):
    view = ObservedGraph.from_columns(n, cols)
    res = classify_green(view, K, seed=_rng.child_seed(seed, _SEED_BLOCK, tau), meter=meter,
                         max_centers=max_centers)
    return view, res


def _merge_map(view, block_labels, ref_label_of_row, ref_sizes, K):
    """``s(k)``: reference cluster with the highest edge density to block cluster ``k``.

    ``ref_label_of_row`` maps every stored entry's row to its reference
    label (-1 if none). Empty reference clusters never win; ties go to the
    smallest index.
    """
    edges = np.zeros((K, K))
    col_lab = block_labels[view.col_of_entry]
    hit = ref_label_of_row >= 0
    np.add.at(edges, (col_lab[hit], ref_label_of_row[hit]), 1.0)
    block_sizes = np.bincount(block_labels, minlength=K).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        dens = edges / (block_sizes[:, None] * ref_sizes[None, :])
    dens[:, ref_sizes == 0] = -np.inf
    dens = np.nan_to_num(dens, nan=0.0, posinf=0.0)
    return np.argmax(dens, axis=1), block_sizes


@dataclass
class OfflineResult:
    assignment: ClusterAssignment
    block_size: int
    blocks: int
    peak_bits: int
    peak_bytes: int
    block_assignments: list = field(default_factory=list)


def offline_stream(stream, config, K, seed=0, meter=None, max_centers=DEFAULT_MAX_CENTERS,
                   keep_blocks=False):
    """Cluster all ``n`` nodes from the first ``T`` streamed columns."""
    meter = meter if meter is not None else MemoryMeter()
    reader = _BlockReader(stream, config, K, seed, meter)
    n, B = reader.n, reader.B
    hat = np.full(n, -1, dtype=np.int64)
    sizes = np.zeros(K)
    N = np.zeros((n, K), dtype=np.int64)
    count_bits = index_bits(config.T + 1)
    kept = []
    for tau in range(reader.blocks):
        cols = reader.read()
        view, res = _cluster_block(cols, n, K, seed, tau, meter, max_centers)
        if keep_blocks:
            kept.append(res)
        if tau == 0:
            target = res.labels
        else:
            smap, _ = _merge_map(view, res.labels, hat[view.rows], sizes, K)
            target = smap[res.labels]
        hat[res.nodes] = target
        sizes += np.bincount(target, minlength=K)
        np.add.at(N, (view.rows, target[view.col_of_entry]), 1)
        meter.charge("clusters", int((hat >= 0).sum()) * label_bits(K), hat.nbytes)
        meter.charge("N", int(np.count_nonzero(N)) * count_bits, N.nbytes)
        meter.release("buffer")

    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(sizes > 0, N / np.where(sizes > 0, sizes, 1.0), -np.inf)
    best = scores.max(axis=1, keepdims=True)
    tied = scores == best
    u = _rng.hash_uniform(_rng.child_seed(seed, _SEED_TIES), np.arange(n))
    n_tied = tied.sum(axis=1)
    pick = np.minimum((u * n_tied).astype(np.int64), n_tied - 1)
    rank = np.cumsum(tied, axis=1) - 1
    labels = np.argmax(tied & (rank == pick[:, None]), axis=1)
    # a streamed node keeps its block label when that label is among the tied best
    keep = (hat >= 0) & tied[np.arange(n), np.maximum(hat, 0)]
    labels = np.where(keep & (n_tied > 1), hat, labels)
    has_edges = N.sum(axis=1) > 0
    prov = np.where(has_edges, GREEDY, np.where(hat >= 0, SPECTRAL, RANDOM)).astype(np.int8)
    out = ClusterAssignment(np.arange(n), labels, K, prov,
                            {"block_size": B, "blocks": reader.blocks, "p_used": reader.p,
                             "streamed": int((hat >= 0).sum())})
    meter.release("clusters")
    meter.release("N")
    return OfflineResult(out, B, reader.blocks, meter.peak, meter.peak_bytes, kept)


@dataclass
class Emission:
    block_index: int
    nodes: np.ndarray
    labels: np.ndarray


@dataclass
class OnlineResult:
    emissions: list
    block_size: int
    blocks: int
    peak_bits: int
    peak_bytes: int
    retained_bits: list        # meter reading after each block is discarded
    first_block_bits: int

    def assignment(self, K):
        nodes = np.concatenate([e.nodes for e in self.emissions]) if self.emissions else np.zeros(0, int)
        labels = np.concatenate([e.labels for e in self.emissions]) if self.emissions else np.zeros(0, int)
        return ClusterAssignment(nodes, labels, K)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("block_index,node_id,label\n")
            for e in self.emissions:
                for v, l in zip(e.nodes, e.labels):
                    fh.write(f"{e.block_index},{v},{l}\n")


def online_stream(stream, config, K, seed=0, meter=None, max_centers=DEFAULT_MAX_CENTERS, emit=None):
    """Emit labels block by block, retaining only the first block's partition.

    ``emit`` (optional) is called with each :class:`Emission` as it is produced.
    """
    meter = meter if meter is not None else MemoryMeter()
    reader = _BlockReader(stream, config, K, seed, meter)
    n, B = reader.n, reader.B
    emissions, retained = [], []
    ref_nodes = ref_labels = None
    ref_sizes = np.zeros(K)
    first_bits = 0
    for tau in range(reader.blocks):
        cols = reader.read()
        view, res = _cluster_block(cols, n, K, seed, tau, meter, max_centers)
        if tau == 0:
            ref_nodes, ref_labels = res.nodes.copy(), res.labels.copy()
            ref_sizes = np.bincount(ref_labels, minlength=K).astype(float)
            first_bits = len(ref_nodes) * (index_bits(n) + label_bits(K))
            meter.charge("first_block", first_bits, ref_nodes.nbytes + ref_labels.nbytes)
            out = res.labels
        else:
            pos = np.searchsorted(ref_nodes, view.rows)
            pos_c = np.minimum(pos, len(ref_nodes) - 1)
            row_ref = np.where(ref_nodes[pos_c] == view.rows, ref_labels[pos_c], -1)
            smap, _ = _merge_map(view, res.labels, row_ref, ref_sizes, K)
            out = smap[res.labels]
        e = Emission(tau, res.nodes, out)
        emissions.append(e)
        if emit is not None:
            emit(e)
        del view, res, cols
        meter.release("buffer")
        retained.append(meter.current)
    meter.release("first_block")
    return OnlineResult(emissions, B, reader.blocks, meter.peak, meter.peak_bytes, retained, first_bits)
