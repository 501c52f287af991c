"""Block-stochastic power method baseline.

Each block of ``B`` columns approximates ``(A A^T - diag) Q`` and is followed
by one QR step; the final subspace is clustered with :func:`detection`.
"""
from dataclasses import dataclass
import math

import numpy as np

from .labels import ClusterAssignment
from .linalg import qr_orthonormalize
from .memory import FLOAT_BITS, MemoryMeter
from .spectral import DEFAULT_MAX_CENTERS, detection


@dataclass
class BlockPowerConfig:
    n: int
    p: float
    g_n: float = 1.0
    T: int = None

    def __post_init__(self):
        if self.T is None:
            self.T = self.n
        if not 0 < self.p <= 1 or self.g_n <= 0:
            raise ValueError("need 0 < p <= 1 and g_n > 0")

    @property
    def block_size(self):
        return max(1, math.ceil(self.g_n * math.log(self.n) / self.p))

    @property
    def degree_cap(self):
        return 10 * self.n * self.p


def covariance_update(S, col, Q, B, values=None):
    """``S += (a a^T - diag(a a^T)) Q / B`` for the sparse column ``a``.

    ``col`` holds the row indices of ``a``; ``values`` its entries (ones if
    omitted). Costs O(len(col) * K); ``a a^T`` is never formed.
    """
    idx = np.asarray(col, dtype=np.int64)
    if len(idx) == 0:
        return S
    a = np.ones(len(idx)) if values is None else np.asarray(values, dtype=np.float64)
    Qi = Q[idx]
    proj = a @ Qi
    S[idx] += (np.outer(a, proj) - (a * a)[:, None] * Qi) / B
    return S


def _block_update(S, cols, Q, B):
    lengths = np.array([len(c) for c in cols])
    if lengths.sum() == 0:
        return S
    idx = np.concatenate(cols).astype(np.int64)
    Qi = Q[idx]
    owner = np.repeat(np.arange(len(cols)), lengths)
    sums = np.zeros((len(cols), Q.shape[1]))
    np.add.at(sums, owner, Qi)
    contrib = (sums[owner] - Qi) / B
    for k in range(Q.shape[1]):
        S[:, k] += np.bincount(idx, weights=contrib[:, k], minlength=S.shape[0])
    return S


@dataclass
class BlockPowerResult:
    assignment: ClusterAssignment
    Q: np.ndarray
    block_size: int
    blocks: int
    skipped_columns: int
    peak_bits: int


def block_power_stream(stream, config, K, seed=0, meter=None, max_centers=DEFAULT_MAX_CENTERS):
    meter = meter if meter is not None else MemoryMeter()
    n, B = stream.n, config.block_size
    if B > config.T:
        raise ValueError(f"block size {B} exceeds stream length {config.T}")
    rng = np.random.default_rng(seed)
    Q, _, _ = qr_orthonormalize(rng.standard_normal((n, K)), rng)
    blocks = config.T // B
    skipped = 0
    meter.charge("Q", 2 * FLOAT_BITS * n * K, 16 * n * K)
    for _ in range(blocks):
        S = np.zeros((n, K))
        cols = []
        for _ in range(B):
            c = stream.next_column()
            if len(c.neighbors) <= config.degree_cap:
                cols.append(c.neighbors)
            else:
                skipped += 1
        S = _block_update(S, cols, Q, B)
        Q, _, _ = qr_orthonormalize(S, rng)
    labels = detection(Q, K, max_centers=max_centers)
    meter.release("Q")
    out = ClusterAssignment(np.arange(n), labels, K, diagnostics={"block_size": B, "blocks": blocks,
                                                                   "skipped": skipped})
    return BlockPowerResult(out, Q, B, blocks, skipped, meter.peak)
