"""Green-node classification from partial observations.

Two candidate matrices are built on the green nodes: the direct edges among
them and the indirect edges through red nodes that see exactly two greens.
Each is degree-trimmed and embedded with the power method; the one with the
larger normalized K-th singular value is clustered by a radius sweep.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.spatial import cKDTree

from . import rng as _rng
from .labels import ClusterAssignment, RANDOM, SPECTRAL
from .linalg import SparseMatrix, power_method
from .memory import FLOAT_BITS, NullMeter, index_bits, label_bits

MIN_MEAN_DEGREE = 50
DEFAULT_MAX_CENTERS = 2048

_SEED_DIRECT, _SEED_INDIRECT, _SEED_PLACE = 11, 12, 13


@dataclass
class TrimResult:
    gamma_set: np.ndarray       # positions (into the node set) that survive trimming
    trimmed_matrix: SparseMatrix
    embedding: object
    p_hat: float
    degree_cap: int


def direct_matrix(view):
    """Green-green adjacency ``A^(g)`` indexed by green position."""
    i, j = view.green_pairs()
    return SparseMatrix.from_pairs(i, j, (view.m, view.m), symmetric=True)


def indirect_edge_matrix(view):
    """Indirect-edge counts ``A'`` on the green nodes.

    ``A'[v, w]`` is the number of red nodes whose observed green neighbours
    are exactly ``{v, w}``.
    """
    red, col = view.red_entries()
    if len(red) == 0:
        return SparseMatrix.zeros(view.m)
    order = np.lexsort((col, red))
    red, col = red[order], col[order]
    starts = np.flatnonzero(np.r_[True, red[1:] != red[:-1]])
    counts = np.diff(np.r_[starts, len(red)])
    two = starts[counts == 2]
    return SparseMatrix.from_pairs(col[two], col[two + 1], (view.m, view.m), symmetric=True)


def estimate_density(M):
    size = M.shape[0]
    if size == 0:
        raise ValueError("density of an empty node set")
    return M.total() / float(size) ** 2


def approx(M, p_hat, K, seed=None, n_iter=None):
    """Drop the highest-degree nodes, then embed the rest with the power method."""
    size = M.shape[0]
    if p_hat < 0:
        raise ValueError("p_hat must be nonnegative")
    ell = max(1, int(math.floor(size * math.exp(-size * p_hat))))
    deg = M.row_sums()
    cap = int(np.sort(deg)[::-1][ell - 1]) if size else 0
    gamma = np.flatnonzero(deg <= cap)
    if K > len(gamma):
        raise ValueError(f"K={K} exceeds the {len(gamma)} nodes left after trimming")
    trimmed = M.submatrix(gamma)
    emb = power_method(trimmed, K, seed=seed, n_iter=n_iter)
    return TrimResult(gamma, trimmed, emb, p_hat, cap)


def _ball_counts(tree, pts, r):
    return tree.query_ball_point(pts, r, return_length=True)


def detection(Q, K, max_centers=DEFAULT_MAX_CENTERS, return_sweep=False):
    """Cluster embedding rows by the greedy radius sweep.

    For each radius ``i / (m ln m)`` (squared distance, ``i = 1..ceil(ln m)``)
    the K densest balls are peeled off greedily, leftover rows go to the
    nearest ball mean, and the radius with the smallest dispersion wins.
    Ties go to the smallest index. With more than ``max_centers`` rows only a
    strided subset is scanned as candidate centres; ball contents are exact.
    """
    Q = np.asarray(Q, dtype=np.float64)
    m = Q.shape[0]
    if K < 1 or m < K:
        raise ValueError("need 1 <= K <= number of rows")
    if K == 1 or m == 1:
        lab = np.zeros(m, dtype=np.int64)
        return (lab, []) if return_sweep else lab
    logm = math.log(m)
    n_radii = max(1, math.ceil(logm))
    stride = 1 if not max_centers or m <= max_centers else math.ceil(m / max_centers)
    candidates = np.arange(0, m, stride)
    best_r, best = math.inf, None
    sweep = []
    for i in range(1, n_radii + 1):
        radius = math.sqrt(i / (m * logm))
        lab = np.full(m, -1, dtype=np.int64)
        means = np.full((K, Q.shape[1]), np.inf)
        centers = []
        for k in range(K):
            remaining = np.flatnonzero(lab < 0)
            if len(remaining) == 0:
                centers.append(-1)
                continue
            tree = cKDTree(Q[remaining])
            counts = _ball_counts(tree, Q[candidates], radius)
            c = int(candidates[int(np.argmax(counts))])
            centers.append(c)
            if counts.max() == 0:
                continue
            members = remaining[np.sort(tree.query_ball_point(Q[c], radius))]
            lab[members] = k
            means[k] = Q[members].mean(axis=0)
        rest = np.flatnonzero(lab < 0)
        if len(rest):
            finite = np.all(np.isfinite(means), axis=1)
            d = np.full((len(rest), K), np.inf)
            d[:, finite] = ((Q[rest, None, :] - means[None, finite, :]) ** 2).sum(axis=2)
            lab[rest] = np.argmin(d, axis=1)
        disp = 0.0
        for k in range(K):
            sel = lab == k
            if sel.any() and np.all(np.isfinite(means[k])):
                disp += float(((Q[sel] - means[k]) ** 2).sum())
        sweep.append({"radius_index": i, "centers": centers, "means": means, "dispersion": disp,
                      "labels": lab})
        if disp < best_r:
            best_r, best = disp, lab
    return (best, sweep) if return_sweep else best


def _statistic(sigma, size, p_hat):
    mean_deg = size * p_hat
    if p_hat <= 0 or mean_deg < MIN_MEAN_DEGREE:
        return 0.0
    return sigma / math.sqrt(mean_deg)


def classify_green(view, K, seed=0, mode="auto", meter=None, max_centers=DEFAULT_MAX_CENTERS,
                   n_iter=None):
    """Label every green node of ``view``.

    ``mode`` is ``"auto"`` (pick the better matrix), or ``"direct"`` /
    ``"indirect"`` to force one pipeline. Selection diagnostics are attached
    to the result's ``diagnostics``.
    """
    meter = meter or NullMeter()
    m = view.m
    if K > m:
        raise ValueError(f"K={K} exceeds the number of green nodes {m}")
    A_g = direct_matrix(view)
    A_i = indirect_edge_matrix(view)
    ib = index_bits(max(m, 2))
    meter.charge(("alg1", "direct"), A_g.nnz * ib, A_g.csc.data.nbytes + A_g.csc.indices.nbytes)
    meter.charge(("alg1", "indirect"), A_i.nnz * (ib + index_bits(max(A_i.csc.data.max(initial=1), 2))),
                 A_i.csc.data.nbytes + A_i.csc.indices.nbytes)
    p_g = estimate_density(A_g)
    p_i = estimate_density(A_i)
    diag = {"m": m, "p_hat_direct": p_g, "p_hat_indirect": p_i,
            "mean_degree_direct": m * p_g, "mean_degree_indirect": m * p_i}

    trims = {}
    if mode in ("auto", "direct") and p_g > 0:
        trims["direct"] = approx(A_g, p_g, K, seed=_rng.child_seed(seed, _SEED_DIRECT), n_iter=n_iter)
    if mode in ("auto", "indirect") and p_i > 0:
        trims["indirect"] = approx(A_i, p_i, K, seed=_rng.child_seed(seed, _SEED_INDIRECT), n_iter=n_iter)
    for name, t in trims.items():
        diag[f"sigma_{name}"] = t.embedding.sigma_K
        diag[f"trimmed_{name}"] = m - len(t.gamma_set)
    meter.charge(("alg1", "power"), 2 * FLOAT_BITS * K * m, 2 * 8 * K * m)

    s_g = _statistic(trims["direct"].embedding.sigma_K, m, p_g) if "direct" in trims else 0.0
    s_i = _statistic(trims["indirect"].embedding.sigma_K, m, p_i) if "indirect" in trims else 0.0
    diag["stat_direct"], diag["stat_indirect"] = s_g, s_i

    if mode == "direct" or (mode == "auto" and s_g >= s_i):
        chosen = "direct"
    else:
        chosen = "indirect"
    labels = np.full(m, -1, dtype=np.int64)
    prov = np.full(m, RANDOM, dtype=np.int8)
    if chosen in trims:
        t = trims[chosen]
        labels[t.gamma_set] = detection(t.embedding.Q, K, max_centers=max_centers)
        prov[t.gamma_set] = SPECTRAL
    else:
        chosen = "none"
    diag["selected"] = chosen
    rest = np.flatnonzero(labels < 0)
    if len(rest):
        u = _rng.hash_uniform(_rng.child_seed(seed, _SEED_PLACE), view.green[rest])
        labels[rest] = np.minimum((u * K).astype(np.int64), K - 1)
    meter.charge(("alg1", "labels"), m * label_bits(K), labels.nbytes)
    for key in ("direct", "indirect", "power", "labels"):
        meter.release(("alg1", key))
    return ClusterAssignment(view.green, labels, K, prov, diag)
