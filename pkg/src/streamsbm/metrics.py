"""Misclassification up to label permutation and regime bands."""
from dataclasses import dataclass
import itertools
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

EXHAUSTIVE_MAX_K = 8


@dataclass
class ErrorReport:
    epsilon: float
    best_permutation: tuple     # estimated label k is read as true label best_permutation[k]
    confusion: np.ndarray       # rows: estimated label, columns: true label
    domain_size: int


def confusion_matrix(truth, est, K):
    C = np.zeros((K, K), dtype=np.int64)
    np.add.at(C, (np.asarray(est), np.asarray(truth)), 1)
    return C


def best_matching_exhaustive(C):
    K = C.shape[0]
    perms = np.array(list(itertools.permutations(range(K))))
    scores = C[np.arange(K)[None, :], perms].sum(axis=1)
    i = int(np.argmax(scores))
    return tuple(int(x) for x in perms[i]), int(scores[i])


def best_matching_lsa(C):
    rows, cols = linear_sum_assignment(C, maximize=True)
    perm = [0] * C.shape[0]
    for r, c in zip(rows, cols):
        perm[r] = int(c)
    return tuple(perm), int(C[rows, cols].sum())


def misclassification(truth, est, K=None, nodes=None):
    """Fraction of misclassified nodes, minimized over relabelings of ``est``.

    ``truth`` is the full label array (indexed by node id) or already
    restricted to the domain; ``est`` is a ClusterAssignment or a label
    array aligned with ``truth``.
    """
    truth = np.asarray(truth)
    if hasattr(est, "nodes"):
        K = est.K if K is None else K
        if len(truth) != len(est.nodes):
            if est.nodes.size and est.nodes.max() >= len(truth):
                raise ValueError("assignment refers to nodes outside the truth array")
            truth = truth[est.nodes]
        est = est.labels
    est = np.asarray(est)
    if len(truth) != len(est):
        raise ValueError("truth and estimate cover different domains")
    if K is None:
        K = int(max(truth.max(initial=0), est.max(initial=0))) + 1
    size = len(truth)
    C = confusion_matrix(truth, est, K)
    if size == 0:
        return ErrorReport(0.0, tuple(range(K)), C, 0)
    perm, hits = best_matching_exhaustive(C) if K <= EXHAUSTIVE_MAX_K else best_matching_lsa(C)
    return ErrorReport(1.0 - hits / size, perm, C, size)


def regime_classify(f_n, gamma, below=1.0, above=30.0):
    """Band label for (γ, f(n)) from the products √γ·f and γ·f.

    Returns ``"full"``, ``"green-only"``, ``"unrecoverable"`` or
    ``"indeterminate"``. The band edges are empirical knobs.
    """
    if hasattr(f_n, "f_n"):
        f_n = f_n.f_n
    sq = math.sqrt(gamma) * f_n
    lin = gamma * f_n
    if lin > above:
        return "full"
    if sq > above and lin < below:
        return "green-only"
    if sq < below:
        return "unrecoverable"
    return "indeterminate"
