"""Greedy labelling of red nodes against the green clusters."""
import numpy as np

from . import rng as _rng
from .labels import ClusterAssignment, GREEDY, RANDOM
from .spectral import classify_green

_SEED_TIES = 21


def argmax_random_ties(scores, u):
    """Row-wise arg max; ties resolved by the uniform ``u`` (one value per row)."""
    scores = np.asarray(scores, dtype=np.float64)
    best = scores.max(axis=1, keepdims=True)
    tied = scores == best
    n_tied = tied.sum(axis=1)
    pick = np.minimum((u * n_tied).astype(np.int64), n_tied - 1)
    # index of the pick-th True in each row
    rank = np.cumsum(tied, axis=1) - 1
    return np.argmax(tied & (rank == pick[:, None]), axis=1), n_tied


def greedy_assign(view, green, seed=0):
    """Label every red node by the cluster with the highest edge density to it.

    ``green`` is a :class:`ClusterAssignment` over ``view.green``. Empty green
    clusters never win; ties (including nodes with no green edge) are broken
    uniformly at random from a per-node stream.
    """
    K = green.K
    if not np.array_equal(green.nodes, view.green):
        raise ValueError("green assignment must cover exactly the green nodes")
    sizes = np.bincount(green.labels, minlength=K).astype(np.float64)
    if not sizes.any():
        raise ValueError("all green clusters are empty")
    red = view.red
    rows, cols = view.red_entries()
    counts = np.zeros((len(red), K))
    if len(rows):
        np.add.at(counts, (np.searchsorted(red, rows), green.labels[cols]), 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(sizes > 0, counts / np.where(sizes > 0, sizes, 1.0), -np.inf)
    u = _rng.hash_uniform(_rng.child_seed(seed, _SEED_TIES), red)
    labels, n_tied = argmax_random_ties(scores, u)
    prov = np.where(counts.sum(axis=1) > 0, GREEDY, RANDOM).astype(np.int8)
    return ClusterAssignment(red, labels, K, prov)


def classify_all(view, K, seed=0, **kwargs):
    """Spectral labels for the green nodes, greedy labels for the red ones."""
    g = classify_green(view, K, seed=seed, **kwargs)
    if view.m == view.n:
        return g
    r = greedy_assign(view, g, seed=seed)
    out = g.merge(r)
    out.diagnostics = g.diagnostics
    return out
