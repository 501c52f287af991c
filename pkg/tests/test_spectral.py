import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streamsbm.labels import RANDOM, SPECTRAL
from streamsbm.linalg import SparseMatrix
from streamsbm.metrics import misclassification
from streamsbm.sbm import SbmParams, generate, graph_from_edges, restrict_to_green
from streamsbm.spectral import (approx, classify_green, detection, direct_matrix, estimate_density,
                                indirect_edge_matrix)


def brute_indirect(graph, green):
    green = sorted(green)
    A = graph.to_scipy().toarray()
    out = np.zeros((len(green), len(green)), dtype=np.int64)
    for z in range(graph.n):
        if z in green:
            continue
        for a, v in enumerate(green):
            for b, w in enumerate(green):
                if v != w and A[v, z] and A[w, z] and A[green, z].sum() == 2:
                    out[a, b] += 1
    return out


def test_indirect_single_red_pair():
    g = graph_from_edges(4, [(0, 3), (1, 3)])
    A = indirect_edge_matrix(restrict_to_green(g, [0, 1, 2])).toarray()
    assert A.tolist() == [[0, 1, 0], [1, 0, 0], [0, 0, 0]]


def test_indirect_ignores_green_degree_three():
    g = graph_from_edges(4, [(0, 3), (1, 3), (2, 3)])
    assert indirect_edge_matrix(restrict_to_green(g, [0, 1, 2])).nnz == 0


def test_indirect_two_reds_and_density():
    g = graph_from_edges(5, [(0, 3), (1, 3), (0, 4), (1, 4)])
    A = indirect_edge_matrix(restrict_to_green(g, [0, 1, 2]))
    assert A.toarray()[0, 1] == 2 == A.toarray()[1, 0]
    assert estimate_density(A) == pytest.approx(4 / 9)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 60), dens=st.floats(0.02, 0.4), frac=st.floats(0.1, 0.9),
       seed=st.integers(0, 10**6))
def test_indirect_matches_triple_loop(n, dens, frac, seed):
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < dens
    g = graph_from_edges(n, list(zip(iu[0][keep], iu[1][keep])))
    green = [v for v in range(n) if rng.random() < frac] or [0]
    got = indirect_edge_matrix(restrict_to_green(g, green)).toarray()
    assert np.array_equal(got, brute_indirect(g, green))


def test_estimate_density_examples():
    assert estimate_density(SparseMatrix.zeros(3)) == 0
    assert estimate_density(SparseMatrix(np.ones((3, 3)) - np.eye(3))) == pytest.approx(6 / 9)
    with pytest.raises(ValueError):
        estimate_density(SparseMatrix.zeros(0))


DEG_5432 = np.array([[0, 2, 2, 1], [2, 0, 1, 1], [2, 1, 0, 0], [1, 1, 0, 0]])


def test_approx_drops_top_degree_when_ell_is_two():
    M = SparseMatrix(DEG_5432)
    assert M.row_sums().tolist() == [5, 4, 3, 2]
    # 4 exp(-4 p) in [2, 3) gives ell* = 2
    p = math.log(4 / 2.5) / 4
    t = approx(M, p, 1, seed=0)
    assert t.degree_cap == 4
    assert t.gamma_set.tolist() == [1, 2, 3]
    assert t.trimmed_matrix.shape == (3, 3)


def test_approx_keeps_all_when_dense():
    M = SparseMatrix(DEG_5432)
    t = approx(M, math.log(4) / 4 + 0.1, 2, seed=0)
    assert t.degree_cap == 5 and len(t.gamma_set) == 4
    with pytest.raises(ValueError):
        approx(M, -1.0, 1)
    with pytest.raises(ValueError):
        approx(M, math.log(4 / 2.5) / 4, 4)


def test_approx_trims_little_at_moderate_density():
    for seed in range(10):
        n = 2000
        labels, g = generate(SbmParams(n, 2, 8.0, 2.0, f_n=120.0), seed)
        green = np.random.default_rng(seed).choice(n, 500, replace=False)
        A = direct_matrix(restrict_to_green(g, green))
        t = approx(A, estimate_density(A), 2, seed=seed)
        assert (500 - len(t.gamma_set)) / 500 <= 0.02
        assert (A.row_sums()[t.gamma_set] <= t.degree_cap).all()


def test_detection_two_points():
    m = 10
    Q = np.zeros((m, 2))
    Q[:5, 0] = 1 / math.sqrt(m)
    Q[5:, 0] = -1 / math.sqrt(m)
    lab = detection(Q, 2)
    assert len(set(lab[:5])) == 1 and len(set(lab[5:])) == 1 and lab[0] != lab[5]


def test_detection_single_cluster():
    Q = np.random.default_rng(0).standard_normal((7, 3))
    assert detection(Q, 1).tolist() == [0] * 7
    with pytest.raises(ValueError):
        detection(Q, 8)


def test_detection_gaussian_blobs_vs_oracle():
    rng = np.random.default_rng(4)
    m = 200
    # unit-norm-ish embedding scale: radii are sqrt(i / (m ln m))
    sigma = 0.012
    centers = np.array([[0.05, 0.0], [0.05 + 10 * sigma, 0.0]])
    truth = rng.integers(0, 2, m)
    Q = centers[truth] + sigma * rng.standard_normal((m, 2))
    oracle = np.argmin(((Q[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
    assert misclassification(oracle, detection(Q, 2), K=2).epsilon == 0


@settings(max_examples=30, deadline=None)
@given(m=st.integers(1, 80), K=st.integers(1, 4), seed=st.integers(0, 10**6))
def test_detection_partition_and_minimal_radius(m, K, seed):
    K = min(K, m)
    Q = np.random.default_rng(seed).standard_normal((m, 2)) / math.sqrt(m)
    lab, sweep = detection(Q, K, return_sweep=True)
    assert lab.shape == (m,) and lab.min() >= 0 and lab.max() < K
    if sweep:
        disp = [row["dispersion"] for row in sweep]
        i_star = int(np.argmin(disp))
        assert np.array_equal(lab, sweep[i_star]["labels"])
        assert all(disp[i_star] <= d for d in disp)


def test_classify_green_planted_exact(planted_2000):
    labels, g = planted_2000
    view = restrict_to_green(g, np.arange(0, 2000, 2))
    res = classify_green(view, 2, seed=0)
    assert misclassification(labels, res).epsilon == 0
    assert (res.provenance == SPECTRAL).all()


def test_classify_green_forced_modes_match_auto_when_indirect_empty():
    labels, g = generate(SbmParams(400, 2, 8.0, 2.0, f_n=40.0), 1)
    view = restrict_to_green(g, np.arange(400))     # every node green: no red, A' empty
    auto, direct = classify_green(view, 2, seed=3), classify_green(view, 2, seed=3, mode="direct")
    assert auto.diagnostics["selected"] == "direct"
    assert np.array_equal(auto.labels, direct.labels)


def test_classify_green_forced_indirect_matches_auto_when_direct_empty():
    # greens pairwise non-adjacent; each red sees exactly two greens of one group
    rng = np.random.default_rng(0)
    m, reds = 100, 4000
    group = np.arange(m) % 2
    edges = []
    for r in range(reds):
        v, w = rng.choice(np.flatnonzero(group == r % 2), 2, replace=False)
        edges += [(v, m + r), (w, m + r)]
    view = restrict_to_green(graph_from_edges(m + reds, edges), range(m))
    assert direct_matrix(view).nnz == 0
    auto = classify_green(view, 2, seed=0)
    forced = classify_green(view, 2, seed=0, mode="indirect")
    assert auto.diagnostics["selected"] == "indirect"
    assert np.array_equal(auto.labels, forced.labels)
    assert misclassification(group, auto.labels, K=2).epsilon == 0


def test_classify_green_no_edges_is_random():
    view = restrict_to_green(graph_from_edges(50, []), range(30))
    res = classify_green(view, 2, seed=0)
    assert res.diagnostics["selected"] == "none"
    assert (res.provenance == RANDOM).all()
    with pytest.raises(ValueError):
        classify_green(view, 31)


def test_classify_green_tiny_gamma_near_half():
    errs = []
    for seed in range(5):
        labels, g = generate(SbmParams(4000, 2, 8.0, 2.0, f_n=2.0), seed)
        green = np.random.default_rng(seed).choice(4000, 1000, replace=False)
        res = classify_green(restrict_to_green(g, green), 2, seed=seed)
        assert res.diagnostics["stat_direct"] == 0 == res.diagnostics["stat_indirect"]
        assert res.diagnostics["selected"] in ("direct", "none")
        errs.append(misclassification(labels, res).epsilon)
    assert abs(np.mean(errs) - 0.5) <= 0.05


def test_classify_green_permutation_equivariance():
    n = 600
    labels, g = generate(SbmParams(n, 2, 8.0, 1.0, f_n=40.0), 2)
    perm = np.random.default_rng(7).permutation(n)
    green = np.arange(0, n, 2)
    a = classify_green(restrict_to_green(g, green), 2, seed=5)
    b = classify_green(restrict_to_green(g.relabel(perm), perm[green]), 2, seed=5)
    # b's label for node perm[v] must induce the same partition as a's label for v
    mapped = np.array([b.label_of(perm[v]) for v in a.nodes])
    assert misclassification(a.labels, mapped, K=2).epsilon == 0
