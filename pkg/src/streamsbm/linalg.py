"""Sparse count matrices, block products and the randomized power method."""
from dataclasses import dataclass
import math

import numpy as np
import scipy.sparse as sp


class SparseMatrix:
    """Square-or-rectangular nonnegative integer matrix, stored column-major.

    Thin wrapper over ``scipy.sparse.csc_matrix`` with canonical (sorted,
    duplicate-free, no explicit zeros) storage.
    """

    def __init__(self, matrix, symmetric=False):
        m = sp.csc_matrix(matrix, dtype=np.int64)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        if m.nnz and m.data.min() < 0:
            raise ValueError("counts must be nonnegative")
        self.csc = m
        self.symmetric = symmetric

    @classmethod
    def from_pairs(cls, rows, cols, shape, symmetric=False):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if symmetric:
            rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
        data = np.ones(len(rows), dtype=np.int64)
        return cls(sp.coo_matrix((data, (rows, cols)), shape=shape), symmetric=symmetric)

    @classmethod
    def zeros(cls, n):
        return cls(sp.csc_matrix((n, n), dtype=np.int64), symmetric=True)

    @property
    def shape(self):
        return self.csc.shape

    @property
    def nnz(self):
        return self.csc.nnz

    def total(self):
        return int(self.csc.data.sum())

    def row_sums(self):
        return np.asarray(self.csc.sum(axis=1)).ravel().astype(np.int64)

    def submatrix(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return SparseMatrix(self.csc[idx][:, idx], symmetric=self.symmetric)

    def toarray(self):
        return self.csc.toarray()

    def column(self, j):
        lo, hi = self.csc.indptr[j], self.csc.indptr[j + 1]
        return list(zip(self.csc.indices[lo:hi].tolist(), self.csc.data[lo:hi].tolist()))


@dataclass
class SpectralEmbedding:
    Q: np.ndarray
    sigma_K: float
    iterations: int = 0


def spmv_block(A, Q):
    """``A @ Q`` for a sparse ``A`` and dense ``Q``; O(nnz * K)."""
    Q = np.asarray(Q, dtype=np.float64)
    mat = A.csc if isinstance(A, SparseMatrix) else A
    if mat.shape[1] != Q.shape[0]:
        raise ValueError(f"dimension mismatch: {mat.shape} @ {Q.shape}")
    return np.asarray(mat @ Q, dtype=np.float64)


def qr_orthonormalize(M, rng=None, tol=1e-10):
    """Thin QR by Gram-Schmidt with reorthogonalization.

    Columns whose residual falls below ``tol * ||M||_F`` are replaced by a
    fresh random unit vector orthogonal to the others (and get a zero
    diagonal in ``R``); their indices are returned in ``deficient``.

    Returns
    -------
    Q, R, deficient
    """
    M = np.asarray(M, dtype=np.float64)
    n, K = M.shape
    if K > n:
        raise ValueError("more columns than rows")
    rng = np.random.default_rng() if rng is None else rng
    scale = np.linalg.norm(M)
    Q = np.zeros((n, K))
    R = np.zeros((K, K))
    deficient = []
    for j in range(K):
        v = M[:, j].copy()
        for _ in range(2):
            c = Q[:, :j].T @ v
            v -= Q[:, :j] @ c
            R[:j, j] += c
        nv = np.linalg.norm(v)
        if nv <= tol * scale or nv == 0.0:
            deficient.append(j)
            while True:
                w = rng.standard_normal(n)
                for _ in range(2):
                    w -= Q[:, :j] @ (Q[:, :j].T @ w)
                nw = np.linalg.norm(w)
                if nw > 1e-8:
                    break
            Q[:, j] = w / nw
            # whatever was left of column j lies along the new direction
            R[j, j] = Q[:, j] @ v
        else:
            Q[:, j] = v / nv
            R[j, j] = nv
    return Q, R, deficient


def default_iterations(size):
    return max(1, math.ceil(math.log(size))) if size > 1 else 1


def power_method(A, K, seed=None, n_iter=None):
    """Orthogonal iteration ``A Q_{t-1} = Q_t R_t`` from a random orthonormal start.

    Runs ``ceil(ln |V|)`` steps unless ``n_iter`` is given. ``sigma_K`` is the
    K-th largest singular value of the last ``R``.
    """
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise ValueError("power method needs a square matrix")
    if K > n:
        raise ValueError(f"K={K} exceeds matrix dimension {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Q, _, _ = qr_orthonormalize(rng.standard_normal((n, K)), rng)
    steps = default_iterations(n) if n_iter is None else int(n_iter)
    R = np.eye(K)
    for _ in range(steps):
        Q, R, _ = qr_orthonormalize(spmv_block(A, Q), rng)
    sigma = np.linalg.svd(R, compute_uv=False)
    return SpectralEmbedding(Q, float(sigma[K - 1]), steps)


def subspace_angle(Q, U):
    """Sine of the largest principal angle between span(Q) and span(U) (both orthonormal)."""
    res = Q - U @ (U.T @ Q)
    return float(np.linalg.norm(res, 2))
