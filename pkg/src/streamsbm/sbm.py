"""Stochastic block model graphs, column streams and partial observations."""
from dataclasses import dataclass
import math

import numpy as np
import scipy.sparse as sp

from . import rng as _rng


class ParameterError(ValueError):
    pass


class GraphFormatError(ValueError):
    pass


class OnePassViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class SbmParams:
    """SBM with ``p = a*f_n/n`` inside clusters and ``q = b*f_n/n`` across.

    ``b = 0`` and ``a = b`` are accepted (exact-separation and null models).
    """
    n: int
    K: int
    a: float
    b: float
    f_n: float = 1.0
    cluster_fractions: tuple = None

    def __post_init__(self):
        if self.cluster_fractions is None:
            object.__setattr__(self, "cluster_fractions", tuple([1.0 / self.K] * self.K))
        else:
            object.__setattr__(self, "cluster_fractions", tuple(float(x) for x in self.cluster_fractions))
        self.validate()

    @classmethod
    def from_probabilities(cls, n, K, p, q, cluster_fractions=None):
        return cls(n=n, K=K, a=p * n, b=q * n, f_n=1.0, cluster_fractions=cluster_fractions)

    @property
    def p(self):
        return self.a * self.f_n / self.n

    @property
    def q(self):
        return self.b * self.f_n / self.n

    def validate(self):
        if self.n < 1 or self.K < 1:
            raise ParameterError("need n >= 1 and K >= 1")
        if self.K > self.n:
            raise ParameterError("more clusters than nodes")
        fr = self.cluster_fractions
        if len(fr) != self.K:
            raise ParameterError("cluster_fractions must have K entries")
        if any(x <= 0 for x in fr):
            raise ParameterError("cluster fractions must be positive")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ParameterError("cluster fractions must sum to 1")
        if any(fr[i] > fr[i + 1] + 1e-15 for i in range(len(fr) - 1)):
            raise ParameterError("cluster fractions must be non-decreasing")
        if not (self.a > 0 and self.b >= 0 and self.a >= self.b):
            raise ParameterError("need a > 0, b >= 0 and a >= b")
        if self.f_n <= 0:
            raise ParameterError("f_n must be positive")
        if self.p > 1 + 1e-12:
            raise ParameterError(f"p = a*f_n/n = {self.p:g} exceeds 1")

    def cluster_sizes(self):
        """Floor sizes, remainder handed to the largest clusters one node each."""
        sizes = [int(math.floor(x * self.n)) for x in self.cluster_fractions]
        rem = self.n - sum(sizes)
        order = sorted(range(self.K), key=lambda k: (-self.cluster_fractions[k], -k))
        for i in range(rem):
            sizes[order[i % self.K]] += 1
        if min(sizes) < 1:
            raise ParameterError("empty cluster for this n")
        return sizes


@dataclass(frozen=True)
class AdjacencyColumn:
    node_id: int
    neighbors: np.ndarray

    def __len__(self):
        return len(self.neighbors)


@dataclass
class SbmGraph:
    """Undirected simple graph in CSR form plus the hidden partition."""
    n: int
    K: int
    labels: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    def column(self, v):
        return AdjacencyColumn(int(v), self.indices[self.indptr[v]:self.indptr[v + 1]])

    def columns(self):
        return [self.column(v) for v in range(self.n)]

    def degrees(self):
        return np.diff(self.indptr)

    @property
    def num_edges(self):
        return len(self.indices) // 2

    def to_scipy(self):
        data = np.ones(len(self.indices), dtype=np.int64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def relabel(self, perm):
        """Graph with node ``v`` renamed ``perm[v]``."""
        perm = np.asarray(perm)
        rows = np.repeat(np.arange(self.n), self.degrees())
        labels = np.empty_like(self.labels)
        labels[perm] = self.labels
        return _from_edges(self.n, self.K, labels, perm[rows], perm[self.indices], symmetric=True)

    # text format -----------------------------------------------------------
    def dumps(self):
        lines = [f"{self.n} {self.K}", " ".join(str(int(x)) for x in self.labels)]
        for v in range(self.n):
            nb = self.indices[self.indptr[v]:self.indptr[v + 1]]
            lines.append(f"{v}:" + "".join(f" {int(w)}" for w in nb))
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text):
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        try:
            n, K = (int(x) for x in lines[0].split())
        except (ValueError, IndexError):
            raise GraphFormatError("line 1 must be 'n K'") from None
        if len(lines) != n + 2:
            raise GraphFormatError(f"expected {n + 2} lines, found {len(lines)}")
        try:
            labels = np.array([int(x) for x in lines[1].split()], dtype=np.int64)
        except ValueError:
            raise GraphFormatError("labels must be integers") from None
        if len(labels) != n or (n and (labels.min() < 0 or labels.max() >= K)):
            raise GraphFormatError("bad label line")
        indptr = np.zeros(n + 1, dtype=np.int64)
        chunks = []
        for v in range(n):
            head, sep, rest = lines[v + 2].partition(":")
            if not sep or head != str(v):
                raise GraphFormatError(f"line {v + 3}: expected '{v}:' prefix")
            try:
                nb = np.array([int(x) for x in rest.split()], dtype=np.int64)
            except ValueError:
                raise GraphFormatError(f"line {v + 3}: non-integer neighbor") from None
            if len(nb) and (nb.min() < 0 or nb.max() >= n or np.any(np.diff(nb) <= 0) or v in nb):
                raise GraphFormatError(f"line {v + 3}: neighbors must be sorted, unique, in range, no self-loop")
            chunks.append(nb)
            indptr[v + 1] = indptr[v] + len(nb)
        indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
        g = cls(n, K, labels, indptr, indices)
        m = g.to_scipy()
        if (m != m.T).nnz:
            raise GraphFormatError("adjacency is not symmetric")
        return g

    @classmethod
    def load(cls, path):
        with open(path, encoding="ascii") as fh:
            return cls.loads(fh.read())


def _from_edges(n, K, labels, rows, cols, symmetric=False):
    idx = np.int32 if n < 2**31 - 1 else np.int64
    rows, cols = np.asarray(rows, dtype=idx), np.asarray(cols, dtype=idx)
    if not symmetric:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
    data = np.ones(len(rows), dtype=np.int8)
    m = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    del data, rows, cols
    m.sort_indices()
    return SbmGraph(n, K, np.asarray(labels, dtype=np.int64), m.indptr.astype(np.int64), m.indices)


def graph_from_edges(n, edges, labels=None, K=None):
    """Build an :class:`SbmGraph` from an undirected edge list."""
    edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    labels = np.zeros(n, dtype=np.int64) if labels is None else np.asarray(labels, dtype=np.int64)
    K = int(labels.max()) + 1 if K is None else K
    return _from_edges(n, K, labels, edges[:, 0], edges[:, 1])


def _skip_sample(gen, total, prob):
    """Sorted indices in ``range(total)``, each kept with ``prob`` (geometric skips)."""
    if total <= 0 or prob <= 0:
        return np.zeros(0, dtype=np.int64)
    if prob >= 1:
        return np.arange(total, dtype=np.int64)
    if prob < 1e-12:
        # skips would overflow; a binomial count of uniform positions is the same law
        k = int(gen.binomial(total, prob))
        return np.sort(gen.choice(total, size=k, replace=False)).astype(np.int64) if k else np.zeros(0, np.int64)
    mean = total * prob
    batch = int(mean + 5 * math.sqrt(mean) + 64)
    out, pos = [], -1
    while True:
        idx = pos + np.cumsum(gen.geometric(prob, size=batch))
        if idx[-1] >= total:
            out.append(idx[idx < total])
            break
        out.append(idx)
        pos = int(idx[-1])
    return np.concatenate(out).astype(np.int64)


def _unrank_pairs(t):
    """Strict lower-triangle index ``t`` -> pair ``(c, r)`` with ``c < r``."""
    r = np.floor((1 + np.sqrt(1 + 8 * t.astype(np.float64))) / 2).astype(np.int64)
    r -= (r * (r - 1) // 2 > t)
    r += ((r + 1) * r // 2 <= t)
    return t - r * (r - 1) // 2, r


def generate(params, seed):
    """Sample an SBM graph. Returns ``(labels, graph)``; deterministic in ``seed``."""
    params.validate()
    gen = _rng.generator(seed, _rng.GRAPH)
    sizes = params.cluster_sizes()
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    labels = np.repeat(np.arange(params.K), sizes)
    p, q = params.p, params.q
    rows, cols = [], []
    for k in range(params.K):
        for l in range(k, params.K):
            if k == l:
                m = sizes[k]
                t = _skip_sample(gen, m * (m - 1) // 2, p)
                c, r = _unrank_pairs(t)
                rows.append(offsets[k] + c)
                cols.append(offsets[k] + r)
            else:
                t = _skip_sample(gen, sizes[k] * sizes[l], q)
                rows.append(offsets[k] + t // sizes[l])
                cols.append(offsets[l] + t % sizes[l])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    g = _from_edges(params.n, params.K, labels, rows, cols)
    return g.labels, g


class ColumnStream:
    """Uniformly random one-pass stream over the columns of a graph.

    Every requested column id is logged in ``requested``; asking for a column
    twice raises :class:`OnePassViolation`.
    """

    def __init__(self, graph, seed):
        self._graph = graph
        self.n = graph.n
        self.ordering = _rng.generator(seed, _rng.PERMUTATION).permutation(graph.n)
        self.cursor = 0
        self.requested = []
        self._seen = np.zeros(graph.n, dtype=bool)

    @property
    def fraction_consumed(self):
        return self.cursor / self.n if self.n else 0.0

    def remaining(self):
        return self.n - self.cursor

    def next_column(self):
        if self.cursor >= self.n:
            raise StopIteration
        v = int(self.ordering[self.cursor])
        if self._seen[v]:
            raise OnePassViolation(f"column {v} requested twice")
        self._seen[v] = True
        self.requested.append(v)
        self.cursor += 1
        return self._graph.column(v)

    def take(self, T):
        for _ in range(T):
            yield self.next_column()

    def __iter__(self):
        while self.cursor < self.n:
            yield self.next_column()


def open_stream(graph, seed):
    return ColumnStream(graph, seed)


class ObservedGraph:
    """Columns revealed for the green nodes, viewed as an ``n x m`` 0/1 matrix.

    Green ids are kept sorted. Red-red entries are never stored, so they
    cannot be read. Columns need not be symmetric (subsampled streams); the
    green-green block is symmetrized with the lower node id's column taken as
    authoritative.
    """

    def __init__(self, n, green, neighbor_lists):
        green = np.asarray(green, dtype=np.int64)
        order = np.argsort(green, kind="stable")
        self.n = int(n)
        self.green = green[order]
        self.m = len(self.green)
        lists = [np.asarray(neighbor_lists[i], dtype=np.int64) for i in order]
        lengths = np.array([len(x) for x in lists], dtype=np.int64)
        self.indptr = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        self.rows = np.concatenate(lists) if lists else np.zeros(0, dtype=np.int64)
        self.col_of_entry = np.repeat(np.arange(self.m), lengths)
        pos = np.searchsorted(self.green, self.rows)
        pos_c = np.minimum(pos, max(self.m - 1, 0))
        self.row_is_green = (self.m > 0) & (self.green[pos_c] == self.rows) if self.m else np.zeros(len(self.rows), bool)
        self.row_green_pos = np.where(self.row_is_green, pos_c, -1)

    @classmethod
    def from_graph(cls, graph, green):
        green = np.unique(np.asarray(list(green), dtype=np.int64))
        return cls(graph.n, green, [graph.column(v).neighbors for v in green])

    @classmethod
    def from_columns(cls, n, columns):
        return cls(n, [c.node_id for c in columns], [c.neighbors for c in columns])

    @property
    def red(self):
        mask = np.ones(self.n, dtype=bool)
        mask[self.green] = False
        return np.flatnonzero(mask)

    @property
    def num_entries(self):
        return len(self.rows)

    def column(self, v):
        j = int(np.searchsorted(self.green, v))
        if j >= self.m or self.green[j] != v:
            raise KeyError(f"node {v} is not green")
        return AdjacencyColumn(int(v), self.rows[self.indptr[j]:self.indptr[j + 1]])

    def green_pairs(self):
        """Green-green entries ``(i, j)`` (positions) with ``i > j``; column j is authoritative."""
        sel = self.row_is_green
        i = self.row_green_pos[sel]
        j = self.col_of_entry[sel]
        keep = i > j
        return i[keep], j[keep]

    def red_entries(self):
        """Red row ids and green column positions of every green-to-red entry."""
        sel = ~self.row_is_green
        return self.rows[sel], self.col_of_entry[sel]


def restrict_to_green(columns, green_set, n=None):
    """Observed view for ``green_set``; ``columns`` is a graph or a sequence of columns."""
    if isinstance(columns, SbmGraph):
        return ObservedGraph.from_graph(columns, green_set)
    cols = {c.node_id: c for c in columns}
    if n is None:
        n = max([v + 1 for v in cols] + [int(c.neighbors.max()) + 1 for c in cols.values() if len(c)] + [0])
    green = sorted(set(int(v) for v in green_set))
    return ObservedGraph(n, green, [cols[v].neighbors for v in green])
