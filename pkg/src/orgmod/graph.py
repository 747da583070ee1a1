"""Weighted undirected graphs and the implicit modularity matrix.

The modularity matrix ``B`` is never stored. ``b_apply`` evaluates ``B @ X``
from the sparse weight matrix and the degree vector, which keeps one product
at ``O(C (A + N))`` for an ``N x C`` operand.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import InputError

__all__ = [
    "Graph",
    "Clustering",
    "InducedGraph",
    "build_graph",
    "density",
    "transitivity",
    "b_apply",
    "induced_graph",
]


def _readonly(a):
    a.flags.writeable = False
    return a


class Graph:
    """Immutable weighted undirected graph.

    Parameters
    ----------
    weights : sparse matrix of shape (n, n)
        Symmetric non-negative weight matrix. Self-loops are stored once on
        the diagonal.
    labels : sequence of str, optional
        Display label per vertex.

    Attributes
    ----------
    n : int
        Number of vertices.
    degrees : ndarray of shape (n,)
        ``k_i = sum_j W_ij`` (a self-loop contributes its weight once).
    total_weight : float
        ``m = 0.5 * sum_ij W_ij``.
    edge_count : int
        Number of unordered vertex pairs with positive weight, self-loops
        included.
    """

    def __init__(self, weights, labels=None):
        w = sp.csr_matrix(weights, dtype=np.float64)
        w.sum_duplicates()
        w.eliminate_zeros()
        w.sort_indices()
        if w.shape[0] != w.shape[1]:
            raise InputError(f"weight matrix must be square, got {w.shape}")
        if w.nnz and not np.all(np.isfinite(w.data)):
            raise InputError("weights must be finite")
        if w.nnz and w.data.min() < 0:
            raise InputError("weights must be non-negative")
        if (w - w.T).count_nonzero():
            asym = abs(w - w.T)
            if asym.max() > 1e-12 * max(1.0, abs(w).max()):
                raise InputError("weight matrix must be symmetric")
        n = w.shape[0]
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != n:
                raise InputError(f"expected {n} labels, got {len(labels)}")
        for arr in (w.data, w.indices, w.indptr):
            _readonly(arr)
        self._w = w
        self.n = n
        self.labels = labels
        self.degrees = _readonly(np.asarray(w.sum(axis=1)).ravel())
        self.total_weight = 0.5 * float(self.degrees.sum())
        self.self_loops = _readonly(w.diagonal())
        self.edge_count = int(sp.triu(w).nnz)

    @property
    def weights(self):
        """Sparse CSR weight matrix (read-only buffers)."""
        return self._w

    @classmethod
    def from_adjacency(cls, adjacency, labels=None):
        """Build from a dense or sparse symmetric adjacency matrix."""
        if sp.issparse(adjacency):
            return cls(adjacency, labels=labels)
        a = np.asarray(adjacency, dtype=np.float64)
        if a.ndim != 2:
            raise InputError("adjacency must be a 2-D matrix")
        return cls(sp.csr_matrix(a), labels=labels)

    def edges(self):
        """Unordered edges as ``(i, j, w)`` with ``i <= j``."""
        upper = sp.triu(self._w).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return [(int(upper.row[t]), int(upper.col[t]), float(upper.data[t])) for t in order]

    def edge_arrays(self):
        """Unordered edges as ``(rows, cols, weights)`` arrays with ``rows <= cols``."""
        upper = sp.triu(self._w).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return upper.row[order], upper.col[order], upper.data[order]

    def label(self, i):
        return self.labels[i] if self.labels is not None else str(i)

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edge_count}, m={self.total_weight:g})"


def build_graph(edges, n_vertices=None, labels=None):
    """Build a graph from ``(u, v, w)`` triples over integer vertex ids.

    Duplicate pairs are summed and each pair is mirrored, so ``(0, 1, 1)``
    and ``(1, 0, 1)`` together give ``W_01 = 2``. A self-loop ``(i, i, w)``
    adds ``w`` to ``W_ii`` once.

    Raises
    ------
    InputError
        On negative weights, invalid ids, or zero total weight.
    """
    rows, cols, vals = [], [], []
    top = -1
    for triple in edges:
        if len(triple) == 2:
            u, v, w = triple[0], triple[1], 1.0
        else:
            u, v, w = triple
        w = float(w)
        if not np.isfinite(w) or w < 0:
            raise InputError(f"invalid weight in edge {tuple(triple)!r}")
        u, v = int(u), int(v)
        if u < 0 or v < 0:
            raise InputError(f"negative vertex id in edge {tuple(triple)!r}")
        top = max(top, u, v)
        rows.append(u)
        cols.append(v)
        vals.append(w)
    n = top + 1 if n_vertices is None else int(n_vertices)
    if top >= n:
        raise InputError(f"vertex id {top} out of range for {n} vertices")
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    off = rows != cols
    r = np.concatenate([rows, cols[off]])
    c = np.concatenate([cols, rows[off]])
    d = np.concatenate([vals, vals[off]])
    w = sp.coo_matrix((d, (r, c)), shape=(n, n)).tocsr()
    g = Graph(w, labels=labels)
    if g.total_weight <= 0:
        raise InputError("graph has zero total weight")
    return g


def _skeleton(graph):
    """0/1 adjacency without self-loops."""
    a = graph.weights.copy()
    a.setdiag(0)
    a.eliminate_zeros()
    a.data[:] = 1.0
    return a


def density(graph):
    """Fraction of connected unordered vertex pairs (self-loops excluded)."""
    if graph.n < 2:
        raise InputError("density needs at least two vertices")
    pairs = _skeleton(graph).nnz // 2
    return pairs / (graph.n * (graph.n - 1) / 2)


def transitivity(graph):
    """Global clustering coefficient of the unweighted skeleton.

    ``3 * triangles / connected_triples``.
    """
    a = _skeleton(graph)
    deg = np.asarray(a.sum(axis=1)).ravel()
    triples = float(np.sum(deg * (deg - 1)) / 2)
    if triples == 0:
        raise InputError("transitivity undefined: graph has no connected triple")
    # trace(A^3) = 6 * triangles
    closed = float((a @ a).multiply(a).sum())
    return (closed / 2) / triples


def b_apply(graph, x):
    """Product ``B @ X`` with the zero-diagonal modularity matrix.

    ``B_ij = (W_ij - k_i k_j / 2m) / 2m`` for ``i != j`` and ``B_ii = 0``.

    Parameters
    ----------
    graph : Graph
    x : ndarray of shape (n,) or (n, c)

    Returns
    -------
    ndarray with the shape of ``x``
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != graph.n:
        raise InputError(f"operand has {x.shape[0]} rows, graph has {graph.n} vertices")
    return _BOperator(graph).apply(x)


class _BOperator:
    """Cached pieces of ``B`` for repeated products."""

    def __init__(self, graph):
        two_m = 2.0 * graph.total_weight
        self.w = graph.weights * (1.0 / two_m)
        self.k = graph.degrees / two_m
        # adds back the removed diagonal of (W - P) / 2m
        self.diag = (graph.degrees**2 / two_m - graph.self_loops) / two_m
        self.n = graph.n

    def apply(self, x):
        if x.ndim == 1:
            return self.w @ x - self.k * (self.k @ x) + self.diag * x
        return self.w @ x - np.outer(self.k, self.k @ x) + self.diag[:, None] * x


@dataclass(frozen=True)
class Clustering:
    """Hard assignment of ``n`` vertices to ``n_clusters`` (possibly empty) clusters."""

    assignment: np.ndarray
    n_clusters: int

    def __post_init__(self):
        a = np.array(self.assignment, dtype=np.int64).ravel()
        c = int(self.n_clusters)
        if c < 1:
            raise InputError("n_clusters must be >= 1")
        if a.size and (a.min() < 0 or a.max() >= c):
            raise InputError(f"assignment values must lie in [0, {c})")
        object.__setattr__(self, "assignment", _readonly(a))
        object.__setattr__(self, "n_clusters", c)

    @property
    def n(self):
        return self.assignment.size

    def sizes(self):
        return np.bincount(self.assignment, minlength=self.n_clusters)

    def nonempty_clusters(self):
        return int(np.count_nonzero(self.sizes()))

    def indicator(self):
        """Sparse 0/1 assignment matrix of shape (n, n_clusters)."""
        n = self.n
        return sp.csr_matrix(
            (np.ones(n), (np.arange(n), self.assignment)), shape=(n, self.n_clusters)
        )

    def to_matrix(self):
        return self.indicator().toarray()

    def __eq__(self, other):
        if not isinstance(other, Clustering):
            return NotImplemented
        return self.n_clusters == other.n_clusters and np.array_equal(
            self.assignment, other.assignment
        )

    __hash__ = None


def _check_clustering(graph, clustering):
    if clustering.n != graph.n:
        raise InputError(f"clustering covers {clustering.n} vertices, graph has {graph.n}")


@dataclass(frozen=True)
class InducedGraph:
    """Cluster-level graph.

    ``weights[k, l]`` sums ``W_ij`` over ``i`` in cluster ``k`` and ``j`` in
    cluster ``l``; the diagonal holds the within-cluster weight (both
    orientations of every internal edge, self-loops once).
    """

    weights: np.ndarray
    sizes: np.ndarray

    @property
    def c(self):
        return self.weights.shape[0]

    def edges(self):
        """Off-diagonal positive-weight pairs ``(k, l, w)`` with ``k < l``."""
        k, l = np.nonzero(np.triu(self.weights, 1))
        return [(int(a), int(b), float(self.weights[a, b])) for a, b in zip(k, l)]


def induced_graph(graph, clustering):
    _check_clustering(graph, clustering)
    m = clustering.indicator()
    wc = (m.T @ graph.weights @ m).toarray()
    # exact symmetry regardless of summation order
    wc = 0.5 * (wc + wc.T)
    return InducedGraph(weights=_readonly(wc), sizes=_readonly(clustering.sizes()))
