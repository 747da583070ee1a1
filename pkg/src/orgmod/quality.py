"""Modularity, organized modularity, crossings and Pareto selection."""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError
from .graph import Clustering, _BOperator, _check_clustering

__all__ = [
    "QualityPoint",
    "modularity",
    "organized_modularity",
    "f_value",
    "expected_modularity",
    "diagonal_offset",
    "count_crossings",
    "pareto_front",
]


def _cluster_sums(graph, clustering):
    """Full ``M^T W M`` and per-cluster degree totals."""
    m = clustering.indicator()
    wc = (m.T @ graph.weights @ m).toarray()
    kc = np.bincount(clustering.assignment, weights=graph.degrees, minlength=clustering.n_clusters)
    return wc, kc


def modularity(graph, clustering):
    """Newman-Girvan modularity, self-pairs ``i = j`` included.

    ``Q = (1/2m) sum_k sum_{i,j in C_k} (W_ij - k_i k_j / 2m)``
    """
    _check_clustering(graph, clustering)
    two_m = 2.0 * graph.total_weight
    wc, kc = _cluster_sums(graph, clustering)
    return float((np.trace(wc) - np.dot(kc, kc) / two_m) / two_m)


def organized_modularity(graph, clustering, prior):
    """``O = (1/2m) sum_ij S_{c(i)c(j)} (W_ij - k_i k_j / 2m)``."""
    _check_clustering(graph, clustering)
    if prior.c != clustering.n_clusters:
        raise InputError(f"prior has {prior.c} clusters, clustering has {clustering.n_clusters}")
    two_m = 2.0 * graph.total_weight
    wc, kc = _cluster_sums(graph, clustering)
    s = prior.similarity
    return float((np.sum(s * wc) - kc @ s @ kc / two_m) / two_m)


def _as_matrix(graph, assignment, c):
    if isinstance(assignment, Clustering):
        _check_clustering(graph, assignment)
        return assignment.to_matrix()
    m = np.asarray(assignment, dtype=np.float64)
    if m.shape != (graph.n, c):
        raise InputError(f"assignment matrix must have shape {(graph.n, c)}, got {m.shape}")
    return m


def f_value(graph, assignment, prior):
    """``F(M) = sum_ij sum_kl M_ik S_kl M_jl B_ij`` for hard or soft ``M``."""
    if isinstance(assignment, Clustering) and assignment.n_clusters != prior.c:
        raise InputError(f"prior has {prior.c} clusters, clustering has {assignment.n_clusters}")
    m = _as_matrix(graph, assignment, prior.c)
    bm = _BOperator(graph).apply(m)
    return float(np.sum(m * (bm @ prior.similarity)))


def diagonal_offset(graph):
    """``(1/2m) sum_i (W_ii - k_i^2 / 2m)``: the gap ``O(M) - F(M)`` for hard ``M``."""
    two_m = 2.0 * graph.total_weight
    return float(np.sum(graph.self_loops - graph.degrees**2 / two_m) / two_m)


def expected_modularity(graph, expectation, b_operator=None):
    """Modularity expectation under a factorized assignment distribution.

    ``sum_{i != j} sum_k <M_ik><M_jk> B_ij + (1/2m) sum_i (W_ii - P_ii)``

    Parameters
    ----------
    graph : Graph
    expectation : ndarray of shape (n, c)
        Row-stochastic soft assignments.
    """
    p = np.asarray(expectation, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != graph.n:
        raise InputError(f"expectation must have {graph.n} rows")
    if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-8):
        raise InputError("expectation rows must sum to 1")
    op = b_operator if b_operator is not None else _BOperator(graph)
    return float(np.sum(p * op.apply(p)) + diagonal_offset(graph))


_CROSS_EPS = 1e-9


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def count_crossings(points, edges):
    """Count pairs of straight edges whose open segments intersect.

    Edges sharing an endpoint index are never counted. Collinear segments
    overlapping over a positive length count once. An endpoint touching the
    interior of another segment is not a crossing.

    Parameters
    ----------
    points : array-like of shape (p, 2)
    edges : array-like of shape (e, 2)
        Endpoint indices into ``points``.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise InputError("positions must be finite")
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.shape[0] < 2:
        return 0
    i, j = np.triu_indices(e.shape[0], 1)
    a, b = e[i], e[j]
    disjoint = (
        (a[:, 0] != b[:, 0]) & (a[:, 0] != b[:, 1]) & (a[:, 1] != b[:, 0]) & (a[:, 1] != b[:, 1])
    )
    a, b = a[disjoint], b[disjoint]
    p1, p2, q1, q2 = pts[a[:, 0]], pts[a[:, 1]], pts[b[:, 0]], pts[b[:, 1]]
    return int(np.count_nonzero(_segments_cross(p1, p2, q1, q2)))


def _segments_cross(p1, p2, q1, q2):
    """Vectorized open-segment intersection predicate."""
    lp = np.linalg.norm(p2 - p1, axis=1)
    lq = np.linalg.norm(q2 - q1, axis=1)
    # orientations normalized to sines of angles
    sp = np.where(lp > 0, lp, 1.0)
    sq = np.where(lq > 0, lq, 1.0)
    d1 = _orient(*q1.T, *q2.T, *p1.T) / sq
    d2 = _orient(*q1.T, *q2.T, *p2.T) / sq
    d3 = _orient(*p1.T, *p2.T, *q1.T) / sp
    d4 = _orient(*p1.T, *p2.T, *q2.T) / sp
    z1, z2, z3, z4 = (np.abs(d) <= _CROSS_EPS for d in (d1, d2, d3, d4))
    proper = ~(z1 | z2 | z3 | z4) & (np.sign(d1) != np.sign(d2)) & (np.sign(d3) != np.sign(d4))
    collinear = z1 & z2 & z3 & z4 & (lp > 0) & (lq > 0)
    overlap = np.zeros_like(proper)
    if np.any(collinear):
        u = (p2 - p1) / sp[:, None]
        t_p1 = np.zeros(len(u))
        t_p2 = lp
        t_q1 = np.sum((q1 - p1) * u, axis=1)
        t_q2 = np.sum((q2 - p1) * u, axis=1)
        lo = np.maximum(np.minimum(t_p1, t_p2), np.minimum(t_q1, t_q2))
        hi = np.minimum(np.maximum(t_p1, t_p2), np.maximum(t_q1, t_q2))
        overlap = collinear & (hi - lo > _CROSS_EPS)
    return proper | overlap


@dataclass(frozen=True)
class QualityPoint:
    """One configuration scored on (modularity, crossings)."""

    modularity: float
    crossings: int
    config_id: object = None
    nonempty_clusters: int = None

    def __post_init__(self):
        if self.crossings < 0:
            raise InputError("crossings must be non-negative")


def _dominates(p, q):
    return (
        p.modularity >= q.modularity
        and p.crossings <= q.crossings
        and (p.modularity > q.modularity or p.crossings < q.crossings)
    )


def pareto_front(points):
    """Non-dominated points (max modularity, min crossings), by decreasing modularity.

    Points tied on both criteria are all kept. The sort is stable, so equal
    modularities keep input order after ordering by fewer crossings.
    """
    points = list(points)
    front = [p for p in points if not any(_dominates(q, p) for q in points)]
    return sorted(front, key=lambda p: (-p.modularity, p.crossings))
