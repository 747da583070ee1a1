"""Cluster-level layouts: grid placement, fuzzy annealing frames, refinement."""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .exceptions import InputError
from .graph import induced_graph

__all__ = [
    "Layout",
    "FuzzyFrame",
    "grid_layout",
    "expected_positions",
    "collapse_positions",
    "fr_refine",
    "fr_layout",
    "fuzzy_frames",
]


@dataclass(frozen=True)
class Layout:
    """Points to draw, one per displayed node.

    Attributes
    ----------
    points : ndarray of shape (p, 2)
    sizes : ndarray of shape (p,)
        Number of original vertices behind each displayed node.
    edges : ndarray of shape (e, 2)
        Endpoint indices into ``points``.
    edge_weights : ndarray of shape (e,)
    node_ids : tuple
        Cluster index (or group index) of each displayed node.
    node_kind : str
        ``"cluster"`` or ``"group"``.
    """

    points: np.ndarray
    sizes: np.ndarray
    edges: np.ndarray
    edge_weights: np.ndarray
    node_ids: tuple = ()
    node_kind: str = "cluster"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise InputError("layout coordinates must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "sizes", np.asarray(self.sizes, dtype=np.int64))
        object.__setattr__(self, "edges", np.asarray(self.edges, dtype=np.int64).reshape(-1, 2))
        object.__setattr__(self, "edge_weights", np.asarray(self.edge_weights, dtype=np.float64))
        if not self.node_ids:
            object.__setattr__(self, "node_ids", tuple(range(len(pts))))

    def with_points(self, points):
        return Layout(points, self.sizes, self.edges, self.edge_weights, self.node_ids, self.node_kind)


@dataclass(frozen=True)
class FuzzyFrame:
    """Collapsed expected-position layout at one temperature.

    ``membership[i]`` is the group of vertex ``i``; ``layout.points[g]`` is the
    refined position of group ``g`` and ``centroids[g]`` its position before
    refinement.
    """

    temperature: float
    layout: Layout
    membership: np.ndarray
    centroids: np.ndarray

    @property
    def n_groups(self):
        return len(self.centroids)


def _require_positions(prior):
    if prior.positions is None:
        raise InputError("prior structure has no positions; use a grid or custom prior")


def _group_edges(graph, membership, n_groups):
    """Summed original weights between distinct groups, as (edges, weights)."""
    m = sp.csr_matrix(
        (np.ones(graph.n), (np.arange(graph.n), membership)), shape=(graph.n, n_groups)
    )
    wg = sp.triu(m.T @ graph.weights @ m, 1).tocoo()
    order = np.lexsort((wg.col, wg.row))
    edges = np.column_stack([wg.row[order], wg.col[order]])
    return edges, wg.data[order]


def grid_layout(clustering, prior, induced):
    """Place every non-empty cluster at its grid position.

    Empty clusters are dropped; edges carry the off-diagonal induced weights.
    """
    _require_positions(prior)
    if clustering.n_clusters != prior.c or induced.c != prior.c:
        raise InputError("clustering, prior and induced graph disagree on the cluster count")
    keep = np.flatnonzero(induced.sizes > 0)
    remap = {int(k): i for i, k in enumerate(keep)}
    edges, weights = [], []
    for k, l, w in induced.edges():
        if k in remap and l in remap:
            edges.append((remap[k], remap[l]))
            weights.append(w)
    return Layout(
        points=prior.positions[keep],
        sizes=induced.sizes[keep],
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        edge_weights=np.array(weights),
        node_ids=tuple(int(k) for k in keep),
        node_kind="cluster",
    )


def expected_positions(expectation, prior):
    """``p_i = sum_k <M_ik> x_k``."""
    _require_positions(prior)
    p = np.asarray(expectation, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != prior.c:
        raise InputError(f"expectation must have {prior.c} columns")
    return p @ prior.positions


def collapse_positions(points, cut_distance):
    """Complete-linkage agglomeration of points, cut at ``cut_distance``.

    Groups are merged while the merged diameter stays within the cut. Among
    equal linkage distances the lexicographically smallest pair of group
    representatives (smallest member index) merges first.

    Returns
    -------
    membership : ndarray of shape (n,)
        Group index per point; groups are numbered by their smallest member.
    centroids : ndarray of shape (g, 2)
    """
    if not cut_distance > 0:
        raise InputError("cut_distance must be > 0")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, 2))
    # exact duplicates have zero linkage distance and merge first anyway
    uniq, first, inverse = np.unique(pts, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    reps = uniq[order]
    rep_of = rank[inverse.ravel()]

    # a group never spans two components of the within-cut graph
    pairs = cKDTree(reps).query_pairs(cut_distance, output_type="ndarray")
    u = len(reps)
    adj = sp.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(u, u))
    _, comp = connected_components(adj, directed=False)
    root = np.arange(u)
    for c in np.unique(comp[np.unique(pairs)]) if len(pairs) else []:
        idx = np.flatnonzero(comp == c)
        root[idx] = idx[_complete_linkage(reps[idx], cut_distance)]

    _, membership = np.unique(root[rep_of], return_inverse=True)
    membership = membership.ravel()
    g = membership.max() + 1
    counts = np.bincount(membership, minlength=g)
    centroids = np.column_stack([
        np.bincount(membership, weights=pts[:, 0], minlength=g),
        np.bincount(membership, weights=pts[:, 1], minlength=g),
    ]) / counts[:, None]
    return membership, centroids


def _complete_linkage(pts, cut):
    """Local index of the smallest member of each point's group."""
    u = len(pts)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    if d.max() <= cut:
        return np.zeros(u, dtype=np.int64)
    np.fill_diagonal(d, np.inf)
    lower = np.zeros((u, u))
    lower[np.tril_indices(u)] = np.inf
    label = np.arange(u)
    while True:
        a, b = divmod(int(np.argmin(d + lower)), u)
        if not d[a, b] <= cut:
            break
        merged = np.maximum(d[a], d[b])
        merged[a] = np.inf
        d[a, :] = merged
        d[:, a] = merged
        d[b, :] = np.inf
        d[:, b] = np.inf
        label[label == b] = a
    return label


def _coincident_direction(i, j):
    angle = 2.0 * np.pi * ((0.6180339887498949 * (i * 7919 + j)) % 1.0)
    return np.array([np.cos(angle), np.sin(angle)])


def _fr_iterate(points, edges, iterations, ideal, max_step):
    pos = np.array(points, dtype=np.float64)
    n = len(pos)
    if iterations <= 0 or n == 0:
        return pos
    k2 = ideal * ideal
    for it in range(iterations):
        step = max_step * (1.0 - it / iterations)
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta**2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        same = np.isclose(dist, 0.0, atol=1e-12)
        safe = np.where(same, 1.0, dist)
        # repulsion k^2 / d along the unit vector
        disp = (delta * (k2 / safe**2)[:, :, None] * ~same[:, :, None]).sum(axis=1)
        if np.any(same):
            for i, j in zip(*np.nonzero(np.triu(same, 1))):
                push = _coincident_direction(i, j) * ideal
                disp[i] += push
                disp[j] -= push
        if len(edges):
            src, dst = edges[:, 0], edges[:, 1]
            dv = pos[src] - pos[dst]
            dl = np.sqrt((dv**2).sum(-1))
            pull = dv * (dl / ideal)[:, None]
            np.subtract.at(disp, src, pull)
            np.add.at(disp, dst, pull)
        length = np.sqrt((disp**2).sum(-1))
        scale = np.where(length > 0, np.minimum(length, step) / np.where(length > 0, length, 1.0), 0.0)
        pos = pos + disp * scale[:, None]
    return pos


def fr_refine(layout, iterations=20, spacing=1.0, ideal_length=None, max_step=None):
    """A few Fruchterman-Reingold steps that nudge overlapping nodes apart.

    The displacement cap starts at ``max_step`` (default ``0.1 * spacing``)
    and decreases linearly to zero over the iteration budget; the ideal edge
    length defaults to ``0.5 * spacing``. Zero iterations return the layout
    unchanged.
    """
    if iterations < 0:
        raise InputError("iterations must be >= 0")
    if iterations == 0:
        return layout
    ideal = 0.5 * spacing if ideal_length is None else ideal_length
    step = 0.1 * spacing if max_step is None else max_step
    return layout.with_points(_fr_iterate(layout.points, layout.edges, iterations, ideal, step))


def fr_layout(layout, seed=0, iterations=300):
    """Full force-directed layout from random initial positions in the unit square."""
    rng = np.random.default_rng(seed)
    n = len(layout.points)
    start = rng.uniform(0.0, 1.0, size=(n, 2))
    ideal = np.sqrt(1.0 / max(n, 1))
    pos = _fr_iterate(start, layout.edges, iterations, ideal, 0.1)
    return layout.with_points(pos)


def _frame(graph, prior, expectation, temperature, cut, fr_iterations, spacing):
    pts = expected_positions(expectation, prior)
    membership, centroids = collapse_positions(pts, cut)
    g = len(centroids)
    edges, weights = _group_edges(graph, membership, g)
    base = Layout(
        points=centroids,
        sizes=np.bincount(membership, minlength=g),
        edges=edges,
        edge_weights=weights,
        node_kind="group",
    )
    refined = fr_refine(base, fr_iterations, spacing=spacing)
    return FuzzyFrame(temperature=temperature, layout=refined, membership=membership, centroids=centroids)


def fuzzy_frames(graph, trail, prior, cut=None, fr_iterations=20):
    """Collapsed expected-position layouts for every stored snapshot.

    Parameters
    ----------
    graph : Graph
    trail : AnnealTrail
    prior : PriorStructure
    cut : float, optional
        Collapse distance; defaults to 5% of the grid spacing.
    fr_iterations : int

    Returns
    -------
    list of FuzzyFrame
        In trail order (decreasing temperature). Snapshots without a stored
        expectation are skipped with a warning.
    """
    _require_positions(prior)
    spacing = prior.grid_spacing()
    cut = 0.05 * spacing if cut is None else cut
    frames = []
    skipped = 0
    for snap in trail:
        if snap.expectation is None:
            skipped += 1
            continue
        frames.append(_frame(graph, prior, snap.expectation, snap.temperature, cut, fr_iterations, spacing))
    if skipped:
        warnings.warn(f"{skipped} snapshot(s) without stored expectations were skipped")
    return frames


def induced_grid_layout(graph, clustering, prior):
    """Convenience: induced graph of ``clustering`` placed on the prior grid."""
    return grid_layout(clustering, prior, induced_graph(graph, clustering))
