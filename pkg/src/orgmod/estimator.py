"""scikit-learn compatible front end."""

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .annealing import DEFAULT_EM_TOL, AnnealConfig, anneal
from .exceptions import InputError
from .graph import Graph
from .layout import expected_positions
from .prior import PriorStructure, custom_prior, grid_prior, identity_prior
from .quality import modularity, organized_modularity

__all__ = ["OrganizedModularityClustering", "check_graph"]


def check_graph(X):
    """Validate a graph given as a :class:`Graph` or a square adjacency matrix.

    Dense and sparse inputs are accepted; the matrix must be symmetric with
    non-negative finite entries and a positive total weight.
    """
    if isinstance(X, Graph):
        g = X
    else:
        a = check_array(X, accept_sparse=("csr", "csc", "coo"), dtype=np.float64,
                        ensure_min_samples=1, ensure_min_features=1, copy=True)
        if a.shape[0] != a.shape[1]:
            raise InputError(f"adjacency matrix must be square, got shape {a.shape}")
        g = Graph(a if sp.issparse(a) else sp.csr_matrix(a))
    if g.total_weight <= 0:
        raise InputError("graph has zero total weight")
    return g


class OrganizedModularityClustering(ClusterMixin, TransformerMixin, BaseEstimator):
    """Topographic graph clustering by organized modularity maximization.

    Vertices are clustered onto the nodes of a prior grid so that densely
    connected groups land on neighboring grid nodes. Optimization uses
    deterministic annealing under a mean-field approximation.

    Parameters
    ----------
    grid : tuple of int (rows, cols), optional
        Prior grid. Ignored when ``similarity`` is given.
    n_clusters : int, optional
        Without ``grid`` or ``similarity``, cluster into ``n_clusters`` with
        the identity prior (plain modularity maximization).
    kernel : {"exponential", "linear"}
        Neighborhood function of the grid prior.
    scale : float
        Neighborhood scale; larger means less influence between grid nodes.
    similarity : array-like of shape (C, C), optional
        Explicit prior similarity matrix (symmetric, unit diagonal).
    positions : array-like of shape (C, 2), optional
        Positions attached to an explicit ``similarity``.
    outer_steps : int, optional
        Number of temperatures; defaults to the vertex count.
    start_factor, final_temp_ratio : float
        Schedule from ``start_factor * T0`` down to ``final_temp_ratio * T0``.
    noise : tuple of float
        Bounds of the multiplicative noise applied at every temperature.
    em_tol : float
    em_max_iters : int
    random_state : int
        Seed of the first run; run ``r`` of ``n_init`` uses ``random_state + r``.
    n_init : int
        Independent runs; the one with the highest organized modularity wins.

    Attributes
    ----------
    labels_ : ndarray of shape (n_vertices,)
    expectation_ : ndarray of shape (n_vertices, C)
        Final soft assignments.
    modularity_ : float
    organized_modularity_ : float
    n_nonempty_clusters_ : int
    critical_temperature_ : float
    transitions_ : list of float
    trail_ : AnnealTrail
    prior_ : PriorStructure
    result_ : AnnealResult
    """

    def __init__(self, grid=None, n_clusters=None, kernel="exponential", scale=1.0,
                 similarity=None, positions=None, outer_steps=None, start_factor=1.1,
                 final_temp_ratio=0.1, noise=(0.995, 1.005), em_tol=DEFAULT_EM_TOL,
                 em_max_iters=500, random_state=0, n_init=1):
        self.grid = grid
        self.n_clusters = n_clusters
        self.kernel = kernel
        self.scale = scale
        self.similarity = similarity
        self.positions = positions
        self.outer_steps = outer_steps
        self.start_factor = start_factor
        self.final_temp_ratio = final_temp_ratio
        self.noise = noise
        self.em_tol = em_tol
        self.em_max_iters = em_max_iters
        self.random_state = random_state
        self.n_init = n_init

    def _make_prior(self):
        if isinstance(self.similarity, PriorStructure):
            return self.similarity
        if self.similarity is not None:
            s = np.asarray(self.similarity, dtype=np.float64)
            return custom_prior(self.positions, s)
        if self.grid is not None:
            rows, cols = self.grid
            return grid_prior(rows, cols, self.kernel, self.scale)
        if self.n_clusters is not None:
            return identity_prior(self.n_clusters)
        raise InputError("set one of grid, similarity or n_clusters")

    def _config(self, seed):
        low, high = self.noise
        return AnnealConfig(
            outer_steps=self.outer_steps,
            start_factor=self.start_factor,
            final_temp_ratio=self.final_temp_ratio,
            noise_low=low,
            noise_high=high,
            em_tol=self.em_tol,
            em_max_iters=self.em_max_iters,
            seed=seed,
        )

    def fit(self, X, y=None):
        """Cluster the graph ``X`` (adjacency matrix or :class:`Graph`)."""
        graph = check_graph(X)
        prior = self._make_prior()
        if int(self.n_init) < 1:
            raise InputError("n_init must be >= 1")
        seed0 = 0 if self.random_state is None else int(self.random_state)
        best = None
        for r in range(int(self.n_init)):
            res = anneal(graph, prior, self._config(seed0 + r))
            score = organized_modularity(graph, res.clustering, prior)
            if best is None or score > best[0]:
                best = (score, res)
        score, res = best
        self.graph_ = graph
        self.prior_ = prior
        self.result_ = res
        self.labels_ = res.clustering.assignment.copy()
        self.expectation_ = res.final_expectation
        self.organized_modularity_ = score
        self.modularity_ = modularity(graph, res.clustering)
        self.n_nonempty_clusters_ = res.clustering.nonempty_clusters()
        self.critical_temperature_ = res.critical_temperature
        self.transitions_ = list(res.transitions)
        self.trail_ = res.trail
        return self

    def _check_same_graph(self, X):
        g = check_graph(X)
        if g.n != self.graph_.n or (g.weights != self.graph_.weights).nnz:
            raise InputError("the estimator is transductive: X must be the graph passed to fit")

    def transform(self, X):
        """Expected grid positions of the fitted vertices.

        Clustering is transductive: ``X`` must be the graph passed to
        :meth:`fit`. Priors without positions return the soft assignment
        matrix instead.
        """
        check_is_fitted(self, "labels_")
        self._check_same_graph(X)
        if self.prior_.positions is None:
            return self.expectation_.copy()
        return expected_positions(self.expectation_, self.prior_)

    def predict(self, X):
        """Cluster labels of the fitted graph ``X``."""
        check_is_fitted(self, "labels_")
        self._check_same_graph(X)
        return self.labels_.copy()
