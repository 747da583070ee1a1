"""Topographic graph clustering by organized modularity maximization."""

from .annealing import AnnealConfig, AnnealResult, anneal, detect_transitions, harden
from .estimator import OrganizedModularityClustering, check_graph
from .exceptions import InputError, NumericError, ParseError
from .graph import Clustering, Graph, b_apply, build_graph, density, induced_graph, transitivity
from .prior import custom_prior, grid_prior, identity_prior
from .quality import count_crossings, expected_modularity, modularity, organized_modularity, pareto_front

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig",
    "AnnealResult",
    "Clustering",
    "Graph",
    "InputError",
    "NumericError",
    "OrganizedModularityClustering",
    "ParseError",
    "anneal",
    "b_apply",
    "build_graph",
    "check_graph",
    "count_crossings",
    "custom_prior",
    "density",
    "detect_transitions",
    "expected_modularity",
    "grid_prior",
    "harden",
    "identity_prior",
    "induced_graph",
    "modularity",
    "organized_modularity",
    "pareto_front",
    "transitivity",
]
