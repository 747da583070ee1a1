"""Deterministic annealing with a mean-field approximation.

The optimizer tracks soft assignment expectations ``<M>`` of a Gibbs
distribution over clusterings while the temperature decreases. At each
temperature the mean field ``E`` and the expectations are updated
alternately until ``E`` stabilizes:

    <M_ik> = softmax_k(beta * E_ik)
    E      = 2 B <M> S

The schedule starts just above the critical temperature
``T0 = 2 lambda_B lambda_S / C``, where the uniform fixed point stops being
stable, and decreases geometrically to ``final_temp_ratio * T0``.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import InputError, NumericError
from .graph import Clustering, _BOperator
from .prior import spectral_radius
from .quality import diagonal_offset

__all__ = [
    "AnnealConfig",
    "Snapshot",
    "AnnealTrail",
    "AnnealResult",
    "critical_temperature",
    "initial_mean_field",
    "e_step",
    "m_step",
    "em_until_converged",
    "anneal",
    "harden",
    "detect_transitions",
    "DEFAULT_EM_TOL",
]

DEFAULT_EM_TOL = math.sqrt(np.finfo(np.float64).eps)
_SNAPSHOT_LIMIT = 10**6


@dataclass(frozen=True)
class AnnealConfig:
    """Annealing schedule and inner-loop settings.

    Attributes
    ----------
    outer_steps : int or None
        Number of temperatures ``L``; ``None`` means the vertex count.
    start_factor : float
        Start at ``start_factor * T0``; must exceed 1.
    final_temp_ratio : float
        Last temperature is ``final_temp_ratio * T0``.
    noise_low, noise_high : float
        Bounds of the multiplicative uniform noise applied to ``E`` at every
        temperature.
    em_tol : float
        Stop the inner loop when the mean squared change of ``E`` is below this.
    em_max_iters : int
    seed : int
    snapshot_every : int
        Record every ``snapshot_every``-th temperature (the last one always).
    """

    outer_steps: int = None
    start_factor: float = 1.1
    final_temp_ratio: float = 0.1
    noise_low: float = 0.995
    noise_high: float = 1.005
    em_tol: float = DEFAULT_EM_TOL
    em_max_iters: int = 500
    seed: int = 0
    snapshot_every: int = 1

    def __post_init__(self):
        if self.outer_steps is not None and int(self.outer_steps) < 1:
            raise InputError("outer_steps must be >= 1")
        if not self.start_factor > 1:
            raise InputError("start_factor must be > 1")
        if not 0 < self.final_temp_ratio < 1:
            raise InputError("final_temp_ratio must lie in (0, 1)")
        if not (0 < self.noise_low <= 1 <= self.noise_high):
            raise InputError("noise interval must be positive and contain 1")
        if not self.em_tol > 0:
            raise InputError("em_tol must be > 0")
        if int(self.em_max_iters) < 1:
            raise InputError("em_max_iters must be >= 1")
        if int(self.seed) < 0:
            raise InputError("seed must be a non-negative integer")
        if int(self.snapshot_every) < 1:
            raise InputError("snapshot_every must be >= 1")

    def steps_for(self, n):
        return int(self.outer_steps) if self.outer_steps is not None else int(n)

    def cooling_factor(self, n):
        """``gamma`` such that the last of ``L`` temperatures is ``final_temp_ratio * T0``."""
        steps = self.steps_for(n)
        if steps == 1:
            return 1.0
        return (self.final_temp_ratio / self.start_factor) ** (1.0 / (steps - 1))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Snapshot:
    temperature: float
    expectation: np.ndarray
    expected_modularity: float
    em_iterations: int


@dataclass
class AnnealTrail:
    """Append-only record of the annealing run, in decreasing temperature."""

    snapshots: list = field(default_factory=list)

    def append(self, snap):
        if self.snapshots and not snap.temperature < self.snapshots[-1].temperature:
            raise ValueError("trail temperatures must strictly decrease")
        self.snapshots.append(snap)

    def __len__(self):
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]

    @property
    def temperatures(self):
        return np.array([s.temperature for s in self.snapshots])

    @property
    def expected_modularities(self):
        return np.array([s.expected_modularity for s in self.snapshots])


@dataclass
class AnnealResult:
    clustering: Clustering
    trail: AnnealTrail
    final_expectation: np.ndarray
    critical_temperature: float
    transitions: list
    config: AnnealConfig = None


def critical_temperature(graph, prior, b_operator=None):
    """``T0 = 2 lambda_B lambda_S / C`` from power-iteration spectral radii."""
    if graph.total_weight <= 0:
        raise InputError("graph has zero total weight")
    op = b_operator if b_operator is not None else _BOperator(graph)
    lam_b, _ = spectral_radius(op.apply, n=graph.n)
    lam_s = 1.0 if prior.is_identity else spectral_radius(prior.similarity)[0]
    return 2.0 * lam_b * lam_s / prior.c


def initial_mean_field(graph, prior, b_operator=None):
    """High-temperature fixed point ``E0_jk = (2/C) sum_{i != j} B_ij sum_l S_kl``."""
    op = b_operator if b_operator is not None else _BOperator(graph)
    row = op.apply(np.ones(graph.n))
    return 2.0 * np.outer(row, prior.similarity.sum(axis=1) / prior.c)


def e_step(mean_field, beta):
    """Row-wise softmax of ``beta * E`` (expectation update)."""
    e = np.asarray(mean_field, dtype=np.float64)
    if not beta >= 0:
        raise InputError(f"beta must be >= 0, got {beta}")
    if not np.all(np.isfinite(e)):
        raise NumericError("mean field contains non-finite values")
    z = beta * (e - e.max(axis=1, keepdims=True))
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    return p


def m_step(graph, expectation, prior, b_operator=None):
    """Mean field ``E = 2 B <M> S`` (``B`` with zero diagonal)."""
    p = np.asarray(expectation, dtype=np.float64)
    if p.ndim != 2 or p.shape != (graph.n, prior.c):
        raise InputError(f"expectation must have shape {(graph.n, prior.c)}, got {p.shape}")
    op = b_operator if b_operator is not None else _BOperator(graph)
    return _m_step(op, p, prior)


def _m_step(op, p, prior):
    bp = op.apply(p)
    if not prior.is_identity:
        bp = bp @ prior.similarity
    return 2.0 * bp


def em_until_converged(graph, prior, mean_field, beta, em_tol=DEFAULT_EM_TOL,
                       em_max_iters=500, b_operator=None):
    """Alternate expectation and mean-field updates until ``E`` stabilizes.

    Convergence is declared when the mean squared difference between ``E``
    and its update falls below ``em_tol``. If successive updates reverse
    direction (the period-2 oscillation that synchronous updates develop
    along negative eigenvectors of ``B``), the step is relaxed toward the
    update instead of taken in full; fixed points are unchanged.

    Returns
    -------
    mean_field : ndarray of shape (n, c)
    expectation : ndarray of shape (n, c)
        The expectation that produced the returned mean field.
    n_iter : int
    """
    op = b_operator if b_operator is not None else _BOperator(graph)
    e, p, it, _ = _em(op, prior, np.asarray(mean_field, dtype=np.float64), beta, em_tol,
                      em_max_iters)
    return e, p, it


_MIN_RELAX = 2.0**-10


def _em(op, prior, e, beta, tol, max_iters, relax=1.0):
    prev = None
    for it in range(1, max_iters + 1):
        p = e_step(e, beta)
        g = _m_step(op, p, prior)
        r = g - e
        if float(np.mean(r**2)) < tol:
            return g, p, it, relax
        if prev is not None and np.vdot(r, prev) < 0 and relax > _MIN_RELAX:
            relax *= 0.5
        prev = r
        e = g if relax == 1.0 else e + relax * r
    return g, p, max_iters, relax


def harden(expectation):
    """Winner-take-all thresholding; ties go to the lowest cluster index."""
    p = np.asarray(expectation)
    return Clustering(np.argmax(p, axis=1), p.shape[1])


def _noise_rng(seed, step):
    # counter-based stream keyed on (seed, step): reproducible and independent per step
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(step)])))


def anneal(graph, prior, config=None):
    """Maximize organized modularity by deterministic annealing.

    Parameters
    ----------
    graph : Graph
    prior : PriorStructure
    config : AnnealConfig, optional

    Returns
    -------
    AnnealResult
    """
    config = config or AnnealConfig()
    if graph.total_weight <= 0:
        raise InputError("graph has zero total weight")
    op = _BOperator(graph)
    t0 = critical_temperature(graph, prior, op)
    if not (np.isfinite(t0) and t0 > 0):
        raise NumericError(f"critical temperature is not positive: {t0}")
    steps = config.steps_for(graph.n)
    gamma = config.cooling_factor(graph.n)
    offset = diagonal_offset(graph)
    keep_full = graph.n * prior.c <= _SNAPSHOT_LIMIT
    shape = (graph.n, prior.c)

    e = initial_mean_field(graph, prior, op)
    trail = AnnealTrail()
    p = None
    relax = 1.0
    for step in range(steps):
        temperature = config.start_factor * t0 * gamma**step
        noise = _noise_rng(config.seed, step).uniform(config.noise_low, config.noise_high, shape)
        e = e * noise
        # the relaxation found at one temperature is kept for the colder ones
        e, p, n_iter, relax = _em(op, prior, e, 1.0 / temperature, config.em_tol,
                                  config.em_max_iters, relax)
        if not np.all(np.isfinite(e)):
            raise NumericError(f"mean field diverged at temperature {temperature:g}")
        last = step == steps - 1
        if step % config.snapshot_every == 0 or last:
            q = float(np.sum(p * op.apply(p)) + offset)
            trail.append(Snapshot(
                temperature=temperature,
                expectation=p.copy() if keep_full else None,
                expected_modularity=q,
                em_iterations=n_iter,
            ))
    transitions = detect_transitions(trail) if len(trail) >= 2 else []
    return AnnealResult(
        clustering=harden(p),
        trail=trail,
        final_expectation=p,
        critical_temperature=t0,
        transitions=transitions,
        config=config,
    )


def detect_transitions(trail, abs_floor=0.01, rel_factor=0.05):
    """Temperatures at which the expected modularity jumps.

    A step counts when the increase of ``<Q>`` between consecutive snapshots
    exceeds ``max(abs_floor, rel_factor * (max <Q> - min <Q>))``.
    Consecutive qualifying steps belong to one transition, reported at the
    temperature reached by its largest step.
    """
    temps = np.array([s.temperature for s in trail])
    q = np.array([s.expected_modularity for s in trail])
    if q.size < 2:
        return []
    threshold = max(abs_floor, rel_factor * float(q.max() - q.min()))
    jumps = np.diff(q)
    hits = np.flatnonzero(jumps > threshold)
    found = []
    run = []
    for idx in hits:
        if run and idx != run[-1] + 1:
            found.append(run)
            run = []
        run.append(idx)
    if run:
        found.append(run)
    return [float(temps[max(r, key=lambda i: jumps[i]) + 1]) for r in found]
