"""Prior grid structures and spectral radius estimation."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import InputError

__all__ = [
    "PriorStructure",
    "build_grid",
    "similarity_matrix",
    "grid_prior",
    "identity_prior",
    "custom_prior",
    "neighbor_scale",
    "spectral_radius",
    "KERNELS",
    "MAX_GRID_DIM",
]

MAX_GRID_DIM = 10


def _exponential(t):
    return np.exp(-(t**2))


def _linear(t):
    return np.maximum(0.0, 1.0 - t)


KERNELS = {"exponential": _exponential, "linear": _linear}
_KERNEL_ALIASES = {"exp": "exponential", "gaussian": "exponential", "lin": "linear"}


def _kernel_name(kernel):
    name = _KERNEL_ALIASES.get(kernel, kernel)
    if name not in KERNELS:
        raise InputError(f"unknown kernel {kernel!r}; expected one of {sorted(KERNELS)}")
    return name


@dataclass(frozen=True)
class PriorStructure:
    """Cluster positions in the plane plus the ``C x C`` similarity matrix ``S``.

    ``positions`` is ``None`` for the identity prior, which has no geometry.
    ``shape`` is ``(rows, cols)`` for grid priors.
    """

    similarity: np.ndarray
    positions: np.ndarray = None
    kernel: str = "identity"
    scale: float = None
    shape: tuple = None
    _is_identity: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        s = np.array(self.similarity, dtype=np.float64)
        _validate_similarity(s)
        s.flags.writeable = False
        object.__setattr__(self, "similarity", s)
        if self.positions is not None:
            p = np.array(self.positions, dtype=np.float64).reshape(-1, 2)
            if p.shape[0] != s.shape[0]:
                raise InputError(f"{p.shape[0]} positions for a {s.shape[0]}-cluster prior")
            if not np.all(np.isfinite(p)):
                raise InputError("positions must be finite")
            p.flags.writeable = False
            object.__setattr__(self, "positions", p)
        object.__setattr__(self, "_is_identity", bool(np.array_equal(s, np.eye(s.shape[0]))))

    @property
    def c(self):
        return self.similarity.shape[0]

    @property
    def is_identity(self):
        return self._is_identity

    def grid_spacing(self):
        """Smallest distance between two distinct prior positions."""
        if self.positions is None or self.c < 2:
            return 1.0
        d = cdist(self.positions, self.positions)
        d = d[d > 0]
        return float(d.min()) if d.size else 1.0


def _validate_similarity(s):
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
        raise InputError(f"similarity must be a non-empty square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InputError("similarity entries must be finite")
    if not np.array_equal(s, s.T):
        raise InputError("similarity matrix must be symmetric")
    if not np.all(np.diag(s) == 1.0):
        raise InputError("similarity matrix must have a unit diagonal")


def build_grid(rows, cols):
    """Integer grid coordinates ``(r, c)`` in row-major order."""
    rows, cols = int(rows), int(cols)
    for name, v in (("rows", rows), ("cols", cols)):
        if not 1 <= v <= MAX_GRID_DIM:
            raise InputError(f"{name} must be in [1, {MAX_GRID_DIM}], got {v}")
    r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    return np.column_stack([r.ravel(), c.ravel()]).astype(np.float64)


def similarity_matrix(positions, kernel="exponential", scale=1.0):
    """``S_ij = H(scale * ||x_i - x_j||)`` for ``H(t) = exp(-t^2)`` or ``max(0, 1 - t)``."""
    scale = float(scale)
    if not scale >= 0:
        raise InputError(f"scale must be >= 0, got {scale}")
    h = KERNELS[_kernel_name(kernel)]
    p = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    s = h(scale * cdist(p, p))
    np.fill_diagonal(s, 1.0)
    return s


def grid_prior(rows, cols, kernel="exponential", scale=1.0):
    pos = build_grid(rows, cols)
    name = _kernel_name(kernel)
    return PriorStructure(
        similarity=similarity_matrix(pos, name, scale),
        positions=pos,
        kernel=name,
        scale=float(scale),
        shape=(int(rows), int(cols)),
    )


def identity_prior(c):
    """``S = I``: organized modularity reduces to plain modularity."""
    c = int(c)
    if c < 1:
        raise InputError("need at least one cluster")
    return PriorStructure(similarity=np.eye(c), kernel="identity")


def custom_prior(positions, similarity):
    """Accept a user-supplied ``S`` verbatim after symmetry/unit-diagonal checks."""
    return PriorStructure(similarity=similarity, positions=positions, kernel="custom")


def neighbor_scale(kernel, neighbor_similarity):
    """Scale giving similarity ``neighbor_similarity`` between unit-spaced grid nodes.

    For the exponential kernel a target of 0 is unreachable; the scale is then
    chosen so the nearest-neighbor similarity equals machine epsilon.
    """
    s = float(neighbor_similarity)
    if not 0 <= s < 1:
        raise InputError("neighbor similarity must lie in [0, 1)")
    if _kernel_name(kernel) == "linear":
        return 1.0 - s
    if s == 0:
        s = np.finfo(np.float64).eps
    return math.sqrt(-math.log(s))


def spectral_radius(operator, n=None, max_iter=200, tol=1e-6, block=4):
    """Power-iteration estimate of the largest absolute eigenvalue.

    Parameters
    ----------
    operator : ndarray of shape (n, n) or callable
        A symmetric matrix, or a function computing ``A @ V`` for an
        ``(n, k)`` block ``V``.
    n : int, optional
        Dimension; required when ``operator`` is callable.
    max_iter : int
    tol : float
        Iteration stops once the estimate changes by less than ``tol``
        (relative) and the leading Ritz residual is below ``sqrt(tol)``.
    block : int
        Number of vectors iterated together.

    Returns
    -------
    radius : float
    n_iter : int

    Notes
    -----
    A small block of vectors is iterated and re-orthonormalized, and the
    estimate is the largest absolute Ritz value of ``A`` on that block.
    With a single vector, convergence is governed by ``|lambda_2 / lambda_1|``
    and stalls when the two leading magnitudes are close or of opposite sign.
    The block makes it depend on ``|lambda_{b+1} / lambda_1|`` instead.
    """
    if callable(operator):
        if n is None:
            raise InputError("n is required for a callable operator")
        apply = operator
    else:
        a = np.asarray(operator, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputError("operator must be square")
        n = a.shape[0]
        apply = a.__matmul__
    b = max(1, min(int(block), n))
    i = np.arange(1, n + 1)[:, None]
    # all-ones plus a deterministic perturbation, then oscillating companions
    v = np.hstack([1.0 + 1e-2 * np.sin(i * 1.618033988749895),
                   np.cos(i * 2.399963229728653 * np.arange(1, b))])
    v, _ = np.linalg.qr(v)
    estimate = 0.0
    for it in range(1, max_iter + 1):
        w = np.asarray(apply(v)).reshape(n, b)
        if not np.any(w):
            return 0.0, it
        h = v.T @ w
        ritz, y = np.linalg.eigh(0.5 * (h + h.T))
        top = int(np.argmax(np.abs(ritz)))
        new = float(abs(ritz[top]))
        # a stalled estimate is not enough: the leading Ritz pair must also be accurate
        resid = float(np.linalg.norm(w @ y[:, top] - ritz[top] * (v @ y[:, top])))
        converged = abs(new - estimate) <= tol * new and resid <= math.sqrt(tol) * new
        estimate = new
        if converged:
            return estimate, it
        v, _ = np.linalg.qr(w)
    return estimate, max_iter
