"""Equiangular spherical grids with exact quadrature.

A bandlimit-B grid samples colatitude at theta_j = pi*(2j+1)/(4B) and
azimuth at phi_k = pi*k/B, j,k = 0..2B-1.  The offset colatitudes avoid
the poles and admit weights that integrate every Legendre polynomial up
to degree 2B-1 exactly, which is what makes the harmonic transforms on
this grid invertible for bandlimited signals.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureError

_grid_cache: dict[int, "SphericalGrid"] = {}
_grid_lock = threading.Lock()


@dataclass(frozen=True)
class SphericalGrid:
    """Sampling nodes and quadrature weights for one bandlimit."""

    B: int
    thetas: np.ndarray
    phis: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        """Samples per axis (2B)."""
        return 2 * self.B

    @property
    def area_weights(self) -> np.ndarray:
        """Per-node solid angles, shape (2B, 2B); sums to 4*pi."""
        q = np.pi / self.B
        return np.broadcast_to((q * self.weights)[:, None], (self.n, self.n))

    def __repr__(self):
        return f"SphericalGrid(B={self.B})"


@dataclass
class SphericalSignal:
    """Single real-valued signal sampled on a grid, colatitude-major."""

    grid: SphericalGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n = self.grid.n
        if self.values.shape != (n, n):
            raise ValueError(f"expected shape {(n, n)}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("signal contains non-finite values")


@dataclass
class FeatureMap:
    """C channels of spherical signals sharing one grid."""

    grid: SphericalGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n = self.grid.n
        if self.values.ndim != 3 or self.values.shape[1:] != (n, n):
            raise ValueError(f"expected shape (C, {n}, {n}), got {self.values.shape}")
        if self.values.shape[0] < 1:
            raise ValueError("feature map needs at least one channel")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    def channel(self, c: int) -> SphericalSignal:
        return SphericalSignal(self.grid, self.values[c])


@dataclass
class LabelMap:
    """Dense integer labels on a grid."""

    grid: SphericalGrid
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if not np.issubdtype(self.labels.dtype, np.integer):
            raise ValueError("labels must be integers")
        n = self.grid.n
        if self.labels.shape != (n, n):
            raise ValueError(f"expected shape {(n, n)}, got {self.labels.shape}")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError("label outside [0, num_classes)")


def legendre_matrix(degrees: int, x: np.ndarray) -> np.ndarray:
    """Unnormalized Legendre polynomials P_l(x) for l < degrees; shape (degrees, len(x))."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((degrees, x.size))
    out[0] = 1.0
    if degrees > 1:
        out[1] = x
    for l in range(2, degrees):
        out[l] = ((2 * l - 1) * x * out[l - 1] - (l - 1) * out[l - 2]) / l
    return out


def solve_quadrature(thetas: np.ndarray) -> np.ndarray:
    """Weights w_j with sum_j w_j * P_l(cos theta_j) = 2*delta_{l,0} for l < len(thetas).

    Solves the Legendre-Vandermonde system directly; the prescribed offset
    nodes make it nonsingular with strictly positive solution.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    n = thetas.size
    if n == 0 or np.any(thetas <= 0) or np.any(thetas >= np.pi):
        raise QuadratureError("nodes must lie strictly inside (0, pi)")
    if np.unique(thetas).size != n:
        raise QuadratureError("nodes must be distinct")
    A = legendre_matrix(n, np.cos(thetas))
    b = np.zeros(n)
    b[0] = 2.0
    try:
        w = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:  # cannot occur for the prescribed nodes
        raise QuadratureError(f"singular quadrature system: {exc}") from exc
    if np.any(w <= 0):
        raise QuadratureError("quadrature produced a non-positive weight")
    return w


def make_grid(B: int) -> SphericalGrid:
    """Build (and cache) the bandlimit-B grid with exact quadrature weights."""
    if not isinstance(B, (int, np.integer)) or B < 1:
        raise ValueError(f"bandlimit must be a positive integer, got {B!r}")
    B = int(B)
    with _grid_lock:
        grid = _grid_cache.get(B)
        if grid is None:
            j = np.arange(2 * B)
            thetas = np.pi * (2 * j + 1) / (4 * B)
            phis = np.pi * j / B
            weights = solve_quadrature(thetas)
            grid = SphericalGrid(B=B, thetas=thetas, phis=phis, weights=weights)
            _grid_cache[B] = grid
    return grid


def integrate(s: SphericalSignal) -> float:
    """Quadrature integral over the sphere; exact for bandlimits < B."""
    q = np.pi / s.grid.B
    return float(q * np.dot(s.grid.weights, s.values.sum(axis=1)))
