"""Zonal spectral filters parameterized by anchor points.

A filter is K anchor values placed uniformly over the degree axis; linear
interpolation yields one real gain k_l per degree, and filtering multiplies
every coefficient of degree l by k_l.  Per-degree scaling commutes with the
block-diagonal rotation action, so these filters are exactly
SO(3)-equivariant; fewer anchors force a smoother spectrum and therefore a
spatially tighter kernel.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .grid import SphericalGrid, SphericalSignal, legendre_matrix
from .harmonics import SpectralCoeffs, degree_map


@dataclass
class AnchorFilter:
    """K anchor values over degrees 0..B-1; anchor i sits at i*(B-1)/(K-1)."""

    anchors: np.ndarray
    B: int

    def __post_init__(self):
        self.anchors = np.asarray(self.anchors, dtype=np.float64)
        if self.anchors.ndim != 1:
            raise ValueError("anchors must be a vector")
        K = self.anchors.size
        if K < 2:
            raise ValueError(f"need at least 2 anchors, got {K}")
        if K > self.B:
            raise ValueError(f"anchor count {K} exceeds bandlimit {self.B}")

    @property
    def K(self) -> int:
        return self.anchors.size


@dataclass
class DegreeGains:
    """One real gain per degree l = 0..B-1."""

    B: int
    gains: np.ndarray

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=np.float64)
        if self.gains.shape != (self.B,):
            raise ValueError(f"expected {self.B} gains, got shape {self.gains.shape}")
        if not np.all(np.isfinite(self.gains)):
            raise ValueError("gains must be finite")


_interp_cache: dict[tuple[int, int], np.ndarray] = {}
_interp_lock = threading.Lock()


def interpolation_matrix(B: int, K: int) -> np.ndarray:
    """Matrix M of shape (B, K) with gains = M @ anchors; rows sum to 1."""
    if K < 2:
        raise ValueError(f"need at least 2 anchors, got {K}")
    if K > B:
        raise ValueError(f"anchor count {K} exceeds bandlimit {B}")
    with _interp_lock:
        M = _interp_cache.get((B, K))
        if M is None:
            pos = np.arange(K) * (B - 1.0) / (K - 1.0)
            M = np.zeros((B, K))
            for l in range(B):
                i = min(int(np.searchsorted(pos, l, side="right")) - 1, K - 2)
                i = max(i, 0)
                t = (l - pos[i]) / (pos[i + 1] - pos[i])
                M[l, i] = 1.0 - t
                M[l, i + 1] = t
            _interp_cache[(B, K)] = M
    return M


def interpolate_gains(f: AnchorFilter) -> DegreeGains:
    """Per-degree gains by linear interpolation of the anchors (exact at anchors)."""
    return DegreeGains(f.B, interpolation_matrix(f.B, f.K) @ f.anchors)


def spectral_conv(c: SpectralCoeffs, g: DegreeGains) -> SpectralCoeffs:
    """Scale every degree-l coefficient by k_l (zonal spectral convolution).

    Normalization constants of the continuous convolution theorem are
    absorbed into the gains.
    """
    if c.B != g.B:
        raise ValueError(f"bandlimit mismatch: coefficients B={c.B}, gains B={g.B}")
    return SpectralCoeffs(c.B, c.values * g.gains[degree_map(c.B)])


def truncate_array(values: np.ndarray, B: int, B_new: int) -> np.ndarray:
    """Drop all degrees l >= B_new (flat triangular layout keeps them contiguous)."""
    if not 1 <= B_new <= B:
        raise ValueError(f"truncation target must lie in [1, {B}], got {B_new}")
    return values[..., : B_new * B_new].copy()


def zeropad_array(values: np.ndarray, B: int, B_new: int) -> np.ndarray:
    """Append zero coefficients for degrees B..B_new-1."""
    if B_new < B:
        raise ValueError(f"zero-pad target must be >= {B}, got {B_new}")
    pad = [(0, 0)] * (values.ndim - 1) + [(0, B_new * B_new - B * B)]
    return np.pad(values, pad)


def truncate(c: SpectralCoeffs, B_new: int) -> SpectralCoeffs:
    return SpectralCoeffs(B_new, truncate_array(c.values, c.B, B_new))


def zeropad(c: SpectralCoeffs, B_new: int) -> SpectralCoeffs:
    return SpectralCoeffs(B_new, zeropad_array(c.values, c.B, B_new))


def render_zonal(g: DegreeGains, grid: SphericalGrid) -> SphericalSignal:
    """Spatial kernel h(theta) = sum_l k_l (2l+1)/(4 pi) P_l(cos theta) the gains act as."""
    if g.B != grid.B:
        raise ValueError(f"bandlimit mismatch: gains B={g.B}, grid B={grid.B}")
    P = legendre_matrix(g.B, np.cos(grid.thetas))  # (B, 2B)
    scale = (2.0 * np.arange(g.B) + 1.0) / (4.0 * np.pi)
    profile = (g.gains * scale) @ P
    return SphericalSignal(grid, np.repeat(profile[:, None], grid.n, axis=1))
