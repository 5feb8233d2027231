"""Spherical convolutional hourglass networks.

Exact spherical harmonic transforms on offset equiangular grids,
rotation-equivariant spectral filtering, a differentiable hourglass
encoder-decoder for dense labeling on the sphere, and the training and
evaluation harness for the canonical-vs-rotated protocol.
"""

__version__ = "0.1.0"

from .grid import FeatureMap, LabelMap, SphericalGrid, SphericalSignal, integrate, make_grid, solve_quadrature
from .harmonics import SpectralCoeffs, legendre_normalized, sht_forward, sht_inverse
from .rotation import RotationZYZ, WignerDBlock, haar_rotation, rotate_coeffs, rotate_signal, wigner_d
from .filters import AnchorFilter, DegreeGains, interpolate_gains, render_zonal, spectral_conv, truncate, zeropad

__all__ = [
    "FeatureMap",
    "LabelMap",
    "SphericalGrid",
    "SphericalSignal",
    "integrate",
    "make_grid",
    "solve_quadrature",
    "SpectralCoeffs",
    "legendre_normalized",
    "sht_forward",
    "sht_inverse",
    "RotationZYZ",
    "WignerDBlock",
    "haar_rotation",
    "rotate_coeffs",
    "rotate_signal",
    "wigner_d",
    "AnchorFilter",
    "DegreeGains",
    "interpolate_gains",
    "render_zonal",
    "spectral_conv",
    "truncate",
    "zeropad",
]
