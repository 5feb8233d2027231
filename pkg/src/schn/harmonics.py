"""Spherical harmonic analysis and synthesis.

Conventions: complex orthonormal harmonics Y_l^m with Condon-Shortley
phase, so Y_0^0 = 1/(2*sqrt(pi)) and Y_l^{-m} = (-1)^m conj(Y_l^m).
Coefficients are stored degree-major in a flat triangular array of B*B
complex entries, idx(l, m) = l*l + l + m.

Both transform directions are separable: an azimuthal FFT per ring
followed by a Legendre contraction over rings (O(B^3) total).  The
contraction is delegated to the selected backend.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from . import backend
from .grid import FeatureMap, SphericalGrid, SphericalSignal, make_grid


def num_coeffs(B: int) -> int:
    return B * B


def coeff_index(l: int, m: int) -> int:
    """Flat index of f^l_m in the degree-major triangular layout."""
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l, got l={l}, m={m}")
    return l * l + l + m


@dataclass
class SpectralCoeffs:
    """Triangular table of spherical-harmonic coefficients, 0 <= l < B."""

    B: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.B * self.B,):
            raise ValueError(
                f"expected {self.B * self.B} coefficients, got shape {self.values.shape}"
            )

    @classmethod
    def zeros(cls, B: int) -> "SpectralCoeffs":
        return cls(B, np.zeros(B * B, dtype=np.complex128))

    def get(self, l: int, m: int) -> complex:
        return complex(self.values[coeff_index(l, m)])

    def degree_block(self, l: int) -> np.ndarray:
        """Coefficients f^l_m for m = -l..l."""
        return self.values[l * l : (l + 1) * (l + 1)]

    def copy(self) -> "SpectralCoeffs":
        return SpectralCoeffs(self.B, self.values.copy())

    def conjugate_symmetry_defect(self) -> float:
        """Max |f^l_{-m} - (-1)^m conj(f^l_m)|; ~0 for coefficients of real signals."""
        worst = 0.0
        for l in range(self.B):
            block = self.degree_block(l)
            sym = ((-1.0) ** np.arange(-l, l + 1)) * np.conj(block[::-1])
            worst = max(worst, float(np.abs(block - sym).max()))
        return worst


def degree_map(B: int) -> np.ndarray:
    """Degree l of each flat coefficient index; shape (B*B,)."""
    out = np.empty(B * B, dtype=np.int64)
    for l in range(B):
        out[l * l : (l + 1) * (l + 1)] = l
    return out


# ---------------------------------------------------------------------------
# normalized associated Legendre functions

def _legendre_packed(B: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized P~_l^m(x) for all nodes, packed by order.

    Returns (P, offsets): P has one row per (m, l) pair, l = m..B-1 grouped
    by m, evaluated at every node (columns).  Stable diagonal seed followed
    by the upward three-term recurrence in l.
    """
    x = np.asarray(x, dtype=np.float64)
    sint = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    counts = np.arange(B, 0, -1)
    offsets = np.zeros(B, dtype=np.int64)
    offsets[1:] = np.cumsum(counts[:-1])
    P = np.empty((counts.sum(), x.size))
    pmm = np.full(x.size, 1.0 / np.sqrt(4.0 * np.pi))
    for m in range(B):
        row = offsets[m]
        P[row] = pmm
        if m + 1 < B:
            P[row + 1] = np.sqrt(2.0 * m + 3.0) * x * pmm
        for l in range(m + 2, B):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            P[row + l - m] = a * (x * P[row + l - 1 - m] - b * P[row + l - 2 - m])
        if m + 1 < B:
            pmm = -np.sqrt((2.0 * m + 3.0) / (2.0 * m + 2.0)) * sint * pmm
    return P, offsets


def legendre_normalized(B: int, x) -> np.ndarray:
    """Dense table of N_l^m P_l^m(x) for l < B, 0 <= m <= l.

    Fully normalized, Condon-Shortley phase included; the (l, m) entry
    equals Y_l^m(theta, 0) for x = cos(theta).  Scalar x gives a (B, B)
    table, a vector of n nodes gives (n, B, B).
    """
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(np.abs(arr) > 1.0):
        raise ValueError("|x| must not exceed 1")
    P, offsets = _legendre_packed(B, arr)
    out = np.zeros((arr.size, B, B))
    for m in range(B):
        ls = np.arange(m, B)
        out[:, ls, m] = P[offsets[m] : offsets[m] + (B - m)].T
    return out[0] if np.isscalar(x) or np.ndim(x) == 0 else out


class _Tables:
    """Per-bandlimit transform tables: packed Legendre at grid nodes plus weights."""

    def __init__(self, B: int):
        grid = make_grid(B)
        self.B = B
        self.P, self.offsets = _legendre_packed(B, np.cos(grid.thetas))
        self.qw = (np.pi / B) * grid.weights  # quadrature measure per ring
        self.degmap = degree_map(B)
        # maps between the flat triangular (l, m) layout and packed m-major
        # rows for the real-signal half-spectrum fast path
        ls = np.concatenate([np.arange(m, B) for m in range(B)])
        ms = np.concatenate([np.full(B - m, m) for m in range(B)])
        self.tri_pos = ls * ls + ls + ms
        self.tri_neg = ls * ls + ls - ms
        self.tri_sign = np.where(ms % 2 == 0, 1.0, -1.0)


_tables_cache: dict[int, _Tables] = {}
_tables_lock = threading.Lock()


def transform_tables(B: int) -> _Tables:
    with _tables_lock:
        t = _tables_cache.get(B)
        if t is None:
            t = _Tables(B)
            _tables_cache[B] = t
    return t


# ---------------------------------------------------------------------------
# array transforms (batched; leading axes arbitrary)

def analysis_array(x: np.ndarray, B: int, weighted: bool = True) -> np.ndarray:
    """Forward transform of (..., 2B, 2B) samples to (..., B*B) coefficients.

    With ``weighted`` the quadrature measure is applied (the proper forward
    SHT); without it the map is the plain adjoint of :func:`synthesis_array`.
    """
    t = transform_tables(B)
    n = 2 * B
    lead = x.shape[:-2]
    G = np.fft.fft(x, axis=-1)
    if weighted:
        G *= t.qw[:, None]
    Gt = np.ascontiguousarray(np.swapaxes(G, -1, -2)).reshape(-1, n, n)
    C = backend.analysis(Gt, t.P, t.offsets, B)
    return C.reshape(*lead, B * B)


def synthesis_array(c: np.ndarray, B: int, real: bool = True) -> np.ndarray:
    """Inverse transform of (..., B*B) coefficients to (..., 2B, 2B) samples."""
    t = transform_tables(B)
    n = 2 * B
    lead = c.shape[:-1]
    C = np.ascontiguousarray(c).reshape(-1, B * B).astype(np.complex128, copy=False)
    Ht = backend.synthesis(C, t.P, t.offsets, B)
    H = np.swapaxes(Ht, -1, -2)
    y = n * np.fft.ifft(H, axis=-1)
    y = y.reshape(*lead, n, n)
    return y.real.copy() if real else y


def analysis_real_array(x: np.ndarray, B: int, weighted: bool = True) -> np.ndarray:
    """Forward transform of real samples via the half-spectrum fast path.

    Output is the full (..., B*B) complex table with its conjugate symmetry
    filled from the non-negative orders; identical to
    :func:`analysis_array` for real input, at roughly half the work.
    """
    t = transform_tables(B)
    n = 2 * B
    lead = x.shape[:-2]
    G = np.fft.rfft(x, axis=-1)
    if weighted:
        G *= t.qw[:, None]
    Gt = np.ascontiguousarray(np.swapaxes(G, -1, -2)[..., :B, :]).reshape(-1, B, n)
    packed = backend.analysis_half(Gt, t.P, t.offsets, B)
    out = np.empty((packed.shape[0], B * B), dtype=np.complex128)
    out[:, t.tri_pos] = packed
    out[:, t.tri_neg] = t.tri_sign * np.conj(packed)
    return out.reshape(*lead, B * B)


def synthesis_real_array(c: np.ndarray, B: int) -> np.ndarray:
    """Inverse transform of conjugate-symmetric coefficients to real samples.

    Only the non-negative orders are read; the result equals
    :func:`synthesis_array` whenever the symmetry holds.
    """
    t = transform_tables(B)
    n = 2 * B
    lead = c.shape[:-1]
    flat = np.ascontiguousarray(c).reshape(-1, B * B)
    packed = np.ascontiguousarray(flat[:, t.tri_pos])
    Ht = backend.synthesis_half(packed, t.P, t.offsets, B)
    H = np.zeros((flat.shape[0], n, B + 1), dtype=np.complex128)
    H[:, :, :B] = np.swapaxes(Ht, -1, -2)
    y = n * np.fft.irfft(H, n=n, axis=-1)
    return y.reshape(*lead, n, n)


# ---------------------------------------------------------------------------
# public single-signal API

def sht_forward(s: SphericalSignal) -> SpectralCoeffs:
    """Spherical harmonic analysis; exact for signals of bandlimit < B."""
    B = s.grid.B
    return SpectralCoeffs(B, analysis_array(s.values, B))


def sht_inverse(c: SpectralCoeffs, grid: SphericalGrid) -> SphericalSignal:
    """Spherical harmonic synthesis; the small imaginary residue of
    conjugate-symmetric coefficients is discarded."""
    if c.B != grid.B:
        raise ValueError(f"bandlimit mismatch: coefficients B={c.B}, grid B={grid.B}")
    return SphericalSignal(grid, synthesis_array(c.values, grid.B))


def power_spectrum(c: SpectralCoeffs) -> np.ndarray:
    """Sum_m |f^l_m|^2 per degree."""
    return np.array([float(np.abs(c.degree_block(l)) ** 2 @ np.ones(2 * l + 1)) for l in range(c.B)])


def random_bandlimited(grid: SphericalGrid, rng: np.random.Generator, scale: float = 1.0) -> SphericalSignal:
    """Random real signal of exact bandlimit B (useful for property tests)."""
    B = grid.B
    c = np.zeros(B * B, dtype=np.complex128)
    for l in range(B):
        block = rng.standard_normal(2 * l + 1) + 1j * rng.standard_normal(2 * l + 1)
        block[l] = block[l].real  # m = 0 real
        ms = np.arange(-l, l + 1)
        block[: l] = ((-1.0) ** ms[l + 1 :])[::-1] * np.conj(block[l + 1 :][::-1])
        c[l * l : (l + 1) * (l + 1)] = scale * block
    return SphericalSignal(grid, synthesis_array(c, B))
