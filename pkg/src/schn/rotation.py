"""Rotations of spherical signals in the spectral domain.

A rotation is parameterized by Z-Y-Z Euler angles acting on points as
R = Rz(alpha) @ Ry(beta) @ Rz(gamma).  Rotating a function means
(rot f)(x) = f(R^-1 x); on coefficients this acts per degree as

    f'_m = sum_m' exp(-i m alpha) d^l_{m m'}(beta) exp(-i m' gamma) f_m'

with the standard real orthogonal little-d matrices.  Each d^l(beta) is
obtained from the cached eigendecomposition of the antisymmetric
generator of rotations about y, which keeps every block orthogonal to
machine precision for any beta.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .grid import SphericalGrid, SphericalSignal
from .harmonics import SpectralCoeffs, analysis_array, synthesis_array


@dataclass(frozen=True)
class RotationZYZ:
    """Z-Y-Z Euler angles in radians, beta in [0, pi]."""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    @classmethod
    def identity(cls) -> "RotationZYZ":
        return cls(0.0, 0.0, 0.0)

    def matrix(self) -> np.ndarray:
        """3x3 matrix acting on points: Rz(alpha) @ Ry(beta) @ Rz(gamma)."""
        return _rz(self.alpha) @ _ry(self.beta) @ _rz(self.gamma)

    def inverse(self) -> "RotationZYZ":
        return rotation_from_matrix(self.matrix().T)

    def compose(self, other: "RotationZYZ") -> "RotationZYZ":
        """Rotation equal to applying ``other`` first, then ``self``."""
        return rotation_from_matrix(self.matrix() @ other.matrix())


def _rz(t: float) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(t: float) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_from_matrix(R: np.ndarray) -> RotationZYZ:
    """Z-Y-Z angles of a rotation matrix, beta in [0, pi]."""
    R = np.asarray(R, dtype=np.float64)
    beta = float(np.arccos(np.clip(R[2, 2], -1.0, 1.0)))
    if np.sin(beta) > 1e-12:
        alpha = float(np.arctan2(R[1, 2], R[0, 2]))
        gamma = float(np.arctan2(R[2, 1], -R[2, 0]))
    else:
        # gimbal: only alpha + gamma (or alpha - gamma) is determined
        alpha = float(np.arctan2(R[1, 0], R[0, 0])) if R[2, 2] > 0 else float(
            np.arctan2(-R[1, 0], -R[0, 0])
        )
        gamma = 0.0
        if R[2, 2] < 0:
            beta = np.pi
    return RotationZYZ(alpha % (2 * np.pi), beta, gamma % (2 * np.pi))


def haar_rotation(rng: np.random.Generator) -> RotationZYZ:
    """Haar-uniform random rotation (alpha, gamma uniform; cos beta uniform)."""
    alpha = rng.uniform(0.0, 2.0 * np.pi)
    gamma = rng.uniform(0.0, 2.0 * np.pi)
    beta = float(np.arccos(rng.uniform(-1.0, 1.0)))
    return RotationZYZ(alpha, beta, gamma)


# ---------------------------------------------------------------------------
# Wigner little-d

@dataclass(frozen=True)
class WignerDBlock:
    """Real orthogonal (2l+1) x (2l+1) matrix d^l_{m m'}(beta), indices ascending in m."""

    l: int
    entries: np.ndarray


_eig_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_eig_lock = threading.Lock()


def _generator_eig(l: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of i*A_l, A_l the antisymmetric y-rotation generator."""
    with _eig_lock:
        hit = _eig_cache.get(l)
        if hit is None:
            size = 2 * l + 1
            m = np.arange(-l, l)  # m, m+1 pairs
            c = 0.5 * np.sqrt(l * (l + 1.0) - m * (m + 1.0))
            H = np.zeros((size, size), dtype=np.complex128)
            H[np.arange(1, size), np.arange(size - 1)] = -1j * c
            H[np.arange(size - 1), np.arange(1, size)] = 1j * c
            mu, U = np.linalg.eigh(H)
            hit = (mu, U)
            _eig_cache[l] = hit
    return hit


def wigner_d(l: int, beta: float) -> WignerDBlock:
    """Little-d matrix for one degree; d^l(0) = I, d^l orthogonal."""
    if not 0.0 <= beta <= np.pi:
        raise ValueError(f"beta must lie in [0, pi], got {beta}")
    return WignerDBlock(l, _wigner_d_values(l, beta))


def _wigner_d_values(l: int, beta: float) -> np.ndarray:
    if l == 0:
        return np.ones((1, 1))
    mu, U = _generator_eig(l)
    d = (U * np.exp(-1j * beta * mu)) @ U.conj().T
    return np.ascontiguousarray(d.real)


# ---------------------------------------------------------------------------
# rotation of coefficients and signals

def rotate_coeffs_array(values: np.ndarray, B: int, rot: RotationZYZ) -> np.ndarray:
    """Apply the rotation to (..., B*B) coefficient arrays, per degree block."""
    out = np.empty_like(values, dtype=np.complex128)
    for l in range(B):
        ms = np.arange(-l, l + 1)
        d = _wigner_d_values(l, rot.beta)
        block = values[..., l * l : (l + 1) * (l + 1)]
        v = block * np.exp(-1j * ms * rot.gamma)
        v = v @ d.T
        out[..., l * l : (l + 1) * (l + 1)] = v * np.exp(-1j * ms * rot.alpha)
    return out


def rotate_coeffs(c: SpectralCoeffs, rot: RotationZYZ) -> SpectralCoeffs:
    """Coefficients of the rotated function x -> f(R^-1 x)."""
    return SpectralCoeffs(c.B, rotate_coeffs_array(c.values, c.B, rot))


def rotate_signal(s: SphericalSignal, rot: RotationZYZ) -> SphericalSignal:
    """Rotate through the spectral domain (projects to bandlimit B)."""
    B = s.grid.B
    c = analysis_array(s.values, B)
    return SphericalSignal(s.grid, synthesis_array(rotate_coeffs_array(c, B, rot), B))


def rotate_featuremap_array(x: np.ndarray, B: int, rot: RotationZYZ) -> np.ndarray:
    """Rotate (..., 2B, 2B) sample arrays channel-wise through the spectral domain."""
    c = analysis_array(x, B)
    return synthesis_array(rotate_coeffs_array(c, B, rot), B)


def grid_directions(grid: SphericalGrid) -> np.ndarray:
    """Unit vectors of all grid nodes, shape (2B, 2B, 3)."""
    th = grid.thetas[:, None]
    ph = grid.phis[None, :]
    return np.stack(
        [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th) * np.ones_like(ph)],
        axis=-1,
    )


def nearest_node_map(grid: SphericalGrid, rot: RotationZYZ) -> tuple[np.ndarray, np.ndarray]:
    """Index maps (j_src, k_src) so rotated[j, k] = field[j_src[j,k], k_src[j,k]].

    Nearest-node counterpart of :func:`rotate_signal` for integer fields.
    """
    B = grid.B
    dirs = grid_directions(grid) @ rot.matrix()  # row-vector form of R^-1 applied to nodes
    theta = np.arccos(np.clip(dirs[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(dirs[..., 1], dirs[..., 0]), 2.0 * np.pi)
    j = np.clip(np.round((theta * 4.0 * B / np.pi - 1.0) / 2.0), 0, 2 * B - 1).astype(np.int64)
    k = np.mod(np.round(phi * B / np.pi), 2 * B).astype(np.int64)
    return j, k


def rotate_labels_nearest(labels: np.ndarray, grid: SphericalGrid, rot: RotationZYZ) -> np.ndarray:
    j, k = nearest_node_map(grid, rot)
    return labels[j, k]
