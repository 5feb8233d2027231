import numpy as np
import pytest

from schn.grid import SphericalSignal, make_grid
from schn.harmonics import SpectralCoeffs, analysis_array, coeff_index, random_bandlimited, synthesis_array
from schn.rotation import (
    RotationZYZ,
    grid_directions,
    haar_rotation,
    nearest_node_map,
    rotate_coeffs,
    rotate_coeffs_array,
    rotate_signal,
    rotation_from_matrix,
    wigner_d,
)


def test_wigner_l0():
    assert np.allclose(wigner_d(0, 1.2).entries, [[1.0]])


def test_wigner_d00_is_cos():
    for beta in [0.0, 0.3, 1.1, 2.7, np.pi]:
        d = wigner_d(1, beta).entries
        assert abs(d[1, 1] - np.cos(beta)) < 1e-13


def test_wigner_l1_quarter_turn():
    d = wigner_d(1, np.pi / 2).entries
    assert abs(d[1, 1]) < 1e-13
    # |d^1_{1,0}| = |d^1_{-1,0}| = 1/sqrt(2); ascending m indexing
    assert abs(abs(d[2, 1]) - 1 / np.sqrt(2)) < 1e-13
    assert abs(abs(d[0, 1]) - 1 / np.sqrt(2)) < 1e-13


def test_wigner_identity_at_zero():
    for l in [1, 5, 16]:
        d = wigner_d(l, 0.0).entries
        assert np.abs(d - np.eye(2 * l + 1)).max() < 1e-14


def test_wigner_orthogonality():
    rng = np.random.default_rng(2)
    for l in range(33):
        beta = rng.uniform(0, np.pi)
        d = wigner_d(l, beta).entries
        assert np.abs(d @ d.T - np.eye(2 * l + 1)).max() < 1e-10


def test_wigner_same_axis_composition():
    rng = np.random.default_rng(4)
    for l in [1, 7, 20, 32]:
        b1, b2 = rng.uniform(0, np.pi / 2, size=2)
        lhs = wigner_d(l, b1).entries @ wigner_d(l, b2).entries
        rhs = wigner_d(l, b1 + b2).entries
        assert np.abs(lhs - rhs).max() < 1e-9


def test_wigner_rejects_beta_range():
    with pytest.raises(ValueError):
        wigner_d(2, -0.1)
    with pytest.raises(ValueError):
        wigner_d(2, 3.5)


def test_rotate_coeffs_identity():
    B = 6
    g = make_grid(B)
    c = analysis_array(random_bandlimited(g, np.random.default_rng(0)).values, B)
    out = rotate_coeffs_array(c, B, RotationZYZ.identity())
    assert np.abs(out - c).max() < 1e-14


def test_rotate_constant_invariant():
    B = 4
    c = SpectralCoeffs.zeros(B)
    c.values[coeff_index(0, 0)] = 2.3
    rot = RotationZYZ(0.9, 1.7, -0.4 % (2 * np.pi))
    out = rotate_coeffs(c, rot)
    assert np.abs(out.values - c.values).max() < 1e-14


def test_rotate_pure_y10_gives_d_column():
    B = 4
    c = SpectralCoeffs.zeros(B)
    c.values[coeff_index(1, 0)] = 1.0
    out = rotate_coeffs(c, RotationZYZ(0.0, np.pi / 2, 0.0))
    d = wigner_d(1, np.pi / 2).entries
    got = out.degree_block(1)
    assert np.abs(got - d[:, 1]).max() < 1e-13


def test_rotation_norm_preserving_per_degree():
    B = 16
    g = make_grid(B)
    rng = np.random.default_rng(21)
    c = analysis_array(random_bandlimited(g, rng).values, B)
    rot = haar_rotation(rng)
    out = rotate_coeffs_array(c, B, rot)
    for l in range(B):
        a = np.sum(np.abs(c[l * l : (l + 1) * (l + 1)]) ** 2)
        b = np.sum(np.abs(out[l * l : (l + 1) * (l + 1)]) ** 2)
        assert abs(a - b) < 1e-10 * max(1.0, a)


def test_rotation_consistency_master():
    """Rotated signal must equal the analytic series evaluated at R^-1 x.

    Pins every sign and normalization convention at once; scipy's
    sph_harm_y is the independent oracle.
    """
    import scipy.special as sp

    B = 8
    g = make_grid(B)
    s = random_bandlimited(g, np.random.default_rng(42))
    c = analysis_array(s.values, B)
    rot = RotationZYZ(0.3, 0.7, 1.1)
    rotated = synthesis_array(rotate_coeffs_array(c, B, rot), B)

    pre = grid_directions(g) @ rot.matrix()  # R^-1 applied to every node
    theta = np.arccos(np.clip(pre[..., 2], -1, 1))
    phi = np.mod(np.arctan2(pre[..., 1], pre[..., 0]), 2 * np.pi)
    vals = np.zeros_like(theta, dtype=complex)
    for l in range(B):
        for m in range(-l, l + 1):
            vals += c[coeff_index(l, m)] * sp.sph_harm_y(l, m, theta, phi)
    assert np.abs(rotated - vals.real).max() < 1e-8


def test_rotate_signal_identity_and_constant():
    B = 8
    g = make_grid(B)
    s = random_bandlimited(g, np.random.default_rng(1))
    out = rotate_signal(s, RotationZYZ.identity())
    assert np.abs(out.values - s.values).max() < 1e-10

    const = SphericalSignal(g, np.full((16, 16), 0.7))
    out = rotate_signal(const, RotationZYZ(1.0, 0.5, 2.0))
    assert np.abs(out.values - 0.7).max() < 1e-10


def test_rotate_then_unrotate():
    B = 8
    g = make_grid(B)
    s = random_bandlimited(g, np.random.default_rng(9))
    rot = RotationZYZ(0.8, 1.2, 2.5)
    back = rotate_signal(rotate_signal(s, rot), rot.inverse())
    assert np.abs(back.values - s.values).max() < 1e-8


def test_matrix_euler_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(50):
        rot = haar_rotation(rng)
        back = rotation_from_matrix(rot.matrix())
        assert np.abs(back.matrix() - rot.matrix()).max() < 1e-12


def test_compose_matches_matrix_product():
    rng = np.random.default_rng(8)
    r1, r2 = haar_rotation(rng), haar_rotation(rng)
    composed = r1.compose(r2)
    assert np.abs(composed.matrix() - r1.matrix() @ r2.matrix()).max() < 1e-12


def test_haar_rotation_deterministic():
    a = haar_rotation(np.random.default_rng(5))
    b = haar_rotation(np.random.default_rng(5))
    assert (a.alpha, a.beta, a.gamma) == (b.alpha, b.beta, b.gamma)
    assert 0.0 <= a.beta <= np.pi


def test_nearest_node_map_identity():
    g = make_grid(8)
    j, k = nearest_node_map(g, RotationZYZ.identity())
    jj, kk = np.meshgrid(np.arange(16), np.arange(16), indexing="ij")
    assert np.array_equal(j, jj)
    assert np.array_equal(k, kk)
