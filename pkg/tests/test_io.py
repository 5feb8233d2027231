import struct

import numpy as np
import pytest

from schn.errors import BadMagicError, DimensionError, TruncatedError, VersionError
from schn.grid import FeatureMap, LabelMap, make_grid
from schn.harmonics import SpectralCoeffs, analysis_array
from schn.sphio import read_coeffs, read_labels, read_signal, write_coeffs, write_labels, write_signal


@pytest.fixture
def fmap():
    rng = np.random.default_rng(0)
    return FeatureMap(make_grid(4), rng.standard_normal((3, 8, 8)))


def test_signal_roundtrip_bitexact(fmap, tmp_path):
    p1 = tmp_path / "a.sphs"
    p2 = tmp_path / "b.sphs"
    write_signal(fmap, p1)
    back = read_signal(p1)
    assert np.array_equal(back.values, fmap.values)
    write_signal(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_signal_roundtrip_f32(fmap, tmp_path):
    p1 = tmp_path / "a.sphs"
    write_signal(fmap, p1, dtype="f32")
    back = read_signal(p1)
    assert np.array_equal(back.values, fmap.values.astype(np.float32).astype(np.float64))
    p2 = tmp_path / "b.sphs"
    write_signal(back, p2, dtype="f32")
    assert p1.read_bytes() == p2.read_bytes()


def test_signal_bad_magic(fmap, tmp_path):
    p = tmp_path / "a.sphs"
    write_signal(fmap, p)
    raw = bytearray(p.read_bytes())
    raw[:4] = b"XXXX"
    p.write_bytes(bytes(raw))
    with pytest.raises(BadMagicError):
        read_signal(p)


def test_signal_bad_version(fmap, tmp_path):
    p = tmp_path / "a.sphs"
    write_signal(fmap, p)
    raw = bytearray(p.read_bytes())
    raw[4:8] = struct.pack("<I", 9)
    p.write_bytes(bytes(raw))
    with pytest.raises(VersionError):
        read_signal(p)


def test_signal_truncated_payload(fmap, tmp_path):
    p = tmp_path / "a.sphs"
    write_signal(fmap, p)
    raw = p.read_bytes()
    p.write_bytes(raw[: len(raw) - 17])
    with pytest.raises(TruncatedError):
        read_signal(p)


def test_signal_trailing_data(fmap, tmp_path):
    p = tmp_path / "a.sphs"
    write_signal(fmap, p)
    p.write_bytes(p.read_bytes() + b"\x00")
    with pytest.raises(TruncatedError):
        read_signal(p)


def test_signal_dimension_overflow(tmp_path):
    p = tmp_path / "a.sphs"
    p.write_bytes(b"SPHS" + struct.pack("<III B", 1, 1 << 24, 1, 1))
    with pytest.raises(DimensionError):
        read_signal(p)


def test_labels_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    lm = LabelMap(make_grid(4), rng.integers(0, 6, size=(8, 8)), num_classes=6)
    p1 = tmp_path / "a.sphl"
    p2 = tmp_path / "b.sphl"
    write_labels(lm, p1)
    back = read_labels(p1)
    assert np.array_equal(back.labels, lm.labels)
    assert back.num_classes == 6
    write_labels(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_labels_bad_magic(tmp_path):
    p = tmp_path / "a.sphl"
    p.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(BadMagicError):
        read_labels(p)


def test_labels_truncated(tmp_path):
    lm = LabelMap(make_grid(2), np.zeros((4, 4), dtype=np.int64), num_classes=3)
    p = tmp_path / "a.sphl"
    write_labels(lm, p)
    raw = p.read_bytes()
    p.write_bytes(raw[: len(raw) - 2])
    with pytest.raises(TruncatedError):
        read_labels(p)


def test_coeffs_roundtrip(tmp_path):
    B = 6
    g = make_grid(B)
    rng = np.random.default_rng(2)
    c = SpectralCoeffs(B, analysis_array(rng.standard_normal((12, 12)), B))
    p1 = tmp_path / "a.sphc"
    p2 = tmp_path / "b.sphc"
    write_coeffs(c, p1)
    back = read_coeffs(p1)
    assert np.array_equal(back.values, c.values)
    write_coeffs(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_coeffs_magic_differs_from_signal(fmap, tmp_path):
    p = tmp_path / "a.sphs"
    write_signal(fmap, p)
    with pytest.raises(BadMagicError):
        read_coeffs(p)
