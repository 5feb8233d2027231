"""Binary containers for spherical signals, labels, and coefficient dumps.

All integers and payloads are little-endian regardless of host byte order.

.sphs  magic "SPHS" | u32 version=1 | u32 B | u32 C | u8 dtype (0=f32, 1=f64)
       | payload, channel-major then colatitude-major (C x 2B x 2B values)
.sphl  magic "SPHL" | u32 version=1 | u32 B | u32 num_classes | u16 labels row-major
.sphc  same header as .sphs with magic "SPHC" and C=2; payload is the real
       plane then the imaginary plane of the B*B triangular coefficients
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import BadMagicError, DimensionError, TruncatedError, VersionError
from .grid import FeatureMap, LabelMap, make_grid
from .harmonics import SpectralCoeffs

_MAX_DIM = 1 << 20

_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_CODES = {"f32": 0, "f64": 1}


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise TruncatedError(f"file ends inside {what} ({len(data)}/{n} bytes)")
    return data


def _check_magic(fh, expected: bytes):
    magic = _read_exact(fh, 4, "magic")
    if magic != expected:
        raise BadMagicError(f"bad magic {magic!r}, expected {expected!r}")


def _check_version(fh):
    (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
    if version != 1:
        raise VersionError(f"unsupported format version {version}")


def _check_dim(value: int, name: str):
    if not 1 <= value <= _MAX_DIM:
        raise DimensionError(f"{name}={value} outside [1, {_MAX_DIM}]")


def _no_trailing(fh):
    if fh.read(1):
        raise TruncatedError("trailing data after payload")


def write_signal(m: FeatureMap, path, dtype: str = "f64") -> None:
    code = _DTYPE_CODES.get(dtype)
    if code is None:
        raise ValueError(f"dtype must be 'f32' or 'f64', got {dtype!r}")
    with open(path, "wb") as fh:
        fh.write(b"SPHS")
        fh.write(struct.pack("<III B", 1, m.grid.B, m.channels, code))
        fh.write(np.ascontiguousarray(m.values, dtype=_DTYPES[code]).tobytes())


def read_signal(path) -> FeatureMap:
    with open(path, "rb") as fh:
        _check_magic(fh, b"SPHS")
        _check_version(fh)
        B, C, code = struct.unpack("<II B", _read_exact(fh, 9, "header"))
        _check_dim(B, "B")
        _check_dim(C, "C")
        if code not in _DTYPES:
            raise DimensionError(f"unknown dtype code {code}")
        dt = _DTYPES[code]
        n = 2 * B
        raw = _read_exact(fh, C * n * n * dt.itemsize, "payload")
        _no_trailing(fh)
    values = np.frombuffer(raw, dtype=dt).reshape(C, n, n).astype(np.float64)
    return FeatureMap(make_grid(B), values)


def write_labels(m: LabelMap, path) -> None:
    if m.num_classes > 0xFFFF:
        raise DimensionError(f"num_classes={m.num_classes} exceeds u16 labels")
    with open(path, "wb") as fh:
        fh.write(b"SPHL")
        fh.write(struct.pack("<III", 1, m.grid.B, m.num_classes))
        fh.write(np.ascontiguousarray(m.labels, dtype="<u2").tobytes())


def read_labels(path) -> LabelMap:
    with open(path, "rb") as fh:
        _check_magic(fh, b"SPHL")
        _check_version(fh)
        B, num_classes = struct.unpack("<II", _read_exact(fh, 8, "header"))
        _check_dim(B, "B")
        _check_dim(num_classes, "num_classes")
        n = 2 * B
        raw = _read_exact(fh, n * n * 2, "payload")
        _no_trailing(fh)
    labels = np.frombuffer(raw, dtype="<u2").reshape(n, n).astype(np.int64)
    return LabelMap(make_grid(B), labels, num_classes)


def write_coeffs(c: SpectralCoeffs, path, dtype: str = "f64") -> None:
    code = _DTYPE_CODES.get(dtype)
    if code is None:
        raise ValueError(f"dtype must be 'f32' or 'f64', got {dtype!r}")
    planes = np.stack([c.values.real, c.values.imag])
    with open(path, "wb") as fh:
        fh.write(b"SPHC")
        fh.write(struct.pack("<III B", 1, c.B, 2, code))
        fh.write(np.ascontiguousarray(planes, dtype=_DTYPES[code]).tobytes())


def read_coeffs(path) -> SpectralCoeffs:
    with open(path, "rb") as fh:
        _check_magic(fh, b"SPHC")
        _check_version(fh)
        B, C, code = struct.unpack("<II B", _read_exact(fh, 9, "header"))
        _check_dim(B, "B")
        if C != 2:
            raise DimensionError(f"coefficient dump must have C=2 planes, got {C}")
        if code not in _DTYPES:
            raise DimensionError(f"unknown dtype code {code}")
        dt = _DTYPES[code]
        raw = _read_exact(fh, 2 * B * B * dt.itemsize, "payload")
        _no_trailing(fh)
    planes = np.frombuffer(raw, dtype=dt).reshape(2, B * B).astype(np.float64)
    return SpectralCoeffs(B, planes[0] + 1j * planes[1])
