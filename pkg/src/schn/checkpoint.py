"""Checkpoint container.

Layout: magic "SCHN" | u32 version=1 | u32 config length + UTF-8 config
text | u32 tensor count | per tensor: u16 name length + name | u8 dtype |
u8 rank | rank x u64 dims | payload little-endian.  Tensor order is
parameters, norm buffers, Adam moments, step counter, RNG state; reading
preserves order so save-load-save is byte-identical.
"""

from __future__ import annotations

import struct

import numpy as np

from .config import config_entries, format_config, model_config_from, parse_config_text, train_config_from
from .errors import BadMagicError, DimensionError, ShapeMismatchError, TruncatedError, VersionError
from .train import Checkpoint

_MAGIC = b"SCHN"

_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("<u2"), 3: np.dtype("<u8"), 4: np.dtype("<i8")}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1, np.dtype(np.uint16): 2,
          np.dtype(np.uint64): 3, np.dtype(np.int64): 4}


def _write_tensor(fh, name: str, arr: np.ndarray) -> None:
    code = _CODES.get(arr.dtype)
    if code is None:
        raise ValueError(f"unsupported tensor dtype {arr.dtype} for {name!r}")
    raw = name.encode("utf-8")
    fh.write(struct.pack("<H", len(raw)))
    fh.write(raw)
    fh.write(struct.pack("<BB", code, arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape) if arr.ndim else b"")
    fh.write(np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise TruncatedError(f"checkpoint ends inside {what}")
    return data


def _read_tensor(fh) -> tuple[str, np.ndarray]:
    (nlen,) = struct.unpack("<H", _read_exact(fh, 2, "tensor name length"))
    name = _read_exact(fh, nlen, "tensor name").decode("utf-8")
    code, rank = struct.unpack("<BB", _read_exact(fh, 2, "tensor header"))
    if code not in _DTYPES:
        raise DimensionError(f"unknown dtype code {code} for tensor {name!r}")
    if rank > 8:
        raise DimensionError(f"tensor {name!r} rank {rank} out of range")
    dims = struct.unpack(f"<{rank}Q", _read_exact(fh, 8 * rank, "tensor dims")) if rank else ()
    count = int(np.prod(dims, dtype=np.int64)) if rank else 1
    if count > (1 << 32):
        raise DimensionError(f"tensor {name!r} absurdly large ({count} elements)")
    dt = _DTYPES[code]
    raw = _read_exact(fh, count * dt.itemsize, f"tensor {name!r} payload")
    return name, np.frombuffer(raw, dtype=dt).reshape(dims).copy()


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    entries = config_entries(ckpt.model_cfg, ckpt.train_cfg, epoch=ckpt.epoch)
    blob = format_config(entries).encode("utf-8")
    tensors: list[tuple[str, np.ndarray]] = []
    for name, arr in ckpt.arrays.items():
        tensors.append((name, np.asarray(arr, dtype=np.float64)))
    for name, arr in ckpt.adam_m.items():
        tensors.append((f"adam.m.{name}", np.asarray(arr, dtype=np.float64)))
    for name, arr in ckpt.adam_v.items():
        tensors.append((f"adam.v.{name}", np.asarray(arr, dtype=np.float64)))
    tensors.append(("adam.t", np.array([ckpt.adam_t], dtype=np.uint64)))
    tensors.append(("rng.state", np.asarray(ckpt.rng_state, dtype=np.uint64)))
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", ckpt.version, len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors:
            _write_tensor(fh, name, arr)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != _MAGIC:
            raise BadMagicError(f"bad checkpoint magic {magic!r}")
        version, blob_len = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != 1:
            raise VersionError(f"unsupported checkpoint version {version}")
        entries = parse_config_text(_read_exact(fh, blob_len, "config blob").decode("utf-8"))
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "tensor count"))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            name, arr = _read_tensor(fh)
            tensors[name] = arr
        if fh.read(1):
            raise TruncatedError("trailing data after checkpoint payload")

    model_cfg = model_config_from(entries)
    train_cfg = train_config_from(entries)
    epoch = int(entries.get("epoch", 0))

    if "adam.t" not in tensors or "rng.state" not in tensors:
        raise ShapeMismatchError("checkpoint missing optimizer/rng state tensors")
    adam_m = {}
    adam_v = {}
    arrays = {}
    for name, arr in tensors.items():
        if name.startswith("adam.m."):
            adam_m[name[len("adam.m.") :]] = arr.astype(np.float64)
        elif name.startswith("adam.v."):
            adam_v[name[len("adam.v.") :]] = arr.astype(np.float64)
        elif name in ("adam.t", "rng.state"):
            continue
        else:
            arrays[name] = arr.astype(np.float64)
    return Checkpoint(
        version=version,
        model_cfg=model_cfg,
        train_cfg=train_cfg,
        arrays=arrays,
        adam_m=adam_m,
        adam_v=adam_v,
        adam_t=int(tensors["adam.t"][0]),
        rng_state=tensors["rng.state"],
        epoch=epoch,
    )
