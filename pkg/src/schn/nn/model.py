"""Hourglass architectures: spherical (schn) and planar baseline (2DHG).

Both share one encoder-decoder skeleton: a stem to the first channel
width, per level [residual bottleneck blocks, downsample, channel
projection], blocks at the bottom, then mirrored [upsample, projection,
additive skip, blocks] back to full resolution and a pointwise head.
The baseline swaps every spherical convolution for a 3x3 planar one and
spectral resampling for average pooling / nearest-neighbor upsampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeMismatchError
from . import ops
from .autodiff import ComputationRecord, Node, Parameter

ARCHS = ("schn", "planar_baseline")
FILTER_MODES = ("localized", "global")


@dataclass(frozen=True)
class HourglassConfig:
    B_in: int = 32
    C_in: int = 3
    num_classes: int = 6
    levels: int = 3
    channel_schedule: tuple = (16, 32, 64, 64)
    blocks_per_level: int = 1
    K: int = 16
    filter_mode: str = "localized"
    bottleneck_ratio: int = 4
    skip_mode: str = "additive"
    arch: str = "schn"

    def __post_init__(self):
        object.__setattr__(self, "channel_schedule", tuple(int(c) for c in self.channel_schedule))
        if self.B_in < 1 or self.B_in % (1 << self.levels) != 0:
            raise ConfigError(f"B_in={self.B_in} must be divisible by 2^levels={1 << self.levels}")
        if len(self.channel_schedule) != self.levels + 1:
            raise ConfigError(
                f"channel_schedule needs {self.levels + 1} entries, got {len(self.channel_schedule)}"
            )
        if self.arch not in ARCHS:
            raise ConfigError(f"arch must be one of {ARCHS}, got {self.arch!r}")
        if self.filter_mode not in FILTER_MODES:
            raise ConfigError(f"filter_mode must be one of {FILTER_MODES}, got {self.filter_mode!r}")
        if self.skip_mode != "additive":
            raise ConfigError(f"only additive skips are supported, got {self.skip_mode!r}")
        if self.K < 2:
            raise ConfigError("anchor count K must be at least 2")
        if self.num_classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.C_in < 1:
            raise ConfigError("need at least one input channel")
        r = self.bottleneck_ratio
        if r < 1:
            raise ConfigError("bottleneck_ratio must be >= 1")
        for c in self.channel_schedule:
            if c % r != 0 or c < r:
                raise ConfigError(f"channel width {c} not divisible by bottleneck ratio {r}")

    def bandlimit_at(self, level: int) -> int:
        return self.B_in >> level

    def anchors_at(self, B_level: int) -> int:
        """Effective anchor count for a filter at one pyramid level.

        Anchors cannot outnumber degrees, so K is clamped to the level's
        bandlimit; in global mode every degree gets its own anchor.
        """
        if self.filter_mode == "global":
            return B_level
        return min(self.K, B_level)


def desk_config(arch: str = "schn", filter_mode: str = "localized", num_classes: int = 6) -> HourglassConfig:
    """Desk-scale default: 64x64 inputs, three levels, 16->64 channels."""
    return HourglassConfig(
        B_in=32,
        C_in=3,
        num_classes=num_classes,
        levels=3,
        channel_schedule=(16, 32, 64, 64),
        blocks_per_level=1,
        K=16,
        filter_mode=filter_mode,
        arch=arch,
    )


def reference_config() -> HourglassConfig:
    """Paper-scale reference: 256x256 inputs, channels spanning 32..256, K=16."""
    return HourglassConfig(
        B_in=128,
        C_in=3,
        num_classes=16,
        levels=4,
        channel_schedule=(32, 64, 128, 256, 256),
        blocks_per_level=2,
        K=16,
    )


# ---------------------------------------------------------------------------
# layers

class ParamStore:
    """Minimal registration host for building layers outside a full model."""

    def __init__(self, cfg: HourglassConfig, seed: int = 0):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.params: dict[str, Parameter] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self._buffer_views: dict[str, dict] = {}

    def add_param(self, name, value) -> Parameter:
        p = Parameter(name, value)
        self.params[name] = p
        return p

    def add_buffer(self, prefix, C) -> dict:
        running = {"mean": np.zeros(C), "var": np.ones(C)}
        self.buffers[f"{prefix}.rmean"] = running["mean"]
        self.buffers[f"{prefix}.rvar"] = running["var"]
        self._buffer_views[prefix] = running
        return running


class SphConvLayer:
    """Spherical convolution: per channel pair one anchor filter, plus bias."""

    def __init__(self, model, prefix, C_in, C_out, B, scale):
        self.B = B
        self.K = model.cfg.anchors_at(B)
        rng = model.rng
        self.anchors = model.add_param(
            f"{prefix}.anchors", rng.normal(0.0, scale / np.sqrt(C_in), (C_in, C_out, self.K))
        )
        self.bias = model.add_param(f"{prefix}.bias", np.zeros(C_out))

    def __call__(self, rec, x):
        c = ops.sht_analysis(rec, x, self.B)
        gains = ops.anchors_to_gains(rec, self.anchors, self.B)
        mixed = ops.spectral_mix(rec, c, gains, self.B)
        y = ops.sht_synthesis(rec, mixed, self.B)
        return ops.bias_spatial(rec, y, self.bias)


class PlanarConvLayer:
    def __init__(self, model, prefix, C_in, C_out, scale):
        rng = model.rng
        self.W = model.add_param(
            f"{prefix}.w", rng.normal(0.0, scale / np.sqrt(9.0 * C_in), (C_out, C_in, 3, 3))
        )
        self.b = model.add_param(f"{prefix}.b", np.zeros(C_out))

    def __call__(self, rec, x):
        return ops.planar_conv3x3(rec, x, self.W, self.b)


class PointwiseLayer:
    def __init__(self, model, prefix, C_in, C_out, scale=1.0):
        rng = model.rng
        self.W = model.add_param(f"{prefix}.w", rng.normal(0.0, scale / np.sqrt(C_in), (C_out, C_in)))
        self.b = model.add_param(f"{prefix}.b", np.zeros(C_out))

    def __call__(self, rec, x):
        return ops.pointwise_conv(rec, x, self.W, self.b)


class NormLayer:
    def __init__(self, model, prefix, C):
        self.scale = model.add_param(f"{prefix}.scale", np.ones(C))
        self.shift = model.add_param(f"{prefix}.shift", np.zeros(C))
        self.running = model.add_buffer(prefix, C)

    def __call__(self, rec, x, training):
        return ops.weighted_norm(rec, x, self.scale, self.shift, self.running, training)


class ResidualBottleneck:
    """Residual bottleneck: 1x1 down, act, mid conv, act, 1x1 up, skip add."""

    def __init__(self, model, prefix, C, B):
        r = model.cfg.bottleneck_ratio
        mid = C // r
        self.pw1 = PointwiseLayer(model, f"{prefix}.pw1", C, mid, scale=np.sqrt(2.0))
        self.n1 = NormLayer(model, f"{prefix}.n1", mid)
        if model.cfg.arch == "schn":
            self.mid = SphConvLayer(model, f"{prefix}.mid", mid, mid, B, scale=np.sqrt(2.0))
        else:
            self.mid = PlanarConvLayer(model, f"{prefix}.mid", mid, mid, scale=np.sqrt(2.0))
        self.n2 = NormLayer(model, f"{prefix}.n2", mid)
        # residual branch output under-scaled at init (standard practice;
        # also keeps the relu aliasing defect of fresh blocks small)
        self.pw2 = PointwiseLayer(model, f"{prefix}.pw2", mid, C, scale=0.5 * np.sqrt(2.0))

    def __call__(self, rec, x, training):
        h = self.pw1(rec, x)
        h = ops.relu(rec, self.n1(rec, h, training))
        h = self.mid(rec, h)
        h = ops.relu(rec, self.n2(rec, h, training))
        h = self.pw2(rec, h)
        return ops.add(rec, x, h)


def downsample(rec, x, B: int, arch: str = "schn"):
    """Halve the resolution: spectral truncation (schn) or 2x2 mean pooling."""
    if B % 2:
        raise ValueError(f"cannot downsample odd bandlimit {B}")
    if arch == "schn":
        c = ops.sht_analysis(rec, x, B)
        c = ops.truncate_coeffs(rec, c, B, B // 2)
        return ops.sht_synthesis(rec, c, B // 2)
    return ops.avgpool2(rec, x)


def upsample(rec, x, B: int, arch: str = "schn"):
    """Double the resolution: spectral zero-padding (schn) or nearest neighbor."""
    if arch == "schn":
        c = ops.sht_analysis(rec, x, B)
        c = ops.zeropad_coeffs(rec, c, B, 2 * B)
        return ops.sht_synthesis(rec, c, 2 * B)
    return ops.upsample_nearest2(rec, x)


# ---------------------------------------------------------------------------
# full model

class HourglassModel:
    """Parameter container plus the forward pass for one architecture."""

    def __init__(self, cfg: HourglassConfig, seed: int = 0):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.params: dict[str, Parameter] = {}
        self.buffers: dict[str, np.ndarray] = {}
        ch = cfg.channel_schedule
        if cfg.arch == "schn":
            self.stem = SphConvLayer(self, "stem", cfg.C_in, ch[0], cfg.B_in, scale=1.0)
        else:
            self.stem = PlanarConvLayer(self, "stem", cfg.C_in, ch[0], scale=1.0)
        self.enc_blocks = []
        self.enc_proj = []
        for lvl in range(cfg.levels):
            B = cfg.bandlimit_at(lvl)
            self.enc_blocks.append(
                [ResidualBottleneck(self, f"enc{lvl}.block{i}", ch[lvl], B) for i in range(cfg.blocks_per_level)]
            )
            self.enc_proj.append(PointwiseLayer(self, f"enc{lvl}.proj", ch[lvl], ch[lvl + 1]))
        B_bot = cfg.bandlimit_at(cfg.levels)
        self.bottom = [
            ResidualBottleneck(self, f"bot.block{i}", ch[cfg.levels], B_bot) for i in range(cfg.blocks_per_level)
        ]
        self.dec_proj = []
        self.dec_blocks = []
        for lvl in reversed(range(cfg.levels)):
            B = cfg.bandlimit_at(lvl)
            self.dec_proj.append(PointwiseLayer(self, f"dec{lvl}.proj", ch[lvl + 1], ch[lvl]))
            self.dec_blocks.append(
                [ResidualBottleneck(self, f"dec{lvl}.block{i}", ch[lvl], B) for i in range(cfg.blocks_per_level)]
            )
        self.head = PointwiseLayer(self, "head", ch[0], cfg.num_classes)
        del self.rng  # construction-time only; keeps later use deterministic

    # -- construction helpers -------------------------------------------------
    def add_param(self, name: str, value) -> Parameter:
        if name in self.params:
            raise ConfigError(f"duplicate parameter name {name!r}")
        p = Parameter(name, value)
        self.params[name] = p
        return p

    def add_buffer(self, prefix: str, C: int) -> dict:
        running = {"mean": np.zeros(C), "var": np.ones(C)}
        self.buffers[f"{prefix}.rmean"] = running["mean"]
        self.buffers[f"{prefix}.rvar"] = running["var"]
        # dict is shared with the layer so buffer updates stay visible here
        self._buffer_views = getattr(self, "_buffer_views", {})
        self._buffer_views[prefix] = running
        return running

    def num_parameters(self) -> int:
        return sum(p.value.size for p in self.params.values())

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        """Assign parameter and buffer tensors, validating every shape."""
        for name, p in self.params.items():
            if name not in arrays:
                raise ShapeMismatchError(f"missing tensor for parameter {name!r}")
            v = np.asarray(arrays[name], dtype=np.float64)
            if v.shape != p.value.shape:
                raise ShapeMismatchError(
                    f"parameter {name!r}: stored shape {v.shape} != expected {p.value.shape}"
                )
            p.value[...] = v
        for prefix, running in getattr(self, "_buffer_views", {}).items():
            for key, store in (("mean", f"{prefix}.rmean"), ("var", f"{prefix}.rvar")):
                if store not in arrays:
                    raise ShapeMismatchError(f"missing tensor for buffer {store!r}")
                v = np.asarray(arrays[store], dtype=np.float64)
                if v.shape != running[key].shape:
                    raise ShapeMismatchError(
                        f"buffer {store!r}: stored shape {v.shape} != expected {running[key].shape}"
                    )
                running[key][...] = v

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {name: p.value for name, p in self.params.items()}
        out.update(self.buffers)
        return out

    # -- forward ---------------------------------------------------------------
    def forward(self, x, rec: ComputationRecord | None = None, training: bool = False) -> Node:
        """Logits (N, num_classes, 2B_in, 2B_in) for inputs (N, C_in, 2B_in, 2B_in)."""
        cfg = self.cfg
        v = x.value if isinstance(x, Node) else np.asarray(x, dtype=np.float64)
        n = 2 * cfg.B_in
        if v.ndim != 4 or v.shape[1] != cfg.C_in or v.shape[2:] != (n, n):
            raise ValueError(f"expected input (N, {cfg.C_in}, {n}, {n}), got {v.shape}")
        h = x if isinstance(x, Node) else Node(v)
        h = self.stem(rec, h)
        skips = []
        for lvl in range(cfg.levels):
            B = cfg.bandlimit_at(lvl)
            for block in self.enc_blocks[lvl]:
                h = block(rec, h, training)
            skips.append(h)
            h = downsample(rec, h, B, cfg.arch)
            h = self.enc_proj[lvl](rec, h)
        for block in self.bottom:
            h = block(rec, h, training)
        for i, lvl in enumerate(reversed(range(cfg.levels))):
            B = cfg.bandlimit_at(lvl + 1)
            h = upsample(rec, h, B, cfg.arch)
            h = self.dec_proj[i](rec, h)
            h = ops.add(rec, h, skips[lvl])
            for block in self.dec_blocks[i]:
                h = block(rec, h, training)
        return self.head(rec, h)
