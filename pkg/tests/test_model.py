import numpy as np
import pytest

from schn.errors import ConfigError, ShapeMismatchError
from schn.grid import make_grid
from schn.harmonics import random_bandlimited, synthesis_array
from schn.nn import ops
from schn.nn.autodiff import ComputationRecord, Node, backward
from schn.nn.model import (
    HourglassConfig,
    HourglassModel,
    ParamStore,
    PointwiseLayer,
    ResidualBottleneck,
    SphConvLayer,
    desk_config,
    downsample,
    reference_config,
    upsample,
)
from schn.rotation import haar_rotation, rotate_featuremap_array


def _bandlimited_batch(B, n, c, seed):
    rng = np.random.default_rng(seed)
    g = make_grid(B)
    return np.stack([np.stack([random_bandlimited(g, rng).values for _ in range(c)]) for _ in range(n)])


# ---------------------------------------------------------------------------
# spherical convolution layer

def test_sph_conv_identity():
    B = 8
    store = ParamStore(HourglassConfig(B_in=B, levels=1, channel_schedule=(4, 4), K=4), seed=0)
    layer = SphConvLayer(store, "t", 1, 1, B, scale=1.0)
    layer.anchors.value[...] = 1.0
    layer.bias.value[...] = 0.0
    x = _bandlimited_batch(B, 1, 1, 3)
    out = layer(None, Node(x))
    assert np.abs(out.value - x).max() < 1e-10


def test_sph_conv_zero_filters_give_bias():
    B = 8
    store = ParamStore(HourglassConfig(B_in=B, levels=1, channel_schedule=(4, 4), K=4), seed=0)
    layer = SphConvLayer(store, "t", 2, 3, B, scale=1.0)
    layer.anchors.value[...] = 0.0
    layer.bias.value[...] = np.array([1.0, -2.0, 0.5])
    x = np.random.default_rng(0).standard_normal((2, 2, 16, 16))
    out = layer(None, Node(x)).value
    for c, b in enumerate([1.0, -2.0, 0.5]):
        assert np.abs(out[:, c] - b).max() < 1e-12


def test_sph_conv_equivariance():
    B = 8
    store = ParamStore(HourglassConfig(B_in=B, levels=1, channel_schedule=(4, 4), K=8), seed=7)
    layer = SphConvLayer(store, "t", 2, 3, B, scale=1.0)
    rng = np.random.default_rng(11)
    x = _bandlimited_batch(B, 1, 2, 5)
    for _ in range(5):
        rot = haar_rotation(rng)
        lhs = rotate_featuremap_array(layer(None, Node(x)).value, B, rot)
        rhs = layer(None, Node(rotate_featuremap_array(x, B, rot))).value
        assert np.abs(lhs - rhs).max() < 1e-8


# ---------------------------------------------------------------------------
# pointwise / norm equivariance

def test_pointwise_identity_and_constant():
    x = np.random.default_rng(1).standard_normal((1, 3, 8, 8))
    out = ops.pointwise_conv(None, Node(x), Node(np.eye(3)), Node(np.zeros(3)))
    assert np.array_equal(out.value, x)
    out = ops.pointwise_conv(None, Node(x), Node(np.zeros((2, 3))), Node(np.array([3.0, -1.0])))
    assert np.abs(out.value[:, 0] - 3.0).max() == 0.0
    assert np.abs(out.value[:, 1] + 1.0).max() == 0.0


def test_pointwise_equivariance():
    B = 8
    rng = np.random.default_rng(2)
    x = _bandlimited_batch(B, 1, 3, 9)
    W, b = rng.standard_normal((2, 3)), rng.standard_normal(2)
    rot = haar_rotation(rng)
    lhs = rotate_featuremap_array(ops.pointwise_conv(None, Node(x), Node(W), Node(b)).value, B, rot)
    rhs = ops.pointwise_conv(None, Node(rotate_featuremap_array(x, B, rot)), Node(W), Node(b)).value
    assert np.abs(lhs - rhs).max() < 1e-8


def test_weighted_norm_constant_channel_gives_shift():
    x = np.full((2, 1, 8, 8), 3.7)
    running = {"mean": np.zeros(1), "var": np.ones(1)}
    out = ops.weighted_norm(None, Node(x), Node(np.array([2.0])), Node(np.array([0.25])), running, True)
    assert np.abs(out.value - 0.25).max() < 1e-9


def test_weighted_norm_equivariance_batch_mode():
    B = 8
    rng = np.random.default_rng(3)
    x = _bandlimited_batch(B, 2, 2, 13)
    scale, shift = Node(np.array([1.3, 0.8])), Node(np.array([0.1, -0.4]))
    rot = haar_rotation(rng)

    def apply(v):
        running = {"mean": np.zeros(2), "var": np.ones(2)}
        return ops.weighted_norm(None, Node(v), scale, shift, running, True).value

    lhs = rotate_featuremap_array(apply(x), B, rot)
    rhs = apply(rotate_featuremap_array(x, B, rot))
    assert np.abs(lhs - rhs).max() < 1e-7


def test_relu_basic():
    out = ops.relu(None, Node(np.array([[-1.0, 2.0]])))
    assert np.array_equal(out.value, [[0.0, 2.0]])


# ---------------------------------------------------------------------------
# resampling

def test_down_up_roundtrip_on_low_bandlimit():
    B = 8
    x = _bandlimited_batch(B // 2, 1, 2, 17)  # bandlimited to B/2
    # render the same low-bandlimit content on the fine grid by zero-padding
    from schn.harmonics import analysis_array

    c = analysis_array(x, B // 2)
    fine = synthesis_array(np.pad(c, [(0, 0), (0, 0), (0, (B * B) - (B // 2) ** 2)]), B)
    down_up = upsample(None, downsample(None, Node(fine), B), B // 2).value
    assert np.abs(down_up - fine).max() < 1e-9


def test_resample_preserves_constant():
    B = 8
    const = np.full((1, 1, 16, 16), 2.5)
    d = downsample(None, Node(const), B).value
    assert np.abs(d - 2.5).max() < 1e-10
    u = upsample(None, Node(d), B // 2).value
    assert np.abs(u - 2.5).max() < 1e-10


def test_resample_equivariance():
    B = 8
    rng = np.random.default_rng(5)
    x = _bandlimited_batch(B, 1, 1, 19)
    rot = haar_rotation(rng)
    lhs = rotate_featuremap_array(downsample(None, Node(x), B).value, B // 2, rot)
    rhs = downsample(None, Node(rotate_featuremap_array(x, B, rot)), B).value
    assert np.abs(lhs - rhs).max() < 1e-9
    lhs = rotate_featuremap_array(upsample(None, Node(x), B).value, 2 * B, rot)
    rhs = upsample(None, Node(rotate_featuremap_array(x, B, rot)), B).value
    assert np.abs(lhs - rhs).max() < 1e-9


def test_downsample_rejects_odd():
    with pytest.raises(ValueError):
        downsample(None, Node(np.zeros((1, 1, 6, 6))), 3)


# ---------------------------------------------------------------------------
# planar ops

def test_planar_identity_kernel():
    x = np.random.default_rng(6).standard_normal((1, 1, 8, 8))
    W = np.zeros((1, 1, 3, 3))
    W[0, 0, 1, 1] = 1.0
    out = ops.planar_conv3x3(None, Node(x), Node(W))
    assert np.abs(out.value - x).max() < 1e-14


def test_planar_all_ones_kernel_interior():
    x = np.ones((1, 1, 8, 8))
    W = np.ones((1, 1, 3, 3))
    out = ops.planar_conv3x3(None, Node(x), Node(W)).value
    assert np.abs(out[0, 0, 1:-1, :] - 9.0).max() < 1e-14  # interior rows (azimuth wraps)
    assert np.abs(out[0, 0, 0, :] - 6.0).max() < 1e-14  # zero-padded colatitude edge


def test_planar_azimuthal_shift_commutes_exactly():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((1, 2, 8, 8))
    W = rng.standard_normal((2, 2, 3, 3))
    b = rng.standard_normal(2)
    out_shift = np.roll(ops.planar_conv3x3(None, Node(x), Node(W), Node(b)).value, 1, axis=-1)
    shift_out = ops.planar_conv3x3(None, Node(np.roll(x, 1, axis=-1)), Node(W), Node(b)).value
    assert np.array_equal(out_shift, shift_out)


# ---------------------------------------------------------------------------
# residual block and hourglass

def test_block_zero_weights_is_identity():
    B = 8
    cfg = HourglassConfig(B_in=B, levels=1, channel_schedule=(8, 8), K=4)
    store = ParamStore(cfg, seed=0)
    block = ResidualBottleneck(store, "blk", 8, B)
    for p in store.params.values():
        p.value[...] = 0.0
    x = np.random.default_rng(8).standard_normal((2, 8, 16, 16))
    out = block(None, Node(x), True)
    assert np.array_equal(out.value, x)


def test_block_shape_contract():
    B = 8
    cfg = HourglassConfig(B_in=B, levels=1, channel_schedule=(16, 16), K=4)
    store = ParamStore(cfg, seed=1)
    block = ResidualBottleneck(store, "blk", 16, B)
    x = np.random.default_rng(9).standard_normal((3, 16, 16, 16))
    assert block(None, Node(x), True).value.shape == x.shape


def test_block_equivariance_defect_small():
    """Relu aliasing keeps the block only approximately equivariant.

    Regression bound frozen from this build's measurement: worst relative
    sup-norm defect 0.0706 over these 50 trials at B=16 (mean 0.043).
    """
    B = 16
    cfg = HourglassConfig(B_in=B, levels=1, channel_schedule=(8, 8), K=8)
    rng = np.random.default_rng(10)
    worst = 0.0
    for trial in range(50):
        store = ParamStore(cfg, seed=100 + trial)
        block = ResidualBottleneck(store, "blk", 8, B)
        x = _bandlimited_batch(B, 1, 8, 1000 + trial)

        def run(v):
            running_reset = [  # fresh batch stats per evaluation
                layer for layer in (block.n1, block.n2)
            ]
            for lay in running_reset:
                lay.running["mean"][...] = 0.0
                lay.running["var"][...] = 1.0
            return block(None, Node(v), True).value

        rot = haar_rotation(rng)
        lhs = rotate_featuremap_array(run(x), B, rot)
        rhs = run(rotate_featuremap_array(x, B, rot))
        defect = np.abs(lhs - rhs).max() / np.abs(run(x)).max()
        worst = max(worst, defect)
    assert worst < 0.08


def test_hourglass_output_shape():
    cfg = HourglassConfig(B_in=32, C_in=3, num_classes=6, levels=3, channel_schedule=(8, 8, 16, 16), K=8)
    model = HourglassModel(cfg, seed=0)
    x = np.random.default_rng(11).standard_normal((2, 3, 64, 64))
    out = model.forward(x)
    assert out.value.shape == (2, 6, 64, 64)


def test_zero_head_uniform_softmax():
    cfg = HourglassConfig(B_in=8, C_in=2, num_classes=5, levels=1, channel_schedule=(4, 4), K=4)
    model = HourglassModel(cfg, seed=0)
    model.params["head.w"].value[...] = 0.0
    model.params["head.b"].value[...] = 0.0
    x = np.random.default_rng(12).standard_normal((1, 2, 16, 16))
    logits = model.forward(x).value
    p = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    assert np.abs(p - 0.2).max() < 1e-12


def test_whole_model_directional_fd():
    for arch in ("schn", "planar_baseline"):
        cfg = HourglassConfig(
            B_in=8, C_in=2, num_classes=3, levels=2, channel_schedule=(4, 8, 8), K=4, arch=arch
        )
        model = HourglassModel(cfg, seed=3)
        rng = np.random.default_rng(21)
        x = rng.standard_normal((2, 2, 16, 16))
        labels = rng.integers(0, 3, size=(2, 16, 16))

        rec = ComputationRecord()
        loss = ops.weighted_cross_entropy_op(rec, model.forward(x, rec, training=True), labels)
        grads = backward(rec, 1.0)
        v = {n: np.random.default_rng(5).standard_normal(p.value.shape) for n, p in model.params.items()}
        analytic = sum(float(np.sum(grads[n] * v[n])) for n in grads)

        buf0 = {k: b.copy() for k, b in model.buffers.items()}

        def f():
            for k in model.buffers:
                model.buffers[k][...] = buf0[k]
            out = model.forward(x, None, training=True)
            return float(ops.weighted_cross_entropy_op(None, out, labels).value)

        eps = 1e-6
        for n, p in model.params.items():
            p.value += eps * v[n]
        fp = f()
        for n, p in model.params.items():
            p.value -= 2 * eps * v[n]
        fm = f()
        for n, p in model.params.items():
            p.value += eps * v[n]
        fd = (fp - fm) / (2 * eps)
        assert abs(analytic - fd) / max(abs(fd), 1e-12) < 1e-4, arch


def test_parameter_count_regression():
    assert HourglassModel(desk_config(), seed=0).num_parameters() == 30294
    assert HourglassModel(reference_config(), seed=0).num_parameters() == 879760
    # identical across construction seeds (shapes fixed by config alone)
    assert HourglassModel(desk_config(), seed=5).num_parameters() == 30294


def test_config_validation():
    with pytest.raises(ConfigError):
        HourglassConfig(B_in=30, levels=2, channel_schedule=(8, 8, 8))
    with pytest.raises(ConfigError):
        HourglassConfig(levels=3, channel_schedule=(8, 8))
    with pytest.raises(ConfigError):
        HourglassConfig(arch="resnet")
    with pytest.raises(ConfigError):
        HourglassConfig(channel_schedule=(6, 16, 32, 64))  # 6 % 4 != 0


def test_load_arrays_shape_mismatch_names_parameter():
    cfg = HourglassConfig(B_in=8, C_in=2, num_classes=3, levels=1, channel_schedule=(4, 4), K=4)
    model = HourglassModel(cfg, seed=0)
    arrays = {k: v.copy() for k, v in model.state_arrays().items()}
    arrays["head.w"] = np.zeros((7, 7))
    with pytest.raises(ShapeMismatchError, match="head.w"):
        model.load_arrays(arrays)


def test_init_determinism():
    a = HourglassModel(desk_config(), seed=42)
    b = HourglassModel(desk_config(), seed=42)
    for name in a.params:
        assert np.array_equal(a.params[name].value, b.params[name].value)
