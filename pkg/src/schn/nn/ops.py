"""Differentiable primitives for spherical and planar networks.

Every function takes an optional :class:`ComputationRecord`; passing None
runs forward-only.  Spatial tensors are (N, C, 2B, 2B) float64, harmonic
tensors are (N, C, B*B) complex128 in the flat triangular layout.
"""

from __future__ import annotations

import numpy as np

from ..filters import interpolation_matrix
from ..grid import make_grid
from ..harmonics import analysis_real_array, synthesis_real_array, transform_tables
from .autodiff import ComputationRecord, Node, Parameter

EPS_NORM = 1e-5


def _val(x):
    return x.value if isinstance(x, (Node, Parameter)) else x


def _bandlimit_of(x) -> int:
    return _val(x).shape[-1] // 2


# ---------------------------------------------------------------------------
# harmonic transforms

def sht_analysis(rec, x, B: int) -> Node:
    """Forward SHT per channel: real (N, C, 2B, 2B) -> (N, C, B*B)."""
    v = _val(x)
    if v.shape[-1] != 2 * B or v.shape[-2] != 2 * B:
        raise ValueError(f"expected trailing dims ({2*B}, {2*B}), got {v.shape}")
    out = Node(analysis_real_array(v, B))
    if rec is not None:
        qw = transform_tables(B).qw

        def bwd(g):
            return (qw[:, None] * synthesis_real_array(g, B),)

        rec.push(out, (x,), bwd)
    return out


def sht_synthesis(rec, c, B: int) -> Node:
    """Inverse SHT per channel: conjugate-symmetric (N, C, B*B) -> real (N, C, 2B, 2B).

    Network coefficients stay conjugate-symmetric because inputs are real
    and gains real; only the non-negative orders are read.
    """
    v = _val(c)
    if v.shape[-1] != B * B:
        raise ValueError(f"expected {B*B} coefficients, got {v.shape[-1]}")
    out = Node(synthesis_real_array(v, B))
    if rec is not None:

        def bwd(g):
            return (analysis_real_array(g, B, weighted=False),)

        rec.push(out, (c,), bwd)
    return out


def truncate_coeffs(rec, c, B: int, B_new: int) -> Node:
    if not 1 <= B_new <= B:
        raise ValueError(f"truncation target must lie in [1, {B}]")
    v = _val(c)
    out = Node(np.ascontiguousarray(v[..., : B_new * B_new]))
    if rec is not None:

        def bwd(g):
            pad = [(0, 0)] * (g.ndim - 1) + [(0, B * B - B_new * B_new)]
            return (np.pad(g, pad),)

        rec.push(out, (c,), bwd)
    return out


def zeropad_coeffs(rec, c, B: int, B_new: int) -> Node:
    if B_new < B:
        raise ValueError(f"zero-pad target must be >= {B}")
    v = _val(c)
    pad = [(0, 0)] * (v.ndim - 1) + [(0, B_new * B_new - B * B)]
    out = Node(np.pad(v, pad))
    if rec is not None:
        rec.push(out, (c,), lambda g: (np.ascontiguousarray(g[..., : B * B]),))
    return out


# ---------------------------------------------------------------------------
# spectral filtering

def anchors_to_gains(rec, anchors, B: int) -> Node:
    """Linear interpolation (..., K) anchors -> (..., B) per-degree gains."""
    v = _val(anchors)
    M = interpolation_matrix(B, v.shape[-1])
    out = Node(v @ M.T)
    if rec is not None:
        rec.push(out, (anchors,), lambda g: (g @ M,))
    return out


def spectral_mix(rec, c, gains, B: int) -> Node:
    """Per-degree gains with channel mixing: out[n,o] = sum_i k[i,o,l] c[n,i].

    c: (N, C_in, B*B) complex, gains: (C_in, C_out, B) real.
    """
    cv = _val(c)
    gv = _val(gains)
    if cv.shape[-1] != B * B or gv.shape[-1] != B:
        raise ValueError("bandlimit mismatch between coefficients and gains")
    if cv.shape[1] != gv.shape[0]:
        raise ValueError(f"channel mismatch: {cv.shape[1]} vs {gv.shape[0]}")
    degmap = transform_tables(B).degmap
    G = gv[:, :, degmap]  # (C_in, C_out, B*B)
    out = Node(np.einsum("nif,iof->nof", cv, G, optimize=True))
    if rec is not None:
        starts = np.arange(B) ** 2

        def bwd(g):
            gc = np.einsum("nof,iof->nif", g, G, optimize=True)
            gG = np.einsum("nof,nif->iof", g, np.conj(cv), optimize=True).real
            ggains = np.add.reduceat(gG, starts, axis=-1)
            return (gc, ggains)

        rec.push(out, (c, gains), bwd)
    return out


# ---------------------------------------------------------------------------
# pointwise / planar layers

def bias_spatial(rec, x, b) -> Node:
    """Add one constant per channel (touches only degree zero)."""
    xv, bv = _val(x), _val(b)
    out = Node(xv + bv[:, None, None])
    if rec is not None:
        rec.push(out, (x, b), lambda g: (g, g.sum(axis=(0, 2, 3))))
    return out


def pointwise_conv(rec, x, W, b=None) -> Node:
    """1x1 channel mixing at every node: out = W @ x (+ b along channels)."""
    xv, Wv = _val(x), _val(W)
    if xv.shape[1] != Wv.shape[1]:
        raise ValueError(f"channel mismatch: input {xv.shape[1]}, weight {Wv.shape}")
    out_v = np.einsum("oi,nihw->nohw", Wv, xv, optimize=True)
    if b is not None:
        out_v += _val(b)[:, None, None]
    out = Node(out_v)
    if rec is not None:

        def bwd(g):
            gx = np.einsum("oi,nohw->nihw", Wv, g, optimize=True)
            gW = np.einsum("nohw,nihw->oi", g, xv, optimize=True)
            gb = g.sum(axis=(0, 2, 3)) if b is not None else None
            return (gx, gW, gb)

        rec.push(out, (x, W, b), bwd)
    return out


def relu(rec, x) -> Node:
    xv = _val(x)
    out = Node(np.maximum(xv, 0.0))
    if rec is not None:
        mask = xv > 0
        rec.push(out, (x,), lambda g: (g * mask,))
    return out


def weighted_norm(rec, x, scale, shift, running, training: bool, momentum: float = 0.9) -> Node:
    """Normalize each channel by its quadrature-weighted moments over sphere x batch.

    ``running`` is a dict with "mean"/"var" buffers used at inference and
    updated (momentum 0.9) during training.  The weighted moments are
    rotation-invariant for bandlimited inputs, which keeps this layer
    equivariant in batch-statistics mode.
    """
    xv = _val(x)
    N = xv.shape[0]
    B = _bandlimit_of(xv)
    w_node = make_grid(B).area_weights / (4.0 * np.pi)  # sums to 1 over the grid
    gam, bet = _val(scale), _val(shift)
    if training:
        w_hat = w_node / N
        mean = np.einsum("nchw,hw->c", xv, w_hat, optimize=True)
        xc = xv - mean[:, None, None]
        var = np.einsum("nchw,hw->c", xc * xc, w_hat, optimize=True)
        running["mean"] = momentum * running["mean"] + (1.0 - momentum) * mean
        running["var"] = momentum * running["var"] + (1.0 - momentum) * var
    else:
        mean = running["mean"]
        var = running["var"]
        xc = xv - mean[:, None, None]
    sigma = np.sqrt(var + EPS_NORM)
    xhat = xc / sigma[:, None, None]
    out = Node(gam[:, None, None] * xhat + bet[:, None, None])
    if rec is not None:
        if training:

            def bwd(g):
                s1 = g.sum(axis=(0, 2, 3))
                s2 = (g * xhat).sum(axis=(0, 2, 3))
                coef = (gam / sigma)[:, None, None]
                gx = coef * (g - w_hat[None, None] * (s1[:, None, None] + xhat * s2[:, None, None]))
                return (gx, s2, s1)

        else:

            def bwd(g):
                s1 = g.sum(axis=(0, 2, 3))
                s2 = (g * xhat).sum(axis=(0, 2, 3))
                gx = (gam / sigma)[:, None, None] * g
                return (gx, s2, s1)

        rec.push(out, (x, scale, shift), bwd)
    return out


def add(rec, a, b) -> Node:
    out = Node(_val(a) + _val(b))
    if rec is not None:
        rec.push(out, (a, b), lambda g: (g, g))
    return out


def planar_conv3x3(rec, x, W, b=None) -> Node:
    """3x3 cross-correlation, circular in azimuth, zero-padded at colatitude edges."""
    xv, Wv = _val(x), _val(W)
    if Wv.shape[2:] != (3, 3) or xv.shape[1] != Wv.shape[1]:
        raise ValueError(f"bad kernel/input shapes {Wv.shape} vs {xv.shape}")
    N, Ci, H, Wd = xv.shape
    Co = Wv.shape[0]
    xp = np.zeros((N, Ci, H + 2, Wd + 2))
    xp[:, :, 1 : H + 1, 1 : Wd + 1] = xv
    xp[:, :, 1 : H + 1, 0] = xv[:, :, :, Wd - 1]
    xp[:, :, 1 : H + 1, Wd + 1] = xv[:, :, :, 0]
    out_v = np.zeros((N, Co, H, Wd))
    for dy in range(3):
        for dx in range(3):
            out_v += np.einsum(
                "oi,nihw->nohw", Wv[:, :, dy, dx], xp[:, :, dy : dy + H, dx : dx + Wd], optimize=True
            )
    if b is not None:
        out_v += _val(b)[:, None, None]
    out = Node(out_v)
    if rec is not None:

        def bwd(g):
            gW = np.empty_like(Wv)
            gxp = np.zeros_like(xp)
            for dy in range(3):
                for dx in range(3):
                    patch = xp[:, :, dy : dy + H, dx : dx + Wd]
                    gW[:, :, dy, dx] = np.einsum("nohw,nihw->oi", g, patch, optimize=True)
                    gxp[:, :, dy : dy + H, dx : dx + Wd] += np.einsum(
                        "oi,nohw->nihw", Wv[:, :, dy, dx], g, optimize=True
                    )
            gx = gxp[:, :, 1 : H + 1, 1 : Wd + 1].copy()
            gx[:, :, :, Wd - 1] += gxp[:, :, 1 : H + 1, 0]
            gx[:, :, :, 0] += gxp[:, :, 1 : H + 1, Wd + 1]
            gb = g.sum(axis=(0, 2, 3)) if b is not None else None
            return (gx, gW, gb)

        rec.push(out, (x, W, b), bwd)
    return out


def avgpool2(rec, x) -> Node:
    xv = _val(x)
    N, C, H, Wd = xv.shape
    if H % 2 or Wd % 2:
        raise ValueError("pooling needs even spatial dims")
    out = Node(xv.reshape(N, C, H // 2, 2, Wd // 2, 2).mean(axis=(3, 5)))
    if rec is not None:

        def bwd(g):
            return (np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) * 0.25,)

        rec.push(out, (x,), bwd)
    return out


def upsample_nearest2(rec, x) -> Node:
    xv = _val(x)
    out = Node(np.repeat(np.repeat(xv, 2, axis=2), 2, axis=3))
    if rec is not None:
        N, C, H, Wd = xv.shape

        def bwd(g):
            return (g.reshape(N, C, H, 2, Wd, 2).sum(axis=(3, 5)),)

        rec.push(out, (x,), bwd)
    return out


# ---------------------------------------------------------------------------
# loss

def weighted_cross_entropy_op(rec, logits, labels: np.ndarray) -> Node:
    """Softmax cross-entropy averaged with normalized quadrature areas, then batch.

    logits: (N, K, 2B, 2B); labels: (N, 2B, 2B) integer class ids.
    """
    zv = _val(logits)
    N, K = zv.shape[:2]
    if labels.shape != (N,) + zv.shape[2:]:
        raise ValueError(f"label shape {labels.shape} does not match logits {zv.shape}")
    if labels.min() < 0 or labels.max() >= K:
        raise ValueError(f"label outside [0, {K})")
    B = _bandlimit_of(zv)
    w_node = make_grid(B).area_weights / (4.0 * np.pi)
    zmax = zv.max(axis=1, keepdims=True)
    zs = zv - zmax
    lse = np.log(np.exp(zs).sum(axis=1))  # (N, 2B, 2B)
    picked = np.take_along_axis(zs, labels[:, None], axis=1)[:, 0]
    loss = float((w_node[None] * (lse - picked)).sum() / N)
    out = Node(np.float64(loss))
    if rec is not None:

        def bwd(g):
            p = np.exp(zs - lse[:, None])
            np.put_along_axis(p, labels[:, None], np.take_along_axis(p, labels[:, None], axis=1) - 1.0, axis=1)
            return (p * (w_node[None, None] / N) * float(g),)

        rec.push(out, (logits,), bwd)
    return out
