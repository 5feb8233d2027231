"""Shared finite-difference oracles for gradient tests."""

import numpy as np

from schn.nn.autodiff import ComputationRecord, backward


def loss_projection(out_value, rng):
    """Random fixed projection making any op output a real scalar."""
    if np.iscomplexobj(out_value):
        r = rng.standard_normal(out_value.shape) + 1j * rng.standard_normal(out_value.shape)
    else:
        r = rng.standard_normal(out_value.shape)
    return r


def project(out_value, r):
    if np.iscomplexobj(out_value):
        return float(np.sum(out_value.real * r.real + out_value.imag * r.imag))
    return float(np.sum(out_value * np.asarray(r)))


def numeric_grad(f, x, eps=1e-5):
    """Central differences for every element; complex arrays are perturbed
    separately in their real and imaginary parts."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f()
        flat[i] = orig - eps
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * eps)
        if np.iscomplexobj(x):
            flat[i] = orig + 1j * eps
            fp = f()
            flat[i] = orig - 1j * eps
            fm = f()
            flat[i] = orig
            gflat[i] += 1j * (fp - fm) / (2 * eps)
    return g


def rel_err(a, b):
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-10)
    return np.abs(a - b).max() / scale


def check_op_gradients(op, inputs, rng, eps=1e-5):
    """FD-check d(projection of op output)/d(input) for every array input.

    ``op`` maps the list of live arrays to an output array inside a record;
    returns the worst relative error over all inputs.
    """
    from schn.nn.autodiff import Node

    nodes = [Node(v) for v in inputs]
    rec = ComputationRecord()
    out = op(rec, *nodes)
    r = loss_projection(out.value, rng)

    seed = r if np.iscomplexobj(out.value) else np.asarray(r)
    backward(rec, seed)

    worst = 0.0
    for idx, node in enumerate(nodes):
        def f(i=idx):
            fresh = op(None, *nodes)
            return project(fresh.value, r)

        fd = numeric_grad(f, node.value, eps=eps)
        analytic = node.grad if node.grad is not None else np.zeros_like(fd)
        worst = max(worst, rel_err(analytic, fd))
    return worst
