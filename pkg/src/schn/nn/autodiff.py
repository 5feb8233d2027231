"""Minimal reverse-mode tape over numpy arrays.

A forward pass executed with a :class:`ComputationRecord` appends one step
per primitive operation; :func:`backward` replays the steps in reverse and
accumulates adjoints into every reachable :class:`Parameter`.  Complex
intermediates (harmonic coefficients) carry cotangents in the convention
grad = dL/dRe + i*dL/dIm, which makes the adjoint of every real-linear map
its conjugate transpose.
"""

from __future__ import annotations

import numpy as np


class Parameter:
    """Named learnable tensor with a gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Node:
    """Intermediate value flowing through a recorded computation."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = None


def as_node(x) -> Node:
    if isinstance(x, (Node, Parameter)):
        return x
    return Node(np.asarray(x))


class ComputationRecord:
    """Ordered log of executed primitives with what their adjoints need."""

    def __init__(self):
        self.steps: list[tuple[Node, tuple, callable]] = []

    def push(self, out: Node, inputs: tuple, bwd) -> Node:
        self.steps.append((out, inputs, bwd))
        return out

    @property
    def output(self) -> Node:
        if not self.steps:
            raise ValueError("empty computation record")
        return self.steps[-1][0]

    def parameters(self) -> list[Parameter]:
        seen: dict[int, Parameter] = {}
        for _, inputs, _ in self.steps:
            for item in inputs:
                if isinstance(item, Parameter) and id(item) not in seen:
                    seen[id(item)] = item
        return list(seen.values())


def _accumulate(target, g):
    if isinstance(target, Parameter):
        if g.shape != target.value.shape:
            raise ValueError(
                f"gradient shape {g.shape} does not match parameter "
                f"{target.name!r} shape {target.value.shape}"
            )
        target.grad += g.real if np.iscomplexobj(g) else g
    else:
        target.grad = g if target.grad is None else target.grad + g


def backward(record: ComputationRecord, loss_grad=1.0) -> dict[str, np.ndarray]:
    """Reverse sweep; returns accumulated gradients keyed by parameter name."""
    out = record.output
    seed = np.asarray(loss_grad)
    if seed.shape not in (out.value.shape, ()):
        raise ValueError(
            f"loss gradient shape {seed.shape} does not match output shape {out.value.shape}"
        )
    if seed.shape == () and out.value.shape != ():
        seed = np.broadcast_to(seed, out.value.shape)
    _accumulate(out, seed.astype(out.value.dtype, copy=False))
    for node, inputs, bwd in reversed(record.steps):
        g = node.grad
        if g is None:
            continue
        grads = bwd(g)
        for target, gi in zip(inputs, grads):
            if target is None or gi is None:
                continue
            _accumulate(target, gi)
    return {p.name: p.grad for p in record.parameters()}


def zero_grads(params) -> None:
    values = params.values() if isinstance(params, dict) else params
    for p in values:
        p.grad[...] = 0.0
