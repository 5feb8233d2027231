"""Contraction kernels behind the harmonic transforms.

The Legendre contraction over colatitude rings is the hot loop of every
transform, layer, and training step.  A compiled Cython core is used when
the extension built; otherwise a pure-numpy implementation with identical
semantics takes over.  ``SCHN_BACKEND=numpy|compiled`` forces the choice,
``SCHN_THREADS`` (or :func:`set_num_threads`) sets the compiled kernels'
thread count.
"""

import os

from . import _ref

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_forced = os.environ.get("SCHN_BACKEND", "").strip().lower()
if _forced == "numpy":
    _impl = _ref
elif _forced == "compiled":
    if _core is None:
        raise ImportError("SCHN_BACKEND=compiled but the extension is not built")
    _impl = _core
else:
    _impl = _core if _core is not None else _ref

HAS_COMPILED = _core is not None

_num_threads = max(1, int(os.environ.get("SCHN_THREADS", os.cpu_count() or 1)))


def backend_name() -> str:
    return "compiled" if _impl is _core else "numpy"


def available_backends():
    names = ["numpy"]
    if HAS_COMPILED:
        names.append("compiled")
    return names


def get_impl(name: str):
    """Fetch a specific backend module (for benchmarks and parity tests)."""
    if name == "numpy":
        return _ref
    if name == "compiled":
        if _core is None:
            raise ValueError("compiled backend not available")
        return _core
    raise ValueError(f"unknown backend {name!r}")


def set_num_threads(n: int) -> None:
    global _num_threads
    _num_threads = max(1, int(n))


def get_num_threads() -> int:
    return _num_threads


def analysis(Gt, P, offsets, B):
    """Legendre contraction of per-ring Fourier sums; Gt is (S, 2B, 2B) order-major."""
    return _impl.analysis(Gt, P, offsets, B, _num_threads)


def synthesis(C, P, offsets, B):
    """Transpose contraction: coefficients to per-ring Fourier table (S, 2B, 2B)."""
    return _impl.synthesis(C, P, offsets, B, _num_threads)


def analysis_half(Gt, P, offsets, B):
    """Contraction over non-negative orders only (real-signal fast path)."""
    return _impl.analysis_half(Gt, P, offsets, B, _num_threads)


def synthesis_half(Cp, P, offsets, B):
    """Transpose contraction over non-negative orders only."""
    return _impl.synthesis_half(Cp, P, offsets, B, _num_threads)
