"""Pure-numpy contraction kernels (fallback backend).

Semantics are identical to the compiled core: coefficients use the flat
triangular layout idx(l, m) = l*l + l + m and negative orders carry the
(-1)^m parity of the normalized Legendre functions.
"""

import numpy as np


def analysis(Gt, P, offsets, B, nthreads):
    """Contract per-ring Fourier sums against Legendre tables.

    Gt: (S, 2B, 2B) complex, Gt[s, c, j] with c the azimuthal-order FFT
    column and j the ring; P: packed (rows, 2B) normalized Legendre table;
    returns (S, B*B) complex coefficients.
    """
    S = Gt.shape[0]
    n = 2 * B
    out = np.zeros((S, B * B), dtype=np.complex128)
    for m in range(B):
        block = P[offsets[m] : offsets[m] + (B - m)]
        ls = np.arange(m, B)
        base = ls * ls + ls
        out[:, base + m] = Gt[:, m, :] @ block.T
        if m:
            neg = Gt[:, n - m, :] @ block.T
            out[:, base - m] = neg if m % 2 == 0 else -neg
    return out


def synthesis(C, P, offsets, B, nthreads):
    """Transpose of :func:`analysis`: scatter coefficients onto rings per order."""
    S = C.shape[0]
    n = 2 * B
    Ht = np.zeros((S, n, n), dtype=np.complex128)
    for m in range(B):
        block = P[offsets[m] : offsets[m] + (B - m)]
        ls = np.arange(m, B)
        base = ls * ls + ls
        Ht[:, m, :] = C[:, base + m] @ block
        if m:
            coef = C[:, base - m]
            if m % 2 == 1:
                coef = -coef
            Ht[:, n - m, :] = coef @ block
    return Ht


def analysis_half(Gt, P, offsets, B, nthreads):
    """Non-negative orders of a real signal: rfft columns -> packed triangular rows."""
    S = Gt.shape[0]
    T = (B * (B + 1)) // 2
    out = np.empty((S, T), dtype=np.complex128)
    for m in range(B):
        block = P[offsets[m] : offsets[m] + (B - m)]
        out[:, offsets[m] : offsets[m] + (B - m)] = Gt[:, m, :] @ block.T
    return out


def synthesis_half(Cp, P, offsets, B, nthreads):
    """Packed triangular rows (m >= 0) -> rfft columns."""
    S = Cp.shape[0]
    n = 2 * B
    Ht = np.empty((S, B, n), dtype=np.complex128)
    for m in range(B):
        block = P[offsets[m] : offsets[m] + (B - m)]
        Ht[:, m, :] = Cp[:, offsets[m] : offsets[m] + (B - m)] @ block
    return Ht
