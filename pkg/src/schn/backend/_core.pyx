# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Legendre-contraction kernels.

Inner loops run dual real dot products / axpys over the interleaved
re/im doubles of each contiguous ring, which lets the C compiler
vectorize them.  Parallelism is over azimuthal orders with disjoint
outputs, so results are bit-identical for any thread count.

``*_half`` variants handle real signals through the non-negative orders
of an rfft (packed triangular coefficient rows, same layout as the
Legendre table); the full variants serve arbitrary complex content.
"""

import numpy as np

cimport cython
from cython.parallel cimport prange


def analysis(double complex[:, :, ::1] Gt, double[:, ::1] P, long[::1] offsets,
             int B, int nthreads):
    """Full contraction: Gt[s, col, j] FFT columns -> flat (S, B*B) coefficients."""
    cdef int S = Gt.shape[0]
    cdef int n = 2 * B
    out_arr = np.zeros((S, B * B), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double* g
    cdef double* p
    cdef double* o
    cdef int oi, m, am, col, l, s, j, row, idx
    cdef double sign, are, aim, pv
    for oi in prange(2 * B - 1, nogil=True, schedule='static', num_threads=nthreads):
        m = oi - (B - 1)
        am = m if m >= 0 else -m
        col = m if m >= 0 else n + m
        sign = -1.0 if (m < 0 and am % 2 == 1) else 1.0
        for s in range(S):
            g = <double*> &Gt[s, col, 0]
            for l in range(am, B):
                row = offsets[am] + (l - am)
                p = <double*> &P[row, 0]
                are = 0.0
                aim = 0.0
                for j in range(n):
                    pv = p[j]
                    are = are + pv * g[2 * j]
                    aim = aim + pv * g[2 * j + 1]
                idx = l * l + l + m
                o = <double*> &out[s, idx]
                o[0] = sign * are
                o[1] = sign * aim
    return out_arr


def synthesis(double complex[:, ::1] C, double[:, ::1] P, long[::1] offsets,
              int B, int nthreads):
    """Transpose of :func:`analysis`: coefficients -> per-ring FFT columns."""
    cdef int S = C.shape[0]
    cdef int n = 2 * B
    out_arr = np.zeros((S, n, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] Ht = out_arr
    cdef double* h
    cdef double* p
    cdef double* c
    cdef int oi, m, am, col, l, s, j, row, idx
    cdef double sign, cre, cim, pv
    for oi in prange(2 * B - 1, nogil=True, schedule='static', num_threads=nthreads):
        m = oi - (B - 1)
        am = m if m >= 0 else -m
        col = m if m >= 0 else n + m
        sign = -1.0 if (m < 0 and am % 2 == 1) else 1.0
        for s in range(S):
            h = <double*> &Ht[s, col, 0]
            for l in range(am, B):
                row = offsets[am] + (l - am)
                idx = l * l + l + m
                c = <double*> &C[s, idx]
                cre = sign * c[0]
                cim = sign * c[1]
                p = <double*> &P[row, 0]
                for j in range(n):
                    pv = p[j]
                    h[2 * j] = h[2 * j] + pv * cre
                    h[2 * j + 1] = h[2 * j + 1] + pv * cim
    return out_arr


def analysis_half(double complex[:, :, ::1] Gt, double[:, ::1] P, long[::1] offsets,
                  int B, int nthreads):
    """Non-negative orders only: Gt[s, m, j] (rfft columns m < B) -> packed rows."""
    cdef int S = Gt.shape[0]
    cdef int n = 2 * B
    cdef int T = (B * (B + 1)) // 2
    out_arr = np.zeros((S, T), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double* g
    cdef double* p
    cdef double* o
    cdef int m, l, s, j, row
    cdef double are, aim, pv
    for m in prange(B, nogil=True, schedule='static', num_threads=nthreads):
        for s in range(S):
            g = <double*> &Gt[s, m, 0]
            for l in range(m, B):
                row = offsets[m] + (l - m)
                p = <double*> &P[row, 0]
                are = 0.0
                aim = 0.0
                for j in range(n):
                    pv = p[j]
                    are = are + pv * g[2 * j]
                    aim = aim + pv * g[2 * j + 1]
                o = <double*> &out[s, row]
                o[0] = are
                o[1] = aim
    return out_arr


def synthesis_half(double complex[:, ::1] Cp, double[:, ::1] P, long[::1] offsets,
                   int B, int nthreads):
    """Packed rows (m >= 0) -> Ht[s, m, j] rfft columns."""
    cdef int S = Cp.shape[0]
    cdef int n = 2 * B
    out_arr = np.zeros((S, B, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] Ht = out_arr
    cdef double* h
    cdef double* p
    cdef double* c
    cdef int m, l, s, j, row
    cdef double cre, cim, pv
    for m in prange(B, nogil=True, schedule='static', num_threads=nthreads):
        for s in range(S):
            h = <double*> &Ht[s, m, 0]
            for l in range(m, B):
                row = offsets[m] + (l - m)
                c = <double*> &Cp[s, row]
                cre = c[0]
                cim = c[1]
                p = <double*> &P[row, 0]
                for j in range(n):
                    pv = p[j]
                    h[2 * j] = h[2 * j] + pv * cre
                    h[2 * j + 1] = h[2 * j + 1] + pv * cim
    return out_arr
