# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels for SU(2) rotations of a reference vector.

See ``_kernels_py`` for the storage layout; the signatures match.  Samples
are processed in chunks; within a chunk each ``P2`` block is one pair of
BLAS ``zgemm`` calls (small blocks use direct loops).
"""

import numpy as np

from libc.math cimport sin, cos, atan2, sqrt, INFINITY
from scipy.linalg.cython_blas cimport zgemm

DEF CHUNK = 256
DEF SMALL = 4


cdef inline double complex _cis(double x) noexcept nogil:
    return cos(x) + 1j * sin(x)


cdef void _rotate_chunk(
    const double complex[::1] vdata, const double complex[::1] vconj,
    const long long[::1] voff, const long long[::1] boff,
    const double[::1] lam, const double[::1] mu, const double complex[::1] psi0,
    const double[::1] th, const double[::1] ph, Py_ssize_t start, Py_ssize_t count,
    double complex[::1] pre, double complex[::1] tmp, double complex[::1] blk,
    double complex[:, ::1] out,
) noexcept nogil:
    """States ``start .. start+count`` written to rows ``0 .. count`` of ``out``."""
    cdef Py_ssize_t nb = boff.shape[0] - 1
    cdef Py_ssize_t b, c, i, k, lo, d, vo
    cdef int n_d, n_c
    cdef double complex one = 1.0, zero = 0.0, acc
    cdef char trans_n = b'N', trans_t = b'T'
    for b in range(nb):
        lo = boff[b]
        d = boff[b + 1] - lo
        vo = voff[b]
        # pre[c, i] = e^{i phi mu_i} psi0_i
        for c in range(count):
            for i in range(d):
                pre[c * d + i] = _cis(ph[start + c] * mu[lo + i]) * psi0[lo + i]
        if d <= SMALL:
            for c in range(count):
                for k in range(d):
                    acc = 0
                    for i in range(d):
                        acc = acc + vconj[vo + i * d + k] * pre[c * d + i]
                    tmp[c * d + k] = acc
        else:
            # row-major tmp = pre @ conj(V)
            n_d = <int>d
            n_c = <int>count
            zgemm(&trans_n, &trans_n, &n_d, &n_c, &n_d, &one, <double complex*>&vconj[vo], &n_d,
                  &pre[0], &n_d, &zero, &tmp[0], &n_d)
        for c in range(count):
            for k in range(d):
                tmp[c * d + k] = tmp[c * d + k] * _cis(th[start + c] * lam[lo + k])
        if d <= SMALL:
            for c in range(count):
                for i in range(d):
                    acc = 0
                    for k in range(d):
                        acc = acc + vdata[vo + i * d + k] * tmp[c * d + k]
                    blk[c * d + i] = acc
        else:
            # row-major blk = tmp @ V^T
            zgemm(&trans_t, &trans_n, &n_d, &n_c, &n_d, &one, <double complex*>&vdata[vo], &n_d,
                  &tmp[0], &n_d, &zero, &blk[0], &n_d)
        for c in range(count):
            for i in range(d):
                out[c, lo + i] = blk[c * d + i] * _cis(-ph[start + c] * mu[lo + i])


def _max_block(const long long[::1] boff):
    cdef Py_ssize_t b, m = 1
    for b in range(boff.shape[0] - 1):
        if boff[b + 1] - boff[b] > m:
            m = boff[b + 1] - boff[b]
    return m


def _prepare(vdata, voff, boff, lam, mu, psi0, thetas, phis):
    V = np.ascontiguousarray(vdata, dtype=np.complex128)
    return (V, np.ascontiguousarray(V.conj()),
            np.ascontiguousarray(voff, dtype=np.int64),
            np.ascontiguousarray(boff, dtype=np.int64),
            np.ascontiguousarray(lam, dtype=np.float64),
            np.ascontiguousarray(mu, dtype=np.float64),
            np.ascontiguousarray(psi0, dtype=np.complex128),
            np.ascontiguousarray(thetas, dtype=np.float64),
            np.ascontiguousarray(phis, dtype=np.float64))


def rotate_batch(vdata, voff, boff, lam, mu, psi0, thetas, phis):
    """Rotated states for every ``(theta_k, phi_k)``; shape ``(K, dim)``."""
    args = _prepare(vdata, voff, boff, lam, mu, psi0, thetas, phis)
    cdef const double complex[::1] V = args[0]
    cdef const double complex[::1] Vc = args[1]
    cdef const long long[::1] vo = args[2]
    cdef const long long[::1] bo = args[3]
    cdef const double[::1] lm = args[4]
    cdef const double[::1] mm = args[5]
    cdef const double complex[::1] p0 = args[6]
    cdef const double[::1] th = args[7]
    cdef const double[::1] ph = args[8]
    cdef Py_ssize_t K = th.shape[0], dim = p0.shape[0], start, count
    result = np.empty((K, dim), dtype=np.complex128)
    cdef double complex[:, ::1] res = result
    cdef Py_ssize_t scratch = CHUNK * _max_block(bo)
    cdef double complex[::1] pre = np.empty(scratch, dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(scratch, dtype=np.complex128)
    cdef double complex[::1] blk = np.empty(scratch, dtype=np.complex128)
    if K == 0 or dim == 0:
        return result
    with nogil:
        start = 0
        while start < K:
            count = min(CHUNK, K - start)
            _rotate_chunk(V, Vc, vo, bo, lm, mm, p0, th, ph, start, count, pre, tmp, blk,
                          res[start:start + count])
            start += count
    return result


def loop_phase(vdata, voff, boff, lam, mu, psi0, thetas, phis):
    """Accumulated ``-sum_k arg <psi_k|psi_{k+1}>``, closure overlap, min overlap."""
    args = _prepare(vdata, voff, boff, lam, mu, psi0, thetas, phis)
    cdef const double complex[::1] V = args[0]
    cdef const double complex[::1] Vc = args[1]
    cdef const long long[::1] vo = args[2]
    cdef const long long[::1] bo = args[3]
    cdef const double[::1] lm = args[4]
    cdef const double[::1] mm = args[5]
    cdef const double complex[::1] p0 = args[6]
    cdef const double[::1] th = args[7]
    cdef const double[::1] ph = args[8]
    cdef Py_ssize_t K = th.shape[0], dim = p0.shape[0], start, count, c, i
    if K == 0:
        return 0.0, 0j, INFINITY
    cdef Py_ssize_t scratch = CHUNK * _max_block(bo)
    cdef double complex[::1] pre = np.empty(scratch, dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(scratch, dtype=np.complex128)
    cdef double complex[::1] blk = np.empty(scratch, dtype=np.complex128)
    cdef double complex[:, ::1] states = np.empty((CHUNK, dim), dtype=np.complex128)
    cdef double complex[::1] first = np.empty(dim, dtype=np.complex128)
    cdef double complex[::1] prev = np.empty(dim, dtype=np.complex128)
    cdef double complex ov
    cdef double total = 0.0, min_ov = INFINITY, mag
    with nogil:
        start = 0
        while start < K:
            count = min(CHUNK, K - start)
            _rotate_chunk(V, Vc, vo, bo, lm, mm, p0, th, ph, start, count, pre, tmp, blk, states)
            for c in range(count):
                if start + c == 0:
                    for i in range(dim):
                        first[i] = states[0, i]
                else:
                    ov = 0
                    for i in range(dim):
                        ov = ov + prev[i].conjugate() * states[c, i]
                    total -= atan2(ov.imag, ov.real)
                    mag = sqrt(ov.real * ov.real + ov.imag * ov.imag)
                    if mag < min_ov:
                        min_ov = mag
                for i in range(dim):
                    prev[i] = states[c, i]
            start += count
        ov = 0
        for i in range(dim):
            ov = ov + first[i].conjugate() * prev[i]
    return total, complex(ov), min_ov
