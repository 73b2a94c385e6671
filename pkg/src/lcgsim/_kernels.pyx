# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the NumPy kernels in ``_kernels_py``.

Same signatures, same numerics: summations are Neumaier-compensated so the
cancellation-dominated norms of coherent-ring states agree with the exact
``math.fsum`` of the fallback to the last few ulps.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

COMPILED = True

from libc.math cimport fabs

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double creal(double complex)
    double cimag(double complex)

cdef double NEG_INF = float("-inf")


cdef inline void _neumaier_add(double* s, double* comp, double v) nogil:
    cdef double t = s[0] + v
    if fabs(s[0]) >= fabs(v):
        comp[0] += (s[0] - t) + v
    else:
        comp[0] += (v - t) + s[0]
    s[0] = t


cdef int _compensated_sum(const double complex[::1] terms, double complex* out) nogil:
    cdef double sr = 0.0, si = 0.0, cr = 0.0, ci = 0.0
    cdef Py_ssize_t i
    for i in range(terms.shape[0]):
        _neumaier_add(&sr, &cr, creal(terms[i]))
        _neumaier_add(&si, &ci, cimag(terms[i]))
    out[0] = (sr + cr) + 1j * (si + ci)
    return 0


def logsumexp_complex(log_w):
    """log(sum_i exp(log_w[i])) with a real-part shift and compensated sum."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] w = np.ascontiguousarray(
        log_w, dtype=np.complex128
    )
    cdef Py_ssize_t n = w.shape[0], i
    if n == 0:
        return complex(NEG_INF, 0.0)
    cdef double shift = NEG_INF
    cdef double re
    for i in range(n):
        re = creal(w[i])
        if re == re and re != NEG_INF and re > shift:  # skip NaN and -inf
            shift = re
    if shift == NEG_INF:
        return complex(NEG_INF, 0.0)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] terms = np.empty(n, dtype=np.complex128)
    for i in range(n):
        terms[i] = cexp(w[i] - shift)
    cdef double complex total = 0
    _compensated_sum(terms, &total)
    if total == 0:
        return complex(NEG_INF, 0.0)
    return shift + complex(np.log(complex(total)))


def sumexp_complex(log_w):
    """(shift, sum_i exp(log_w[i] - shift)) with compensated summation."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] w = np.ascontiguousarray(
        log_w, dtype=np.complex128
    )
    cdef Py_ssize_t n = w.shape[0], i
    cdef double shift = NEG_INF
    cdef double re
    for i in range(n):
        re = creal(w[i])
        if re == re and re != NEG_INF and re > shift:
            shift = re
    if shift == NEG_INF:
        return NEG_INF, complex(0.0)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] terms = np.empty(n, dtype=np.complex128)
    for i in range(n):
        terms[i] = cexp(w[i] - shift)
    cdef double complex total = 0
    _compensated_sum(terms, &total)
    return shift, complex(total)


def quad_forms(diff, minv):
    """-0.5 * diff[i]^T @ minv @ diff[i] for a batch of vectors."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] d = np.ascontiguousarray(
        np.atleast_2d(diff), dtype=np.complex128
    )
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] m = np.ascontiguousarray(
        minv, dtype=np.complex128
    )
    cdef Py_ssize_t n = d.shape[0], dim = d.shape[1], i, a, b
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef double complex acc
    for i in range(n):
        acc = 0
        for a in range(dim):
            for b in range(dim):
                acc = acc + d[i, a] * m[a, b] * d[i, b]
        out[i] = -0.5 * acc
    if np.asarray(diff).ndim == 1:
        return complex(out[0])
    return out


def pair_expand_shared(log_w, mu_a, mu_b, log_d, nu, minv, kmat):
    """Expand a state against a POVM sharing one B-block matrix inverse."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] w = np.ascontiguousarray(log_w, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] ma = np.ascontiguousarray(mu_a, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] mb = np.ascontiguousarray(mu_b, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] d = np.ascontiguousarray(log_d, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] nv = np.ascontiguousarray(nu, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] mi = np.ascontiguousarray(minv, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] km = np.ascontiguousarray(kmat, dtype=np.complex128)
    cdef Py_ssize_t n_w = w.shape[0], n_p = d.shape[0], da = ma.shape[1]
    cdef Py_ssize_t m_i, n_i, a, b, row
    cdef double complex d0, d1, quad
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out_w = np.empty(n_w * n_p, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out_mu = np.empty((n_w * n_p, da), dtype=np.complex128)
    cdef double complex m00 = mi[0, 0], m01 = mi[0, 1], m10 = mi[1, 0], m11 = mi[1, 1]
    for m_i in range(n_w):
        for n_i in range(n_p):
            row = m_i * n_p + n_i
            d0 = nv[n_i, 0] - mb[m_i, 0]
            d1 = nv[n_i, 1] - mb[m_i, 1]
            quad = d0 * (m00 * d0 + m01 * d1) + d1 * (m10 * d0 + m11 * d1)
            out_w[row] = w[m_i] + d[n_i] - 0.5 * quad
            for a in range(da):
                out_mu[row, a] = ma[m_i, a] + km[a, 0] * d0 + km[a, 1] * d1
    return out_w, out_mu


def wigner_chunk(points, log_w, means, inv_cov, log_norm):
    """Sum of shared-covariance Gaussian terms at a batch of points."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] q = np.ascontiguousarray(points, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] w = np.ascontiguousarray(log_w, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] mu = np.ascontiguousarray(means, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] ic = np.ascontiguousarray(inv_cov, dtype=np.complex128)
    cdef double complex ln = log_norm
    cdef Py_ssize_t n_q = q.shape[0], n_w = w.shape[0], dim = q.shape[1]
    cdef Py_ssize_t iq, m, a, b
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(n_q, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] expo = np.empty(n_w, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] diff = np.empty(dim, dtype=np.complex128)
    cdef double complex quad, acc
    cdef double shift, re
    for iq in range(n_q):
        shift = NEG_INF
        for m in range(n_w):
            for a in range(dim):
                diff[a] = q[iq, a] - mu[m, a]
            quad = 0
            for a in range(dim):
                for b in range(dim):
                    quad = quad + diff[a] * ic[a, b] * diff[b]
            expo[m] = w[m] + ln - 0.5 * quad
            re = creal(expo[m])
            if re == re and re > shift:
                shift = re
        if shift == NEG_INF or shift != shift:
            shift = 0.0
        acc = 0
        for m in range(n_w):
            acc = acc + cexp(expo[m] - shift)
        out[iq] = cexp(shift + 0j) * acc
    return out


def charfun_chunk(u, log_w, means, cov):
    """Characteristic-function sum over shared-covariance terms."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] uu = np.ascontiguousarray(u, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] w = np.ascontiguousarray(log_w, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] mu = np.ascontiguousarray(means, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] cv = np.ascontiguousarray(cov, dtype=np.complex128)
    cdef Py_ssize_t n_q = uu.shape[0], n_w = w.shape[0], dim = uu.shape[1]
    cdef Py_ssize_t iq, m, a, b
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.zeros(n_q, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] expo = np.empty(n_w, dtype=np.complex128)
    cdef double complex quad, dot, acc
    cdef double shift, re
    for iq in range(n_q):
        quad = 0
        for a in range(dim):
            for b in range(dim):
                quad = quad + uu[iq, a] * cv[a, b] * uu[iq, b]
        quad = -0.5 * quad
        shift = NEG_INF
        for m in range(n_w):
            dot = 0
            for a in range(dim):
                dot = dot + mu[m, a] * uu[iq, a]
            expo[m] = w[m] - 1j * dot + quad
            re = creal(expo[m])
            if re == re and re > shift:
                shift = re
        if shift == NEG_INF or shift != shift:
            shift = 0.0
        acc = 0
        for m in range(n_w):
            acc = acc + cexp(expo[m] - shift)
        out[iq] = cexp(shift + 0j) * acc
    return out
