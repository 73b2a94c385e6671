"""NumPy implementations of the per-Gaussian inner loops.

This module is the fallback backend; `lcgsim._kernels` (Cython) provides the
same functions compiled. Both operate on contiguous complex128 arrays and
must stay numerically interchangeable: the test suite runs the two backends
against each other.

Summations over Gaussian terms are compensated (exact ``math.fsum`` here,
Neumaier accumulation in the compiled twin) because norms of coherent-ring
states are dominated by cancellation between O(1) terms.
"""

import math

import numpy as np

COMPILED = False

_NEG_INF = float("-inf")


def logsumexp_complex(log_w):
    """log(sum_i exp(log_w[i])) for complex log-weights, shifted and compensated.

    Returns complex(-inf, 0) when every term vanishes. The imaginary part of
    the result is the phase of the (possibly negative or complex) sum.
    """
    log_w = np.ascontiguousarray(log_w, dtype=np.complex128)
    if log_w.size == 0:
        return complex(_NEG_INF, 0.0)
    re = log_w.real
    finite = re[np.isfinite(re)]
    if finite.size == 0:
        return complex(_NEG_INF, 0.0)
    shift = float(finite.max())
    terms = np.exp(log_w - shift)
    total = complex(math.fsum(terms.real), math.fsum(terms.imag))
    if total == 0.0:
        return complex(_NEG_INF, 0.0)
    return shift + complex(np.log(complex(total)))


def sumexp_complex(log_w):
    """(shift, sum_i exp(log_w[i] - shift)) with compensated summation."""
    log_w = np.ascontiguousarray(log_w, dtype=np.complex128)
    re = log_w.real
    finite = re[np.isfinite(re)]
    if finite.size == 0:
        return _NEG_INF, complex(0.0)
    shift = float(finite.max())
    terms = np.exp(log_w - shift)
    return shift, complex(math.fsum(terms.real), math.fsum(terms.imag))


def quad_forms(diff, minv):
    """-0.5 * diff[i]^T @ minv @ diff[i] for a batch of vectors."""
    diff = np.asarray(diff, dtype=np.complex128)
    minv = np.asarray(minv, dtype=np.complex128)
    return -0.5 * np.einsum("...i,ij,...j->...", diff, minv, diff)


def pair_expand_shared(log_w, mu_a, mu_b, log_d, nu, minv, kmat):
    """Expand a state against a POVM sharing one B-block matrix inverse.

    For every state term m and POVM term n computes

        out_w[m*P + n]  = log_w[m] + log_d[n] - 0.5 (nu_n - mu_b_m)^T minv (nu_n - mu_b_m)
        out_mu[m*P + n] = mu_a[m] + kmat @ (nu_n - mu_b_m)

    log_d is expected to already carry the Gaussian-overlap normalization of
    the shared matrix.
    """
    log_w = np.asarray(log_w, dtype=np.complex128)
    mu_a = np.asarray(mu_a, dtype=np.complex128)
    mu_b = np.asarray(mu_b, dtype=np.complex128)
    log_d = np.asarray(log_d, dtype=np.complex128)
    nu = np.asarray(nu, dtype=np.complex128)
    delta = nu[None, :, :] - mu_b[:, None, :]  # (n_w, n_p, 2)
    gamma = -0.5 * np.einsum("mni,ij,mnj->mn", delta, minv, delta)
    out_w = (log_w[:, None] + log_d[None, :] + gamma).reshape(-1)
    out_mu = (mu_a[:, None, :] + np.einsum("ai,mni->mna", kmat, delta)).reshape(
        -1, mu_a.shape[1]
    )
    return out_w, out_mu


def wigner_chunk(points, log_w, means, inv_cov, log_norm):
    """Sum of Gaussian terms with a shared covariance at a batch of points.

    Returns the complex accumulated value per point; callers take the real
    part after checking the imaginary residue.
    """
    points = np.asarray(points, dtype=np.complex128)
    diff = points[:, None, :] - np.asarray(means)[None, :, :]  # (n_q, n_w, d)
    expo = (
        np.asarray(log_w)[None, :]
        + log_norm
        - 0.5 * np.einsum("qmi,ij,qmj->qm", diff, np.asarray(inv_cov), diff)
    )
    shift = np.max(expo.real, axis=1, keepdims=True)
    shift[~np.isfinite(shift)] = 0.0
    vals = np.exp(expo - shift) if expo.size else np.zeros_like(expo)
    return np.exp(shift[:, 0]) * vals.sum(axis=1)


def charfun_chunk(u, log_w, means, cov):
    """Characteristic-function sum over terms with a shared covariance.

    ``u`` holds the rotated coordinates (Omega^T alpha) per evaluation point:
    each term contributes exp(log_w - i mu^T u - 0.5 u^T cov u).
    """
    u = np.asarray(u, dtype=np.complex128)
    quad = -0.5 * np.einsum("qi,ij,qj->q", u, np.asarray(cov), u)
    expo = np.asarray(log_w)[None, :] - 1j * (u @ np.asarray(means).T) + quad[:, None]
    shift = np.max(expo.real, axis=1, keepdims=True)
    shift[~np.isfinite(shift)] = 0.0
    vals = np.exp(expo - shift)
    return np.exp(shift[:, 0]) * vals.sum(axis=1)
