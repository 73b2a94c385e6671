"""Rank reduction of single-mode states and the Fock-basis bridge.

A heralded single-mode state from a lossless Gaussian-plus-photon-counting
circuit is a displaced squeezed superposition of at most ``r = sum(n_i)``
photons, so its Gaussian combination can be compressed to ``(r+1)^2`` terms:
strip the Gaussian envelope with a Williamson decomposition, read the core
amplitudes out of the Fock representation, and rebuild them on a coherent
ring. Mixed states go through the same bridge with a thermal-noise split and
a Chebyshev photon-number cutoff.
"""

import numpy as np

from ._backend import sumexp_complex
from .characterize import photon_moments
from .errors import (
    InvalidArgumentError,
    NumericalStabilityError,
    ReductionFailedError,
)
from .povm import (
    DEFAULT_RING_RADII,
    _ring_log_coefficients,
    ring_radius_for_amplitudes,
)
from .state import LcogState, coherent_outer_product
from .symplectic import HBAR, williamson

#: thermal excess below which the pure-state path is taken
PURE_TOL = 1e-9

#: relative amplitude below which trailing Fock coefficients are dropped
TRIM_TOL = 1e-7


def gaussian_to_coherent_outer(mu):
    """Invert a vacuum-covariance Gaussian term into ``|alpha><beta|`` data.

    ``mu`` is the complex 2-vector mean (hbar = 2); returns ``(alpha, beta,
    d)`` such that the term equals ``exp(d) W_{|alpha><beta|}``. The
    conjugate mean maps to the swapped pair with conjugated prefactor.
    """
    mu = np.asarray(mu, dtype=np.complex128)
    nu_x, nu_p = mu[0].real, mu[1].real
    om_x, om_p = mu[0].imag, mu[1].imag
    alpha = 0.5 * (nu_x - om_p + 1j * (nu_p + om_x))
    beta = 0.5 * (nu_x + om_p + 1j * (nu_p - om_x))
    d = -0.5 * om_x**2 - 0.5 * om_p**2 + 0.5j * (nu_p * om_p + nu_x * om_x)
    return alpha, beta, d


#: wide accumulator for the Fock bridge; falls back to float64 complex where
#: the platform offers no extended long double
_WIDE = np.complex256 if hasattr(np, "complex256") else np.complex128


def coherent_to_fock(log_coeffs, alphas, betas, cutoff: int) -> np.ndarray:
    """Fock matrix of ``sum_j exp(log_coeffs[j]) |alpha_j><beta_j|``.

    Row/column amplitudes are accumulated by stable cumulative products
    (``alpha^m / sqrt(m!)``), so moderate cutoffs never overflow. The sums
    run in extended precision when available: the inversion of small-radius
    ring decompositions cancels many orders of magnitude, and the extra
    digits directly extend the usable conditioning range.
    """
    if cutoff < 0:
        raise InvalidArgumentError("cutoff must be non-negative")
    if cutoff > 300:
        raise InvalidArgumentError("cutoff too large for the factorial ladder")
    log_coeffs = np.asarray(log_coeffs, dtype=np.complex128).astype(_WIDE)
    alphas = np.asarray(alphas, dtype=np.complex128).astype(_WIDE)
    betas = np.asarray(betas, dtype=np.complex128).astype(_WIDE)
    scale = log_coeffs - 0.5 * np.abs(alphas) ** 2 - 0.5 * np.abs(betas) ** 2
    c = np.exp(scale)
    n_j = alphas.size
    v = np.empty((cutoff + 1, n_j), dtype=_WIDE)
    w = np.empty((cutoff + 1, n_j), dtype=_WIDE)
    v[0] = 1.0
    w[0] = 1.0
    for m in range(1, cutoff + 1):
        v[m] = v[m - 1] * alphas / np.sqrt(np.longdouble(m))
        w[m] = w[m - 1] * np.conj(betas) / np.sqrt(np.longdouble(m))
    # rho_mn = sum_j c_j v[m, j] w[n, j]; build the lower triangle and mirror
    rho = np.empty((cutoff + 1, cutoff + 1), dtype=_WIDE)
    cw = c[None, :] * w
    for m in range(cutoff + 1):
        rho[m, : m + 1] = cw[: m + 1] @ v[m]
    idx_u = np.triu_indices(cutoff + 1, k=1)
    rho[idx_u] = np.conj(rho.T[idx_u])
    return rho.astype(np.complex128)


def _core_outer_data(state: LcogState):
    """Coherent outer-product data of a vacuum-covariance full-form state."""
    log_c = np.empty(state.num_weights, dtype=np.complex128)
    alphas = np.empty(state.num_weights, dtype=np.complex128)
    betas = np.empty(state.num_weights, dtype=np.complex128)
    for j in range(state.num_weights):
        a, b, d = gaussian_to_coherent_outer(state.means[j])
        alphas[j], betas[j] = a, b
        log_c[j] = state.log_weights[j] - d
    # a global scale cancels against the final renormalization
    log_c -= np.max(log_c.real)
    return log_c, alphas, betas


def _ring_state_from_matrix(coeff: np.ndarray, eps: float, reduced: bool) -> LcogState:
    """State from a Hermitian matrix of ring-amplitude outer products."""
    n_amp = coeff.shape[0]
    ring = eps * np.exp(2j * np.pi * np.arange(n_amp) / n_amp)
    if reduced:
        pairs = [(k, k) for k in range(n_amp)] + [
            (k, l) for k in range(n_amp) for l in range(k + 1, n_amp)
        ]
        num_k = n_amp
    else:
        pairs = [(k, l) for k in range(n_amp) for l in range(n_amp)]
        num_k = n_amp * n_amp
    log_w = np.empty(len(pairs), dtype=np.complex128)
    means = np.empty((len(pairs), 2), dtype=np.complex128)
    with np.errstate(divide="ignore"):
        log_coeff = np.log(coeff)
    for i, (k, l) in enumerate(pairs):
        mu, d = coherent_outer_product(ring[k], ring[l])
        w = log_coeff[k, l] + d
        if reduced and k != l:
            w += np.log(2.0)
        log_w[i] = w
        means[i] = mu
    cov = (0.5 * HBAR) * np.eye(2, dtype=np.complex128)
    return LcogState(1, log_w, means, cov[None], num_k=num_k)


def _pick_pivot(rho_diag: np.ndarray):
    order = np.argsort(-np.abs(rho_diag))
    top = np.abs(rho_diag[order[0]])
    if top == 0:
        raise ReductionFailedError("all Fock diagonal pivots vanish")
    return [int(i) for i in order if np.abs(rho_diag[i]) > 1e-12 * top]


def rank_reduce(
    state: LcogState,
    eps_out: float | None = None,
    k_std: float = 6.0,
    rank: int | None = None,
) -> LcogState:
    """Re-express a single-mode state with the minimal number of Gaussians.

    The shared covariance is Williamson-decomposed; the symplectic part is
    undone, the core is converted to the Fock basis, truncated, and rebuilt
    on a coherent ring of radius ``eps_out`` before the envelope is
    restored. Pure cores read their amplitudes from one pivot column; mixed
    cores (thermal excess present) convert the full truncated matrix with
    the cutoff ``ceil(mean + k_std * sqrt(var))`` from the photon moments.

    ``rank`` pins the pure-path stellar rank when the caller knows it (for
    a lossless circuit it is the sum of the heralded photon numbers).

    Raises:
        ReductionFailedError: when no usable Fock pivot exists; the input is
            left unchanged.
    """
    if state.num_modes != 1:
        raise InvalidArgumentError("rank reduction handles single-mode states")
    if not state.shared_cov:
        raise InvalidArgumentError("rank reduction expects a shared covariance")
    if k_std < 1.0:
        raise InvalidArgumentError("k_std must be at least 1")
    if eps_out is not None and eps_out <= 0:
        raise InvalidArgumentError("output ring radius must be positive")
    was_reduced = state.is_reduced
    full = state.to_full_form().normalized()

    cov = full.covs[0]
    if np.max(np.abs(cov.imag)) > 1e-9 * max(1.0, np.max(np.abs(cov.real))):
        raise InvalidArgumentError("shared covariance must be real for reduction")
    dec = williamson(cov.real)
    s_inv = np.linalg.inv(dec.S)
    nu = dec.nu
    pure = float(np.max(nu)) <= PURE_TOL

    core = full.apply_symplectic(s_inv)
    if not pure:
        # drop the thermal excess; the remaining envelope is vacuum
        core = LcogState(
            1,
            core.log_weights,
            core.means,
            (0.5 * HBAR) * np.eye(2, dtype=np.complex128)[None],
            num_k=core.num_k,
        )
    log_c, alphas, betas = _core_outer_data(core)

    mean_n, var_n = photon_moments(core)
    var_n = max(var_n, 0.0)
    cutoff = int(np.ceil(max(mean_n, 0.0) + k_std * np.sqrt(var_n))) + 1
    if rank is not None:
        cutoff = max(cutoff, int(rank))
    cutoff = max(cutoff, 1)
    rho = coherent_to_fock(log_c, alphas, betas, cutoff)

    if pure:
        # a clean thermal split does not guarantee a rank-one core (a lossy
        # cat keeps the vacuum covariance); verify before taking the fast path
        tr = np.trace(rho)
        if abs(tr) > 0:
            top = rho[:, int(np.argmax(np.abs(np.diag(rho))))]
            denom = np.vdot(top, top)
            if abs(denom) > 0:
                resid = rho - np.outer(top, np.conj(top)) / denom * tr
                pure = np.linalg.norm(resid) <= 1e-4 * np.linalg.norm(rho)

    if pure:
        amps = None
        for pivot in _pick_pivot(np.diag(rho)):
            col = rho[:, pivot]
            if np.abs(col[pivot]) == 0:
                continue
            amps = col / np.linalg.norm(col)
            break
        if amps is None:
            raise ReductionFailedError("no usable pivot column; input returned")
        if rank is not None:
            amps = amps[: rank + 1]
        else:
            mags = np.abs(amps)
            keep = np.flatnonzero(mags > TRIM_TOL * mags.max())
            if keep.size == 0:
                raise ReductionFailedError("core amplitudes vanished; input returned")
            amps = amps[: keep[-1] + 1]
        amps = amps / np.linalg.norm(amps)
        r_core = amps.size - 1
        eps = (
            eps_out
            if eps_out is not None
            else ring_radius_for_amplitudes(amps, DEFAULT_RING_RADII["target"])
        )
        log_ring = _ring_log_coefficients(amps, eps)
        ring_c = np.exp(log_ring)
        coeff = np.outer(ring_c, np.conj(ring_c))
        out = _ring_state_from_matrix(coeff, eps, was_reduced)
    else:
        rho = 0.5 * (rho + rho.conj().T)
        # the inverse ring transform amplifies Fock entries by sqrt(m!) / eps^m,
        # so entries below the summation noise floor must not reach it
        entry_eps = 10.0 * float(np.finfo(np.longdouble).eps) if _WIDE is not np.complex128 else 1e-15
        noise_abs = entry_eps * float(np.sum(np.exp(np.clip(log_c.real, None, 0.0))))
        diag = np.abs(np.diag(rho))
        floor = max(1e2 * noise_abs, 1e-12 * float(diag.max()))
        supported = np.flatnonzero(diag >= floor)
        if supported.size == 0:
            raise ReductionFailedError("Fock diagonal below noise floor; input returned")
        r_core = int(supported[-1])
        if rank is not None:
            r_core = min(r_core, int(rank))
        rho = rho[: r_core + 1, : r_core + 1].copy()
        rho[np.abs(rho) < 1e2 * noise_abs] = 0.0
        if eps_out is not None:
            eps = eps_out
        else:
            diag_t = np.abs(np.diag(rho))
            proxy = np.sqrt(diag_t / max(diag_t.sum(), 1e-300))
            eps = ring_radius_for_amplitudes(proxy, DEFAULT_RING_RADII["target"])
        ls = np.arange(r_core + 1)
        from scipy.special import gammaln

        mag = np.exp(0.5 * gammaln(ls + 1) - ls * np.log(eps))
        phase = np.exp(
            -2j * np.pi * np.outer(np.arange(r_core + 1), ls) / (r_core + 1)
        )
        t_mat = (phase * mag[None, :]) * (np.exp(0.5 * eps * eps) / (r_core + 1))
        coeff = t_mat @ rho @ t_mat.conj().T
        out = _ring_state_from_matrix(coeff, eps, was_reduced)
        out = LcogState(
            1,
            out.log_weights,
            out.means,
            out.covs + np.diag(nu)[None],
            num_k=out.num_k,
        )
    out = out.apply_symplectic(dec.S)
    try:
        out = out.normalized()
    except Exception as exc:
        raise NumericalStabilityError(
            "reduced state could not be normalized; try a larger eps_out"
        ) from exc
    return out
