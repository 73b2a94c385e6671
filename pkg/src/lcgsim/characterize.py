"""Figures of merit on Gaussian-combination states.

Overlap/fidelity, characteristic function, grid-state quality measures
(effective squeezing and nonlinear squeezing on the square and qunaught
lattices), Wigner grids and photon-number moments.

Grid conventions at ``hbar = 2``: the qunaught lattice has peak spacing
``sqrt(2 pi hbar)`` in both quadratures, so its stabilizer displacements
have coherent amplitude ``sqrt(pi)`` and the effective squeezing of vacuum
is exactly 0 dB.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import charfun_chunk, sumexp_complex
from .errors import InvalidArgumentError, NumericalStabilityError
from .state import LcogState
from .symplectic import HBAR, omega

#: coherent amplitude of the qunaught stabilizer displacement (|alpha|^2 = pi)
QUNAUGHT_STABILIZER_AMPLITUDE = float(np.sqrt(np.pi))

#: amplitude of the full grid displacement of the square logical lattice
SQUARE_LATTICE_AMPLITUDE = float(np.sqrt(2.0 * np.pi))


@lru_cache(maxsize=32)
def _omega_full(num_modes: int) -> np.ndarray:
    return omega(num_modes)


def _alpha_to_vec(alpha, num_modes: int) -> np.ndarray:
    """Complex displacement (scalar or per-mode) to a real 2N coordinate."""
    a = np.atleast_1d(np.asarray(alpha, dtype=np.complex128))
    if a.size != num_modes:
        raise InvalidArgumentError("need one complex displacement per mode")
    out = np.empty(2 * num_modes)
    out[0::2], out[1::2] = a.real, a.imag
    return out


def db_from_linear(value: float) -> float:
    """-10 log10 of a squeezing-type figure (variance ratio or cost)."""
    return float(-10.0 * np.log10(value))


def char_fun(state: LcogState, alpha) -> complex:
    """Characteristic function ``<D(alpha)>`` at one displacement.

    Reduced-form states are evaluated through the full representation
    (conjugate partners expanded explicitly).
    """
    return char_fun_points(state, [alpha])[0]


def char_fun_points(state: LcogState, alphas) -> np.ndarray:
    """Characteristic function at a batch of displacements."""
    full = state.to_full_form()
    n = full.num_modes
    vecs = np.stack([_alpha_to_vec(a, n) for a in alphas])
    u = vecs @ _omega_full(n)  # rows: Omega^T alpha
    if full.shared_cov:
        return np.asarray(
            charfun_chunk(
                u.astype(np.complex128), full.log_weights, full.means, full.covs[0]
            )
        )
    quad = -0.5 * np.einsum("qi,cij,qj->qc", u, full.covs, u)
    expo = full.log_weights[None, :] - 1j * (u @ full.means.T) + quad
    shift = np.max(expo.real, axis=1, keepdims=True)
    shift[~np.isfinite(shift)] = 0.0
    return np.exp(shift[:, 0]) * np.exp(expo - shift).sum(axis=1)


def _overlap_pair_terms(state: LcogState, omega_l, nu_l, d_l):
    """Log-terms of the overlap of every state term with one target Gaussian.

    Returns ``(f_k, minv_stack, diff)`` where ``f_k`` already contains the
    weights and normalization, ``minv_stack`` the per-term inverses of
    ``sigma_k + omega_l`` and ``diff = mu_k - nu_l``; shared-covariance
    states get a broadcast inverse stack.
    """
    n = state.num_modes
    diff = state.means - nu_l[None, :]
    m = state.covs + omega_l[None]
    minv = np.linalg.inv(m)
    sign, logabsdet = np.linalg.slogdet(m)
    log_det = np.log(sign.astype(np.complex128)) + logabsdet
    delta_l = n * np.log(HBAR) - 0.5 * log_det
    if state.shared_cov:
        quad = -0.5 * np.einsum("ki,ij,kj->k", diff, minv[0], diff)
        minv_stack = np.broadcast_to(minv[0], (state.num_weights,) + minv[0].shape)
        delta_vec = np.broadcast_to(delta_l, (state.num_weights,))
    else:
        quad = -0.5 * np.einsum("ki,kij,kj->k", diff, minv, diff)
        minv_stack = minv
        delta_vec = delta_l
    f_k = state.log_weights + d_l + quad + delta_vec
    return f_k, minv_stack, diff


def overlap(a: LcogState, b: LcogState) -> float:
    """Phase-space overlap ``Tr[rho_a rho_b]`` of two normalized states.

    Equals the quantum fidelity when one state is pure; the purity when the
    arguments coincide.
    """
    if a.num_modes != b.num_modes:
        raise InvalidArgumentError("states live on different mode counts")
    fa, fb = a.to_full_form(), b.to_full_form()
    parts = []
    for l in range(fb.num_weights):
        omega_l = fb.covs[0] if fb.shared_cov else fb.covs[l]
        f_k, _, _ = _overlap_pair_terms(fa, omega_l, fb.means[l], fb.log_weights[l])
        parts.append(f_k)
    all_terms = np.concatenate(parts)
    shift, total = sumexp_complex(all_terms)
    # the imaginary residue is judged against the term-magnitude scale, the
    # natural size of the cancellation noise
    abs_scale = float(np.sum(np.exp(all_terms.real - shift)))
    if abs(total.imag) > 1e-9 * abs_scale + 1e-12:
        raise NumericalStabilityError(
            f"overlap has imaginary residue {total.imag * np.exp(shift):.3g}"
        )
    return float(np.exp(shift) * total.real)


def purity(state: LcogState) -> float:
    return overlap(state, state)


def _stabilizer_alpha(direction: str, amplitude: float | None = None) -> complex:
    """Displacement probing peaks along ``direction`` (the dual quadrature).

    The effective squeezing in x uses the p-displacement stabilizer and vice
    versa.
    """
    amp = QUNAUGHT_STABILIZER_AMPLITUDE if amplitude is None else float(amplitude)
    if direction == "x":
        return 1j * amp
    if direction == "p":
        return amp + 0.0j
    raise InvalidArgumentError("direction must be 'x' or 'p'")


def effective_squeezing(
    state: LcogState, direction: str, amplitude: float | None = None
):
    """Grid-quality measure from the stabilizer expectation value.

    Returns ``(delta, delta_db)`` with
    ``delta = sqrt(-2 ln|chi(alpha_q)| / |alpha_q|^2)``; vacuum gives
    exactly (1, 0 dB). ``amplitude`` overrides the qunaught-lattice
    stabilizer amplitude ``sqrt(pi)``.
    """
    if state.num_modes != 1:
        raise InvalidArgumentError("effective squeezing is a single-mode measure")
    alpha = _stabilizer_alpha(direction, amplitude)
    chi = char_fun(state, alpha)
    mag = abs(chi)
    if mag == 0.0:
        raise InvalidArgumentError("stabilizer expectation vanishes; delta undefined")
    if mag > 1.0 + 1e-9:
        raise NumericalStabilityError(f"|chi| = {mag} exceeds 1")
    log_mag = min(np.log(mag), 0.0)
    delta_sq = -2.0 * log_mag / abs(alpha) ** 2
    delta = float(np.sqrt(delta_sq))
    if delta_sq == 0.0:
        return 0.0, float("inf")
    return delta, db_from_linear(delta_sq)


def symmetric_effective_squeezing_db(delta_x: float, delta_p: float) -> float:
    """dB value of ``Delta_s^2 = (Delta_x^2 + Delta_p^2) / 2``."""
    return db_from_linear(0.5 * (delta_x**2 + delta_p**2))


@dataclass(frozen=True)
class GkpOperatorSpec:
    """Displacement set of the nonlinear-squeezing operator.

    ``lattice`` is ``"square"`` (logical qubit grid) or ``"qunaught"``
    (symmetric one-dimensional code); ``logical_j`` selects the signs of the
    half-grid terms.
    """

    lattice: str = "qunaught"
    logical_j: int = 0

    def displacements(self):
        """(coefficient, alpha) pairs; the identity contributes 4 separately."""
        if self.lattice == "square":
            full, half = SQUARE_LATTICE_AMPLITUDE, SQUARE_LATTICE_AMPLITUDE / 2.0
        elif self.lattice == "qunaught":
            full = half = SQUARE_LATTICE_AMPLITUDE / np.sqrt(2.0)
        else:
            raise InvalidArgumentError("lattice must be 'square' or 'qunaught'")
        sign = (-1.0) ** (self.logical_j % 2)
        return [
            (1.0, full + 0.0j),
            (1.0, -full + 0.0j),
            (sign, 1j * half),
            (sign, -1j * half),
        ]


def gkp_nonlinear_squeezing(state: LcogState, spec: GkpOperatorSpec | None = None):
    """Expectation-based nonlinear squeezing ``xi = <Q>/2``.

    Returns ``(xi, xi_db)``; smaller xi (larger dB) means closer to the
    target grid state.
    """
    if state.num_modes != 1:
        raise InvalidArgumentError("nonlinear squeezing is a single-mode measure")
    spec = spec or GkpOperatorSpec()
    terms = spec.displacements()
    chis = char_fun_points(state, [a for _, a in terms])
    total = 4.0 - sum(c * chi for (c, _), chi in zip(terms, chis))
    if abs(total.imag) > 1e-6 * max(1.0, abs(total.real)):
        raise NumericalStabilityError("nonlinear squeezing has imaginary residue")
    xi = 0.5 * float(total.real)
    return xi, db_from_linear(xi)


def wigner_grid(state: LcogState, points) -> np.ndarray:
    """Wigner function values at a batch of phase-space points."""
    return state.wigner(points)


def photon_moments(state: LcogState):
    """Weighted photon-number mean and variance of a single-mode state.

    Per-Gaussian moments are combined with the state weights. For
    coherent-ring Fock approximations the variance reports the Poisson-like
    value of the underlying coherent states (about the mean photon number),
    so treat it as an estimate rather than the exact number variance.
    """
    if state.num_modes != 1:
        raise InvalidArgumentError("photon moments are single-mode measures")
    w = np.exp(state.log_weights)
    covs = state.covs if not state.shared_cov else np.broadcast_to(
        state.covs, (state.num_weights,) + state.covs.shape[1:]
    )
    tr = covs[:, 0, 0] + covs[:, 1, 1]
    det = covs[:, 0, 0] * covs[:, 1, 1] - covs[:, 0, 1] * covs[:, 1, 0]
    musq = np.einsum("wi,wi->w", state.means, state.means)
    mean_terms = (tr + musq - HBAR) / (2.0 * HBAR)
    mu_sig_mu = np.einsum("wi,wij,wj->w", state.means, covs, state.means)
    var_terms = (tr * tr - 2.0 * det + 2.0 * mu_sig_mu - 0.5 * HBAR * HBAR) / (
        2.0 * HBAR * HBAR
    )
    mean = np.sum(w * mean_terms)
    var = np.sum(w * var_terms)
    return float(mean.real), float(var.real)
