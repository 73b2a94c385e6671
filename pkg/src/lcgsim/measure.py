"""Partial-measurement engine: POVM post-selection and homodyne conditioning.

Measurements are per-mode sequential: one detector collapses one mode at a
time, multiplying the Gaussian-term count of the state by the term count of
the element. Probabilities live in the log domain throughout and are only
materialized at the API boundary.

Outcome units: photon-counting elements yield probabilities; generaldyne
elements yield densities per ``d^2 m`` over the outcome displacement
``m = sqrt(2 hbar)(Re alpha, Im alpha)``; homodyne yields a density per unit
of the measured quadrature.
"""

import logging

import numpy as np

from ._backend import pair_expand_shared, sumexp_complex
from .errors import (
    DegenerateStateError,
    InvalidArgumentError,
    NumericalStabilityError,
)
from .gradients import GradientTape
from .povm import Povm, click_povm, fock_coherent_povm, fock_thermal_povm, ppnrd_povm
from .state import LcogState
from .symplectic import HBAR, rotation_symplectic

logger = logging.getLogger(__name__)

_LOG2 = np.log(2.0)
_LOG_2PI_HBAR = np.log(2.0 * np.pi * HBAR)

#: negative shifted-probability magnitudes above this raise instead of clamping
STABILITY_REL_TOL = 1e-12


def _mode_indices(num_modes: int, mode: int):
    if not 0 <= mode < num_modes:
        raise InvalidArgumentError(f"mode {mode} out of range for {num_modes} modes")
    b_idx = np.array([2 * mode, 2 * mode + 1])
    a_idx = np.array(
        [i for i in range(2 * num_modes) if i not in (2 * mode, 2 * mode + 1)],
        dtype=int,
    )
    return a_idx, b_idx


def _inv2(mats: np.ndarray):
    """Batched explicit 2x2 inverse; raises on singular blocks."""
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    inv = np.empty_like(mats)
    inv[..., 0, 0] = mats[..., 1, 1]
    inv[..., 1, 1] = mats[..., 0, 0]
    inv[..., 0, 1] = -mats[..., 0, 1]
    inv[..., 1, 0] = -mats[..., 1, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = inv / det[..., None, None]
    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(det) | (det == 0))
        raise NumericalStabilityError(
            f"singular measured-block matrix (sigma_B + omega) at term {bad[:1]}"
        )
    return out, det


def _log_det_norm(det):
    # log(hbar / sqrt(det M)): the Gaussian-pair prefactor including the
    # (2 pi hbar) trace factor for a single measured mode
    return np.log(HBAR) - 0.5 * np.log(det.astype(np.complex128))


class _Sector:
    """A slice of Gaussian terms entering one pairwise product."""

    def __init__(self, log_w, means, covs, conj=False, extra=0.0):
        if conj:
            log_w, means, covs = np.conj(log_w), np.conj(means), np.conj(covs)
        self.log_w = log_w + extra
        self.means = means
        self.covs = covs  # (1, d, d) shared or (n, d, d) per-term

    @property
    def size(self):
        return self.log_w.shape[0]

    @property
    def shared(self):
        return self.covs.shape[0] == 1


def _state_sector(state, sl, conj=False, extra=0.0):
    covs = state.covs if state.shared_cov else state.covs[sl]
    return _Sector(state.log_weights[sl], state.means[sl], covs, conj, extra)


def _povm_sector(povm, sl, conj=False, extra=0.0):
    covs = povm.covs if povm.shared_cov else povm.covs[sl]
    return _Sector(povm.log_weights[sl], povm.means[sl], covs, conj, extra)


def _expand_product(st: _Sector, pv: _Sector, a_idx, b_idx):
    """Gaussian contraction of every (state term, POVM term) pair.

    Returns ``(log_w, means, covs, shared_out)`` in state-major order; covs
    has leading dimension 1 when one output covariance serves all pairs.
    """
    n_w, n_p = st.size, pv.size
    d_a = len(a_idx)
    if n_w == 0 or n_p == 0:
        return (
            np.empty(0, np.complex128),
            np.empty((0, d_a), np.complex128),
            np.empty((0, d_a, d_a), np.complex128),
            True,
        )
    mu_a = st.means[:, a_idx]
    mu_b = st.means[:, b_idx]
    sig_a = st.covs[:, a_idx[:, None], a_idx[None, :]]
    sig_ab = st.covs[:, a_idx[:, None], b_idx[None, :]]
    sig_b = st.covs[:, b_idx[:, None], b_idx[None, :]]

    if st.shared and pv.shared:
        m = sig_b[0] + pv.covs[0]
        minv, det = _inv2(m)
        kmat = sig_ab[0] @ minv
        log_d = pv.log_w + _log_det_norm(np.asarray(det))
        out_w, out_mu = pair_expand_shared(
            st.log_w, mu_a, mu_b, log_d, pv.means, minv, kmat
        )
        out_cov = (sig_a[0] - kmat @ sig_ab[0].swapaxes(-1, -2))[None]
        return out_w, out_mu, out_cov, True

    out_w = np.empty((n_w, n_p), np.complex128)
    out_mu = np.empty((n_w, n_p, d_a), np.complex128)
    out_cov = np.empty((n_w, n_p, d_a, d_a), np.complex128)
    for n in range(n_p):
        omega_n = pv.covs[0] if pv.shared else pv.covs[n]
        m = sig_b + omega_n[None]
        minv, det = _inv2(m)
        delta = pv.means[n][None, :] - mu_b  # (n_w, 2)
        if st.shared:
            kmat = sig_ab[0] @ minv[0]
            quad = -0.5 * np.einsum("wi,ij,wj->w", delta, minv[0], delta)
            out_mu[:, n] = mu_a + delta @ kmat.T
            out_cov[:, n] = sig_a[0] - kmat @ sig_ab[0].swapaxes(-1, -2)
            out_w[:, n] = st.log_w + pv.log_w[n] + quad + _log_det_norm(det)[0]
        else:
            kmat = np.einsum("wij,wjk->wik", sig_ab, minv)
            quad = -0.5 * np.einsum("wi,wij,wj->w", delta, minv, delta)
            out_mu[:, n] = mu_a + np.einsum("wij,wj->wi", kmat, delta)
            out_cov[:, n] = sig_a - np.einsum("wik,wjk->wij", kmat, sig_ab)
            out_w[:, n] = st.log_w + pv.log_w[n] + quad + _log_det_norm(det)
    return (
        out_w.reshape(-1),
        out_mu.reshape(-1, d_a),
        out_cov.reshape(-1, d_a, d_a),
        False,
    )


def _trace_product(st: _Sector, id_log_w, a_idx):
    """Partial trace of sector terms against an identity POVM component."""
    covs = st.covs[:, a_idx[:, None], a_idx[None, :]]
    return st.log_w + id_log_w, st.means[:, a_idx], covs, st.shared


def _finalize_probability(parts_w, reduced: bool):
    """(shift, shifted real probability) of combined output weights."""
    all_w = parts_w[0] if len(parts_w) == 1 else np.concatenate(parts_w)
    shift, total = sumexp_complex(all_w)
    if not np.isfinite(shift):
        raise DegenerateStateError("all measurement weights vanished")
    if not reduced:
        # cancellation noise scales with the term magnitudes, not the result
        scale = float(np.sum(np.exp(np.clip(all_w.real - shift, -745.0, 0.0))))
        if abs(total.imag) > 1e-9 * scale + 1e-12:
            raise NumericalStabilityError(
                f"measurement probability has imaginary residue {total.imag:.3g}"
            )
    return shift, total.real


def _check_probability(p_re):
    # p_re is in shifted units: the largest weight contributes magnitude 1
    if p_re < -STABILITY_REL_TOL:
        raise NumericalStabilityError(
            f"negative probability ({p_re:.3g} relative to the leading term); "
            "the simulation hit the floating-point noise floor"
        )
    if p_re <= STABILITY_REL_TOL:
        logger.warning("measurement probability clamped to zero")
        raise DegenerateStateError("outcome has vanishing probability")


def post_select(state: LcogState, mode: int, povm: Povm):
    """Project ``mode`` onto a measurement element and renormalize.

    Returns ``(heralded_state, log_outcome)``: the heralded state spans the
    remaining modes (``None`` when the last mode was measured) and
    ``log_outcome`` is the log-probability, or the log-density per ``d^2 m``
    for generaldyne elements.

    Reduced-form inputs are processed sector by sector (real, complex and
    conjugated-complex cross products); the output is reduced whenever either
    input was.

    Raises:
        NumericalStabilityError: on singular Gaussian pairs or when the
            probability comes out negative beyond rounding noise.
        DegenerateStateError: when the outcome probability vanishes.
    """
    if state.tape is not None:
        return _post_select_full_tape(state, mode, povm.to_full_form())
    a_idx, b_idx = _mode_indices(state.num_modes, mode)

    k1, n1 = state.num_k, povm.num_k
    s_real, s_cplx = slice(0, k1), slice(k1, state.num_weights)
    p_real, p_cplx = slice(0, n1), slice(n1, povm.num_terms)
    has_id = povm.identity_log_weight is not None

    products = [
        _expand_product(
            _state_sector(state, s_real), _povm_sector(povm, p_real), a_idx, b_idx
        )
    ]
    if has_id:
        products.append(
            _trace_product(_state_sector(state, s_real), povm.identity_log_weight, a_idx)
        )
    real_count = sum(p[0].size for p in products)
    if has_id and k1 < state.num_weights:
        products.append(
            _trace_product(_state_sector(state, s_cplx), povm.identity_log_weight, a_idx)
        )
    products.append(
        _expand_product(
            _state_sector(state, s_real), _povm_sector(povm, p_cplx), a_idx, b_idx
        )
    )
    products.append(
        _expand_product(
            _state_sector(state, s_cplx), _povm_sector(povm, p_real), a_idx, b_idx
        )
    )
    products.append(
        _expand_product(
            _state_sector(state, s_cplx),
            _povm_sector(povm, p_cplx, extra=-_LOG2),
            a_idx,
            b_idx,
        )
    )
    products.append(
        _expand_product(
            _state_sector(state, s_cplx),
            _povm_sector(povm, p_cplx, conj=True, extra=-_LOG2),
            a_idx,
            b_idx,
        )
    )

    reduced = state.is_reduced or povm.is_reduced
    parts_w = [p[0] for p in products if p[0].size]
    shift, p_re = _finalize_probability(parts_w, reduced)
    _check_probability(p_re)
    log_p = shift + np.log(p_re)
    log_outcome = log_p - _LOG_2PI_HBAR if povm.outcome_measure == "density" else log_p

    if state.num_modes == 1:
        return None, float(log_outcome)

    nonempty = [p for p in products if p[0].size]
    log_w = np.concatenate([p[0] for p in nonempty]) - log_p
    means = np.concatenate([p[1] for p in nonempty])
    if len(nonempty) == 1 and nonempty[0][3]:
        covs = nonempty[0][2]
    else:
        covs = np.concatenate(
            [
                np.broadcast_to(c, (w.size,) + c.shape[1:]) if c.shape[0] == 1 else c
                for w, _, c, _ in nonempty
            ]
        )
    out = LcogState(
        state.num_modes - 1,
        log_w,
        means,
        covs,
        num_k=real_count if reduced else log_w.size,
    )
    return out, float(log_outcome)


def _post_select_full_tape(state: LcogState, mode: int, povm: Povm):
    """Full-form post-selection with forward-mode gradient propagation.

    Requires a shared state covariance (true for every photon-counting
    pipeline built from Gaussian circuits on vacuum).
    """
    if state.is_reduced:
        raise InvalidArgumentError("gradient pipelines run on full-form states")
    if not state.shared_cov:
        raise InvalidArgumentError(
            "gradient post-selection expects a shared state covariance"
        )
    a_idx, b_idx = _mode_indices(state.num_modes, mode)
    tape = state.tape
    n_g, n_w, n_p = tape.num_params, state.num_weights, povm.num_terms
    has_id = povm.identity_log_weight is not None
    d_a = len(a_idx)
    cols = n_p + (1 if has_id else 0)

    mu_a, mu_b = state.means[:, a_idx], state.means[:, b_idx]
    sig_a = state.covs[0][a_idx[:, None], a_idx[None, :]]
    sig_ab = state.covs[0][a_idx[:, None], b_idx[None, :]]
    sig_b = state.covs[0][b_idx[:, None], b_idx[None, :]]
    pm_a, pm_b = tape.partial_means[..., a_idx], tape.partial_means[..., b_idx]
    pc_a = tape.partial_covs[:, 0][:, a_idx[:, None], a_idx[None, :]]
    pc_ab = tape.partial_covs[:, 0][:, a_idx[:, None], b_idx[None, :]]
    pc_b = tape.partial_covs[:, 0][:, b_idx[:, None], b_idx[None, :]]

    out_w = np.empty((n_w, cols), np.complex128)
    out_mu = np.empty((n_w, cols, d_a), np.complex128)
    cov_cols = np.empty((cols, d_a, d_a), np.complex128)
    t_w = np.empty((n_g, n_w, cols), np.complex128)
    t_mu = np.empty((n_g, n_w, cols, d_a), np.complex128)
    t_cov_cols = np.empty((n_g, cols, d_a, d_a), np.complex128)

    for n in range(n_p):
        omega_n = povm.covs[0] if povm.shared_cov else povm.covs[n]
        minv, det = _inv2(sig_b + omega_n)
        nu = povm.means[n]
        delta = nu[None, :] - mu_b  # (n_w, 2)
        q = delta @ minv.T  # Minv symmetric, but keep the transpose explicit
        kmat = sig_ab @ minv
        quad = -0.5 * np.einsum("wi,wi->w", delta, q)
        out_w[:, n] = (
            state.log_weights + povm.log_weights[n] + quad + _log_det_norm(det)
        )
        out_mu[:, n] = mu_a + q @ sig_ab.T
        cov_cols[n] = sig_a - kmat @ sig_ab.T

        # d(gamma) = dmu_B . q + 0.5 q^T dsig_B q - 0.5 tr(Minv dsig_B)
        dgam = (
            np.einsum("gwi,wi->gw", pm_b, q)
            + 0.5 * np.einsum("wi,gij,wj->gw", q, pc_b, q)
            - 0.5 * np.einsum("ij,gji->g", minv, pc_b)[:, None]
        )
        t_w[:, :, n] = tape.partial_log_weights + dgam
        # d(mu') = dmu_A + dsig_AB q - K dsig_B q - K dmu_B
        t_mu[:, :, n] = (
            pm_a
            + np.einsum("gij,wj->gwi", pc_ab, q)
            - np.einsum("ik,gkl,wl->gwi", kmat, pc_b, q)
            - np.einsum("ik,gwk->gwi", kmat, pm_b)
        )
        # d(sigma') = dsig_A - dsig_AB K^T + K dsig_B K^T - K dsig_BA
        t_cov_cols[:, n] = (
            pc_a
            - np.einsum("gij,kj->gik", pc_ab, kmat)
            + np.einsum("ik,gkl,ml->gim", kmat, pc_b, kmat)
            - np.einsum("ik,gjk->gij", kmat, pc_ab)
        )

    if has_id:
        out_w[:, n_p] = state.log_weights + povm.identity_log_weight
        out_mu[:, n_p] = mu_a
        cov_cols[n_p] = sig_a
        t_w[:, :, n_p] = tape.partial_log_weights
        t_mu[:, :, n_p] = pm_a
        t_cov_cols[:, n_p] = pc_a

    flat_w = out_w.reshape(-1)
    shift, p_re = _finalize_probability([flat_w], reduced=False)
    _check_probability(p_re)
    log_p = shift + np.log(p_re)
    log_outcome = log_p - _LOG_2PI_HBAR if povm.outcome_measure == "density" else log_p

    new_w = flat_w - log_p
    t_w = t_w.reshape(n_g, -1)
    d_log_p = np.einsum("w,gw->g", np.exp(new_w), t_w)
    t_w = t_w - d_log_p[:, None]
    log_prob_grad = tape.log_prob_grad + d_log_p

    if state.num_modes == 1:
        return None, float(log_outcome)

    if povm.shared_cov and not has_id:
        # one distinct POVM covariance means one shared output covariance
        covs, t_covs = cov_cols[:1].copy(), t_cov_cols[:, :1].copy()
    else:
        covs = np.broadcast_to(
            cov_cols[None], (n_w, cols, d_a, d_a)
        ).reshape(-1, d_a, d_a)
        t_covs = np.broadcast_to(
            t_cov_cols[:, None], (n_g, n_w, cols, d_a, d_a)
        ).reshape(n_g, -1, d_a, d_a)
    out = LcogState(
        state.num_modes - 1,
        new_w,
        out_mu.reshape(-1, d_a),
        covs,
        num_k=n_w * cols,
        tape=GradientTape(t_w, t_mu.reshape(n_g, -1, d_a), t_covs, log_prob_grad),
    )
    return out, float(log_outcome)


def outcome_probability(state: LcogState, mode: int, povm: Povm) -> float:
    """Probability (or outcome density) without keeping the heralded state.

    Unlike :func:`post_select`, a vanishing probability returns 0.0 instead
    of raising, which makes completeness sums over outcomes convenient.
    """
    try:
        _, log_p = post_select(state.with_tape(None), mode, povm)[:2]
    except DegenerateStateError:
        return 0.0
    return float(np.exp(log_p))


def post_select_homodyne(state: LcogState, mode: int, quadrature, value: float):
    """Condition on a homodyne outcome; returns ``(state, log_density)``.

    ``quadrature`` is ``"x"``, ``"p"`` or a float angle phi measuring
    ``cos(phi) x + sin(phi) p``, implemented by rotating the mode by ``-phi``
    and measuring x. The density is per unit outcome value.
    """
    if isinstance(quadrature, str):
        if quadrature not in ("x", "p"):
            raise InvalidArgumentError("quadrature must be 'x', 'p' or an angle")
        sel = 0 if quadrature == "x" else 1
    else:
        state = state.apply_symplectic(rotation_symplectic(-float(quadrature)), modes=mode)
        sel = 0
    a_idx, b_idx = _mode_indices(state.num_modes, mode)
    sel_idx = int(b_idx[sel])

    covs = state.covs
    var = covs[:, sel_idx, sel_idx]  # (n_c,)
    if np.any(np.abs(var) < 1e-14):
        raise DegenerateStateError("zero conditional variance in homodyne update")
    mu_sel = state.means[:, sel_idx]  # (n_w,)
    resid = value - mu_sel
    var_w = np.broadcast_to(var, (state.num_weights,)) if covs.shape[0] == 1 else var
    gamma = -0.5 * resid * resid / var_w - 0.5 * np.log(
        2.0 * np.pi * var_w.astype(np.complex128)
    )
    new_w = state.log_weights + gamma

    shift, p_re = _finalize_probability([new_w], state.is_reduced)
    _check_probability(p_re)
    log_density = float(shift + np.log(p_re))

    if state.num_modes == 1:
        return None, log_density

    cross = covs[:, a_idx, sel_idx]  # (n_c, dA)
    gain = cross / var[:, None]
    means = state.means[:, a_idx] + (
        np.broadcast_to(gain, (state.num_weights, len(a_idx)))
        if covs.shape[0] == 1
        else gain
    ) * resid[:, None]
    new_covs = covs[:, a_idx[:, None], a_idx[None, :]] - np.einsum(
        "ci,cj->cij", gain, cross
    )
    out_tape = None
    if state.tape is not None:
        out_tape = _homodyne_tape(state, a_idx, sel_idx, resid, var, gain, new_w, log_density)
    out = LcogState(
        state.num_modes - 1,
        new_w - log_density,
        means,
        new_covs,
        num_k=state.num_k if state.is_reduced else state.num_weights,
        tape=out_tape,
    )
    return out, log_density


def _homodyne_tape(state, a_idx, sel_idx, resid, var, gain, new_w, log_density):
    """Scalar-conditioning analogue of the matrix tape update."""
    if state.is_reduced or not state.shared_cov:
        raise InvalidArgumentError(
            "gradient homodyne expects a full-form shared-covariance state"
        )
    tape = state.tape
    n_g = tape.num_params
    v = var[0]
    g_vec = gain[0]  # (dA,)
    q = resid / v  # (n_w,)
    pm_a = tape.partial_means[..., a_idx]
    pm_s = tape.partial_means[..., sel_idx]  # (n_g, n_w)
    pc = tape.partial_covs[:, 0]
    pc_aa = pc[:, a_idx[:, None], a_idx[None, :]]
    pc_as = pc[:, a_idx, sel_idx]  # (n_g, dA)
    pc_ss = pc[:, sel_idx, sel_idx]  # (n_g,)

    dgam = (
        pm_s * q[None, :]
        + 0.5 * pc_ss[:, None] * (q * q)[None, :]
        - 0.5 * (pc_ss / v)[:, None]
    )
    t_w = tape.partial_log_weights + dgam
    t_mu = (
        pm_a
        + pc_as[:, None, :] * q[None, :, None]
        - g_vec[None, None, :] * pm_s[:, :, None]
        - g_vec[None, None, :] * (pc_ss[:, None] * q[None, :])[:, :, None]
    )
    t_cov = (
        pc_aa
        - np.einsum("gi,j->gij", pc_as, g_vec)
        - np.einsum("i,gj->gij", g_vec, pc_as)
        + np.einsum("i,g,j->gij", g_vec, pc_ss, g_vec)
    )[:, None]
    norm_w = np.exp(new_w - log_density)
    d_log_p = np.einsum("w,gw->g", norm_w, t_w)
    t_w = t_w - d_log_p[:, None]
    return GradientTape(t_w, t_mu, t_cov, tape.log_prob_grad + d_log_p)


def herald_sequence(
    state: LcogState,
    pattern,
    detector: str = "pnrd_coherent",
    eps=None,
    fanout: int | None = None,
    r_thermal: float = 0.3,
    reduced: bool | None = None,
):
    """Post-select mode 0 repeatedly on a photon pattern.

    ``pattern`` has one entry per measured mode (length ``N - 1`` leaves a
    single-mode heralded state). Detector kinds: ``pnrd_coherent`` (ring
    decomposition, ``eps`` scalar or per-detector), ``pnrd_thermal``,
    ``ppnrd`` (requires ``fanout``) and ``click`` (entries 0 / nonzero).

    Returns ``(heralded_state, total_log_prob)``.
    """
    pattern = list(pattern)
    if len(pattern) > state.num_modes:
        raise InvalidArgumentError("pattern longer than the number of modes")
    if reduced is None:
        reduced = state.is_reduced
    if eps is None or np.isscalar(eps):
        eps_list = [eps] * len(pattern)
    else:
        eps_list = list(eps)
        if len(eps_list) != len(pattern):
            raise InvalidArgumentError("need one ring radius per detector")
    total = 0.0
    for n_i, eps_i in zip(pattern, eps_list):
        if detector == "pnrd_coherent":
            povm = fock_coherent_povm(int(n_i), eps_i, reduced=reduced)
        elif detector == "pnrd_thermal":
            povm = fock_thermal_povm(int(n_i), r_thermal)
        elif detector == "ppnrd":
            if fanout is None:
                raise InvalidArgumentError("ppnrd detector needs a fanout")
            povm = ppnrd_povm(int(n_i), fanout)
        elif detector == "click":
            povm = click_povm("click" if n_i else "no_click")
        else:
            raise InvalidArgumentError(f"unknown detector kind {detector!r}")
        state, log_p = post_select(state, 0, povm)[:2]
        total += log_p
    return state, float(total)
