"""Forward-mode parameter derivatives carried alongside a state.

A :class:`GradientTape` stores, for every circuit parameter, the partial
derivatives of the log-weights, means and covariance matrices of the host
state. Gaussian operations and measurements update the tape by the product
rule; figures of merit then contract it into parameter gradients. One tape
column per parameter, so the cost scales linearly in the parameter count.

Gradients flow through state parameters only: POVM constants (ring radii,
detector settings) are never differentiated. Tapes are carried on full-form
states; attaching one to a reduced state expands it first.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "GradientTape",
    "attach_gradients",
    "grad_log_prob",
    "grad_char_fun",
    "grad_overlap",
    "grad_effective_squeezing",
]


@dataclass(frozen=True)
class GradientTape:
    """Per-parameter partials of a state's log-weights, means and covariances.

    Shapes track the host state exactly: ``partial_log_weights`` is
    ``(n_g, n_w)``, ``partial_means`` is ``(n_g, n_w, 2N)`` and
    ``partial_covs`` is ``(n_g, n_c, 2N, 2N)`` where ``n_c`` mirrors the
    host's shared-covariance layout. ``log_prob_grad`` accumulates
    d(log p)/d(phi) over the measurements performed so far.
    """

    partial_log_weights: np.ndarray
    partial_means: np.ndarray
    partial_covs: np.ndarray
    log_prob_grad: np.ndarray

    @property
    def num_params(self) -> int:
        return self.partial_log_weights.shape[0]

    @property
    def shared_cov(self) -> bool:
        return self.partial_covs.shape[1] == 1

    def check_shapes(self, state) -> None:
        n_g = self.num_params
        ok = (
            self.partial_log_weights.shape == (n_g, state.num_weights)
            and self.partial_means.shape == (n_g,) + state.means.shape
            and self.partial_covs.shape == (n_g,) + state.covs.shape
        )
        if not ok:
            raise InvalidArgumentError("gradient tape out of sync with host state")

    @staticmethod
    def zeros(n_params: int, num_weights: int, dim: int, n_cov: int) -> "GradientTape":
        return GradientTape(
            np.zeros((n_params, num_weights), dtype=np.complex128),
            np.zeros((n_params, num_weights, dim), dtype=np.complex128),
            np.zeros((n_params, n_cov, dim, dim), dtype=np.complex128),
            np.zeros(n_params, dtype=np.complex128),
        )

    def apply_symplectic(self, s, means, covs, d_s=None, d_d=None) -> "GradientTape":
        """Product-rule update under ``mu -> S mu + d``, ``sigma -> S sigma S^T``.

        ``d_s``/``d_d`` hold the per-parameter derivatives of the applied gate
        (``None`` when the gate carries no tracked parameter).
        """
        pm = np.einsum("ij,gwj->gwi", s, self.partial_means)
        pc = np.einsum("ij,gcjk,lk->gcil", s, self.partial_covs, s)
        if d_s is not None:
            pm = pm + np.einsum("gij,wj->gwi", d_s, means)
            first = np.einsum("gij,cjk,lk->gcil", d_s, covs, s)
            pc = pc + first + np.swapaxes(first, -1, -2)
        if d_d is not None:
            pm = pm + np.asarray(d_d, dtype=np.complex128)[:, None, :]
        return GradientTape(self.partial_log_weights, pm, pc, self.log_prob_grad)

    def apply_channel_matrix(self, x) -> "GradientTape":
        """Update under a parameter-independent channel matrix ``X``."""
        pm = np.einsum("ij,gwj->gwi", x, self.partial_means)
        pc = np.einsum("ij,gcjk,lk->gcil", x, self.partial_covs, x)
        return GradientTape(self.partial_log_weights, pm, pc, self.log_prob_grad)

    def tensor(self, other: "GradientTape | None", n_w_b: int, dim_b: int):
        """Tape of a tensor product; a missing side counts as parameter-free."""
        n_g = self.num_params
        n_w_a = self.partial_log_weights.shape[1]
        dim_a = self.partial_means.shape[2]
        if other is None:
            other = GradientTape.zeros(n_g, n_w_b, dim_b, 1)
        if other.num_params != n_g:
            raise InvalidArgumentError("tapes track different parameter counts")
        plw = (
            self.partial_log_weights[:, :, None]
            + other.partial_log_weights[:, None, :]
        ).reshape(n_g, n_w_a * n_w_b)
        pm = np.zeros((n_g, n_w_a, n_w_b, dim_a + dim_b), dtype=np.complex128)
        pm[..., :dim_a] = self.partial_means[:, :, None, :]
        pm[..., dim_a:] = other.partial_means[:, None, :, :]
        pm = pm.reshape(n_g, n_w_a * n_w_b, dim_a + dim_b)
        if self.shared_cov and other.shared_cov:
            pc = np.zeros((n_g, 1, dim_a + dim_b, dim_a + dim_b), dtype=np.complex128)
            pc[:, :, :dim_a, :dim_a] = self.partial_covs
            pc[:, :, dim_a:, dim_a:] = other.partial_covs
        else:
            ca = self.partial_covs
            cb = other.partial_covs
            pc = np.zeros(
                (n_g, n_w_a, n_w_b, dim_a + dim_b, dim_a + dim_b), dtype=np.complex128
            )
            pc[..., :dim_a, :dim_a] = ca[:, :, None] if ca.shape[1] > 1 else ca[:, None]
            pc[..., dim_a:, dim_a:] = cb[:, None, :] if cb.shape[1] > 1 else cb[:, None]
            pc = pc.reshape(n_g, n_w_a * n_w_b, dim_a + dim_b, dim_a + dim_b)
        return GradientTape(plw, pm, pc, self.log_prob_grad + other.log_prob_grad)


def attach_gradients(state, n_params: int):
    """Return a copy of ``state`` carrying a zero-initialized tape.

    Gates applied afterwards with their parameter derivatives populate the
    tape; for a circuit applied to vacuum this reproduces the initial
    covariance gradient ``(hbar/2) X (dS S^T + S dS^T) X^T``.
    """
    if n_params < 0:
        raise InvalidArgumentError("parameter count must be non-negative")
    if state.is_reduced:
        state = state.to_full_form()
    tape = GradientTape.zeros(
        n_params, state.num_weights, 2 * state.num_modes, state.covs.shape[0]
    )
    return state.with_tape(tape)


def _require_full_tape(state):
    if state.tape is None:
        raise InvalidArgumentError("state carries no gradient tape")
    if state.is_reduced:
        raise InvalidArgumentError("gradient evaluation requires a full-form state")
    state.tape.check_shapes(state)
    return state.tape


def grad_log_prob(state) -> np.ndarray:
    """Gradient of the accumulated log success probability."""
    return np.real(_require_full_tape(state).log_prob_grad).copy()


def grad_char_fun(state, alpha) -> np.ndarray:
    """Gradient of the characteristic function at a phase-space point.

    Returns a complex vector of length ``n_g``. The success-probability
    normalization is already folded into the tape by the measurement updates.
    """
    from .characterize import _alpha_to_vec, _omega_full

    tape = _require_full_tape(state)
    u = _omega_full(state.num_modes).T @ _alpha_to_vec(alpha, state.num_modes)
    quad = -0.5 * np.einsum("i,cij,j->c", u, state.covs, u)
    expo = state.log_weights - 1j * (state.means @ u)
    expo = expo + (quad[0] if state.covs.shape[0] == 1 else quad)
    d_quad = -0.5 * np.einsum("i,gcij,j->gc", u, tape.partial_covs, u)
    d_expo = tape.partial_log_weights - 1j * np.einsum(
        "gwi,i->gw", tape.partial_means, u
    )
    d_expo = d_expo + (d_quad[:, [0]] if tape.shared_cov else d_quad)
    return (np.exp(expo)[None, :] * d_expo).sum(axis=1)


def grad_overlap(state, target) -> np.ndarray:
    """Gradient of the overlap with a parameter-independent target state.

    The target may be any normalized state; its weights, means and
    covariances are treated as constants.
    """
    from .characterize import _overlap_pair_terms

    tape = _require_full_tape(state)
    tgt = target.to_full_form()
    n_g = tape.num_params
    grad = np.zeros(n_g, dtype=np.complex128)
    for l in range(tgt.num_weights):
        omega_l = tgt.covs[0] if tgt.covs.shape[0] == 1 else tgt.covs[l]
        f_kl, minv_stack, diff = _overlap_pair_terms(
            state, omega_l, tgt.means[l], tgt.log_weights[l]
        )
        md = np.einsum("kij,kj->ki", minv_stack, diff)
        term_mu = -np.einsum("gki,ki->gk", tape.partial_means, md)
        if tape.shared_cov:
            term_sig = 0.5 * np.einsum("ki,gij,kj->gk", md, tape.partial_covs[:, 0], md)
            term_tr = -0.5 * np.einsum("kij,gji->gk", minv_stack, tape.partial_covs[:, 0])
        else:
            term_sig = 0.5 * np.einsum("ki,gkij,kj->gk", md, tape.partial_covs, md)
            term_tr = -0.5 * np.einsum("kij,gkji->gk", minv_stack, tape.partial_covs)
        d_f = tape.partial_log_weights + term_mu + term_sig + term_tr
        grad += (np.exp(f_kl)[None, :] * d_f).sum(axis=1)
    return grad


def grad_effective_squeezing(state, direction: str) -> np.ndarray:
    """Gradient of the effective squeezing along ``x`` or ``p``.

    Composes the characteristic-function gradient with the chain-rule
    prefactor of ``Delta = sqrt(-2 ln|chi| / |alpha_q|^2)``.
    """
    from .characterize import _stabilizer_alpha, char_fun, effective_squeezing

    alpha = _stabilizer_alpha(direction)
    chi = char_fun(state, alpha)
    if np.abs(chi) == 0.0:
        raise InvalidArgumentError(
            "characteristic function vanishes; squeezing gradient undefined"
        )
    delta, _ = effective_squeezing(state, direction)
    d_chi = grad_char_fun(state, alpha)
    alpha_sq = float(np.abs(alpha) ** 2)
    return -np.real(np.conj(chi) * d_chi) / (delta * alpha_sq * np.abs(chi) ** 2)
