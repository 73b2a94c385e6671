"""Multimode states as linear combinations of Gaussians.

A state is a weighted sum of (generally complex-parameter) Gaussians in
phase space: complex log-weights, complex mean vectors and complex
covariance matrices. Two storage layouts are supported:

* **full form** (``num_k == num_weights``): complex terms appear in
  conjugate pairs so the total Wigner function is real;
* **reduced form** (``num_k < num_weights``): only one member of each
  conjugate pair is stored. The first ``num_k`` terms are the real sector;
  the remaining terms are complex, carry the pair factor of two folded into
  their weights, and contribute through their real part at evaluation.

When every term shares one covariance matrix (true for coherent-ring
pipelines) the ``covs`` array has leading dimension 1 and operations keep
that layout; memory then scales with the number of weights only through the
means.

States are immutable values: every operation returns a new state.
"""

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import block_diag

from ._backend import sumexp_complex, wigner_chunk
from .errors import (
    DegenerateStateError,
    InvalidArgumentError,
    NumericalStabilityError,
)
from .gradients import GradientTape
from .symplectic import HBAR, GaussianChannel, channel_loss, embed, embed_vector, squeeze_symplectic

SCHEMA_ID = "lcg-sim/1"

_LOG2 = np.log(2.0)
_TWO_PI = 2.0 * np.pi


def wrap_log_weights(w: np.ndarray) -> np.ndarray:
    """Reduce imaginary parts mod 2 pi into [-pi, pi] to avoid drift.

    Half-even rounding keeps the endpoints, so conjugate pairs stay at
    exactly opposite phases (+pi and -pi); collapsing them to one endpoint
    would make their exp() rounding residues add instead of cancel.
    """
    w = np.asarray(w, dtype=np.complex128)
    im = w.imag - _TWO_PI * np.round(w.imag / _TWO_PI)
    return w.real + 1j * im


def coherent_outer_product(alpha: complex, beta: complex):
    """Wigner parameters of ``|alpha><beta|`` (vacuum covariance, hbar = 2).

    Returns ``(mu, d)`` such that the Wigner function is
    ``exp(d) G_{mu, I}(q)``; means and the log-prefactor are complex for
    ``alpha != beta``.
    """
    a, b = complex(alpha), complex(beta)
    scale = np.sqrt(HBAR / 2.0)
    mu = scale * np.array(
        [
            (a.real + b.real) + 1j * (a.imag - b.imag),
            (a.imag + b.imag) + 1j * (b.real - a.real),
        ],
        dtype=np.complex128,
    )
    d = (
        -0.5 * (a.imag - b.imag) ** 2
        - 0.5 * (a.real - b.real) ** 2
        + 1j * (a.imag * b.real - b.imag * a.real)
    )
    return mu, d


@dataclass(frozen=True)
class LcogState:
    """A multimode state stored as a linear combination of Gaussians."""

    num_modes: int
    log_weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    num_k: int
    tape: GradientTape | None = None

    def __post_init__(self):
        lw = wrap_log_weights(self.log_weights)
        means = np.asarray(self.means, dtype=np.complex128)
        covs = np.asarray(self.covs, dtype=np.complex128)
        if means.ndim != 2 or covs.ndim != 3:
            raise InvalidArgumentError("means must be (n_w, 2N), covs (n_c, 2N, 2N)")
        n_w, dim = means.shape
        if dim != 2 * self.num_modes or lw.shape != (n_w,):
            raise InvalidArgumentError("inconsistent state array shapes")
        if covs.shape[0] not in (1, n_w) or covs.shape[1:] != (dim, dim):
            raise InvalidArgumentError("covs must have leading dimension 1 or n_w")
        if not 0 <= self.num_k <= n_w:
            raise InvalidArgumentError("num_k out of range")
        object.__setattr__(self, "log_weights", lw)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)

    # -- basic structure -------------------------------------------------

    @property
    def num_weights(self) -> int:
        return self.log_weights.shape[0]

    @property
    def is_reduced(self) -> bool:
        return self.num_k < self.num_weights

    @property
    def shared_cov(self) -> bool:
        return self.covs.shape[0] == 1

    def cov_of(self, m: int) -> np.ndarray:
        return self.covs[0] if self.shared_cov else self.covs[m]

    def with_tape(self, tape: GradientTape | None) -> "LcogState":
        return replace(self, tape=tape)

    def validate(self) -> None:
        """Check physicality invariants (positive-definite real covariance parts)."""
        for c in self.covs:
            evals = np.linalg.eigvalsh(0.5 * (c.real + c.real.T))
            if evals[0] < 1e-12:
                raise DegenerateStateError(
                    "covariance real part is not positive definite"
                )
        if self.tape is not None:
            self.tape.check_shapes(self)

    # -- norms -----------------------------------------------------------

    def log_norm(self) -> complex:
        """log of the weight sum; the real part of the sum for reduced states."""
        if self.num_weights == 0:
            raise DegenerateStateError("state has no weights")
        shift, total = sumexp_complex(self.log_weights)
        if self.is_reduced:
            total = complex(total.real, 0.0)
        if not np.isfinite(shift) or total == 0.0:
            raise DegenerateStateError("state norm vanished")
        return complex(shift + np.log(total))

    def normalized(self) -> "LcogState":
        """Scale weights so the (real part of the) weight sum is one."""
        log_n = self.log_norm()
        out = replace(self, log_weights=self.log_weights - log_n)
        if self.tape is not None:
            w = np.exp(out.log_weights)
            d_log_n = np.einsum("w,gw->g", w, self.tape.partial_log_weights)
            plw = self.tape.partial_log_weights - d_log_n[:, None]
            out = out.with_tape(replace(self.tape, partial_log_weights=plw))
        return out

    # -- construction ----------------------------------------------------

    @staticmethod
    def vacuum(num_modes: int) -> "LcogState":
        """N-mode vacuum: a single unit weight, zero mean, identity covariance."""
        if num_modes < 1:
            raise InvalidArgumentError("need at least one mode")
        dim = 2 * num_modes
        return LcogState(
            num_modes,
            np.zeros(1, dtype=np.complex128),
            np.zeros((1, dim), dtype=np.complex128),
            (0.5 * HBAR) * np.eye(dim, dtype=np.complex128)[None],
            num_k=1,
        )

    @staticmethod
    def from_gaussian(mean, cov) -> "LcogState":
        """Single-Gaussian state from real first and second moments."""
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (mean.size, mean.size) or mean.size % 2:
            raise InvalidArgumentError("moment shapes are inconsistent")
        state = LcogState(
            mean.size // 2,
            np.zeros(1, dtype=np.complex128),
            mean[None].astype(np.complex128),
            cov[None].astype(np.complex128),
            num_k=1,
        )
        state.validate()
        return state

    @staticmethod
    def coherent(alpha: complex) -> "LcogState":
        return LcogState.from_gaussian(
            np.sqrt(2.0 * HBAR) * np.array([np.real(alpha), np.imag(alpha)]),
            (0.5 * HBAR) * np.eye(2),
        )

    @staticmethod
    def squeezed_vacuum(r: float, phi: float = 0.0) -> "LcogState":
        s = squeeze_symplectic(r, phi)
        return LcogState.from_gaussian(np.zeros(2), (0.5 * HBAR) * s @ s.T)

    @staticmethod
    def thermal(nbar: float) -> "LcogState":
        if nbar < 0:
            raise InvalidArgumentError("occupation must be non-negative")
        return LcogState.from_gaussian(
            np.zeros(2), (0.5 * HBAR) * (2.0 * nbar + 1.0) * np.eye(2)
        )

    @staticmethod
    def from_coherent_superposition(
        coefficients,
        alphas,
        squeeze: complex = 0.0,
        reduced: bool = False,
        normalize: bool = True,
    ) -> "LcogState":
        """State for ``S(z) sum_k a_k |alpha_k>`` as outer-product Gaussians.

        Builds the (k, l) grid of coherent outer products, squeezes means and
        the shared covariance by ``S(z)``, and normalizes unless told not to.
        With ``reduced=True`` only the diagonal plus upper triangle is kept
        (diagonal first, pair factor folded into the off-diagonal weights).
        """
        a = np.atleast_1d(np.asarray(coefficients, dtype=np.complex128))
        alphas = np.atleast_1d(np.asarray(alphas, dtype=np.complex128))
        if a.size != alphas.size or a.size == 0:
            raise InvalidArgumentError("need matching, non-empty coefficient lists")
        keep = np.abs(a) > 0
        if not np.any(keep):
            raise DegenerateStateError("all superposition coefficients vanish")
        a, alphas = a[keep], alphas[keep]
        n = a.size
        z = complex(squeeze)
        s_z = squeeze_symplectic(abs(z), np.angle(z)) if z != 0 else np.eye(2)
        log_a = np.log(a)
        weights, means = [], []
        if reduced:
            pairs = [(k, k) for k in range(n)] + [
                (k, l) for k in range(n) for l in range(k + 1, n)
            ]
            num_k = n
        else:
            pairs = [(k, l) for k in range(n) for l in range(n)]
            num_k = n * n
        for k, l in pairs:
            mu, d = coherent_outer_product(alphas[k], alphas[l])
            w = log_a[k] + np.conj(log_a[l]) + d
            if reduced and k != l:
                w = w + _LOG2
            weights.append(w)
            means.append(s_z @ mu)
        cov = (0.5 * HBAR) * (s_z @ s_z.T).astype(np.complex128)
        state = LcogState(
            1,
            np.array(weights, dtype=np.complex128),
            np.array(means, dtype=np.complex128),
            cov[None],
            num_k=num_k,
        )
        return state.normalized() if normalize else state

    # -- composition and evolution ----------------------------------------

    def tensor(self, other: "LcogState") -> "LcogState":
        """Tensor product; weight count multiplies, means/covariances direct-sum."""
        n_a, n_b = self.num_weights, other.num_weights
        dim_a, dim_b = 2 * self.num_modes, 2 * other.num_modes
        if self.is_reduced or other.is_reduced:
            return _tensor_reduced(self, other)
        log_w = (self.log_weights[:, None] + other.log_weights[None, :]).reshape(-1)
        means = np.zeros((n_a, n_b, dim_a + dim_b), dtype=np.complex128)
        means[..., :dim_a] = self.means[:, None, :]
        means[..., dim_a:] = other.means[None, :, :]
        means = means.reshape(-1, dim_a + dim_b)
        if self.shared_cov and other.shared_cov:
            covs = block_diag(self.covs[0], other.covs[0])[None]
        else:
            covs = np.zeros(
                (n_a, n_b, dim_a + dim_b, dim_a + dim_b), dtype=np.complex128
            )
            ca = self.covs if not self.shared_cov else np.broadcast_to(
                self.covs, (n_a, dim_a, dim_a)
            )
            cb = other.covs if not other.shared_cov else np.broadcast_to(
                other.covs, (n_b, dim_b, dim_b)
            )
            covs[..., :dim_a, :dim_a] = ca[:, None]
            covs[..., dim_a:, dim_a:] = cb[None, :]
            covs = covs.reshape(-1, dim_a + dim_b, dim_a + dim_b)
        tape = None
        if self.tape is not None or other.tape is not None:
            base = self.tape
            if base is None:
                base = GradientTape.zeros(other.tape.num_params, n_a, dim_a, self.covs.shape[0])
            tape = base.tensor(other.tape, n_b, dim_b)
        return LcogState(
            self.num_modes + other.num_modes,
            log_w,
            means,
            covs,
            num_k=n_a * n_b,
            tape=tape,
        )

    def apply_symplectic(
        self, s, d=None, modes=None, d_s=None, d_d=None
    ) -> "LcogState":
        """Apply a Gaussian unitary: ``mu -> S mu + d``, ``sigma -> S sigma S^T``.

        ``modes`` selects the subsystem the gate acts on (all modes when
        omitted). ``d_s``/``d_d`` carry per-parameter gate derivatives of
        shape ``(n_g, ...)`` for gradient tracking.
        """
        s = np.asarray(s, dtype=float)
        n = self.num_modes
        if modes is not None:
            s_full = embed(s, modes, n)
            d_full = embed_vector(np.asarray(d, float), modes, n) if d is not None else None
            ds_full = None
            if d_s is not None:
                ds_full = np.zeros((len(d_s), 2 * n, 2 * n))
                modes_l = [modes] if np.isscalar(modes) else list(modes)
                idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes_l])
                for g, block in enumerate(d_s):
                    ds_full[g][np.ix_(idx, idx)] = block
            dd_full = None
            if d_d is not None:
                dd_full = np.stack(
                    [embed_vector(np.asarray(v, float), modes, n) for v in d_d]
                )
        else:
            if s.shape != (2 * n, 2 * n):
                raise InvalidArgumentError("matrix size does not match the state")
            s_full, d_full, ds_full, dd_full = s, d, d_s, d_d
        means = self.means @ s_full.T
        if d_full is not None:
            means = means + np.asarray(d_full, dtype=np.complex128)[None, :]
        covs = np.einsum("ij,cjk,lk->cil", s_full, self.covs, s_full)
        tape = None
        if self.tape is not None:
            tape = self.tape.apply_symplectic(s_full, self.means, self.covs, ds_full, dd_full)
        return replace(self, means=means, covs=covs, tape=tape)

    def apply_channel(self, channel: GaussianChannel, modes=None) -> "LcogState":
        """Apply a Gaussian channel: ``mu -> X mu + d``, ``sigma -> X sigma X^T + Y``."""
        n = self.num_modes
        if modes is None and channel.num_modes != n:
            raise InvalidArgumentError("channel size does not match the state")
        if modes is not None:
            x = embed(channel.X, modes, n)
            modes_l = [modes] if np.isscalar(modes) else list(modes)
            idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes_l])
            y = np.zeros((2 * n, 2 * n))
            y[np.ix_(idx, idx)] = channel.Y
            d = embed_vector(channel.d, modes, n) if channel.d is not None else None
        else:
            x, y, d = channel.X, channel.Y, channel.d
        means = self.means @ x.T
        if d is not None:
            means = means + np.asarray(d, dtype=np.complex128)[None, :]
        covs = np.einsum("ij,cjk,lk->cil", x, self.covs, x) + y[None]
        tape = self.tape.apply_channel_matrix(x) if self.tape is not None else None
        return replace(self, means=means, covs=covs, tape=tape)

    def apply_loss(self, eta, nbar=0.0, modes=None) -> "LcogState":
        """Photon loss with transmissivity ``eta`` on ``modes`` (default all)."""
        count = self.num_modes if modes is None else (
            1 if np.isscalar(modes) else len(modes)
        )
        return self.apply_channel(channel_loss(eta, nbar, count), modes)

    # -- form conversions --------------------------------------------------

    def to_full_form(self) -> "LcogState":
        """Expand complex-sector terms into explicit conjugate pairs."""
        if not self.is_reduced:
            return self
        k = self.num_k
        lw_r, lw_c = self.log_weights[:k], self.log_weights[k:]
        mu_r, mu_c = self.means[:k], self.means[k:]
        log_w = np.concatenate([lw_r, lw_c - _LOG2, np.conj(lw_c) - _LOG2])
        means = np.concatenate([mu_r, mu_c, np.conj(mu_c)])
        if self.shared_cov:
            if np.max(np.abs(self.covs.imag)) > 0:
                covs = np.concatenate(
                    [
                        np.broadcast_to(self.covs, (k + lw_c.size,) + self.covs.shape[1:]),
                        np.broadcast_to(np.conj(self.covs), (lw_c.size,) + self.covs.shape[1:]),
                    ]
                )
            else:
                covs = self.covs
        else:
            covs = np.concatenate(
                [self.covs[:k], self.covs[k:], np.conj(self.covs[k:])]
            )
        if self.tape is not None:
            raise InvalidArgumentError("cannot change form of a tape-carrying state")
        return LcogState(self.num_modes, log_w, means, covs, num_k=log_w.size)

    def to_reduced_form(self, tol: float = 1e-10) -> "LcogState":
        """Collapse conjugate pairs of complex terms into single entries."""
        if self.is_reduced:
            return self
        if self.tape is not None:
            raise InvalidArgumentError("cannot change form of a tape-carrying state")
        lw, means = self.log_weights, self.means
        covs = self.covs if not self.shared_cov else np.broadcast_to(
            self.covs, (self.num_weights,) + self.covs.shape[1:]
        )
        scale = max(1.0, float(np.max(np.abs(means))) if means.size else 1.0)
        # a term is "real sector" when its Gaussian is real and its weight
        # exponential is real (phase 0 or pi, covering negative weights)
        phase_resid = np.minimum(np.abs(lw.imag), np.abs(np.pi - np.abs(lw.imag)))
        imag_mag = (
            phase_resid
            + np.abs(means.imag).sum(axis=1)
            + np.abs(covs.imag).sum(axis=(1, 2))
        )
        real_idx = np.flatnonzero(imag_mag <= tol * scale)
        cplx_idx = np.flatnonzero(imag_mag > tol * scale)
        features = np.concatenate(
            [
                lw.real[:, None],
                np.abs(lw.imag)[:, None],
                means.real,
                np.abs(means.imag),
            ],
            axis=1,
        )
        order = sorted(cplx_idx, key=lambda i: tuple(features[i]))
        kept, used = [], set()
        for pos, i in enumerate(order):
            if i in used:
                continue
            partner = None
            for j in order[pos + 1 :]:
                if j in used:
                    continue
                w_diff = lw[i] - np.conj(lw[j])
                w_err = abs(w_diff.real) + min(
                    abs(w_diff.imag), abs(2 * np.pi - abs(w_diff.imag))
                )
                if (
                    w_err <= 1e-6 * max(1.0, abs(lw[i]))
                    and np.max(np.abs(means[i] - np.conj(means[j]))) <= tol * scale * 10
                    and np.max(np.abs(covs[i] - np.conj(covs[j]))) <= tol * scale * 10
                ):
                    partner = j
                    break
            if partner is None:
                raise DegenerateStateError(
                    "complex terms do not form conjugate pairs; cannot reduce"
                )
            used.add(i)
            used.add(partner)
            kept.append(i)
        idx = np.concatenate([real_idx, np.array(kept, dtype=int)]) if kept else real_idx
        idx = idx.astype(int)
        new_lw = lw[idx].copy()
        new_lw[len(real_idx) :] += _LOG2
        new_means = means[idx]
        if self.shared_cov and np.max(np.abs(self.covs.imag)) == 0:
            new_covs = self.covs
        else:
            new_covs = covs[idx]
        return LcogState(
            self.num_modes, new_lw, new_means, new_covs, num_k=len(real_idx)
        )

    # -- evaluation ---------------------------------------------------------

    def wigner(self, points) -> np.ndarray:
        """Wigner function at phase-space points (shape ``(n_q, 2N)`` or ``(2N,)``).

        Returns real values; for full-form states the imaginary residue is
        checked and a :class:`NumericalStabilityError` raised when it is not
        negligible.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != 2 * self.num_modes:
            raise InvalidArgumentError("points must have 2N coordinates")
        vals = _wigner_complex(self, pts)
        if not self.is_reduced:
            scale = float(np.max(np.abs(vals.real))) or 1.0
            if np.max(np.abs(vals.imag)) > 1e-6 * scale:
                raise NumericalStabilityError("Wigner function has an imaginary residue")
        out = vals.real
        return out[0] if np.asarray(points).ndim == 1 else out

    def mean_vector(self) -> np.ndarray:
        """Physical first moment (real part of the weighted mean)."""
        full = self.to_full_form()
        w = np.exp(full.log_weights)
        return np.real(np.einsum("w,wi->i", w, full.means))

    def covariance(self) -> np.ndarray:
        """Physical second moment of the Gaussian mixture."""
        full = self.to_full_form()
        w = np.exp(full.log_weights)
        mu = np.einsum("w,wi->i", w, full.means)
        covs = full.covs if not full.shared_cov else np.broadcast_to(
            full.covs, (full.num_weights,) + full.covs.shape[1:]
        )
        second = np.einsum("w,wij->ij", w, covs) + np.einsum(
            "w,wi,wj->ij", w, full.means, full.means
        )
        return np.real(second - np.outer(mu, mu))

    def prune(self, rel_tol: float = 1e-16) -> "LcogState":
        """Drop terms whose weight magnitude is negligible (opt-in only).

        Small terms can still carry interference, so nothing is pruned by
        default anywhere in the package.
        """
        if rel_tol <= 0:
            return self
        cut = np.max(self.log_weights.real) + np.log(rel_tol)
        keep = self.log_weights.real >= cut
        if keep.all():
            return self
        new_num_k = int(np.count_nonzero(keep[: self.num_k]))
        tape = self.tape
        if tape is not None:
            tape = GradientTape(
                tape.partial_log_weights[:, keep],
                tape.partial_means[:, keep],
                tape.partial_covs if self.shared_cov else tape.partial_covs[:, keep],
                tape.log_prob_grad,
            )
        return LcogState(
            self.num_modes,
            self.log_weights[keep],
            self.means[keep],
            self.covs if self.shared_cov else self.covs[keep],
            num_k=new_num_k,
            tape=tape,
        )

    # -- serialization --------------------------------------------------------

    def to_json_dict(self) -> dict:
        def c2l(arr):
            arr = np.asarray(arr)
            return np.stack([arr.real, arr.imag], axis=-1).tolist()

        return {
            "schema": SCHEMA_ID,
            "kind": "state",
            "hbar": HBAR,
            "num_modes": self.num_modes,
            "num_k": self.num_k,
            "log_weights": c2l(self.log_weights),
            "means": c2l(self.means),
            "covs": c2l(self.covs),
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "LcogState":
        if doc.get("schema") != SCHEMA_ID or doc.get("kind") != "state":
            raise InvalidArgumentError("not a lcg-sim/1 state document")
        if doc.get("hbar") != HBAR:
            raise InvalidArgumentError("checkpoint was written with a different hbar")

        def l2c(lst):
            arr = np.asarray(lst, dtype=float)
            return arr[..., 0] + 1j * arr[..., 1]

        state = LcogState(
            int(doc["num_modes"]),
            l2c(doc["log_weights"]),
            l2c(doc["means"]),
            l2c(doc["covs"]),
            num_k=int(doc["num_k"]),
        )
        state.validate()
        return state

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)

    @staticmethod
    def load(path) -> "LcogState":
        with open(path, "r", encoding="utf-8") as fh:
            return LcogState.from_json_dict(json.load(fh))


def _tensor_reduced(a: LcogState, b: LcogState) -> LcogState:
    """Tensor product preserving the reduced representation."""
    if a.tape is not None or b.tape is not None:
        raise InvalidArgumentError("tensor of reduced tape-carrying states unsupported")
    dim_a, dim_b = 2 * a.num_modes, 2 * b.num_modes

    def sectors(s):
        return (
            (s.log_weights[: s.num_k], s.means[: s.num_k], s, slice(0, s.num_k)),
            (s.log_weights[s.num_k :], s.means[s.num_k :], s, slice(s.num_k, None)),
        )

    def covs_of(s, sl):
        if s.shared_cov:
            n = s.log_weights[sl].shape[0]
            return np.broadcast_to(s.covs, (n,) + s.covs.shape[1:])
        return s.covs[sl]

    (ra, ca_), (rb, cb_) = sectors(a), sectors(b)

    def combine(block_a, block_b, conj_a=False, extra=0.0):
        lw_a, mu_a, sa, sla = block_a
        lw_b, mu_b, sb, slb = block_b
        cov_a, cov_b = covs_of(sa, sla), covs_of(sb, slb)
        if conj_a:
            lw_a, mu_a, cov_a = np.conj(lw_a), np.conj(mu_a), np.conj(cov_a)
        na, nb = lw_a.size, lw_b.size
        if na == 0 or nb == 0:
            d = dim_a + dim_b
            return (
                np.empty(0, np.complex128),
                np.empty((0, d), np.complex128),
                np.empty((0, d, d), np.complex128),
            )
        lw = (lw_a[:, None] + lw_b[None, :] + extra).reshape(-1)
        mu = np.zeros((na, nb, dim_a + dim_b), dtype=np.complex128)
        mu[..., :dim_a] = mu_a[:, None, :]
        mu[..., dim_a:] = mu_b[None, :, :]
        cov = np.zeros((na, nb, dim_a + dim_b, dim_a + dim_b), dtype=np.complex128)
        cov[..., :dim_a, :dim_a] = cov_a[:, None]
        cov[..., dim_a:, dim_a:] = cov_b[None, :]
        d = dim_a + dim_b
        return lw, mu.reshape(-1, d), cov.reshape(-1, d, d)

    parts = [
        combine(ra, rb),  # real x real
        combine(ra, cb_),  # real x complex
        combine(ca_, rb),  # complex x real
        combine(ca_, cb_, extra=-_LOG2),  # complex x complex
        combine(ca_, cb_, conj_a=True, extra=-_LOG2),  # conj(complex) x complex
    ]
    log_w = np.concatenate([p[0] for p in parts])
    means = np.concatenate([p[1] for p in parts])
    covs = np.concatenate([p[2] for p in parts])
    num_k = parts[0][0].size
    return LcogState(a.num_modes + b.num_modes, log_w, means, covs, num_k=num_k)


def _wigner_complex(state: LcogState, pts: np.ndarray) -> np.ndarray:
    """Accumulated complex Gaussian sum at real phase-space points."""
    dim = 2 * state.num_modes
    n_q = pts.shape[0]
    out = np.zeros(n_q, dtype=np.complex128)
    chunk = max(1, (1 << 21) // max(1, state.num_weights))
    if state.shared_cov:
        cov = state.covs[0]
        inv = np.linalg.inv(cov)
        log_norm = -0.5 * (dim * np.log(2 * np.pi) + np.log(np.linalg.det(cov)))
        for start in range(0, n_q, chunk):
            sl = slice(start, start + chunk)
            out[sl] = wigner_chunk(
                pts[sl].astype(np.complex128),
                state.log_weights,
                state.means,
                inv,
                log_norm,
            )
        return out
    inv = np.linalg.inv(state.covs)
    log_norm = -0.5 * (dim * np.log(2 * np.pi) + np.log(np.linalg.det(state.covs)))
    for start in range(0, n_q, chunk):
        sl = slice(start, start + chunk)
        diff = pts[sl, None, :] - state.means[None, :, :]
        expo = (
            state.log_weights[None, :]
            + log_norm[None, :]
            - 0.5 * np.einsum("qmi,mij,qmj->qm", diff, inv, diff)
        )
        shift = np.max(expo.real, axis=1, keepdims=True)
        shift[~np.isfinite(shift)] = 0.0
        out[sl] = np.exp(shift[:, 0]) * np.exp(expo - shift).sum(axis=1)
    return out


def vacuum(num_modes: int) -> LcogState:
    """Module-level alias for :meth:`LcogState.vacuum`."""
    return LcogState.vacuum(num_modes)
