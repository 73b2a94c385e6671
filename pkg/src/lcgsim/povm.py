"""Single-mode measurement elements expressed as linear combinations of Gaussians.

Includes Gaussian projectors (generaldyne/heterodyne), click detectors,
pseudo photon-number detectors built from thermal states, and photon-number
projectors in two approximations: thermal-state combinations and coherent
states on a phase-space ring. Detector inefficiency is *not* a POVM
property; model it with a loss channel in front of the detector.

The flat part of click-style POVMs (the identity operator) is carried as an
explicit flag, never as a wide-Gaussian limit; the measurement engine
implements it as a partial trace.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ._backend import sumexp_complex
from .errors import InvalidArgumentError, NumericalStabilityError
from .state import LcogState, coherent_outer_product, wrap_log_weights
from .symplectic import HBAR, displacement_vector, squeeze_symplectic

_LOG2 = np.log(2.0)

#: Ring radii giving ket infidelity 1e-6 per photon number (index = n).
#: Calibrated from the exact tail series of the ring decomposition; override
#: per call via the ``eps`` argument.
DEFAULT_RING_RADII = {
    "target": 1e-6,
    "radii": [],  # filled below
}


def _ring_infidelity(n: int, eps: float, terms: int = 24) -> float:
    """Norm excess of the canonical ring decomposition of Fock ``n``.

    Equals ``sum_j n! eps^(2 j (n+1)) / (n + j(n+1))!`` which is also the
    ket infidelity of the approximation.
    """
    log_eps = math.log(eps)
    total = 0.0
    for j in range(1, terms + 1):
        log_t = (
            gammaln(n + 1)
            - gammaln(n + j * (n + 1) + 1)
            + 2.0 * j * (n + 1) * log_eps
        )
        if log_t < -700:
            break
        total += math.exp(log_t)
    return total


def ring_radius_for_infidelity(n: int, target: float = 1e-6) -> float:
    """Radius of the coherent ring that hits a requested ket infidelity."""
    if target <= 0:
        raise InvalidArgumentError("infidelity target must be positive")
    lo, hi = 1e-6, 1e-3
    while _ring_infidelity(n, hi) < target:
        hi *= 2.0
        if hi > 1e6:
            raise InvalidArgumentError("no radius reaches the requested infidelity")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _ring_infidelity(n, mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def superposition_ring_infidelity(amplitudes, eps: float, terms: int = 24) -> float:
    """Ket infidelity of the ring decomposition of a Fock superposition.

    Each component ``|l>`` leaks onto ``|l + j P>`` (P ring points), and the
    low-l components leak hardest, so this is larger than the single-Fock
    tail at the same radius.
    """
    a = np.abs(np.atleast_1d(np.asarray(amplitudes, complex))) ** 2
    a = a / a.sum()
    p = a.size
    log_eps = math.log(eps)
    total = 0.0
    for l in range(p):
        if a[l] == 0:
            continue
        for j in range(1, terms + 1):
            log_t = gammaln(l + 1) - gammaln(l + j * p + 1) + 2.0 * j * p * log_eps
            if log_t < -700:
                break
            total += a[l] * math.exp(log_t)
    return total


def ring_radius_for_amplitudes(amplitudes, target: float = 1e-6) -> float:
    """Radius hitting a requested infidelity for a full superposition."""
    if target <= 0:
        raise InvalidArgumentError("infidelity target must be positive")
    lo, hi = 1e-6, 1e-3
    while superposition_ring_infidelity(amplitudes, hi) < target:
        hi *= 2.0
        if hi > 1e6:
            raise InvalidArgumentError("no radius reaches the requested infidelity")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if superposition_ring_infidelity(amplitudes, mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def default_ring_radius(n: int) -> float:
    """Built-in per-photon-number ring radius (infidelity target 1e-6)."""
    radii = DEFAULT_RING_RADII["radii"]
    if n < len(radii):
        return radii[n]
    return ring_radius_for_infidelity(n, DEFAULT_RING_RADII["target"])


DEFAULT_RING_RADII["radii"] = [ring_radius_for_infidelity(n, 1e-6) for n in range(17)]


@dataclass(frozen=True)
class Povm:
    """A single-mode measurement element in Gaussian-combination form.

    ``identity_log_weight`` carries the flat (identity-operator) component of
    click-style POVMs. ``outcome_measure`` tags whether post-selection yields
    a probability or a density over the outcome (per ``d^2 m`` for
    generaldyne). ``num_k`` marks the real sector when the element is stored
    in reduced form.
    """

    kind: str
    log_weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    num_k: int
    identity_log_weight: complex | None = None
    outcome_measure: str = "probability"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "log_weights", wrap_log_weights(self.log_weights)
        )
        object.__setattr__(self, "means", np.asarray(self.means, np.complex128))
        object.__setattr__(self, "covs", np.asarray(self.covs, np.complex128))

    @property
    def num_terms(self) -> int:
        return self.log_weights.shape[0]

    @property
    def is_reduced(self) -> bool:
        return self.num_k < self.num_terms

    @property
    def shared_cov(self) -> bool:
        return self.covs.shape[0] == 1

    def cov_of(self, n: int) -> np.ndarray:
        return self.covs[0] if self.shared_cov else self.covs[n]

    def as_state(self) -> LcogState:
        """View a trace-one element (e.g. a Fock approximation) as a state."""
        if self.identity_log_weight is not None:
            raise InvalidArgumentError("element with identity component is not a state")
        return LcogState(1, self.log_weights, self.means, self.covs, num_k=self.num_k)

    def to_full_form(self) -> "Povm":
        if not self.is_reduced:
            return self
        state = self.as_state().to_full_form()
        return Povm(
            self.kind,
            state.log_weights,
            state.means,
            state.covs,
            num_k=state.num_k,
            identity_log_weight=self.identity_log_weight,
            outcome_measure=self.outcome_measure,
            meta=self.meta,
        )


def generaldyne(z: complex = 0.0, alpha: complex = 0.0) -> Povm:
    """Projector onto the displaced squeezed state ``|z, alpha>``.

    Post-selection with this element returns a density over the outcome
    coordinates ``m = sqrt(2 hbar)(Re alpha, Im alpha)``.
    """
    z = complex(z)
    s = squeeze_symplectic(abs(z), np.angle(z)) if z != 0 else np.eye(2)
    cov = (0.5 * HBAR) * s @ s.T
    return Povm(
        "generaldyne",
        np.zeros(1, np.complex128),
        displacement_vector(alpha)[None].astype(np.complex128),
        cov[None].astype(np.complex128),
        num_k=1,
        outcome_measure="density",
        meta={"z": z, "alpha": complex(alpha)},
    )


def heterodyne(alpha: complex = 0.0) -> Povm:
    """Coherent-state projector (generaldyne with no squeezing)."""
    p = generaldyne(0.0, alpha)
    return Povm(
        "heterodyne",
        p.log_weights,
        p.means,
        p.covs,
        num_k=1,
        outcome_measure="density",
        meta={"alpha": complex(alpha)},
    )


def vacuum_projector() -> Povm:
    """``|0><0|`` as a probability-valued element (a no-click outcome)."""
    return Povm(
        "no_click",
        np.zeros(1, np.complex128),
        np.zeros((1, 2), np.complex128),
        (0.5 * HBAR) * np.eye(2, dtype=np.complex128)[None],
        num_k=1,
    )


def click_povm(outcome: str) -> Povm:
    """Threshold-detector element: ``no_click -> |0><0|``, ``click -> I - |0><0|``."""
    if outcome == "no_click":
        return vacuum_projector()
    if outcome != "click":
        raise InvalidArgumentError("outcome must be 'click' or 'no_click'")
    return Povm(
        "click",
        np.array([1j * np.pi], np.complex128),  # weight -1 on the vacuum Gaussian
        np.zeros((1, 2), np.complex128),
        (0.5 * HBAR) * np.eye(2, dtype=np.complex128)[None],
        num_k=1,
        identity_log_weight=0.0 + 0.0j,
    )


def ppnrd_povm(clicks: int, fanout: int) -> Povm:
    """Pseudo photon-number detector: ``clicks`` of ``fanout`` on/off detectors.

    The element is a signed combination of thermal states; binomial signs are
    carried as ``i pi`` in the complex log-weights. The zero-transmissivity
    term (only present for ``clicks == fanout``) is the identity component.
    """
    k, m = int(clicks), int(fanout)
    if m < 1 or not 0 <= k <= m:
        raise InvalidArgumentError("need 0 <= clicks <= fanout and fanout >= 1")
    log_w, covs = [], []
    identity_w = None
    for l in range(k + 1):
        eta = (m - k + l) / m
        sign_phase = 1j * np.pi * (l % 2)
        log_binom = (
            gammaln(m + 1)
            - gammaln(k + 1)
            - gammaln(m - k + 1)
            + gammaln(k + 1)
            - gammaln(l + 1)
            - gammaln(k - l + 1)
        )
        if eta == 0.0:
            identity_w = log_binom + sign_phase
            continue
        nbar = (1.0 - eta) / eta
        log_w.append(log_binom - np.log(eta) + sign_phase)
        covs.append((0.5 * HBAR) * (2.0 * nbar + 1.0) * np.eye(2))
    log_w = np.asarray(log_w, np.complex128)
    return Povm(
        "ppnrd",
        log_w,
        np.zeros((log_w.size, 2), np.complex128),
        np.asarray(covs, np.complex128),
        num_k=log_w.size,
        identity_log_weight=identity_w,
        meta={"clicks": k, "fanout": m},
    )


def fock_thermal_povm(n: int, r: float) -> Povm:
    """Photon-number projector approximated by ``n + 1`` thermal states.

    ``r`` is the two-mode-squeezing strength of the underlying heralded
    photon-addition construction; ``0 < r < n**-0.5`` keeps the element
    physical and smaller ``r`` approximates ``|n><n|`` better at the price of
    numerical stability.
    """
    n = int(n)
    if n < 0:
        raise InvalidArgumentError("photon number must be non-negative")
    if n == 0:
        p = vacuum_projector()
        return Povm(
            "fock_thermal", p.log_weights, p.means, p.covs, num_k=1, meta={"n": 0}
        )
    if not 0.0 < r < n ** -0.5:
        raise InvalidArgumentError("need 0 < r < n**-0.5 for a physical element")
    r2 = r * r
    coeffs, covs = [], []
    for k in range(n + 1):
        binom = math.comb(n, k)
        c = ((-1.0) ** k) * binom * (1.0 - n * r2) / (1.0 - (n - k) * r2)
        coeffs.append(c)
        var = (1.0 + (n - k) * r2) / (1.0 - (n - k) * r2)
        covs.append((0.5 * HBAR) * var * np.eye(2))
    coeffs = np.asarray(coeffs)
    norm = coeffs.sum()
    if norm <= 0:
        raise NumericalStabilityError("thermal Fock normalization collapsed")
    log_w = np.log(coeffs.astype(np.complex128)) - np.log(norm)
    return Povm(
        "fock_thermal",
        log_w,
        np.zeros((n + 1, 2), np.complex128),
        np.asarray(covs, np.complex128),
        num_k=n + 1,
        meta={"n": n, "r": r, "norm": float(norm)},
    )


def _ring_log_coefficients(amplitudes: np.ndarray, eps: float) -> np.ndarray:
    """Canonical log-coefficients of the coherent-ring decomposition.

    Scaled so the target Fock component of the unnormalized ket is exactly
    one, which makes the computed norm excess equal the ket infidelity.
    """
    a = np.asarray(amplitudes, np.complex128)
    n = a.size - 1
    ls = np.arange(n + 1)
    ks = np.arange(n + 1)
    phase = np.exp(-2j * np.pi * np.outer(ls, ks) / (n + 1))
    mag = np.exp(0.5 * gammaln(ls + 1) - ls * np.log(eps))
    c = (a * mag) @ phase  # (n+1,) ring coefficients
    c = c * np.exp(0.5 * eps * eps) / (n + 1)
    with np.errstate(divide="ignore"):
        return np.log(c.astype(np.complex128))


def _ring_povm(kind: str, log_c: np.ndarray, eps: float, reduced: bool, meta: dict) -> Povm:
    n_amp = log_c.size
    alphas = eps * np.exp(2j * np.pi * np.arange(n_amp) / n_amp)
    if reduced:
        pairs = [(k, k) for k in range(n_amp)] + [
            (k, l) for k in range(n_amp) for l in range(k + 1, n_amp)
        ]
        num_k = n_amp
    else:
        pairs = [(k, l) for k in range(n_amp) for l in range(n_amp)]
        num_k = n_amp * n_amp
    log_w = np.empty(len(pairs), np.complex128)
    means = np.empty((len(pairs), 2), np.complex128)
    for i, (k, l) in enumerate(pairs):
        mu, d = coherent_outer_product(alphas[k], alphas[l])
        w = log_c[k] + np.conj(log_c[l]) + d
        if reduced and k != l:
            w = w + _LOG2
        log_w[i] = w
        means[i] = mu
    shift, total = sumexp_complex(log_w)
    norm = math.exp(shift) * total.real
    excess = norm - 1.0
    # the norm excess (= the ket infidelity) must clear the cancellation
    # noise of the weight sum, whose scale is the magnitude sum of the terms
    abs_scale = math.exp(shift) * float(np.sum(np.exp(log_w.real - shift)))
    if not np.isfinite(norm) or norm <= 0 or excess < 1e-13 * max(abs_scale, 1.0):
        raise NumericalStabilityError(
            "ring norm is indistinguishable from 1 at float precision; "
            f"increase the ring radius (got eps={eps:g}, norm-1={excess:.3g})"
        )
    log_w -= np.log(norm)
    meta = dict(meta, eps=eps, norm=norm)
    cov = (0.5 * HBAR) * np.eye(2, dtype=np.complex128)
    return Povm(kind, log_w, means, cov[None], num_k=num_k, meta=meta)


def fock_coherent_povm(n: int, eps: float | None = None, reduced: bool = False) -> Povm:
    """Photon-number projector from coherent states on a phase-space ring.

    ``(n+1)**2`` Gaussians in full form, ``(n+1)(n+2)/2`` reduced. The ring
    radius defaults to the built-in table (infidelity 1e-6); the achieved
    norm is stored in ``meta['norm']`` and the fidelity of the element to the
    exact projector is its inverse.

    Raises:
        NumericalStabilityError: when the radius is so small that the norm
            is swamped by floating-point cancellation.
    """
    n = int(n)
    if n < 0:
        raise InvalidArgumentError("photon number must be non-negative")
    if eps is None:
        eps = default_ring_radius(n)
    if eps <= 0:
        raise InvalidArgumentError("ring radius must be positive")
    amplitudes = np.zeros(n + 1)
    amplitudes[n] = 1.0
    log_c = _ring_log_coefficients(amplitudes, eps)
    return _ring_povm("fock_coherent", log_c, eps, reduced, {"n": n})


def fock_superposition_coherent(
    amplitudes, eps: float | None = None, reduced: bool = False
) -> Povm:
    """Projector onto an arbitrary Fock superposition via the coherent ring.

    ``amplitudes[l]`` multiplies ``|l>``; the last amplitude must be nonzero
    (it fixes the stellar rank and the ring size). Amplitudes are normalized
    before the decomposition.
    """
    a = np.atleast_1d(np.asarray(amplitudes, np.complex128))
    if a.size == 0 or not np.any(a != 0):
        raise InvalidArgumentError("need at least one nonzero amplitude")
    a = a / np.linalg.norm(a)
    n = a.size - 1  # ring size follows the stated length; trailing zeros allowed
    if eps is None:
        eps = default_ring_radius(n)
    if eps <= 0:
        raise InvalidArgumentError("ring radius must be positive")
    log_c = _ring_log_coefficients(a, eps)
    return _ring_povm("fock_superposition", log_c, eps, reduced, {"n": n})


def fock_superposition_state(amplitudes, eps: float | None = None, reduced: bool = False) -> LcogState:
    """The same ring decomposition packaged as a normalized single-mode state."""
    return fock_superposition_coherent(amplitudes, eps, reduced).as_state()
