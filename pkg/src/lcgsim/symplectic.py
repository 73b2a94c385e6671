"""Symplectic and Gaussian-channel linear algebra.

Conventions used throughout the package:

* quadrature ordering is interleaved, ``(x_1, p_1, ..., x_N, p_N)``;
* the symplectic form is ``Omega = diag_blocks([[0, 1], [-1, 0]])``;
* ``hbar = 2``, so the vacuum covariance matrix is the identity;
* ``S(r, 0)`` squeezes x for positive r (x-variance ``exp(-2r)``);
* the beamsplitter ``B(theta, phi)`` has transmission amplitude
  ``cos(theta)`` and maps ``x_1 -> cos(theta) x_1 - sin(theta) x_2`` at
  ``phi = 0`` (the first mode keeps the transmitted beam).

All builders return plain ndarrays and are pure functions.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import block_diag, schur

from .errors import InvalidArgumentError, NumericalStabilityError, UnphysicalStateError

HBAR = 2.0

_LN10 = np.log(10.0)


def db_to_r(db):
    """Squeezing decibels to the squeezing parameter, ``r = dB ln(10) / 20``."""
    return np.asarray(db, dtype=float) * _LN10 / 20.0


def r_to_db(r):
    """Inverse of :func:`db_to_r`."""
    return np.asarray(r, dtype=float) * 20.0 / _LN10


def omega(num_modes: int) -> np.ndarray:
    """The 2N x 2N symplectic form in interleaved ordering."""
    j = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return block_diag(*([j] * num_modes))


def is_symplectic(s: np.ndarray, tol: float = 1e-12) -> bool:
    """Whether ``s Omega s^T = Omega`` holds elementwise within ``tol``."""
    n = s.shape[0] // 2
    w = omega(n)
    return bool(np.max(np.abs(s @ w @ s.T - w)) <= tol)


def _check_finite(*vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("parameters must be finite")


def _sq_phase(phi: float) -> np.ndarray:
    # reflection-like block entering the squeezers, not the rotation matrix
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s], [s, -c]])


def _d_sq_phase(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[-s, c], [c, s]])


def rotation_symplectic(phi: float) -> np.ndarray:
    """Anticlockwise phase-space rotation."""
    _check_finite(phi)
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def _d_rotation(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[-s, -c], [c, -s]])


def squeeze_symplectic(r: float, phi: float = 0.0) -> np.ndarray:
    """Single-mode squeezer, ``cosh(r) I - sinh(r) S_phi``."""
    _check_finite(r, phi)
    return np.cosh(r) * np.eye(2) - np.sinh(r) * _sq_phase(phi)


def two_mode_squeeze_symplectic(r: float, phi: float = 0.0) -> np.ndarray:
    """Two-mode squeezer on a pair of modes."""
    _check_finite(r, phi)
    ch = np.cosh(r) * np.eye(2)
    sh = -np.sinh(r) * _sq_phase(phi)
    return np.block([[ch, sh], [sh, ch]])


def beamsplitter_symplectic(theta: float, phi: float = 0.0) -> np.ndarray:
    """Beamsplitter with transmission amplitude ``cos(theta)``."""
    _check_finite(theta, phi)
    c, s = np.cos(theta), np.sin(theta)
    rot = rotation_symplectic(phi)
    return np.block([[c * np.eye(2), -s * rot.T], [s * rot, c * np.eye(2)]])


def displacement_vector(alpha: complex) -> np.ndarray:
    """Phase-space displacement of a coherent amplitude, ``sqrt(2 hbar) (Re, Im)``."""
    _check_finite(np.real(alpha), np.imag(alpha))
    return np.sqrt(2.0 * HBAR) * np.array([np.real(alpha), np.imag(alpha)])


_OP_PARAM_NAMES = {
    "squeeze": ("r", "phi"),
    "squeeze2": ("r", "phi"),
    "beamsplitter": ("theta", "phi"),
    "rotation": ("phi",),
    "displacement": ("r", "phi"),
}


def d_symplectic(op_kind: str, params, which_param: int) -> np.ndarray:
    """Closed-form parameter derivative of a gate's symplectic matrix.

    Args:
        op_kind: one of ``squeeze``, ``squeeze2``, ``beamsplitter``,
            ``rotation``, ``displacement``.
        params: the gate parameters, in the order of the builder signature.
        which_param: index into ``params`` of the differentiation variable.

    Returns:
        The matrix ``dS/d(param)`` with the same shape as the gate.
    """
    if op_kind not in _OP_PARAM_NAMES:
        raise InvalidArgumentError(f"unknown op_kind {op_kind!r}")
    if not 0 <= which_param < len(_OP_PARAM_NAMES[op_kind]):
        raise InvalidArgumentError(
            f"{op_kind} has parameters {_OP_PARAM_NAMES[op_kind]}, "
            f"got index {which_param}"
        )
    _check_finite(*params)
    if op_kind == "squeeze":
        r, phi = params
        if which_param == 0:
            return np.sinh(r) * np.eye(2) - np.cosh(r) * _sq_phase(phi)
        return -np.sinh(r) * _d_sq_phase(phi)
    if op_kind == "squeeze2":
        r, phi = params
        if which_param == 0:
            dia = np.sinh(r) * np.eye(2)
            off = -np.cosh(r) * _sq_phase(phi)
        else:
            dia = np.zeros((2, 2))
            off = -np.sinh(r) * _d_sq_phase(phi)
        return np.block([[dia, off], [off, dia]])
    if op_kind == "beamsplitter":
        theta, phi = params
        c, s = np.cos(theta), np.sin(theta)
        if which_param == 0:
            rot = rotation_symplectic(phi)
            return np.block([[-s * np.eye(2), -c * rot.T], [c * rot, -s * np.eye(2)]])
        drot = _d_rotation(phi)
        zero = np.zeros((2, 2))
        return np.block([[zero, -s * drot.T], [s * drot, zero]])
    if op_kind == "rotation":
        return _d_rotation(params[0])
    # displacement: the symplectic part is the identity for any parameter
    return np.zeros((2, 2))


def d_displacement(params, which_param: int) -> np.ndarray:
    """Derivative of the displacement vector in polar parameters ``(r, phi)``."""
    r, phi = params
    _check_finite(r, phi)
    scale = np.sqrt(2.0 * HBAR)
    if which_param == 0:
        return scale * np.array([np.cos(phi), np.sin(phi)])
    if which_param == 1:
        return scale * np.array([-r * np.sin(phi), r * np.cos(phi)])
    raise InvalidArgumentError("displacement has parameters (r, phi)")


def embed(s: np.ndarray, modes, num_modes: int) -> np.ndarray:
    """Embed a gate acting on ``modes`` into the full 2N x 2N identity."""
    modes = [modes] if np.isscalar(modes) else list(modes)
    if s.shape[0] != 2 * len(modes):
        raise InvalidArgumentError("matrix size does not match the mode list")
    if any(m < 0 or m >= num_modes for m in modes):
        raise InvalidArgumentError("mode index out of range")
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    out = np.eye(2 * num_modes, dtype=s.dtype)
    out[np.ix_(idx, idx)] = s
    return out


def embed_vector(v: np.ndarray, modes, num_modes: int) -> np.ndarray:
    """Embed a displacement on ``modes`` into the full 2N vector."""
    modes = [modes] if np.isscalar(modes) else list(modes)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    out = np.zeros(2 * num_modes, dtype=np.asarray(v).dtype)
    out[idx] = v
    return out


@dataclass(frozen=True)
class GaussianChannel:
    """A deterministic Gaussian CPTP map ``mu -> X mu + d, sigma -> X sigma X^T + Y``."""

    X: np.ndarray
    Y: np.ndarray
    d: np.ndarray | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        x = np.asarray(self.X, dtype=float)
        y = np.asarray(self.Y, dtype=float)
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "Y", y)
        if self.d is not None:
            object.__setattr__(self, "d", np.asarray(self.d, dtype=float))
        if x.shape != y.shape or x.shape[0] != x.shape[1] or x.shape[0] % 2:
            raise InvalidArgumentError("X and Y must be equal even-dimensional squares")
        if np.max(np.abs(y - y.T)) > 1e-10:
            raise InvalidArgumentError("Y must be symmetric")
        if self.validate:
            w = omega(x.shape[0] // 2)
            test = y + 0.5j * HBAR * (w - x @ w @ x.T)
            if np.min(np.linalg.eigvalsh(test)) < -1e-10:
                raise UnphysicalStateError("(X, Y) violate the channel CP condition")

    @property
    def num_modes(self) -> int:
        return self.X.shape[0] // 2


def channel_loss(eta, nbar=0.0, modes: int = 1) -> GaussianChannel:
    """Loss/attenuation channel; ``eta`` may be scalar or one value per mode."""
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (modes,))
    nbar = np.broadcast_to(np.asarray(nbar, dtype=float), (modes,))
    if np.any(eta < 0) or np.any(eta > 1):
        raise InvalidArgumentError("transmissivity must lie in [0, 1]")
    if np.any(nbar < 0):
        raise InvalidArgumentError("thermal occupation must be non-negative")
    x = np.diag(np.repeat(np.sqrt(eta), 2))
    y = np.diag(np.repeat(0.5 * HBAR * (1.0 - eta) * (2.0 * nbar + 1.0), 2))
    return GaussianChannel(x, y)


def channel_gain(gain, modes: int = 1) -> GaussianChannel:
    """Gain/amplification channel with ``G >= 1``."""
    gain = np.broadcast_to(np.asarray(gain, dtype=float), (modes,))
    if np.any(gain < 1):
        raise InvalidArgumentError("gain must be >= 1")
    x = np.diag(np.repeat(np.sqrt(gain), 2))
    y = np.diag(np.repeat(0.5 * HBAR * (gain - 1.0), 2))
    return GaussianChannel(x, y)


def channel_random_displacement(w: np.ndarray) -> GaussianChannel:
    """Random Gaussian displacement channel with noise matrix ``W >= 0``."""
    w = np.asarray(w, dtype=float)
    if np.min(np.linalg.eigvalsh(0.5 * (w + w.T))) < -1e-12:
        raise InvalidArgumentError("noise matrix must be positive semidefinite")
    return GaussianChannel(np.eye(w.shape[0]), w)


def channel_from_symplectic(s: np.ndarray, d=None) -> GaussianChannel:
    """Wrap a Gaussian unitary as an (X, Y) channel."""
    return GaussianChannel(np.asarray(s, float), np.zeros_like(np.asarray(s, float)), d)


class WilliamsonDecomposition(NamedTuple):
    """Factorization ``sigma = S (hbar/2 I + diag(nu)) S^T`` with symplectic S.

    ``nu`` holds the 2N diagonal thermal-excess entries (pairs of equal values
    per mode, zero for pure states).
    """

    S: np.ndarray
    nu: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.S @ np.diag(0.5 * HBAR + self.nu) @ self.S.T


def williamson(sigma: np.ndarray) -> WilliamsonDecomposition:
    """Williamson decomposition of a physical covariance matrix.

    Uses the spectral method on ``sqrt(sigma) Omega sqrt(sigma)``: its real
    Schur form exposes the symplectic eigenvalues, and the orthogonal factor
    assembles the symplectic matrix.

    Raises:
        UnphysicalStateError: if a symplectic eigenvalue is below
            ``hbar/2 - 1e-9``.
    """
    sigma = np.asarray(sigma, dtype=float)
    n2 = sigma.shape[0]
    if sigma.shape != (n2, n2) or n2 % 2:
        raise InvalidArgumentError("covariance must be even-dimensional square")
    if np.max(np.abs(sigma - sigma.T)) > 1e-10 * max(1.0, np.max(np.abs(sigma))):
        raise InvalidArgumentError("covariance must be symmetric")
    evals, evecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    if evals[0] <= 0:
        raise UnphysicalStateError("covariance must be positive definite")
    root = (evecs * np.sqrt(evals)) @ evecs.T
    n = n2 // 2
    anti = root @ omega(n) @ root
    anti = 0.5 * (anti - anti.T)
    t, q = schur(anti, output="real")
    nu_sym = np.empty(n)
    for i in range(n):
        b = 0.5 * (t[2 * i, 2 * i + 1] - t[2 * i + 1, 2 * i])
        if b < 0:
            b = -b
            q[:, [2 * i, 2 * i + 1]] = q[:, [2 * i + 1, 2 * i]]
        nu_sym[i] = b
    if np.min(nu_sym) < 0.5 * HBAR - 1e-9:
        raise UnphysicalStateError(
            f"symplectic eigenvalue {np.min(nu_sym):.6g} below hbar/2"
        )
    d_half = np.repeat(nu_sym, 2)
    s = root @ q / np.sqrt(d_half)[None, :]
    nu = np.clip(d_half - 0.5 * HBAR, 0.0, None)
    rec = s @ np.diag(0.5 * HBAR + nu) @ s.T
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if np.max(np.abs(rec - sigma)) > 1e-8 * scale:
        raise NumericalStabilityError("Williamson reconstruction self-check failed")
    return WilliamsonDecomposition(s, nu)
