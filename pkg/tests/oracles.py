"""Independent reference computations used as test oracles.

Everything here works in the truncated Fock basis or from closed-form
expressions, never through the package's Gaussian-combination pipeline, so
these values can arbitrate it.
"""

import numpy as np
from scipy.special import eval_laguerre, factorial


def coherent_fock(alpha: complex, cutoff: int) -> np.ndarray:
    """Fock amplitudes of |alpha> up to ``cutoff``."""
    n = np.arange(cutoff + 1)
    amp = np.zeros(cutoff + 1, dtype=complex)
    amp[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for k in range(1, cutoff + 1):
        amp[k] = amp[k - 1] * alpha / np.sqrt(k)
    return amp


def ring_ket_fock(amplitudes, eps: float, cutoff: int) -> np.ndarray:
    """Fock vector of the coherent-ring decomposition (unnormalized).

    Uses the inverse-Fourier ring coefficients directly; independent of the
    package's Wigner-domain construction.
    """
    a = np.atleast_1d(np.asarray(amplitudes, complex))
    n = a.size - 1
    ks = np.arange(n + 1)
    ls = np.arange(n + 1)
    coeff = np.exp(0.5 * eps * eps) / (n + 1) * (
        (a * np.sqrt(factorial(ls)) / eps**ls)
        @ np.exp(-2j * np.pi * np.outer(ls, ks) / (n + 1))
    )
    out = np.zeros(cutoff + 1, dtype=complex)
    for k, c in zip(ks, coeff):
        out += c * coherent_fock(eps * np.exp(2j * np.pi * k / (n + 1)), cutoff)
    return out


def fock_wigner(n: int, points: np.ndarray) -> np.ndarray:
    """Exact Wigner function of |n><n| at hbar = 2 (Laguerre form)."""
    pts = np.atleast_2d(points)
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    return ((-1.0) ** n / (2.0 * np.pi)) * np.exp(-r2 / 2.0) * eval_laguerre(n, r2)


def tmsv_fock(r: float, cutoff: int) -> np.ndarray:
    """Schmidt coefficients of the two-mode squeezed vacuum."""
    lam = np.tanh(r)
    coeff = np.sqrt(1 - lam**2) * lam ** np.arange(cutoff + 1)
    return coeff


def loss_channel_fock(rho: np.ndarray, eta: float) -> np.ndarray:
    """Pure-loss channel on a truncated Fock density matrix (Kraus sum)."""
    dim = rho.shape[0]
    out = np.zeros_like(rho)
    n = np.arange(dim)
    sqrt_eta_pow = eta ** (0.5 * n)
    for k in range(dim):
        # K_k = sqrt((1-eta)^k / k!) eta^(n_hat/2) a^k, eta power on the output
        amp = np.zeros((dim, dim))
        for m in range(k, dim):
            fall = np.prod(np.arange(m, m - k, -1, dtype=float))
            amp[m - k, m] = np.sqrt((1 - eta) ** k * fall / factorial(k))
        kraus = amp * sqrt_eta_pow[:, None]
        out += kraus @ rho @ kraus.conj().T
    return out


def p_clicks_given_photons(k: int, m: int, n: int) -> float:
    """Probability of k clicks from n photons on an m-fold multiplexed detector."""
    if not k <= n:
        return 0.0
    from math import comb

    return (
        comb(m, k)
        / m**n
        * sum((-1) ** i * comb(k, i) * (k - i) ** n for i in range(k + 1))
    )


def thermal_fock_diag(nbar: float, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    return nbar**n / (nbar + 1.0) ** (n + 1)


def gaussian_condition(mu, sigma, b_idx, value_idx, value):
    """Dense-matrix Gaussian conditioning oracle (homodyne-style update)."""
    mu = np.asarray(mu, float)
    sigma = np.asarray(sigma, float)
    a_idx = [i for i in range(len(mu)) if i not in b_idx]
    s = sigma[value_idx, value_idx]
    cross = sigma[np.ix_(a_idx, [value_idx])][:, 0]
    mu_c = mu[a_idx] + cross * (value - mu[value_idx]) / s
    sig_c = sigma[np.ix_(a_idx, a_idx)] - np.outer(cross, cross) / s
    density = np.exp(-0.5 * (value - mu[value_idx]) ** 2 / s) / np.sqrt(2 * np.pi * s)
    return mu_c, sig_c, density


def overlap_extended(a, b) -> float:
    """Overlap in extended (long-double) precision.

    Mirrors the phase-space pair formula with ``complex256`` arithmetic so
    the cancellation-limited sums of ill-conditioned pipeline states can be
    certified a few digits beyond float64.
    """
    fa, fb = a.to_full_form(), b.to_full_form()
    ld = np.complex256
    n = fa.num_modes
    means_a = fa.means.astype(ld)
    w_a = fa.log_weights.astype(ld)
    covs_a = fa.covs.astype(ld)
    total = np.clongdouble(0)
    log_hbar = np.longdouble(np.log(2.0))
    for l in range(fb.num_weights):
        omega_l = (fb.covs[0] if fb.covs.shape[0] == 1 else fb.covs[l]).astype(ld)
        nu_l = fb.means[l].astype(ld)
        m = covs_a + omega_l[None]
        if m.shape[0] == 1:
            inv = np.linalg.inv(m[0].astype(complex)).astype(ld)
            # one long-double Newton step refines the float64 inverse
            inv = 2 * inv - inv @ m[0] @ inv
            det = np.linalg.det(m[0].astype(complex))
            diff = means_a - nu_l[None]
            quad = -0.5 * np.einsum("ki,ij,kj->k", diff, inv, diff)
            delta = n * log_hbar - 0.5 * np.log(np.clongdouble(det))
        else:
            inv64 = np.linalg.inv(m.astype(complex))
            inv = inv64.astype(ld)
            inv = 2 * inv - np.einsum("kij,kjl,klm->kim", inv, m, inv)
            det = np.linalg.det(m.astype(complex))
            diff = means_a - nu_l[None]
            quad = -0.5 * np.einsum("ki,kij,kj->k", diff, inv, diff)
            delta = n * log_hbar - 0.5 * np.log(det.astype(np.clongdouble))
        terms = np.exp(w_a + np.clongdouble(fb.log_weights[l]) + quad + delta)
        total = total + terms.sum()
    return float(np.real(total))


def char_fun_extended(state, alpha) -> complex:
    """Characteristic function in extended precision (single mode)."""
    full = state.to_full_form()
    ld = np.complex256
    a = complex(alpha)
    u = np.array([-a.imag, a.real], dtype=np.longdouble)  # Omega^T alpha
    covs = full.covs.astype(ld)
    quad = -0.5 * np.einsum("i,cij,j->c", u.astype(ld), covs, u.astype(ld))
    expo = full.log_weights.astype(ld) - 1j * (full.means.astype(ld) @ u.astype(ld))
    expo = expo + (quad[0] if full.covs.shape[0] == 1 else quad)
    return complex(np.exp(expo).sum())


def overlap_mp(a, b, dps: int = 40) -> float:
    """Overlap with every pair term evaluated in mpmath precision.

    Slow (pure-Python pair loop) but immune to the cancellation noise of
    double-precision pair sums; use for certifying 1e-6-level fidelities of
    ill-conditioned pipeline states. Requires shared covariances on both
    sides (true for photon-counting pipelines).
    """
    import mpmath as mp

    fa, fb = a.to_full_form(), b.to_full_form()
    if not (fa.shared_cov and fb.shared_cov):
        raise ValueError("mp overlap oracle expects shared covariances")
    with mp.workdps(dps):
        cov = [
            [mp.mpc(fa.covs[0][i, j]) + mp.mpc(fb.covs[0][i, j]) for j in range(2)]
            for i in range(2)
        ]
        det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0]
        inv = [
            [cov[1][1] / det, -cov[0][1] / det],
            [-cov[1][0] / det, cov[0][0] / det],
        ]
        delta = mp.log(mp.mpf(2)) - mp.mpf("0.5") * mp.log(det)
        w_a = [mp.mpc(x) for x in fa.log_weights]
        w_b = [mp.mpc(x) for x in fb.log_weights]
        mu_a = [(mp.mpc(m[0]), mp.mpc(m[1])) for m in fa.means]
        mu_b = [(mp.mpc(m[0]), mp.mpc(m[1])) for m in fb.means]
        total = mp.mpc(0)
        for k in range(fa.num_weights):
            ak0, ak1 = mu_a[k]
            wk = w_a[k] + delta
            for l in range(fb.num_weights):
                d0 = ak0 - mu_b[l][0]
                d1 = ak1 - mu_b[l][1]
                quad = d0 * (inv[0][0] * d0 + inv[0][1] * d1) + d1 * (
                    inv[1][0] * d0 + inv[1][1] * d1
                )
                total += mp.e ** (wk + w_b[l] - quad / 2)
        return float(mp.re(total))


def trace_mp(state, dps: int = 40) -> float:
    """Exact weight sum (trace) of the stored representation in mpmath."""
    import mpmath as mp

    full = state.to_full_form()
    with mp.workdps(dps):
        total = mp.mpc(0)
        for w in full.log_weights:
            total += mp.e ** mp.mpc(w)
        return float(mp.re(total))
