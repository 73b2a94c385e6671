import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from lcgsim import symplectic as sp
from lcgsim.errors import InvalidArgumentError, UnphysicalStateError


def test_squeeze_identity_and_diag():
    assert np.allclose(sp.squeeze_symplectic(0.0, 1.234), np.eye(2))
    assert np.allclose(sp.squeeze_symplectic(np.log(2), 0.0), np.diag([0.5, 2.0]))


def test_squeeze_matches_matrix_exponential():
    r, phi = 0.3, np.pi / 2
    gen = -r * np.array([[np.cos(phi), np.sin(phi)], [np.sin(phi), -np.cos(phi)]])
    assert np.allclose(sp.squeeze_symplectic(r, phi), expm(gen), atol=1e-12)


def test_beamsplitter_special_angles():
    assert np.allclose(sp.beamsplitter_symplectic(0.0, 0.0), np.eye(4))
    swap = sp.beamsplitter_symplectic(np.pi / 2, 0.0)
    assert np.allclose(swap[:2, 2:], -np.eye(2))
    assert np.allclose(swap[2:, :2], np.eye(2))
    half = sp.beamsplitter_symplectic(np.pi / 4, 0.0)
    assert np.allclose(np.abs(half), np.eye(4) * 0 + np.kron(np.ones((2, 2)), np.eye(2)) / np.sqrt(2))
    assert sp.is_symplectic(half)


def test_two_mode_squeeze():
    assert np.allclose(sp.two_mode_squeeze_symplectic(0.0, 0.0), np.eye(4))
    s = sp.two_mode_squeeze_symplectic(0.5, 0.0)
    assert np.allclose(s[:2, 2:], -np.sinh(0.5) * np.diag([1.0, -1.0]))
    assert sp.is_symplectic(sp.two_mode_squeeze_symplectic(1.2, 0.7))


def test_rotation_and_displacement():
    assert np.allclose(sp.rotation_symplectic(0.0), np.eye(2))
    assert np.allclose(sp.displacement_vector(0.0), np.zeros(2))
    assert np.allclose(sp.displacement_vector(1 + 1j), np.array([2.0, 2.0]))


def test_non_finite_rejected():
    with pytest.raises(InvalidArgumentError):
        sp.squeeze_symplectic(np.nan, 0.0)
    with pytest.raises(InvalidArgumentError):
        sp.beamsplitter_symplectic(np.inf, 0.0)


@given(
    st.floats(-2, 2),
    st.floats(-np.pi, np.pi),
    st.sampled_from(["squeeze", "squeeze2", "beamsplitter", "rotation"]),
)
@settings(max_examples=60, deadline=None)
def test_builders_preserve_symplectic_form(r, phi, kind):
    if kind == "squeeze":
        s = sp.squeeze_symplectic(r, phi)
    elif kind == "squeeze2":
        s = sp.two_mode_squeeze_symplectic(r, phi)
    elif kind == "beamsplitter":
        s = sp.beamsplitter_symplectic(r, phi)
    else:
        s = sp.rotation_symplectic(phi)
    assert sp.is_symplectic(s, tol=1e-12)


def test_channel_loss_table_values():
    ch = sp.channel_loss(1.0, 0.0)
    assert np.allclose(ch.X, np.eye(2)) and np.allclose(ch.Y, 0)
    ch = sp.channel_loss(0.5, 0.0)
    assert np.allclose(ch.X, np.sqrt(0.5) * np.eye(2))
    assert np.allclose(ch.Y, 0.5 * np.eye(2))
    ch = sp.channel_gain(2.0)
    assert np.allclose(ch.X, np.sqrt(2.0) * np.eye(2))
    assert np.allclose(ch.Y, np.eye(2))


def test_channel_argument_ranges():
    with pytest.raises(InvalidArgumentError):
        sp.channel_loss(1.2)
    with pytest.raises(InvalidArgumentError):
        sp.channel_loss(-0.1)
    with pytest.raises(InvalidArgumentError):
        sp.channel_gain(0.9)
    with pytest.raises(InvalidArgumentError):
        sp.channel_random_displacement(-np.eye(2))


def test_loss_composition():
    rng = np.random.default_rng(5)
    s0 = sp.squeeze_symplectic(0.6, 0.3)
    cov = s0 @ s0.T
    mean = rng.normal(size=2)
    for eta1, eta2 in [(0.9, 0.8), (0.5, 0.7)]:
        a, b = sp.channel_loss(eta1), sp.channel_loss(eta2)
        cov1 = b.X @ (a.X @ cov @ a.X.T + a.Y) @ b.X.T + b.Y
        mean1 = b.X @ (a.X @ mean)
        c = sp.channel_loss(eta1 * eta2)
        assert np.allclose(cov1, c.X @ cov @ c.X.T + c.Y, atol=1e-12)
        assert np.allclose(mean1, c.X @ mean, atol=1e-12)


def test_williamson_vacuum_and_thermal():
    dec = sp.williamson(np.eye(2))
    assert np.allclose(dec.S, np.eye(2)) and np.allclose(dec.nu, 0.0)
    dec = sp.williamson(3.0 * np.eye(2))
    assert np.allclose(dec.nu, 2.0)
    assert np.allclose(dec.reconstruct(), 3.0 * np.eye(2))


def _random_symplectic(rng, n_modes):
    s = np.eye(2 * n_modes)
    for _ in range(4):
        m = rng.integers(0, n_modes)
        s = sp.embed(sp.squeeze_symplectic(rng.uniform(-1, 1), rng.uniform(0, np.pi)), m, n_modes) @ s
        if n_modes > 1:
            i = rng.integers(0, n_modes - 1)
            s = sp.embed(
                sp.beamsplitter_symplectic(rng.uniform(0, np.pi / 2), rng.uniform(0, np.pi)),
                [i, i + 1],
                n_modes,
            ) @ s
    return s


@pytest.mark.parametrize("n_modes", [1, 2, 3])
def test_williamson_reconstruction_roundtrip(n_modes):
    rng = np.random.default_rng(17 + n_modes)
    for _ in range(34):
        s0 = _random_symplectic(rng, n_modes)
        nbars = rng.uniform(0, 1.5, n_modes)
        d = np.diag(np.repeat(2 * nbars + 1.0, 2))
        sigma = s0 @ d @ s0.T
        dec = sp.williamson(sigma)
        assert sp.is_symplectic(dec.S, tol=1e-8)
        assert np.max(np.abs(dec.reconstruct() - sigma)) <= 1e-9 * max(
            1.0, np.max(np.abs(sigma))
        )
        pairs = dec.nu.reshape(-1, 2)
        assert np.allclose(pairs[:, 0], pairs[:, 1], atol=1e-9)


def test_williamson_pure_detects_zero_excess():
    rng = np.random.default_rng(2)
    for _ in range(20):
        s0 = _random_symplectic(rng, 2)
        dec = sp.williamson(s0 @ s0.T)
        assert np.max(np.abs(dec.nu)) < 1e-8


def test_williamson_rejects_unphysical():
    with pytest.raises(UnphysicalStateError):
        sp.williamson(0.5 * np.eye(2))


@pytest.mark.parametrize(
    "kind,params",
    [
        ("squeeze", (0.7, 0.4)),
        ("squeeze2", (0.5, 1.1)),
        ("beamsplitter", (0.8, 0.3)),
        ("rotation", (0.9,)),
    ],
)
def test_gate_derivative_trivial_points(kind, params):
    if kind == "squeeze":
        d = sp.d_symplectic("squeeze", (0.0, 0.0), 0)
        assert np.allclose(d, np.diag([-1.0, 1.0]))
    if kind == "beamsplitter":
        d = sp.d_symplectic("beamsplitter", (0.0, 0.0), 0)
        assert np.allclose(d[:2, 2:], -np.eye(2))
        assert np.allclose(d[2:, :2], np.eye(2))


def test_gate_derivatives_match_finite_differences():
    rng = np.random.default_rng(11)
    builders = {
        "squeeze": lambda p: sp.squeeze_symplectic(*p),
        "squeeze2": lambda p: sp.two_mode_squeeze_symplectic(*p),
        "beamsplitter": lambda p: sp.beamsplitter_symplectic(*p),
        "rotation": lambda p: sp.rotation_symplectic(p[0]),
    }
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        kind = rng.choice(list(builders))
        n_par = 1 if kind == "rotation" else 2
        params = rng.uniform(-1.5, 1.5, n_par)
        which = rng.integers(0, n_par)
        build = builders[kind]
        up, down = params.copy(), params.copy()
        up[which] += h
        down[which] -= h
        fd = (build(up) - build(down)) / (2 * h)
        worst = max(worst, np.max(np.abs(sp.d_symplectic(kind, params, which) - fd)))
    assert worst < 1e-6


def test_displacement_derivative():
    d = sp.d_displacement((1.5, 0.3), 0)
    assert np.allclose(d, 2.0 * np.array([np.cos(0.3), np.sin(0.3)]))
    d = sp.d_displacement((1.5, 0.3), 1)
    assert np.allclose(d, 2.0 * 1.5 * np.array([-np.sin(0.3), np.cos(0.3)]))


def test_unknown_op_kind():
    with pytest.raises(InvalidArgumentError):
        sp.d_symplectic("kerr", (0.1,), 0)


def test_db_conversion():
    assert np.isclose(sp.db_to_r(15.0), 1.7269, atol=1e-4)
    assert np.isclose(sp.r_to_db(sp.db_to_r(7.3)), 7.3)
