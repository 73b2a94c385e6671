import json

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcgsim import symplectic as sp
from lcgsim.errors import DegenerateStateError, InvalidArgumentError
from lcgsim.state import LcogState, coherent_outer_product

from oracles import loss_channel_fock, coherent_fock


def test_vacuum_basics():
    v = LcogState.vacuum(1)
    assert v.num_weights == 1
    assert np.allclose(v.means, 0)
    assert np.allclose(v.covs[0], np.eye(2))
    assert v.log_norm() == 0
    assert LcogState.vacuum(3).covs[0].shape == (6, 6)
    with pytest.raises(InvalidArgumentError):
        LcogState.vacuum(0)


def test_single_coherent_term():
    s = LcogState.from_coherent_superposition([1.0], [2.0])
    assert s.num_weights == 1
    assert np.allclose(s.means[0], [4.0, 0.0])
    assert np.allclose(s.covs[0], np.eye(2))


def test_even_cat_norm():
    s = LcogState.from_coherent_superposition([1, 1], [1, -1], normalize=False)
    raw = np.exp(s.log_norm()).real
    assert np.isclose(raw, 2 + 2 * np.exp(-2), atol=1e-12)


def test_odd_cat_wigner_negative_at_origin():
    s = LcogState.from_coherent_superposition([1, -1], [1, -1])
    assert s.wigner(np.zeros(2)) < 0


def test_tensor_counts_and_norm():
    v2 = LcogState.vacuum(1).tensor(LcogState.vacuum(1))
    assert v2.num_weights == 1 and v2.num_modes == 2
    assert np.allclose(v2.covs[0], np.eye(4))
    a = LcogState.from_coherent_superposition([1, 1], [1, -1])
    b = LcogState.from_coherent_superposition([1, 1j, 1], [1, 0, -1])
    ab = a.tensor(b)
    assert ab.num_weights == 4 * 9
    norm = np.exp(ab.log_norm()).real
    assert np.isclose(norm, 1.0, atol=1e-12)


def test_apply_symplectic_identity_and_squeeze():
    cat = LcogState.from_coherent_superposition([1, 1], [1, -1])
    same = cat.apply_symplectic(np.eye(2))
    assert np.allclose(same.means, cat.means)
    sq = LcogState.vacuum(1).apply_symplectic(sp.squeeze_symplectic(0.4))
    assert np.allclose(sq.covs[0], np.diag([np.exp(-0.8), np.exp(0.8)]))


def test_beamsplitter_on_opposite_squeezers_matches_tmsv():
    r = 0.37
    two = LcogState.vacuum(2)
    two = two.apply_symplectic(sp.squeeze_symplectic(r), modes=0)
    two = two.apply_symplectic(sp.squeeze_symplectic(-r), modes=1)
    two = two.apply_symplectic(sp.beamsplitter_symplectic(np.pi / 4), modes=[0, 1])
    s = sp.two_mode_squeeze_symplectic(r)
    # phase-space algebra oracle: both are pure Gaussian states
    expected = s @ s.T
    got = two.covs[0].real
    # the BS construction gives a two-mode squeezed state up to local rotation;
    # compare symplectic invariants and the actual matrix after orientation fix
    assert np.allclose(sorted(np.linalg.eigvalsh(got)), sorted(np.linalg.eigvalsh(expected)), atol=1e-10)
    # mode correlations have equal magnitude
    assert np.isclose(abs(got[0, 2]), abs(expected[0, 2]), atol=1e-10)


def test_loss_to_vacuum_and_coherent_scaling():
    cat = LcogState.from_coherent_superposition([1, 1], [1.3, -1.3])
    dead = cat.apply_loss(0.0)
    assert np.allclose(dead.covariance(), np.eye(2), atol=1e-10)
    assert np.allclose(dead.mean_vector(), 0, atol=1e-10)
    coh = LcogState.coherent(0.8).apply_loss(0.9)
    assert np.allclose(coh.mean_vector(), np.sqrt(0.9) * np.array([1.6, 0.0]))
    assert np.allclose(coh.covariance(), np.eye(2), atol=1e-12)


def test_lossy_cat_against_fock_kraus_oracle():
    alpha, eta = 1.0, 0.7
    cat = LcogState.from_coherent_superposition([1, 1], [alpha, -alpha]).apply_loss(eta)
    # oracle: build the cat in Fock space, apply the Kraus loss channel
    cutoff = 24
    ket = coherent_fock(alpha, cutoff) + coherent_fock(-alpha, cutoff)
    ket = ket / np.linalg.norm(ket)
    rho = loss_channel_fock(np.outer(ket, ket.conj()), eta)
    # convert our state (vacuum covariance) to Fock via the stellar bridge
    from lcgsim.stellar import _core_outer_data, coherent_to_fock

    log_c, alphas, betas = _core_outer_data(cat.to_full_form())
    ours = coherent_to_fock(log_c, alphas, betas, cutoff)
    ours = ours / np.trace(ours).real
    assert np.max(np.abs(ours - rho)) < 1e-8


def test_log_norm_shifted_and_quarters():
    w = np.log(np.full(4, 0.25)).astype(complex)
    s = LcogState(1, w, np.zeros((4, 2)), np.eye(2, dtype=complex)[None], num_k=4)
    assert abs(s.log_norm()) < 1e-14


def test_log_norm_matches_extended_precision():
    rng = np.random.default_rng(42)
    n = 100_000
    w = rng.uniform(-40, 2, n) + 1j * rng.uniform(-np.pi, np.pi, n)
    s = LcogState(1, w, np.zeros((n, 2)), np.eye(2, dtype=complex)[None], num_k=n)
    got = s.log_norm()
    mp.mp.dps = 40
    shift = float(np.max(w.real))
    total = mp.mpc(0)
    for chunk in np.array_split(np.exp(w - shift), 16):
        total += mp.fsum(chunk.real) + 1j * mp.fsum(chunk.imag)
    expected = complex(shift + mp.log(total))
    assert abs(got - expected) / abs(expected) < 1e-12


def test_log_norm_degenerate():
    w = np.full(3, -np.inf, dtype=complex)
    s = LcogState(1, w, np.zeros((3, 2)), np.eye(2, dtype=complex)[None], num_k=3)
    with pytest.raises(DegenerateStateError):
        s.log_norm()


def test_reduced_full_roundtrip_wigner():
    rng = np.random.default_rng(0)
    pts = rng.normal(scale=2.0, size=(100, 2))
    for state in [
        LcogState.from_coherent_superposition([1, 1], [1, -1], reduced=True),
        LcogState.from_coherent_superposition([1, 1j, -0.5], [1, 0.3 - 0.4j, -1], reduced=True),
    ]:
        full = state.to_full_form()
        back = full.to_reduced_form()
        assert np.max(np.abs(state.wigner(pts) - full.wigner(pts))) < 1e-12
        assert np.max(np.abs(back.wigner(pts) - full.wigner(pts))) < 1e-12


def test_cat_reduced_term_count():
    red = LcogState.from_coherent_superposition([1, 1], [1, -1], reduced=True)
    full = LcogState.from_coherent_superposition([1, 1], [1, -1])
    assert red.num_weights == 3 and red.num_k == 2
    assert full.num_weights == 4


def test_operations_commute_with_form_change():
    rng = np.random.default_rng(3)
    pts = rng.normal(scale=1.5, size=(60, 2))
    red = LcogState.from_coherent_superposition([1, -1j], [0.7, -0.7], reduced=True)
    s = sp.squeeze_symplectic(0.3, 0.8)
    a = red.apply_symplectic(s).to_full_form()
    b = red.to_full_form().apply_symplectic(s)
    assert np.max(np.abs(a.wigner(pts) - b.wigner(pts))) < 1e-10
    a = red.apply_loss(0.85).to_full_form()
    b = red.to_full_form().apply_loss(0.85)
    assert np.max(np.abs(a.wigner(pts) - b.wigner(pts))) < 1e-10


def test_trace_preserved_by_channels():
    state = LcogState.from_coherent_superposition([1, 0.5j], [1.1, -0.9])
    for op in [
        lambda s: s.apply_symplectic(sp.squeeze_symplectic(0.5, 0.2)),
        lambda s: s.apply_loss(0.8),
        lambda s: s.apply_channel(sp.channel_gain(1.5)),
    ]:
        out = op(state)
        assert abs(np.exp(out.log_norm()).real - 1.0) < 1e-10


def test_wigner_reality_random_points():
    rng = np.random.default_rng(9)
    state = LcogState.from_coherent_superposition([1, 1j, 1], [1, 1j, -1])
    pts = rng.normal(scale=2.5, size=(100, 2))
    from lcgsim.state import _wigner_complex

    vals = _wigner_complex(state.to_full_form(), pts)
    assert np.max(np.abs(vals.imag)) <= 1e-10 * np.max(np.abs(vals.real))


def test_tensor_reduced_matches_full():
    rng = np.random.default_rng(4)
    a = LcogState.from_coherent_superposition([1, 1], [0.9, -0.9], reduced=True)
    b = LcogState.from_coherent_superposition([1, -1], [0.5, -0.5], reduced=True)
    red = a.tensor(b)
    full = a.to_full_form().tensor(b.to_full_form())
    # sector bookkeeping: k1 k2 real, k1 c2 + c1 k2 + 2 c1 c2 complex
    assert red.num_k == 4 and red.num_weights == 4 + (2 + 2 + 2)
    pts = rng.normal(scale=1.5, size=(50, 4))
    assert np.max(np.abs(red.wigner(pts) - full.wigner(pts))) < 1e-11


def test_pruning_is_opt_in():
    w = np.array([0.0, np.log(1e-20)], dtype=complex)
    s = LcogState(1, w, np.zeros((2, 2)), np.eye(2, dtype=complex)[None], num_k=2)
    assert s.num_weights == 2  # nothing dropped on construction
    assert s.prune(rel_tol=0).num_weights == 2
    assert s.prune(rel_tol=1e-16).num_weights == 1


def test_degenerate_covariance_rejected():
    with pytest.raises(Exception):
        LcogState.from_gaussian(np.zeros(2), np.diag([1e-16, 1.0]))


def test_serialization_roundtrip(tmp_path):
    state = LcogState.from_coherent_superposition([1, 1j], [1.0, -0.5 + 0.2j], reduced=True)
    path = tmp_path / "state.json"
    state.save(path)
    back = LcogState.load(path)
    assert back.num_modes == state.num_modes
    assert back.num_k == state.num_k
    assert np.allclose(back.log_weights, state.log_weights)
    assert np.allclose(back.means, state.means)
    assert np.allclose(back.covs, state.covs)
    doc = json.loads(path.read_text())
    assert doc["schema"] == "lcg-sim/1"
    assert doc["hbar"] == 2.0


def test_serialization_rejects_other_schema(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema": "other/9", "kind": "state"}))
    with pytest.raises(InvalidArgumentError):
        LcogState.load(path)


@given(st.integers(1, 4), st.integers(1, 4))
@settings(max_examples=20, deadline=None)
def test_tensor_norm_multiplicative(n_a, n_b):
    rng = np.random.default_rng(n_a * 7 + n_b)
    a = LcogState.from_coherent_superposition(
        rng.normal(size=n_a) + 1j * rng.normal(size=n_a),
        rng.normal(size=n_a) + 1j * rng.normal(size=n_a),
        normalize=False,
    )
    b = LcogState.from_coherent_superposition(
        rng.normal(size=n_b) + 1j * rng.normal(size=n_b),
        rng.normal(size=n_b) + 1j * rng.normal(size=n_b),
        normalize=False,
    )
    ab = a.tensor(b)
    na, nb, nab = (np.exp(s.log_norm()) for s in (a, b, ab))
    assert abs(nab - na * nb) <= 1e-12 * max(1.0, abs(na * nb))


def test_coherent_outer_product_trace():
    # trace of |a><b| equals <b|a>
    for a, b in [(1.0, 1.0), (1.2 + 0.3j, -0.7j), (0.5, -0.5)]:
        mu, d = coherent_outer_product(a, b)
        inner = np.exp(-0.5 * abs(a) ** 2 - 0.5 * abs(b) ** 2 + np.conj(b) * a)
        assert np.isclose(np.exp(d), inner, atol=1e-14)
