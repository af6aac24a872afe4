import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cfsleep.channel import (ChannelRealization, RisPhase, array_response, cascade,
                             dump_realization, effective_channel, load_realization_dump,
                             los_mean_channel, realize, sample_channels, spatial_correlation,
                             wrap_phase)
from cfsleep.config import ScenarioConfig
from cfsleep.scenario import LargeScale, Topology

from conftest import small_config, toy_realization

LAM = ScenarioConfig().wavelength


def test_array_response_broadside_is_all_ones():
    np.testing.assert_allclose(array_response(0.0, 0.0, 3, 4, LAM / 2, LAM), np.ones(12))


def test_array_response_two_element_endfire():
    a = array_response(np.pi / 2, 0.0, 2, 1, LAM / 2, LAM)
    np.testing.assert_allclose(a, [1, -1], atol=1e-15)


def test_array_response_row_major_indexing():
    th, ph = 0.3, 0.2
    a = array_response(th, ph, 3, 2, LAM / 2, LAM)
    for ia in range(3):
        for ib in range(2):
            expected = np.exp(1j * np.pi * (ia * np.sin(th) * np.cos(ph) + ib * np.sin(ph)))
            assert a[ia * 2 + ib] == pytest.approx(expected, abs=1e-14)


@given(st.floats(-np.pi, np.pi), st.floats(-np.pi / 2, np.pi / 2), st.integers(1, 6),
       st.integers(1, 6))
def test_array_response_unit_modulus(theta, phi, ny, nz):
    a = array_response(theta, phi, ny, nz, LAM / 2, LAM)
    assert a.shape == (ny * nz,)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-14)


@pytest.mark.parametrize("ny,nz", [(1, 1), (2, 1), (4, 4), (8, 8)])
def test_spatial_correlation_structure(ny, nz):
    R = spatial_correlation(ny, nz, LAM / 2, LAM)
    np.testing.assert_allclose(np.diag(R), 1.0, atol=1e-12)
    assert np.abs(R - R.conj().T).max() < 1e-14
    assert np.linalg.eigvalsh(R).min() >= -1e-9
    if ny * nz > 1:
        # adjacent elements at half-wavelength spacing: sin(pi)/pi = 0
        assert abs(R[0, 1 if nz > 1 else nz]) < 1e-12


def test_phase_wrapping_and_unit_modulus():
    ph = RisPhase(np.array([[-0.1, 7.0, 2 * np.pi]]))
    assert np.all((ph.angles >= 0) & (ph.angles < 2 * np.pi))
    np.testing.assert_allclose(np.abs(ph.coefficients), 1.0, atol=0)
    assert wrap_phase(np.array([-1e-300]))[0] < 2 * np.pi


def _grid_topology(M, K, L):
    rng = np.random.default_rng(0)
    aps = np.column_stack([rng.uniform(0, 100, (M, 2)), np.full(M, 12.5)])
    ues = np.column_stack([rng.uniform(0, 100, (K, 2)), np.full(K, 1.5)])
    ris = np.column_stack([rng.uniform(0, 100, (L, 2)), np.full(L, 13.5)])
    return Topology(aps, ues, ris, np.zeros(L))


def test_direct_link_moments_rayleigh_and_rician():
    cfg = ScenarioConfig(num_aps=300, num_ues=20, num_ris=0, area_side=100.0)
    topo = _grid_topology(300, 20, 0)
    beta = 1e-9
    for kappa in (0.0, 4.0):
        large = LargeScale(np.full((300, 20), beta), np.full((300, 20), kappa), np.zeros((300, 0)),
                           np.zeros((0, 20)), np.zeros((0, 20)))
        real = sample_channels(topo, large, cfg, np.random.default_rng(5))
        nlos = real.h_au_nlos.ravel()
        n = nlos.size
        # zero-mean scatter, variance beta / (kappa + 1)
        assert abs(nlos.mean()) < 3 * np.sqrt(beta / (kappa + 1) / n)
        assert np.mean(np.abs(nlos) ** 2) == pytest.approx(beta / (kappa + 1), rel=0.02)
        np.testing.assert_allclose(np.abs(real.h_au_los), np.sqrt(beta * kappa / (kappa + 1)),
                                   rtol=1e-12)


def test_ris_ue_covariance_matches_gamma():
    cfg = ScenarioConfig(num_aps=2, num_ues=20, num_ris=1, ris_rows=2, ris_cols=2,
                         area_side=100.0)
    topo = _grid_topology(2, 20, 1)
    large = LargeScale(np.full((2, 20), 1e-9), np.zeros((2, 20)), np.full((2, 1), 1e-6),
                       np.full((1, 20), 2e-8), np.full((1, 20), 3.0))
    samples = []
    rng = np.random.default_rng(11)
    for _ in range(1000):
        real = sample_channels(topo, large, cfg, rng)
        samples.append(real.h_ru_nlos[0])
    z = np.concatenate(samples)  # (20000, N)
    emp = z.T @ z.conj() / z.shape[0]
    gamma = real.gamma_ru(0, 0)
    assert np.linalg.norm(emp - gamma) / np.linalg.norm(gamma) < 0.05
    assert np.trace(gamma).real == pytest.approx(2e-8 * 4 / 4.0)


def test_ap_ris_entries_have_sqrt_beta_magnitude():
    cfg = small_config(M=4, K=2, L=3)
    _, real = realize(cfg, np.random.default_rng(2))
    for l in range(3):
        for m in range(4):
            np.testing.assert_allclose(np.abs(real.H_ar[l, m]), np.sqrt(real.large.beta_ar[m, l]),
                                       rtol=1e-12)


def test_no_ris_gives_direct_channel():
    cfg = small_config(M=3, K=2, L=0)
    _, real = realize(cfg, np.random.default_rng(0))
    np.testing.assert_array_equal(effective_channel(real, np.zeros((0, 4))), real.h_au)
    _, real = realize(small_config(M=3, K=2, L=2), np.random.default_rng(0))
    bare = real.without_ris()
    assert bare.num_ris == 0
    np.testing.assert_array_equal(effective_channel(bare, np.zeros((0, 4))), real.h_au)


def test_scalar_cascade():
    real = toy_realization([[0.3 + 0.1j]], [[[1.0]]], [[[1.0]]])
    g = effective_channel(real, np.array([[np.pi]]))
    assert g[0, 0] == pytest.approx(0.3 + 0.1j - 1.0, abs=1e-15)


def test_effective_channel_matches_scalar_loops():
    cfg = small_config(M=4, K=3, L=2, rows=2, cols=3)
    _, real = realize(cfg, np.random.default_rng(9))
    theta = RisPhase.random(2, 6, np.random.default_rng(1)).angles
    G = effective_channel(real, theta)
    h_au, H, h_ru = real.h_au, real.H_ar, real.h_ru
    for m in range(4):
        for k in range(3):
            acc = h_au[m, k]
            for l in range(2):
                for n in range(6):
                    acc += H[l, m, n] * np.exp(1j * theta[l, n]) * h_ru[l, k, n]
            assert abs(G[m, k] - acc) <= 1e-12 * abs(acc)


def test_effective_channel_shape_mismatch():
    _, real = realize(small_config(L=2), np.random.default_rng(0))
    with pytest.raises(ValueError):
        effective_channel(real, np.zeros((1, 4)))


def test_single_element_perturbation_is_sparse():
    _, real = realize(small_config(M=4, K=3, L=2), np.random.default_rng(4))
    theta = np.zeros((2, 4))
    base = effective_channel(real, theta)
    theta2 = theta.copy()
    theta2[1, 2] = 1.0
    diff = effective_channel(real, theta2) - base
    expected = real.H_ar[1, :, 2, None] * (np.exp(1j) - 1) * real.h_ru[1, None, :, 2]
    np.testing.assert_allclose(diff, expected, rtol=1e-10, atol=1e-30)


def test_whole_ris_rotation_rotates_its_contribution():
    _, real = realize(small_config(M=3, K=2, L=2), np.random.default_rng(6))
    theta = RisPhase.random(2, 4, np.random.default_rng(0)).angles
    c = 0.7
    contrib = cascade(real.H_ar[:1], np.exp(1j * theta[:1]), real.h_ru[:1])
    rot = cascade(real.H_ar[:1], np.exp(1j * (theta[:1] + c)), real.h_ru[:1])
    np.testing.assert_allclose(rot, np.exp(1j * c) * contrib, rtol=1e-12)


def test_los_mean_excludes_scatter():
    _, real = realize(small_config(), np.random.default_rng(3))
    theta = np.zeros((2, 4))
    gbar = los_mean_channel(real, theta)
    np.testing.assert_allclose(gbar, real.h_au_los + cascade(real.H_ar, np.ones((2, 4)), real.h_ru_los))


def test_realization_dump_round_trip(tmp_path):
    _, real = realize(small_config(M=3, K=2, L=2), np.random.default_rng(8))
    path = tmp_path / "real.bin"
    dump_realization(real, path)
    back = load_realization_dump(path)
    np.testing.assert_array_equal(back["h_au"], real.h_au)
    np.testing.assert_array_equal(back["H_ar"], real.H_ar)
    np.testing.assert_array_equal(back["h_ru"], real.h_ru)
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"nope" * 10)
    with pytest.raises(ValueError):
        load_realization_dump(bad)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_realize_deterministic(seed):
    cfg = small_config(M=3, K=2, L=1)
    _, a = realize(cfg, np.random.default_rng(seed))
    _, b = realize(cfg, np.random.default_rng(seed))
    np.testing.assert_array_equal(a.h_au, b.h_au)
    np.testing.assert_array_equal(a.h_ru, b.h_ru)
    assert isinstance(a, ChannelRealization)
