import numpy as np
import pytest

from cfsleep.channel import RisPhase, effective_channel, realize
from cfsleep.estimation import (aggregate_covariance, aggregate_covariances, clip_psd,
                                estimate_channels, mmse_estimate)

from conftest import small_config, toy_realization


def _random_psd(rng, K, M, scale=1.0):
    A = rng.standard_normal((K, M, M)) + 1j * rng.standard_normal((K, M, M))
    return scale * A @ np.conj(np.swapaxes(A, 1, 2)) / M


def test_q_without_ris_scatter_is_diagonal():
    real = toy_realization(np.ones((3, 2)), np.ones((1, 3, 2)), np.ones((1, 2, 2)), au_var=2.0,
                           ru_var=0.0)
    Q = aggregate_covariance(real, np.zeros((1, 2)), 1)
    np.testing.assert_allclose(Q, 2.0 * np.eye(3))


def test_q_matches_scalar_sum_and_is_hermitian():
    cfg = small_config(M=3, K=2, L=2, rows=2, cols=2)
    _, real = realize(cfg, np.random.default_rng(4))
    theta = RisPhase.random(2, 4, np.random.default_rng(5)).angles
    Q = aggregate_covariances(real, theta)
    for k in range(2):
        assert np.abs(Q[k] - Q[k].conj().T).max() <= 1e-12 * np.abs(Q[k]).max()
        oracle = np.diag(real.au_nlos_var[:, k]).astype(complex)
        for l in range(2):
            G = real.gamma_ru(l, k)
            phi = np.exp(1j * theta[l])
            for m in range(3):
                for q in range(3):
                    s = 0j
                    for n in range(4):
                        for n2 in range(4):
                            s += (real.H_ar[l, m, n] * phi[n] * G[n, n2] * np.conj(phi[n2])
                                  * np.conj(real.H_ar[l, q, n2]))
                    oracle[m, q] += s
        np.testing.assert_allclose(Q[k], oracle, rtol=1e-12, atol=1e-12 * np.abs(oracle).max())
        assert np.linalg.eigvalsh(Q[k]).min() >= -1e-9 * np.abs(Q[k]).max()


def test_rejects_nonpositive_noise():
    Q = np.eye(2)[None]
    with pytest.raises(ValueError):
        mmse_estimate(np.ones((2, 1)), np.zeros((2, 1)), Q, 20, 0.1, 0.0, rng=np.random.default_rng())
    with pytest.raises(ValueError):
        mmse_estimate(np.ones((2, 1)), np.zeros((2, 1)), Q, 20, 0.1, 1.0)


def test_noiseless_pilots_recover_channel():
    rng = np.random.default_rng(0)
    Q = _random_psd(rng, 2, 3) + 0.1 * np.eye(3)
    g = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    est = mmse_estimate(g, np.zeros_like(g), Q, 20, 0.1, 1e-12, rng=rng)
    np.testing.assert_allclose(est.g_hat, g, atol=1e-5)
    assert np.abs(est.C).max() < 1e-9


def test_uninformative_pilots_return_prior():
    rng = np.random.default_rng(1)
    Q = _random_psd(rng, 2, 3)
    gbar = rng.standard_normal((3, 2)) + 0j
    g = gbar + 1.0
    est = mmse_estimate(g, gbar, Q, 20, 1e-14, 1.0, rng=rng)
    np.testing.assert_allclose(est.g_hat, gbar, atol=1e-5)
    np.testing.assert_allclose(est.C, Q, atol=1e-10)


def test_error_covariance_is_psd_and_matches_textbook_form():
    rng = np.random.default_rng(2)
    Q = _random_psd(rng, 3, 4)
    est = mmse_estimate(np.zeros((4, 3)), np.zeros((4, 3)), Q, 20, 0.1, 0.5, rng=rng)
    snr = 2.0
    for k in range(3):
        textbook = Q[k] - snr * Q[k] @ est.Psi[k] @ Q[k]
        np.testing.assert_allclose(est.C[k], textbook, atol=1e-12 * np.abs(Q[k]).max())
        assert np.linalg.eigvalsh(est.C[k]).min() >= -1e-9


def test_monte_carlo_error_statistics():
    """Error covariance, estimate covariance and orthogonality over 10^4 draws."""
    rng = np.random.default_rng(3)
    M, K, n = 3, 2, 10_000
    Q = _random_psd(rng, K, M)
    gbar = rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
    tau, pu, s2 = 20, 0.1, 1.0
    snr = tau * pu
    L = np.linalg.cholesky(Q + 1e-15 * np.eye(M))
    errs = np.empty((n, M, K), complex)
    devs = np.empty((n, M, K), complex)
    est = None
    for i in range(n):
        z = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) / np.sqrt(2)
        g = gbar + np.einsum("kmn,kn->mk", L, z)
        est = mmse_estimate(g, gbar, Q, tau, pu, s2, rng=rng)
        errs[i] = g - est.g_hat
        devs[i] = est.g_hat - gbar
    for k in range(K):
        e, d = errs[:, :, k], devs[:, :, k]
        C_emp = e.T @ e.conj() / n
        assert np.linalg.norm(C_emp - est.C[k]) / np.linalg.norm(est.C[k]) < 0.05
        D_emp = d.T @ d.conj() / n
        D_th = snr * Q[k] @ est.Psi[k] @ Q[k]
        assert np.linalg.norm(D_emp - D_th) / np.linalg.norm(D_th) < 0.05
        cross = d.T @ e.conj() / n
        assert np.linalg.norm(cross) < 0.05 * np.sqrt(np.linalg.norm(D_th) * np.linalg.norm(est.C[k]))


def test_pinned_noise_makes_estimate_deterministic():
    _, real = realize(small_config(), np.random.default_rng(0))
    noise = np.random.default_rng(1).standard_normal((6, 3)) + 0j
    theta = np.zeros((2, 4))
    g1, e1 = estimate_channels(real, theta, 20, 0.1, 1e-13, noise=noise)
    g2, e2 = estimate_channels(real, theta, 20, 0.1, 1e-13, noise=noise)
    np.testing.assert_array_equal(e1.g_hat, e2.g_hat)
    np.testing.assert_array_equal(g1, effective_channel(real, theta))


def test_clip_psd_removes_negative_eigenvalues():
    A = np.diag([1.0, -1e-3, 2.0]).astype(complex)
    out = clip_psd(A[None])[0]
    assert np.linalg.eigvalsh(out).min() >= -1e-15
    np.testing.assert_allclose(np.diag(out).real, [1.0, 0.0, 2.0], atol=1e-12)
