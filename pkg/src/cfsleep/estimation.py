"""MMSE direct estimation of the aggregate AP-UE channels.

Each UE sends an orthogonal pilot of length tau_t at power p_u; after
de-spreading the APs see ``y_k = sqrt(tau_t p_u) g_k + n_k`` with
``n_k ~ CN(0, sigma_u^2 I)``. The estimator only ever works with the
aggregate channel, never the individual cascade components.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, _coefficients, effective_channel, los_mean_channel


@dataclass(frozen=True)
class ChannelEstimate:
    g_hat: np.ndarray  # (M, K)
    C: np.ndarray  # (K, M, M) error covariance E[e e^H]
    Q: np.ndarray  # (K, M, M)
    Psi: np.ndarray  # (K, M, M)


def aggregate_covariances(real: ChannelRealization, phase) -> np.ndarray:
    """Q_k for every UE, shape (K, M, M).

    Uses Q_k = sum_l w_lk (H_l Phi_l) R (H_l Phi_l)^H + diag(beta/(kappa+1)),
    with Gamma_{ru,lk} = w_lk R.
    """
    phi = _coefficients(phase)
    M, K = real.num_aps, real.num_ues
    Q = np.zeros((K, M, M), complex)
    idx = np.arange(M)
    Q[:, idx, idx] = real.au_nlos_var.T
    if real.num_ris:
        A = real.H_ar * phi[:, None, :]  # (L, M, N)
        S = (A @ real.R) @ np.conj(np.swapaxes(A, 1, 2))
        Q += np.einsum("lk,lmq->kmq", real.ru_nlos_scale, S)
    return Q


def aggregate_covariance(real: ChannelRealization, phase, k: int) -> np.ndarray:
    return aggregate_covariances(real, phase)[k]


def mmse_estimate(g, g_bar, Q, tau_t, p_u, sigma2, noise=None, rng=None) -> ChannelEstimate:
    """Draw the pilot observation and form the MMSE estimate.

    ``g``, ``g_bar``: (M, K); ``Q``: (K, M, M). ``noise`` is a (M, K) array of
    unit-variance CN(0, 1) samples (scaled by sigma here); pass it to pin the
    pilot noise across calls, or give ``rng`` to draw fresh noise.
    """
    if sigma2 <= 0:
        raise ValueError("pilot noise variance must be positive")
    M, K = g.shape
    if noise is None:
        if rng is None:
            raise ValueError("need either noise or rng")
        noise = (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2)
    snr = tau_t * p_u
    eye = np.eye(M)
    Psi = np.linalg.inv(snr * Q + sigma2 * eye)
    QPsi = Q @ Psi
    # y - sqrt(snr) g_bar = sqrt(snr) (g - g_bar) + n
    resid = np.sqrt(snr) * (g - g_bar) + np.sqrt(sigma2) * noise
    g_hat = g_bar + np.sqrt(snr) * np.einsum("kmn,nk->mk", QPsi, resid)
    # Q - snr Q Psi Q = sigma^2 Q Psi (Q and Psi commute); this form stays PSD
    # without the cancellation of the textbook expression
    C = sigma2 * (QPsi + np.conj(np.swapaxes(QPsi, -1, -2))) / 2
    return ChannelEstimate(g_hat, C, Q, Psi)


def estimate_channels(real: ChannelRealization, phase, tau_t, p_u, sigma2, noise=None, rng=None):
    """True aggregate channel and its MMSE estimate under RIS configuration ``phase``."""
    g = effective_channel(real, phase)
    g_bar = los_mean_channel(real, phase)
    Q = aggregate_covariances(real, phase)
    return g, mmse_estimate(g, g_bar, Q, tau_t, p_u, sigma2, noise=noise, rng=rng)


def clip_psd(C, floor=0.0):
    """Symmetrise and clip eigenvalues below ``floor`` (batched over leading axis)."""
    C = (C + np.conj(np.swapaxes(C, -1, -2))) / 2
    w, U = np.linalg.eigh(C)
    w = np.clip(w, floor, None)
    return (U * w[..., None, :]) @ np.conj(np.swapaxes(U, -1, -2))
