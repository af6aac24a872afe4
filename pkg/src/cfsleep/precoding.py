"""ZF precoding over the active APs, heuristic power, and imperfect-CSI rates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRAM_COND_LIMIT = 1e12


class SingularGramError(ValueError):
    """The active-AP Gram matrix is (numerically) singular."""


@dataclass(frozen=True)
class RateReport:
    sinr: np.ndarray  # (K,)
    rate_per_ue: np.ndarray  # (K,) bit/s/Hz
    sum_rate: float  # bit/s
    gamma: np.ndarray  # (K, K)
    per_ap_tx: np.ndarray  # (M,) W
    c: np.ndarray  # (K,) sum_m |V_mk|^2 over active APs


def as_mask(delta, M=None) -> np.ndarray:
    mask = np.asarray(delta).astype(bool)
    if M is not None and mask.shape != (M,):
        raise ValueError(f"activation mask must have shape ({M},)")
    return mask


def zf_precoder(G_hat: np.ndarray, delta) -> np.ndarray:
    """V = G^* (G^T Delta G^*)^{-1}, with zero rows at sleeping APs.

    Computed from a thin QR of the active rows of G^*: if G_A^* = Q R then the
    Gram matrix is R^H R and V_A = Q R^{-H}.
    """
    M, K = G_hat.shape
    mask = as_mask(delta, M)
    if mask.sum() < K:
        raise SingularGramError(f"{mask.sum()} active APs cannot zero-force {K} UEs")
    Q, Rf = np.linalg.qr(G_hat[mask].conj())
    s = np.linalg.svd(Rf, compute_uv=False)
    if s[-1] == 0 or (s[0] / s[-1]) ** 2 > GRAM_COND_LIMIT:
        raise SingularGramError("Gram matrix condition number exceeds limit")
    V = np.zeros((M, K), complex)
    V[mask] = np.linalg.solve(Rf, Q.conj().T).conj().T  # Q R^{-H}
    return V


def per_ap_power(V: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.abs(V) ** 2 @ p


def project_power(p: np.ndarray, V: np.ndarray, p_max: float) -> np.ndarray:
    """Scale ``p`` down uniformly until every per-AP budget holds."""
    worst = per_ap_power(V, p).max()
    if worst <= p_max:
        return p
    return p * (p_max / worst)


def heuristic_power(G_hat, delta, p_max, p_ue_cap=np.inf, tail_sum=True, V=None):
    """ZF power heuristic p_k = P_max / max_m sum_{i>=k} eta_{mi}.

    ``eta_{mi} = |V_{mi}|^2`` is the power AP m spends per unit of p_i. With
    ``tail_sum=False`` the full row sum is used instead of the tail. The
    result is clipped to the per-UE cap and scaled to meet every per-AP cap.
    """
    if V is None:
        V = zf_precoder(G_hat, delta)
    eta = np.abs(V) ** 2
    if tail_sum:
        load = np.cumsum(eta[:, ::-1], axis=1)[:, ::-1]
    else:
        load = np.repeat(eta.sum(axis=1, keepdims=True), eta.shape[1], axis=1)
    p = p_max / load.max(axis=0)
    p = np.minimum(p, p_ue_cap)
    return project_power(p, V, p_max)


def gamma_from_precoder(V: np.ndarray, C: np.ndarray) -> np.ndarray:
    """gamma[k, i] = E|e_k^T v_i|^2 for error e_k ~ CN(0, C_k).

    |e^T v|^2 = v^H conj(e e^H) v, so the quadratic form uses conj(C_k).
    """
    gamma = np.einsum("mi,kmn,ni->ki", V.conj(), C.conj(), V).real
    return np.clip(gamma, 0.0, None)


def error_interference(G_hat, delta, C) -> np.ndarray:
    return gamma_from_precoder(zf_precoder(G_hat, delta), C)


def rate_report(p, gamma, sigma2, bandwidth, V, prelog=1.0) -> RateReport:
    p = np.asarray(p, dtype=float)
    interference = gamma @ p
    sinr = p / (interference + sigma2)
    se = prelog * np.log2(1 + sinr)
    vv = np.abs(V) ** 2
    return RateReport(
        sinr=sinr,
        rate_per_ue=se,
        sum_rate=float(bandwidth * se.sum()),
        gamma=gamma,
        per_ap_tx=vv @ p,
        c=vv.sum(axis=0),
    )
