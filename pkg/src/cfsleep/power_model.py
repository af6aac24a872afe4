"""Total power consumption with AP sleep states, and energy efficiency.

Rates enter in bit/s; the per-rate coefficients are quoted in W/Gbps, so
every rate-proportional term goes through :func:`gbps`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PowerParams


def gbps(rate_bps: float) -> float:
    return rate_bps / 1e9


@dataclass(frozen=True)
class PowerSplit:
    p_dyn: float  # W per (bit/s)
    p_stat: float  # W
    p_fix: float  # W, activation-independent part of p_stat


def total_power(delta, per_ap_tx, sum_rate, params: PowerParams, num_ris: int) -> float:
    delta = np.asarray(delta, dtype=float)
    tx = np.asarray(per_ap_tx, dtype=float)
    M = delta.size
    p_ap = np.sum((1 - params.sleep_factor * (1 - delta)) * params.ap_fixed) + np.sum(delta * tx)
    p_cpu = params.cpu_fixed + gbps(sum_rate) * params.cpu_per_rate
    p_fh = M * params.fh_fixed + gbps(sum_rate) * delta.sum() * params.fh_per_rate
    p_ris = num_ris * params.ris_static
    return float(p_ap + p_cpu + p_fh + p_ris)


def energy_efficiency(sum_rate: float, power: float) -> float:
    if power <= 0:
        raise ValueError("total power must be positive")
    return sum_rate / power


def split_power_coefficients(delta, params: PowerParams, num_ris: int) -> PowerSplit:
    """Write total power as sum_k c_k p_k + f * p_dyn + p_stat.

    Fronthaul fixed power and the un-saved sleep share of AP fixed power are
    charged for every AP, asleep or not.
    """
    delta = np.asarray(delta, dtype=float)
    M = delta.size
    n_active = delta.sum()
    p_dyn = (n_active * params.fh_per_rate + params.cpu_per_rate) / 1e9
    p_fix = (M * (1 - params.sleep_factor) * params.ap_fixed + M * params.fh_fixed
             + num_ris * params.ris_static + params.cpu_fixed)
    p_stat = n_active * params.sleep_factor * params.ap_fixed + p_fix
    return PowerSplit(p_dyn, p_stat, p_fix)
