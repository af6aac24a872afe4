"""Scenario, power-model and solver parameters.

Defaults describe a 1.9 GHz, 20 MHz network with a 0.2 W per-AP budget.
Modelling constants (pathloss, noise figure, element spacing) are plain
fields too, so any of them can be overridden from a YAML file.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class PowerParams:
    ap_fixed: float = 5.0  # W, P^{AP,Fix} per AP
    cpu_fixed: float = 5.0  # W
    cpu_per_rate: float = 0.1  # W/Gbps
    fh_fixed: float = 0.825  # W per AP
    fh_per_rate: float = 0.01  # W/Gbps per active AP
    ris_static: float = 0.064  # W per RIS
    sleep_factor: float = 0.7  # fraction of fixed AP power saved in sleep

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")
        if not 0.0 <= self.sleep_factor <= 1.0:
            raise ValueError("sleep_factor must lie in [0, 1]")


@dataclass(frozen=True)
class SolverParams:
    dinkelbach_tol: float = 1e-4
    max_outer_iters: int = 30
    ao_tol: float = 1e-4
    max_ao_cycles: int = 3
    sca_tol: float = 1e-4
    sca_max_iters: int = 50
    gp_tol: float = 1e-4
    gp_max_iters: int = 30
    fd_step: float = 1e-4
    armijo_step: float = 0.5  # initial phase step, radians (max over elements)
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    armijo_min_step: float = 1e-6
    woa_pop: int = 30
    woa_iters: int = 30
    woa_spiral: float = 1.0
    bnb_node_cap: int = 1 << 16
    mode: str = "low_complexity"  # or "near_optimal"

    def __post_init__(self):
        for name in ("dinkelbach_tol", "ao_tol", "sca_tol", "gp_tol", "fd_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.woa_pop < 2:
            raise ValueError("woa_pop must be at least 2")
        if self.mode not in ("near_optimal", "low_complexity"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    num_aps: int = 10
    num_ues: int = 5
    num_ris: int = 25
    ris_rows: int = 8  # N_z
    ris_cols: int = 8  # N_y
    area_side: float = 1000.0  # m
    carrier_freq: float = 1.9e9  # Hz
    bandwidth: float = 20e6  # Hz
    ris_element_spacing: float | None = None  # m; None -> half wavelength
    ap_height: float = 12.5
    ue_height: float = 1.5
    ris_height: float = 13.5
    coherence_symbols: int = 1000
    training_symbols: int = 20
    pilot_power: float = 0.1  # W
    max_ap_power: float = 0.2  # W
    per_ue_power_cap: float = 0.2  # W
    qos_min: float = 1.0  # bit/s/Hz per UE
    blockage_prob: float = 0.5
    pathloss_ref_db: float = -30.5
    pathloss_exponent: float = 3.67
    noise_psd_dbm: float = -174.0
    noise_figure_db: float = 9.0
    use_prelog: bool = False  # scale rates by tau_d / tau_c
    rng_seed: int = 0
    power: PowerParams = field(default_factory=PowerParams)
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self):
        if min(self.num_aps, self.num_ues, self.ris_rows, self.ris_cols) < 1:
            raise ValueError("num_aps, num_ues and RIS dimensions must be >= 1")
        if self.num_ris < 0:
            raise ValueError("num_ris must be >= 0")
        if not self.training_symbols < self.coherence_symbols:
            raise ValueError("training_symbols must be < coherence_symbols")
        if self.num_ues > self.training_symbols:
            raise ValueError("orthogonal pilots need num_ues <= training_symbols")
        for name in ("pilot_power", "max_ap_power", "per_ue_power_cap", "bandwidth",
                     "carrier_freq", "area_side"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.blockage_prob <= 1.0:
            raise ValueError("blockage_prob must lie in [0, 1]")
        if self.qos_min < 0:
            raise ValueError("qos_min must be non-negative")

    @property
    def num_elements(self) -> int:
        return self.ris_rows * self.ris_cols

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def element_spacing(self) -> float:
        if self.ris_element_spacing is None:
            return self.wavelength / 2
        return self.ris_element_spacing

    @property
    def noise_power(self) -> float:
        """Thermal noise over the band in watts, same for pilots and data."""
        dbm = self.noise_psd_dbm + 10 * math.log10(self.bandwidth) + self.noise_figure_db
        return 10 ** ((dbm - 30) / 10)

    @property
    def prelog(self) -> float:
        if not self.use_prelog:
            return 1.0
        return (self.coherence_symbols - self.training_symbols) / self.coherence_symbols

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build a config from a flat mapping.

    Power and solver fields may be given either flat (``ap_fixed: 5``) or
    nested under ``power:`` / ``solver:``.
    """
    data = dict(data)
    power_keys = {f.name for f in dataclasses.fields(PowerParams)}
    solver_keys = {f.name for f in dataclasses.fields(SolverParams)}
    scen_keys = {f.name for f in dataclasses.fields(ScenarioConfig)}
    power = dict(data.pop("power", None) or {})
    solver = dict(data.pop("solver", None) or {})
    scen = {}
    for key, value in data.items():
        if key in power_keys:
            power[key] = value
        elif key in solver_keys:
            solver[key] = value
        elif key in scen_keys:
            scen[key] = value
        else:
            raise KeyError(f"unknown config key {key!r}")
    return ScenarioConfig(power=PowerParams(**power), solver=SolverParams(**solver), **scen)


def load_config(path: str | Path) -> ScenarioConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    return config_from_dict(data)


def dump_config(cfg: ScenarioConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
