"""Topology placement and large-scale link statistics."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ScenarioConfig


class LinkKind(enum.Enum):
    AP_UE = "ap-ue"
    RIS_UE = "ris-ue"
    AP_RIS = "ap-ris"


@dataclass(frozen=True)
class Topology:
    ap_positions: np.ndarray  # (M, 3)
    ue_positions: np.ndarray  # (K, 3)
    ris_positions: np.ndarray  # (L, 3)
    ris_orientations: np.ndarray  # (L,) boresight azimuth, rad

    @property
    def d_ap_ue(self) -> np.ndarray:
        return pairwise_distances(self.ap_positions, self.ue_positions)

    @property
    def d_ap_ris(self) -> np.ndarray:
        return pairwise_distances(self.ap_positions, self.ris_positions)

    @property
    def d_ris_ue(self) -> np.ndarray:
        return pairwise_distances(self.ris_positions, self.ue_positions)


@dataclass(frozen=True)
class LinkStats:
    beta: float
    kappa: float
    los_flag: bool
    pure_los: bool = False

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.kappa > 0 and not self.los_flag:
            raise ValueError("kappa > 0 requires a LoS link")


@dataclass(frozen=True)
class LargeScale:
    """Array form of the link statistics of a whole topology."""

    beta_au: np.ndarray  # (M, K)
    kappa_au: np.ndarray  # (M, K)
    beta_ar: np.ndarray  # (M, L)
    beta_ru: np.ndarray  # (L, K)
    kappa_ru: np.ndarray  # (L, K)


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)


def generate_topology(cfg: ScenarioConfig, rng: np.random.Generator) -> Topology:
    """Uniform placement over the D x D square at the configured heights.

    RIS boresights point at the area centre.
    """
    side = cfg.area_side

    def place(n, height):
        xy = rng.uniform(0.0, side, size=(n, 2))
        return np.column_stack([xy, np.full(n, float(height))])

    aps = place(cfg.num_aps, cfg.ap_height)
    ues = place(cfg.num_ues, cfg.ue_height)
    ris = place(cfg.num_ris, cfg.ris_height)
    centre = np.array([side / 2, side / 2])
    to_centre = centre - ris[:, :2]
    orient = np.arctan2(to_centre[:, 1], to_centre[:, 0])
    return Topology(aps, ues, ris, orient)


def los_probability(d: float) -> float:
    if d <= 0:
        raise ValueError("distance must be positive")
    if d < 300.0:
        return (300.0 - d) / 300.0
    return 0.0


def rician_factor_db(d):
    return 13.0 - 0.03 * np.asarray(d)


def pathloss(d, cfg: ScenarioConfig):
    """Linear large-scale gain of the log-distance model (d in metres)."""
    d = np.asarray(d, dtype=float)
    db = cfg.pathloss_ref_db - 10 * cfg.pathloss_exponent * np.log10(d)
    return 10 ** (db / 10)


def sample_link_stats(d: float, kind: LinkKind, rng: np.random.Generator,
                      cfg: ScenarioConfig | None = None) -> LinkStats:
    """Draw blockage / LoS state for one link.

    AP-RIS links are always pure LoS; the other two kinds go through the
    two-stage blockage-then-distance LoS draw.
    """
    if d <= 0:
        raise ValueError("distance must be positive")
    cfg = cfg or ScenarioConfig()
    beta = float(pathloss(d, cfg))
    if kind is LinkKind.AP_RIS:
        return LinkStats(beta, float("inf"), True, pure_los=True)
    unblocked = rng.random() >= cfg.blockage_prob
    los = bool(unblocked and rng.random() < los_probability(d))
    kappa = float(10 ** (rician_factor_db(d) / 10)) if los else 0.0
    return LinkStats(beta, kappa, los)


def sample_large_scale(topo: Topology, cfg: ScenarioConfig, rng: np.random.Generator) -> LargeScale:
    """Link statistics for every AP-UE, AP-RIS and RIS-UE pair.

    Draw order is AP-UE (row-major), then RIS-UE (row-major), so a fixed
    seed always yields the same stream.
    """
    d_au, d_ar, d_ru = topo.d_ap_ue, topo.d_ap_ris, topo.d_ris_ue
    beta_au = np.empty_like(d_au)
    kappa_au = np.empty_like(d_au)
    for (m, k), d in np.ndenumerate(d_au):
        s = sample_link_stats(d, LinkKind.AP_UE, rng, cfg)
        beta_au[m, k], kappa_au[m, k] = s.beta, s.kappa
    beta_ru = np.empty_like(d_ru)
    kappa_ru = np.empty_like(d_ru)
    for (l, k), d in np.ndenumerate(d_ru):
        s = sample_link_stats(d, LinkKind.RIS_UE, rng, cfg)
        beta_ru[l, k], kappa_ru[l, k] = s.beta, s.kappa
    beta_ar = pathloss(d_ar, cfg) if d_ar.size else np.zeros_like(d_ar)
    return LargeScale(beta_au, kappa_au, np.asarray(beta_ar, dtype=float), beta_ru, kappa_ru)


def dump_topology(topo: Topology, path: str | Path) -> None:
    """Write a whitespace table ``entity x y z`` (entities ap0, ue3, ris1, ...)."""
    lines = ["entity x y z"]
    for prefix, pos in (("ap", topo.ap_positions), ("ue", topo.ue_positions),
                        ("ris", topo.ris_positions)):
        for i, (x, y, z) in enumerate(pos):
            lines.append(f"{prefix}{i} {float(x)!r} {float(y)!r} {float(z)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_topology_table(path: str | Path) -> dict[str, np.ndarray]:
    """Read back a table written by :func:`dump_topology` as ``{'ap': (M,3), ...}``."""
    rows: dict[str, list] = {"ap": [], "ue": [], "ris": []}
    for line in Path(path).read_text().splitlines()[1:]:
        name, x, y, z = line.split()
        kind = name.rstrip("0123456789")
        rows[kind].append((float(x), float(y), float(z)))
    return {k: np.array(v, dtype=float).reshape(-1, 3) for k, v in rows.items()}
