"""Small-scale channel synthesis and the RIS-cascaded effective channel.

Array conventions
-----------------
* direct channel ``h_au``: (M, K)
* AP-RIS channels ``H_ar``: (L, M, N); row ``H_ar[l, m]`` is h_{ar,ml}^T
* RIS-UE channels ``h_ru``: (L, K, N)
* phases ``theta``: (L, N) radians

UPA elements are indexed row-major over (horizontal, vertical): element
``a * n_z + b`` sits at horizontal offset ``a * d_R`` and vertical offset
``b * d_R``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .scenario import LargeScale, Topology, generate_topology, sample_large_scale

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class RisPhase:
    angles: np.ndarray  # (L, N), wrapped to [0, 2pi)

    def __post_init__(self):
        object.__setattr__(self, "angles", wrap_phase(np.asarray(self.angles, dtype=float)))

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    @classmethod
    def random(cls, num_ris: int, num_elements: int, rng: np.random.Generator) -> "RisPhase":
        return cls(rng.uniform(0.0, TWO_PI, size=(num_ris, num_elements)))


def wrap_phase(theta):
    out = np.mod(theta, TWO_PI)
    # np.mod can return exactly 2pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)


def array_response(theta, phi, n_y, n_z, spacing, wavelength):
    """UPA steering vector of length ``n_y * n_z`` (all entries unit modulus)."""
    a = np.repeat(np.arange(n_y), n_z)
    b = np.tile(np.arange(n_z), n_y)
    phase = TWO_PI * spacing / wavelength * (a * np.sin(theta) * np.cos(phi) + b * np.sin(phi))
    return np.exp(1j * phase)


def element_positions(n_y, n_z, spacing):
    a = np.repeat(np.arange(n_y), n_z)
    b = np.tile(np.arange(n_z), n_y)
    return np.column_stack([a, b]) * spacing


def spatial_correlation(n_y, n_z, spacing, wavelength):
    """Isotropic-scattering correlation ``sinc(2 |u - v| / lambda)``, made PSD."""
    pos = element_positions(n_y, n_z, spacing)
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    R = np.sinc(2 * dist / wavelength).astype(complex)
    w, U = np.linalg.eigh(R)
    w = np.clip(w, 0.0, None)
    R = (U * w) @ U.conj().T
    d = 1 / np.sqrt(np.real(np.diag(R)))
    R = d[:, None] * R * d[None, :]
    return (R + R.conj().T) / 2


def psd_sqrt(R):
    """Factor F with F F^H = R, clipping negative eigenvalues."""
    w, U = np.linalg.eigh((R + R.conj().T) / 2)
    return U * np.sqrt(np.clip(w, 0.0, None))


def angles_towards(origin, orientation, target):
    """(azimuth-off-boresight, elevation) of ``target`` seen from a RIS."""
    v = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    az = np.arctan2(v[1], v[0]) - orientation
    el = np.arcsin(v[2] / np.linalg.norm(v))
    return az, el


def crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@dataclass(frozen=True)
class ChannelRealization:
    h_au_los: np.ndarray  # (M, K) deterministic mean
    h_au_nlos: np.ndarray  # (M, K)
    H_ar: np.ndarray  # (L, M, N)
    h_ru_los: np.ndarray  # (L, K, N)
    h_ru_nlos: np.ndarray  # (L, K, N)
    R: np.ndarray  # (N, N)
    large: LargeScale

    @property
    def num_aps(self) -> int:
        return self.h_au_los.shape[0]

    @property
    def num_ues(self) -> int:
        return self.h_au_los.shape[1]

    @property
    def num_ris(self) -> int:
        return self.H_ar.shape[0]

    @property
    def num_elements(self) -> int:
        return self.R.shape[0]

    @property
    def h_au(self) -> np.ndarray:
        return self.h_au_los + self.h_au_nlos

    @property
    def h_ru(self) -> np.ndarray:
        return self.h_ru_los + self.h_ru_nlos

    @property
    def au_nlos_var(self) -> np.ndarray:
        """beta / (kappa + 1) per AP-UE pair."""
        return self.large.beta_au / (self.large.kappa_au + 1)

    @property
    def ru_nlos_scale(self) -> np.ndarray:
        """(L, K) factor in Gamma_{ru,lk} = factor * R."""
        return self.large.beta_ru / (self.large.kappa_ru + 1)

    def gamma_ru(self, l: int, k: int) -> np.ndarray:
        return self.ru_nlos_scale[l, k] * self.R

    def without_ris(self) -> "ChannelRealization":
        M, K, N = self.num_aps, self.num_ues, self.num_elements
        large = replace(self.large, beta_ar=np.zeros((M, 0)), beta_ru=np.zeros((0, K)),
                        kappa_ru=np.zeros((0, K)))
        return replace(self, H_ar=np.zeros((0, M, N), complex), h_ru_los=np.zeros((0, K, N), complex),
                       h_ru_nlos=np.zeros((0, K, N), complex), large=large)


def los_components(topo: Topology, large: LargeScale, cfg: ScenarioConfig):
    """Deterministic parts: direct LoS means, AP-RIS matrices, RIS-UE LoS means."""
    lam = cfg.wavelength
    ny, nz, dr = cfg.ris_cols, cfg.ris_rows, cfg.element_spacing
    d_au = topo.d_ap_ue
    los_phase = np.mod(TWO_PI * d_au / lam, TWO_PI)
    amp = np.sqrt(large.beta_au * large.kappa_au / (large.kappa_au + 1))
    h_au_los = amp * np.exp(1j * los_phase)

    L, M, K, N = cfg.num_ris, cfg.num_aps, cfg.num_ues, cfg.num_elements
    H_ar = np.zeros((L, M, N), complex)
    h_ru_los = np.zeros((L, K, N), complex)
    for l in range(L):
        r, psi = topo.ris_positions[l], topo.ris_orientations[l]
        for m in range(M):
            az, el = angles_towards(r, psi, topo.ap_positions[m])
            H_ar[l, m] = np.sqrt(large.beta_ar[m, l]) * array_response(az, el, ny, nz, dr, lam)
        for k in range(K):
            kap = large.kappa_ru[l, k]
            if kap > 0:
                az, el = angles_towards(r, psi, topo.ue_positions[k])
                a = np.sqrt(large.beta_ru[l, k] * kap / (kap + 1))
                h_ru_los[l, k] = a * array_response(az, el, ny, nz, dr, lam)
    return h_au_los, H_ar, h_ru_los


def sample_channels(topo: Topology, large: LargeScale, cfg: ScenarioConfig,
                    rng: np.random.Generator, R: np.ndarray | None = None) -> ChannelRealization:
    """Draw one coherence block of small-scale fading."""
    if R is None:
        R = spatial_correlation(cfg.ris_cols, cfg.ris_rows, cfg.element_spacing, cfg.wavelength)
    h_au_los, H_ar, h_ru_los = los_components(topo, large, cfg)
    M, K = h_au_los.shape
    L, N = cfg.num_ris, cfg.num_elements
    h_au_nlos = np.sqrt(large.beta_au / (large.kappa_au + 1)) * crandn(rng, (M, K))
    F = psd_sqrt(R)
    z = crandn(rng, (L, K, N))
    scale = np.sqrt(large.beta_ru / (large.kappa_ru + 1))
    h_ru_nlos = scale[:, :, None] * np.einsum("nj,lkj->lkn", F, z)
    return ChannelRealization(h_au_los, h_au_nlos, H_ar, h_ru_los, h_ru_nlos, R, large)


def realize(cfg: ScenarioConfig, rng: np.random.Generator):
    """Topology, link statistics and one channel draw from a single stream."""
    topo = generate_topology(cfg, rng)
    large = sample_large_scale(topo, cfg, rng)
    return topo, sample_channels(topo, large, cfg, rng)


def cascade(H_ar, phi, h_ru):
    """sum_l H_ar[l] diag(phi[l]) h_ru[l]^T -> (M, K)."""
    if H_ar.shape[0] == 0:
        return np.zeros((H_ar.shape[1], h_ru.shape[1]), complex)
    return np.einsum("lmn,ln,lkn->mk", H_ar, phi, h_ru)


def _coefficients(phase):
    if isinstance(phase, RisPhase):
        return phase.coefficients
    return np.exp(1j * np.asarray(phase, dtype=float))


def effective_channel(real: ChannelRealization, phase) -> np.ndarray:
    """Aggregate channel G (M x K): direct link plus every RIS-reflected link."""
    phi = _coefficients(phase)
    if phi.shape != (real.num_ris, real.num_elements):
        raise ValueError(f"phase shape {phi.shape} does not match "
                         f"({real.num_ris}, {real.num_elements})")
    return real.h_au + cascade(real.H_ar, phi, real.h_ru)


def los_mean_channel(real: ChannelRealization, phase) -> np.ndarray:
    """LoS part g-bar of the aggregate channel."""
    phi = _coefficients(phase)
    return real.h_au_los + cascade(real.H_ar, phi, real.h_ru_los)


_MAGIC = b"CFRZ0001"


def dump_realization(real: ChannelRealization, path: str | Path) -> None:
    """Binary dump: magic, int64 (M, K, L, N), then complex128 h_au, H_ar, h_ru (C order)."""
    M, K, L, N = real.num_aps, real.num_ues, real.num_ris, real.num_elements
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(np.array([M, K, L, N], dtype="<i8").tobytes())
        for arr in (real.h_au, real.H_ar, real.h_ru):
            fh.write(np.ascontiguousarray(arr, dtype="<c16").tobytes())


def load_realization_dump(path: str | Path) -> dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:8] != _MAGIC:
        raise ValueError("not a realization dump")
    M, K, L, N = np.frombuffer(raw[8:40], dtype="<i8")
    body = np.frombuffer(raw[40:], dtype="<c16")
    sizes = [M * K, L * M * N, L * K * N]
    parts = np.split(body, np.cumsum(sizes)[:-1])
    return {"h_au": parts[0].reshape(M, K), "H_ar": parts[1].reshape(L, M, N),
            "h_ru": parts[2].reshape(L, K, N)}
