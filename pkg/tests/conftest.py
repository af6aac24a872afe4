import numpy as np
import pytest

from cfsleep.channel import ChannelRealization, realize
from cfsleep.config import ScenarioConfig
from cfsleep.scenario import LargeScale
from cfsleep.system import System


def small_config(M=6, K=3, L=2, rows=2, cols=2, area=150.0, **kw) -> ScenarioConfig:
    return ScenarioConfig(num_aps=M, num_ues=K, num_ris=L, ris_rows=rows, ris_cols=cols,
                          area_side=area, **kw)


def small_system(seed=0, **kw) -> System:
    cfg = small_config(**kw)
    rng = np.random.default_rng(seed)
    _, real = realize(cfg, rng)
    return System.from_rng(cfg, real, rng)


def toy_realization(h_au, H_ar, h_ru, au_var=0.0, ru_var=0.0, R=None) -> ChannelRealization:
    """Hand-built channels: given values are the LoS means, NLoS parts are zero.

    ``au_var`` / ``ru_var`` set the NLoS variances the estimator assumes.
    """
    h_au = np.asarray(h_au, dtype=complex)
    H_ar = np.asarray(H_ar, dtype=complex)
    h_ru = np.asarray(h_ru, dtype=complex)
    M, K = h_au.shape
    L, _, N = H_ar.shape
    large = LargeScale(
        beta_au=np.full((M, K), float(au_var)), kappa_au=np.zeros((M, K)),
        beta_ar=np.abs(H_ar[:, :, 0].T) ** 2 if L else np.zeros((M, 0)),
        beta_ru=np.full((L, K), float(ru_var)), kappa_ru=np.zeros((L, K)))
    return ChannelRealization(h_au, np.zeros_like(h_au), H_ar, h_ru, np.zeros_like(h_ru),
                              np.eye(N, dtype=complex) if R is None else R, large)


def toy_system(real: ChannelRealization, noise=None, **cfg_kw) -> System:
    cfg = ScenarioConfig(num_aps=real.num_aps, num_ues=real.num_ues, num_ris=real.num_ris,
                         ris_rows=1, ris_cols=real.num_elements, **cfg_kw)
    if noise is None:
        noise = np.zeros((real.num_aps, real.num_ues), complex)
    return System(cfg, real, noise)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
