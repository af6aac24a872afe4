"""Evaluation context shared by the three subproblem solvers.

A :class:`System` bundles one coherence block: the channel realization, the
pinned pilot noise and the configuration. Given a decision state
(activation mask, power vector, RIS angles) it produces the MMSE estimate,
the ZF precoder, the imperfect-CSI rates and the total power.

The pilot noise is drawn once per system, so the estimate (and therefore
every rate) is a deterministic function of the RIS angles. That is what
makes finite-difference gradients over the angles meaningful.
"""
from __future__ import annotations

from collections import Counter, OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelRealization, RisPhase, crandn, wrap_phase
from .config import ScenarioConfig
from .estimation import ChannelEstimate, estimate_channels
from .power_model import PowerSplit, split_power_coefficients, total_power
from .precoding import (RateReport, SingularGramError, gamma_from_precoder, heuristic_power,
                        project_power, rate_report, zf_precoder)

FEAS_TOL = 1e-9


class InfeasibleError(RuntimeError):
    """No decision satisfies the QoS and power constraints."""


@dataclass(frozen=True)
class NetworkState:
    delta: np.ndarray  # (M,) bool
    p: np.ndarray  # (K,) W
    theta: np.ndarray  # (L, N) rad

    def with_(self, **changes) -> "NetworkState":
        return replace(self, **changes)

    @property
    def num_active(self) -> int:
        return int(np.count_nonzero(self.delta))


@dataclass(frozen=True)
class Evaluation:
    state: NetworkState
    V: np.ndarray
    report: RateReport
    power: float  # W
    split: PowerSplit

    @property
    def f(self) -> float:
        return self.report.sum_rate

    @property
    def g(self) -> float:
        return self.power

    @property
    def ee(self) -> float:
        return self.f / self.g

    def objective(self, alpha: float) -> float:
        return self.f - alpha * self.g


@dataclass
class System:
    cfg: ScenarioConfig
    real: ChannelRealization
    pilot_noise: np.ndarray  # (M, K) CN(0, 1)
    calls: Counter = field(default_factory=Counter)
    _cache: OrderedDict = field(default_factory=OrderedDict, repr=False)

    @classmethod
    def from_rng(cls, cfg: ScenarioConfig, real: ChannelRealization, rng: np.random.Generator):
        return cls(cfg, real, crandn(rng, (real.num_aps, real.num_ues)))

    def without_ris(self) -> "System":
        cfg = self.cfg.replace(num_ris=0)
        return System(cfg, self.real.without_ris(), self.pilot_noise)

    @property
    def M(self) -> int:
        return self.real.num_aps

    @property
    def K(self) -> int:
        return self.real.num_ues

    @property
    def L(self) -> int:
        return self.real.num_ris

    @property
    def N(self) -> int:
        return self.real.num_elements

    @property
    def sigma2(self) -> float:
        return self.cfg.noise_power

    @property
    def qos_threshold(self) -> float:
        """Minimum SINR equivalent to the per-UE QoS rate."""
        return 2 ** (self.cfg.qos_min / self.cfg.prelog) - 1

    def estimate(self, theta) -> ChannelEstimate:
        """MMSE estimate for RIS angles ``theta`` (memoised on the exact angles)."""
        theta = np.asarray(theta, dtype=float).reshape(self.L, self.N)
        key = theta.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        self.calls["estimate"] += 1
        cfg = self.cfg
        _, est = estimate_channels(self.real, theta, cfg.training_symbols, cfg.pilot_power,
                                   self.sigma2, noise=self.pilot_noise)
        self._cache[key] = est
        if len(self._cache) > 64:
            self._cache.popitem(last=False)
        return est

    def evaluate(self, state: NetworkState, project: bool = False) -> Evaluation:
        """Rates and power of ``state``.

        With ``project=True`` the power vector is first scaled down uniformly
        to meet the per-AP budgets under the new precoder. Raises
        :class:`SingularGramError` for activations ZF cannot serve.
        """
        self.calls["evaluate"] += 1
        est = self.estimate(state.theta)
        V = zf_precoder(est.g_hat, state.delta)
        p = state.p
        if project:
            p = project_power(p, V, self.cfg.max_ap_power)
            state = state.with_(p=p)
        gamma = gamma_from_precoder(V, est.C)
        rep = rate_report(p, gamma, self.sigma2, self.cfg.bandwidth, V, self.cfg.prelog)
        pw = total_power(state.delta, rep.per_ap_tx, rep.sum_rate, self.cfg.power, self.L)
        split = split_power_coefficients(state.delta, self.cfg.power, self.L)
        return Evaluation(state, V, rep, pw, split)

    def violations(self, ev: Evaluation) -> list[str]:
        """Constraint violations of an evaluated state (empty list when feasible)."""
        out = []
        st, cfg = ev.state, self.cfg
        if st.num_active < self.K:
            out.append("fewer active APs than UEs")
        if np.any(ev.report.rate_per_ue < cfg.qos_min - FEAS_TOL):
            out.append("QoS")
        if np.any(st.p <= 0) or np.any(st.p > cfg.per_ue_power_cap * (1 + FEAS_TOL)):
            out.append("per-UE power")
        if np.any(ev.report.per_ap_tx > cfg.max_ap_power * (1 + FEAS_TOL)):
            out.append("per-AP power")
        # coefficients are exp(j theta), unit modulus exactly when theta is finite
        if not np.all(np.isfinite(st.theta)):
            out.append("unit modulus")
        return out

    def is_feasible(self, ev: Evaluation) -> bool:
        return not self.violations(ev)

    def initial_state(self, theta=None, rng=None) -> NetworkState:
        """All APs on, heuristic ZF power, given (or random) RIS angles."""
        if theta is None:
            theta = RisPhase.random(self.L, self.N, rng).angles
        theta = wrap_phase(np.asarray(theta, dtype=float).reshape(self.L, self.N))
        delta = np.ones(self.M, dtype=bool)
        est = self.estimate(theta)
        p = heuristic_power(est.g_hat, delta, self.cfg.max_ap_power, self.cfg.per_ue_power_cap)
        return NetworkState(delta, p, theta)


__all__ = ["System", "NetworkState", "Evaluation", "InfeasibleError", "SingularGramError"]
