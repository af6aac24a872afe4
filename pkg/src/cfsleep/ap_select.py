"""AP activation under fixed power and RIS angles: exhaustive, BnB and greedy.

Every candidate activation is scored the same way: ZF over the candidate's
active APs, the incumbent power vector scaled down uniformly if some AP
would exceed its budget, then ``J = f - alpha * g``. A candidate is feasible
when ZF exists and every UE meets its QoS rate under that scaled power.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .precoding import SingularGramError
from .system import Evaluation, InfeasibleError, NetworkState, System


@dataclass
class SelectResult:
    delta: np.ndarray
    value: float  # J of the selected activation (-inf if none feasible)
    evaluations: int = 0
    nodes: int = 0
    proven: bool = True

    @property
    def feasible(self) -> bool:
        return np.isfinite(self.value)


class _Scorer:
    def __init__(self, system: System, state: NetworkState, alpha: float):
        self.system = system
        self.state = state
        self.alpha = alpha
        self.evaluations = 0
        self._memo: dict[bytes, tuple[float, Evaluation | None]] = {}

    def __call__(self, delta: np.ndarray) -> float:
        key = np.packbits(delta).tobytes()
        if key in self._memo:
            return self._memo[key][0]
        self.evaluations += 1
        self.system.calls["ap_select"] += 1
        try:
            ev = self.system.evaluate(self.state.with_(delta=delta.copy()), project=True)
        except SingularGramError:
            self._memo[key] = (-np.inf, None)
            return -np.inf
        val = ev.objective(self.alpha) if self.system.is_feasible(ev) else -np.inf
        self._memo[key] = (val, ev)
        return val


def _better(val, best, tol=1e-12):
    return val > best + tol * max(1.0, abs(best))


def _masks_in_tiebreak_order(M: int, K: int):
    """Activations with at least K APs: fewer active first, then lexicographic."""
    for n in range(K, M + 1):
        for on in itertools.combinations(range(M), n):
            mask = np.zeros(M, dtype=bool)
            mask[list(on)] = True
            yield mask


def exhaustive_select(system: System, state: NetworkState, alpha: float) -> SelectResult:
    """Ground truth by enumeration of all 2^M activations (M <= 14)."""
    M, K = system.M, system.K
    if M > 14:
        raise ValueError("exhaustive search limited to M <= 14")
    score = _Scorer(system, state, alpha)
    best_val, best = -np.inf, None
    for mask in _masks_in_tiebreak_order(M, K):
        val = score(mask)
        if best is None and np.isfinite(val) or _better(val, best_val):
            best_val, best = val, mask
    if best is None:
        return SelectResult(state.delta.copy(), -np.inf, score.evaluations, 0)
    return SelectResult(best, best_val, score.evaluations, 0)


def _tiebreak_key(mask: np.ndarray):
    return (int(mask.sum()), tuple(np.flatnonzero(mask)))


def bnb_select(system: System, state: NetworkState, alpha: float, node_cap: int = 1 << 16,
               bound: str = "safe") -> SelectResult:
    """Depth-first branch and bound over delta_m in {0, 1}.

    ``bound="safe"`` (default) bounds J over all completions of a partial
    assignment by an interference-free, unscaled sum rate minus alpha times
    the smallest power any feasible completion can draw. It is a valid
    upper bound, so the result matches exhaustive search.
    ``bound="decoupled"`` instead scores the rate with every undecided AP on
    and the power with every undecided AP asleep; cheaper to prune with but
    only a heuristic, since ZF rates are not monotone in the active set.
    """
    M, K = system.M, system.K
    cfg = system.cfg
    pw = cfg.power
    score = _Scorer(system, state, alpha)
    p = state.p
    f_cap = cfg.bandwidth * cfg.prelog * float(np.sum(np.log2(1 + p / system.sigma2)))
    f_floor = cfg.bandwidth * K * cfg.qos_min
    p_fix = (M * (1 - pw.sleep_factor) * pw.ap_fixed + M * pw.fh_fixed
             + system.L * pw.ris_static + pw.cpu_fixed)

    def upper_bound(mask, depth):
        n_on = int(mask[:depth].sum())
        n_min = max(K, n_on)
        if bound == "decoupled":
            opt = mask.copy()
            opt[depth:] = True
            rate = score(opt)  # noqa: F841  (warms memo)
            ev = score._memo[np.packbits(opt).tobytes()][1]
            f = ev.f if ev is not None else f_cap
        else:
            f = f_cap
        g = (p_fix + n_min * pw.sleep_factor * pw.ap_fixed
             + f_floor / 1e9 * (pw.cpu_per_rate + n_min * pw.fh_per_rate))
        return f - alpha * g

    best_val, best = -np.inf, None
    nodes = 0
    proven = True
    stack = [(np.zeros(M, dtype=bool), 0)]
    while stack:
        mask, depth = stack.pop()
        nodes += 1
        if nodes > node_cap:
            proven = False
            break
        n_on = int(mask[:depth].sum())
        if n_on + (M - depth) < K:
            continue
        if depth == M:
            val = score(mask)
            if not np.isfinite(val):
                continue
            if (best is None or _better(val, best_val)
                    or (abs(val - best_val) <= 1e-12 * max(1.0, abs(best_val))
                        and _tiebreak_key(mask) < _tiebreak_key(best))):
                best_val, best = val, mask
            continue
        if best is not None and upper_bound(mask, depth) < best_val - 1e-12 * max(1.0, abs(best_val)):
            continue
        off = mask.copy()
        on = mask.copy()
        on[depth] = True
        # LIFO: explore "on" first so a feasible incumbent appears early
        stack.append((off, depth + 1))
        stack.append((on, depth + 1))
    if best is None:
        return SelectResult(state.delta.copy(), -np.inf, score.evaluations, nodes, proven)
    return SelectResult(best, best_val, score.evaluations, nodes, proven)


def greedy_select(system: System, state: NetworkState, alpha: float) -> SelectResult:
    """Greedy turn-off: start all-on, repeatedly sleep the AP whose removal helps J most."""
    M, K = system.M, system.K
    score = _Scorer(system, state, alpha)
    active = np.ones(M, dtype=bool)
    current = score(active)
    if not np.isfinite(current):
        raise InfeasibleError("all-active activation violates QoS")
    history = [current]
    while active.sum() - 1 >= K:
        best_m, best_val = None, -np.inf
        for m in np.flatnonzero(active):
            cand = active.copy()
            cand[m] = False
            val = score(cand)
            if np.isfinite(val) and (best_m is None or val > best_val):
                best_m, best_val = m, val
        if best_m is None or not best_val > current:
            break
        active[best_m] = False
        current = best_val
        history.append(current)
    res = SelectResult(active, current, score.evaluations, 0)
    res.history = history
    return res
