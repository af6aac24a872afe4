"""Dinkelbach outer loop and the alternating (AP, power, RIS) inner loop.

Energy efficiency f/g is maximised through the parametric problems
``max f - alpha g``; for fixed alpha the three blocks are updated in turn.
A block's output is only kept if the subtractive objective does not drop
and every constraint still holds, so the inner loop is monotone even with
heuristic block solvers.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .ap_select import bnb_select, exhaustive_select, greedy_select
from .config import SolverParams
from .power_alloc import PowerProblem, sca_solve, restore_feasibility
from .precoding import SingularGramError
from .ris_opt import gp_optimize, phase_objective, woa_optimize
from .system import Evaluation, InfeasibleError, NetworkState, System

ASCENT_SLACK = 1e-9

MODES = {
    "near_optimal": ("bnb", "gp"),
    "low_complexity": ("greedy", "woa"),
}

BLOCKS = ("ap", "power", "ris")


@dataclass
class TraceRecord:
    outer: int
    alpha: float  # parameter the AO loop ran under
    f: float
    g: float
    ee: float
    active_aps: int
    objective_ap: float
    objective_power: float
    objective_ris: float
    ao_cycles: int
    evals_ap: int
    evals_power: int
    evals_ris: int
    wall_time: float


@dataclass
class SolveTrace:
    records: list = field(default_factory=list)
    alpha0: float = float("nan")
    substep_objectives: list = field(default_factory=list)  # F after every block, all cycles

    @property
    def alphas(self) -> np.ndarray:
        """alpha^0, alpha^1, ...: the initial value then f/g after each outer iteration."""
        return np.array([self.alpha0] + [r.ee for r in self.records])

    def to_csv(self, path=None, include_time: bool = True) -> str:
        cols = [k for k in TraceRecord.__dataclass_fields__ if include_time or k != "wall_time"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.records:
            d = asdict(r)
            w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in cols])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass
class SolveResult:
    state: NetworkState
    evaluation: Evaluation
    trace: SolveTrace
    alpha: float  # parameter of the last AO run
    converged: bool

    @property
    def ee(self) -> float:
        return self.evaluation.ee

    def certificate(self) -> float:
        """Relative residual |f - alpha g| / (alpha g) at the returned state."""
        ev = self.evaluation
        return abs(ev.f - self.alpha * ev.g) / (self.alpha * ev.g)


def dinkelbach(step: Callable, state, f0: float, g0: float, tol: float, max_iters: int):
    """Generic Dinkelbach iteration.

    ``step(state, alpha) -> (state, f, g)`` should (approximately) maximise
    ``f - alpha g``. Returns the best state seen, its (f, g), the alpha
    sequence and the last alpha used.
    """
    alpha = f0 / g0
    alphas = [alpha]
    best = (state, f0, g0)
    used = alpha
    for _ in range(max_iters):
        used = alpha
        state, f, g = step(state, alpha)
        new = f / g
        alphas.append(new)
        if new > best[1] / best[2]:
            best = (state, f, g)
        done = abs(new - alpha) <= tol * abs(alpha)
        alpha = new
        if done:
            break
    return best, alphas, used


def _power_problem(system: System, ev: Evaluation, alpha: float) -> PowerProblem:
    cfg = system.cfg
    rep = ev.report
    rows = np.abs(ev.V[ev.state.delta]) ** 2
    return PowerProblem(
        gamma=rep.gamma, c=rep.c, ap_rows=rows, sigma2=system.sigma2, bandwidth=cfg.bandwidth,
        alpha=alpha, p_dyn=ev.split.p_dyn, p_stat=ev.split.p_stat, p_max=cfg.max_ap_power,
        p_ue_cap=cfg.per_ue_power_cap, qos_sinr=system.qos_threshold, prelog=cfg.prelog)


class AoRunner:
    """One solver configuration: which AP and RIS methods, which blocks are free."""

    def __init__(self, system: System, params: SolverParams, ap_method: str, ris_method: str,
                 blocks=BLOCKS, rng: np.random.Generator | None = None):
        self.system = system
        self.params = params
        self.ap_method = ap_method
        self.ris_method = ris_method
        self.blocks = tuple(b for b in blocks if not (b == "ris" and system.L == 0))
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.counters = {"ap": 0, "power": 0, "ris": 0}
        self.substeps: list[float] = []
        self.dyn_weight_violations = 0

    def _check(self, ev: Evaluation, where: str):
        bad = self.system.violations(ev)
        if bad:
            raise AssertionError(f"{where} produced an infeasible state: {bad}")

    def ap_step(self, ev: Evaluation, alpha: float) -> Evaluation:
        fn = {"bnb": lambda s, st, a: bnb_select(s, st, a, self.params.bnb_node_cap),
              "greedy": greedy_select, "exhaustive": exhaustive_select}[self.ap_method]
        try:
            res = fn(self.system, ev.state, alpha)
        except InfeasibleError:
            return ev
        self.counters["ap"] += res.evaluations
        if not res.feasible or np.array_equal(res.delta, ev.state.delta):
            return ev
        cand = self.system.evaluate(ev.state.with_(delta=res.delta), project=True)
        if self.system.is_feasible(cand) and cand.objective(alpha) >= ev.objective(alpha):
            return cand
        return ev

    def power_step(self, ev: Evaluation, alpha: float) -> Evaluation:
        prob = _power_problem(self.system, ev, alpha)
        if 1 - alpha * prob.p_dyn <= 0:
            self.dyn_weight_violations += 1
        sca = sca_solve(prob, ev.state.p, self.params.sca_tol, self.params.sca_max_iters)
        self.counters["power"] += sca.iterations
        cand = self.system.evaluate(ev.state.with_(p=sca.p))
        if self.system.is_feasible(cand) and cand.objective(alpha) >= ev.objective(alpha):
            return cand
        return ev

    def ris_step(self, ev: Evaluation, alpha: float) -> Evaluation:
        fitness = phase_objective(self.system, ev.state, alpha)
        if self.ris_method == "gp":
            res = gp_optimize(fitness, ev.state.theta, self.params, scale=ev.f)
        else:
            res = woa_optimize(fitness, ev.state.theta, self.params, self.rng)
        self.counters["ris"] += res.evaluations
        if not np.isfinite(res.value) or np.array_equal(res.theta, ev.state.theta):
            return ev
        try:
            cand = self.system.evaluate(ev.state.with_(theta=res.theta), project=True)
        except SingularGramError:
            return ev
        if self.system.is_feasible(cand) and cand.objective(alpha) > ev.objective(alpha):
            return cand
        return ev

    def ao_cycle(self, ev: Evaluation, alpha: float):
        """Block updates under fixed alpha until the objective gain is below ``ao_tol``."""
        objs = {}
        cycles = 0
        for cycles in range(1, self.params.max_ao_cycles + 1):
            start = ev.objective(alpha)
            for block in self.blocks:
                before = ev.objective(alpha)
                ev = getattr(self, f"{block}_step")(ev, alpha)
                after = ev.objective(alpha)
                if after < before - ASCENT_SLACK * max(1.0, abs(before)):
                    raise AssertionError(f"{block} step decreased the objective")
                self._check(ev, block)
                objs[block] = after
                self.substeps.append(after)
            if ev.objective(alpha) - start <= self.params.ao_tol * ev.f:
                break
        return ev, objs, cycles

    def solve(self, state: NetworkState) -> SolveResult:
        system = self.system
        ev0 = system.evaluate(state)
        if not system.is_feasible(ev0):
            ev0 = self._repair(ev0)
        trace = SolveTrace(alpha0=ev0.ee)

        def step(ev, alpha):
            t0 = time.perf_counter()
            c0 = dict(self.counters)
            ev, objs, cycles = self.ao_cycle(ev, alpha)
            trace.records.append(TraceRecord(
                outer=len(trace.records), alpha=alpha, f=ev.f, g=ev.g, ee=ev.ee,
                active_aps=ev.state.num_active,
                objective_ap=objs.get("ap", float("nan")),
                objective_power=objs.get("power", float("nan")),
                objective_ris=objs.get("ris", float("nan")),
                ao_cycles=cycles,
                evals_ap=self.counters["ap"] - c0["ap"],
                evals_power=self.counters["power"] - c0["power"],
                evals_ris=self.counters["ris"] - c0["ris"],
                wall_time=time.perf_counter() - t0))
            return ev, ev.f, ev.g

        (best, _, _), alphas, used = dinkelbach(step, ev0, ev0.f, ev0.g, self.params.dinkelbach_tol,
                                                self.params.max_outer_iters)
        trace.substep_objectives = list(self.substeps)
        converged = len(alphas) >= 2 and abs(alphas[-1] - alphas[-2]) <= \
            self.params.dinkelbach_tol * abs(alphas[-2])
        return SolveResult(best.state, best, trace, used, converged)

    def _repair(self, ev: Evaluation) -> Evaluation:
        """Make the starting point feasible by moving power into the QoS polytope."""
        if ev.state.num_active < self.system.K:
            raise InfeasibleError("fewer active APs than UEs")
        prob = _power_problem(self.system, ev, 0.0)
        p = restore_feasibility(prob, ev.state.p)
        fixed = self.system.evaluate(ev.state.with_(p=p))
        if not self.system.is_feasible(fixed):
            raise InfeasibleError(f"initial state cannot be repaired: {self.system.violations(fixed)}")
        return fixed


def dinkelbach_solve(system: System, state: NetworkState | None = None,
                     params: SolverParams | None = None, mode: str | None = None,
                     blocks=BLOCKS, ap_method: str | None = None, ris_method: str | None = None,
                     rng: np.random.Generator | None = None) -> SolveResult:
    """Maximise EE from ``state`` (default: all APs on, heuristic power, random angles).

    ``mode`` selects the block solvers (``near_optimal``: BnB + GP,
    ``low_complexity``: greedy + WOA); ``blocks`` restricts which variable
    groups may change, which is how the baselines are run. Raises
    :class:`InfeasibleError` if the QoS targets cannot be met with every AP on.
    """
    params = params or system.cfg.solver
    mode = mode or params.mode
    ap_default, ris_default = MODES[mode]
    rng = rng if rng is not None else np.random.default_rng(0)
    if state is None:
        state = system.initial_state(rng=rng)
    runner = AoRunner(system, params, ap_method or ap_default, ris_method or ris_default,
                      blocks, rng)
    res = runner.solve(state)
    res.runner = runner
    return res


__all__ = ["dinkelbach", "dinkelbach_solve", "AoRunner", "SolveTrace", "SolveResult", "TraceRecord",
           "MODES"]
