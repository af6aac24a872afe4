"""RIS phase optimisation: gradient projection with finite differences, and WOA.

Both optimisers work on the flattened (L, N) angle array and only ever see a
fitness callable, so they can be driven by the sum rate of a real system or
by a synthetic function in tests. Fitness ``-inf`` marks a rejected angle
set (singular ZF, or a QoS violation when the caller asks for it).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import SolverParams
from .channel import wrap_phase
from .precoding import SingularGramError
from .system import NetworkState, System

Fitness = Callable[[np.ndarray], float]


class CountingFitness:
    """Wraps a fitness and counts calls."""

    def __init__(self, fn: Fitness):
        self.fn = fn
        self.calls = 0

    def __call__(self, theta) -> float:
        self.calls += 1
        return float(self.fn(theta))


def sum_rate_of_phases(system: System, state: NetworkState, theta, project: bool = True) -> float:
    """Sum rate f (bit/s) with RIS angles ``theta`` and the state's activation and power.

    The estimate, error covariances, precoder and gamma are all rebuilt for
    the new angles. Power is scaled down uniformly if the new precoder would
    overload an AP. Singular ZF gives ``-inf``.
    """
    try:
        ev = system.evaluate(state.with_(theta=np.asarray(theta, float).reshape(system.L, system.N)),
                             project=project)
    except SingularGramError:
        return -np.inf
    return ev.f


def phase_objective(system: System, state: NetworkState, alpha: float,
                    require_qos: bool = True) -> Fitness:
    """Fitness ``theta -> f - alpha g`` used inside the AO loop.

    Power is projected onto the per-AP budgets for each candidate; with
    ``require_qos`` any QoS violation gives ``-inf``.
    """
    shape = (system.L, system.N)

    def fitness(theta):
        st = state.with_(theta=np.asarray(theta, float).reshape(shape))
        try:
            ev = system.evaluate(st, project=True)
        except SingularGramError:
            return -np.inf
        if require_qos and not system.is_feasible(ev):
            return -np.inf
        return ev.objective(alpha)

    return fitness


def numerical_gradient(fitness: Fitness, theta, eps: float) -> np.ndarray:
    """Central differences, one angle at a time (2 L N fitness calls).

    Where one side of the stencil is rejected (``-inf``) the one-sided
    difference from the other side is used; if both are, that entry is 0.
    """
    if eps <= 0:
        raise ValueError("finite-difference step must be positive")
    theta = np.asarray(theta, dtype=float)
    flat = theta.ravel()
    grad = np.zeros_like(flat)
    f0 = None
    for n in range(flat.size):
        up = flat.copy()
        dn = flat.copy()
        up[n] += eps
        dn[n] -= eps
        fu = fitness(up.reshape(theta.shape))
        fd = fitness(dn.reshape(theta.shape))
        if np.isfinite(fu) and np.isfinite(fd):
            grad[n] = (fu - fd) / (2 * eps)
        elif np.isfinite(fu) or np.isfinite(fd):
            if f0 is None:
                f0 = fitness(theta)
            grad[n] = (fu - f0) / eps if np.isfinite(fu) else (f0 - fd) / eps
    return grad.reshape(theta.shape)


@dataclass
class RisResult:
    theta: np.ndarray
    value: float
    history: list = field(default_factory=list)  # accepted (GP) or best-so-far (WOA) fitness
    iterates: list = field(default_factory=list)
    evaluations: int = 0
    gradient_evaluations: int = 0
    iterations: int = 0
    line_search_failed: bool = False


def gp_step(theta, grad, step):
    """Move every coefficient along its tangent and renormalise to unit modulus.

    ``arg(e^{j theta} + step * g * j e^{j theta}) = theta + arctan(step * g)``.
    """
    return wrap_phase(theta + np.arctan(step * grad))


def gp_optimize(fitness: Fitness, theta0, params: SolverParams, scale: float | None = None,
                keep_iterates: bool = False) -> RisResult:
    """Gradient projection with Armijo backtracking.

    The first trial step is sized so the largest angle change is about
    ``params.armijo_step`` rad. Stops when the relative improvement falls
    below ``params.gp_tol`` (relative to ``scale``, default ``|f(theta0)|``)
    or after ``params.gp_max_iters`` iterations. A failed line search
    returns the current angles.
    """
    fit = CountingFitness(fitness)
    theta = wrap_phase(np.asarray(theta0, dtype=float))
    val = fit(theta)
    res = RisResult(theta, val, [val], [theta.copy()] if keep_iterates else [])
    if theta.size == 0 or not np.isfinite(val):
        res.evaluations = fit.calls
        return res
    ref = abs(val) if scale is None else abs(scale)
    ref = max(ref, 1e-300)
    for it in range(params.gp_max_iters):
        before = fit.calls
        grad = numerical_gradient(fit, theta, params.fd_step)
        res.gradient_evaluations += fit.calls - before
        gmax = np.max(np.abs(grad))
        if gmax == 0:
            break
        s0 = params.armijo_step / gmax
        s = s0
        g2 = float(grad.ravel() @ grad.ravel())
        accepted = None
        while s >= params.armijo_min_step * s0:
            cand = gp_step(theta, grad, s)
            fc = fit(cand)
            if np.isfinite(fc) and fc >= val + params.armijo_slope * s * g2:
                accepted = (cand, fc)
                break
            s *= params.armijo_shrink
        res.iterations = it + 1
        if accepted is None:
            res.line_search_failed = True
            break
        gain = accepted[1] - val
        theta, val = accepted
        res.history.append(val)
        if keep_iterates:
            res.iterates.append(theta.copy())
        if gain / ref < params.gp_tol:
            break
    res.theta, res.value, res.evaluations = theta, val, fit.calls
    return res


def woa_a_schedule(num_iters: int) -> np.ndarray:
    """Control parameter a, decreased linearly from 2 at the first iteration to 0 at the last."""
    if num_iters == 1:
        return np.array([2.0])
    return 2.0 * (1 - np.arange(num_iters) / (num_iters - 1))


def woa_optimize(fitness: Fitness, theta0, params: SolverParams, rng: np.random.Generator,
                 keep_iterates: bool = False) -> RisResult:
    """Whale optimisation over the angle vector, seeded with ``theta0``.

    Population: ``theta0`` plus ``woa_pop - 1`` uniform random whales.
    Each iteration moves every whale by encircling the best whale
    (|A| < 1), searching around a random whale (|A| >= 1), or the
    logarithmic spiral, then wraps angles to [0, 2 pi). The best whale is
    kept across iterations, so best-so-far fitness never decreases.
    Uses ``woa_pop * (woa_iters + 1)`` fitness calls.
    """
    if params.woa_pop < 2:
        raise ValueError("WOA needs at least two whales")
    fit = CountingFitness(fitness)
    theta0 = wrap_phase(np.asarray(theta0, dtype=float))
    shape = theta0.shape
    n, pop = theta0.size, params.woa_pop
    X = rng.uniform(0, 2 * np.pi, size=(pop, n))
    X[0] = theta0.ravel()
    vals = np.array([fit(x.reshape(shape)) for x in X])
    ib = int(np.argmax(vals))
    best, best_val = X[ib].copy(), vals[ib]
    res = RisResult(best.reshape(shape), best_val, [best_val])
    if keep_iterates:
        res.iterates.append(X.copy())
    b = params.woa_spiral
    for a in woa_a_schedule(params.woa_iters):
        newX = np.empty_like(X)
        for i in range(pop):
            r1 = rng.random(n)
            r2 = rng.random(n)
            A = 2 * a * r1 - a
            Cc = 2 * r2
            p = rng.random()
            l = rng.uniform(-1, 1)
            if p < 0.5:
                if np.max(np.abs(A)) < 1:
                    ref = best
                else:
                    ref = X[rng.integers(pop)]
                D = np.abs(Cc * ref - X[i])
                newX[i] = ref - A * D
            else:
                D = np.abs(best - X[i])
                newX[i] = D * np.exp(b * l) * np.cos(2 * np.pi * l) + best
        X = wrap_phase(newX)
        vals = np.array([fit(x.reshape(shape)) for x in X])
        ib = int(np.argmax(vals))
        if vals[ib] > best_val:
            best, best_val = X[ib].copy(), vals[ib]
        res.history.append(best_val)
        if keep_iterates:
            res.iterates.append(X.copy())
        res.iterations += 1
    res.theta, res.value, res.evaluations = best.reshape(shape), best_val, fit.calls
    return res


__all__ = ["sum_rate_of_phases", "phase_objective", "numerical_gradient", "gp_optimize",
           "woa_optimize", "woa_a_schedule", "gp_step", "RisResult", "CountingFitness"]
