"""SCA power allocation under fixed activation and RIS angles.

The rate of UE k is a difference of concave functions of p,
``log2(p_k + D_k(p)) - log2(D_k(p))`` with ``D_k`` affine. Linearising the
subtracted term at the current point gives a concave minorant; each SCA
step maximises the resulting concave surrogate of ``f - alpha * g`` over
the feasible polytope with a spectral projected-gradient method.

All constraints are linear in p:

* box ``p_floor <= p_k <= P_UE``
* per-AP budget ``sum_j p_j |V_mj|^2 <= P_max``
* QoS ``p_k >= t (sum_i gamma_ki p_i + sigma^2)`` with ``t = 2^xi - 1``

Internally the solver works with ``x = p / sigma^2`` so that the variables
are O(1)-O(100) regardless of the pathloss scale.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .system import InfeasibleError

LN2 = np.log(2.0)


def rate_lower_bound(p, p_s, gamma, sigma2, bandwidth, k, prelog=1.0):
    """Concave minorant of B*R_k at expansion point ``p_s``; returns (value, gradient)."""
    p = np.asarray(p, dtype=float)
    p_s = np.asarray(p_s, dtype=float)
    g = gamma[k]
    D = g @ p + sigma2
    Ds = g @ p_s + sigma2
    val = np.log2(p[k] + D) - np.log2(Ds) - g @ (p - p_s) / (LN2 * Ds)
    e_k = np.zeros_like(p)
    e_k[k] = 1.0
    grad = (e_k + g) / (LN2 * (p[k] + D)) - g / (LN2 * Ds)
    scale = bandwidth * prelog
    return scale * val, scale * grad


def true_rates(p, gamma, sigma2):
    """log2(1 + SINR_k) for every UE."""
    return np.log2(1 + p / (gamma @ p + sigma2))


@dataclass
class PowerProblem:
    """Everything the power subproblem needs, in physical units."""

    gamma: np.ndarray  # (K, K)
    c: np.ndarray  # (K,)
    ap_rows: np.ndarray  # (M_A, K) |V_mk|^2 for active APs
    sigma2: float
    bandwidth: float
    alpha: float
    p_dyn: float  # W per bit/s
    p_stat: float  # W
    p_max: float
    p_ue_cap: float
    qos_sinr: float  # t = 2^(xi/prelog) - 1
    prelog: float = 1.0

    @property
    def K(self) -> int:
        return self.gamma.shape[0]

    @property
    def effective_cap(self) -> np.ndarray:
        """Per-UE power cap implied by the per-UE and per-AP budgets."""
        worst = self.ap_rows.max(axis=0) if self.ap_rows.size else np.zeros(self.K)
        with np.errstate(divide="ignore"):
            ap_cap = np.where(worst > 0, self.p_max / np.where(worst > 0, worst, 1.0), np.inf)
        return np.minimum(self.p_ue_cap, ap_cap)

    @property
    def floor(self) -> np.ndarray:
        """Positivity floor, 1e-9 of each UE's effective cap (ZF rescales p by |V|^2)."""
        return 1e-9 * self.effective_cap

    def sum_rate(self, p) -> float:
        return float(self.bandwidth * self.prelog * true_rates(p, self.gamma, self.sigma2).sum())

    def objective(self, p) -> float:
        """True subtractive objective f - alpha * g (including the static part)."""
        f = self.sum_rate(p)
        return f * (1 - self.alpha * self.p_dyn) - self.alpha * (self.c @ p + self.p_stat)

    def constraints(self):
        """Scaled linear constraints ``A x <= b`` in x = p / sigma^2, rows normalised."""
        K, s2 = self.K, self.sigma2
        eye = np.eye(K)
        rows = [eye, -eye, self.ap_rows * s2, self.qos_sinr * self.gamma - eye]
        # p_k |V_mk|^2 <= P_max makes the effective cap an implied bound; using
        # it instead of P_UE keeps every row on the same numeric scale
        rhs = [self.effective_cap / s2, -self.floor / s2,
               np.full(self.ap_rows.shape[0], self.p_max), np.full(K, -self.qos_sinr)]
        A = np.vstack(rows)
        b = np.concatenate(rhs)
        if self.qos_sinr <= 0:
            A, b = A[:-K], b[:-K]
        norms = np.linalg.norm(A, axis=1)
        keep = norms > 0
        return A[keep] / norms[keep, None], b[keep] / norms[keep]

    def violation(self, p) -> float:
        A, b = self.constraints()
        return float(np.max(A @ (p / self.sigma2) - b, initial=-np.inf))


def project_polytope(y, A, b):
    """Euclidean projection of ``y`` onto ``{x : A x <= b}``.

    Least-distance programming via NNLS: the correction z solves
    ``min |z| s.t. A z <= b - A y``.
    """
    r = b - A @ y
    if np.all(r >= 0):
        return y.copy()
    n = y.size
    E = np.vstack([-A.T, -r[None, :]])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    u, _ = nnls(E, rhs, maxiter=50 * E.shape[1])
    res = E @ u - rhs
    if abs(res[-1]) < 1e-14:
        raise InfeasibleError("projection onto an empty polytope")
    return y - res[:n] / res[-1]


def pull_feasible(x_anchor, x, A, b, tol=1e-10):
    """Largest step from a feasible anchor towards ``x`` that stays feasible.

    Rows may be violated by at most ``tol`` (rows are unit-norm, so this is
    a distance); without the slack a constraint that is active at the
    anchor up to rounding would block every step.
    """
    d = x - x_anchor
    Ad = A @ d
    slack = b - A @ x_anchor + tol
    t = 1.0
    pos = Ad > 0
    if np.any(pos):
        t = float(np.clip(np.min(slack[pos] / Ad[pos]), 0.0, 1.0))
    return x_anchor + t * d


@dataclass
class SubproblemResult:
    p: np.ndarray
    value: float  # surrogate objective (scaled units)
    kkt_residual: float
    scale: float
    iterations: int


class _Surrogate:
    """Concave surrogate in scaled units, normalised by B * prelog."""

    def __init__(self, prob: PowerProblem, p_s):
        self.prob = prob
        s2 = prob.sigma2
        # D_k(p) = s2 * (gamma_k @ x + 1) since gamma is dimensionless
        self.xs = np.asarray(p_s, dtype=float) / s2
        self.Ds = prob.gamma @ p_s / s2 + 1.0
        self.w = 1 - prob.alpha * prob.p_dyn
        self.lin = prob.alpha * prob.c * s2 / (prob.bandwidth * prob.prelog)

    def value(self, x):
        D = self.prob.gamma @ x + 1.0
        rate = np.log2(x + D) - np.log2(self.Ds) - (self.prob.gamma @ (x - self.xs)) / (LN2 * self.Ds)
        return self.w * rate.sum() - self.lin @ x

    def grad(self, x):
        gam = self.prob.gamma
        D = gam @ x + 1.0
        first = 1 / (LN2 * (x + D))
        g = first + gam.T @ first - gam.T @ (1 / (LN2 * self.Ds))
        return self.w * g - self.lin


def solve_convex_subproblem(prob: PowerProblem, p_s, tol=1e-10, max_iter=500) -> SubproblemResult:
    """Maximise the concave surrogate built at ``p_s`` over the feasible polytope.

    ``p_s`` must be feasible. Spectral projected gradient (Barzilai-Borwein
    steps, non-monotone Armijo); the returned point is never worse than
    ``p_s`` on the surrogate.
    """
    s2 = prob.sigma2
    A, b = prob.constraints()
    sur = _Surrogate(prob, p_s)
    x = sur.xs.copy()
    if np.max(A @ x - b) > 1e-9:
        raise InfeasibleError("SCA expansion point is infeasible")
    hx = sur.value(x)
    gx = sur.grad(x)
    scale = max(float(np.linalg.norm(gx)), 1e-300)
    best_x, best_h = x.copy(), hx

    def residual(x, g):
        return float(np.linalg.norm(project_polytope(x + g, A, b) - x))

    lam = 1.0 / max(np.linalg.norm(project_polytope(x + gx, A, b) - x, ord=np.inf), 1e-12)
    # keep trial points within a few box widths of the polytope
    width = float(np.max(prob.effective_cap)) / s2
    lam_max = 10 * width / max(float(np.max(np.abs(gx))), 1e-300)
    lam = float(np.clip(lam, 1e-8, lam_max))
    history = [hx]
    it = 0
    for it in range(1, max_iter + 1):
        z = pull_feasible(x, project_polytope(x + lam * gx, A, b), A, b)
        d = z - x
        dnorm = np.linalg.norm(d)
        if dnorm <= tol * (1 + np.linalg.norm(x)):
            break
        slope = gx @ d
        ref = max(history[-10:])
        t = 1.0
        while True:
            xn = x + t * d
            hn = sur.value(xn)
            if hn >= ref + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        gn = sur.grad(xn)
        s = xn - x
        y = -(gn - gx)  # gradient change of the minimised function -h
        sy = s @ y
        gmax = max(float(np.max(np.abs(gn))), 1e-300)
        lam_max = 10 * width / gmax
        lam = float(np.clip(s @ s / sy, 1e-8, lam_max)) if sy > 0 else lam_max
        x, hx, gx = xn, hn, gn
        history.append(hx)
        if hx > best_h:
            best_x, best_h = x.copy(), hx
    kkt = residual(best_x, sur.grad(best_x))
    return SubproblemResult(best_x * s2, float(best_h), kkt, scale, it)


def minimal_qos_power(prob: PowerProblem):
    """Componentwise-smallest p meeting every QoS constraint with equality, or None."""
    K, t = prob.K, prob.qos_sinr
    if t <= 0:
        return np.full(K, prob.floor)
    Mtx = np.eye(K) - t * prob.gamma
    rho = np.max(np.abs(np.linalg.eigvals(t * prob.gamma)))
    if rho >= 1:
        return None
    p = np.linalg.solve(Mtx, np.full(K, t * prob.sigma2))
    return np.maximum(p, prob.floor)


def restore_feasibility(prob: PowerProblem, p_init):
    """Move ``p_init`` into the feasible polytope.

    Starts from the minimal QoS power and walks towards ``p_init`` as far as
    the constraints allow (exact ratio test, all constraints are linear).
    """
    A, b = prob.constraints()
    x0 = np.asarray(p_init, dtype=float) / prob.sigma2
    if np.max(A @ x0 - b) <= 1e-10:
        return np.asarray(p_init, dtype=float)
    p_min = minimal_qos_power(prob)
    if p_min is None:
        raise InfeasibleError("QoS targets unreachable (interference too strong)")
    xm = p_min / prob.sigma2
    if np.max(A @ xm - b) > 1e-12:
        raise InfeasibleError("QoS targets need more than the power budgets allow")
    return pull_feasible(xm, x0, A, b) * prob.sigma2


@dataclass
class ScaResult:
    p: np.ndarray
    objective_history: list = field(default_factory=list)
    iterations: int = 0
    solver_iterations: int = 0


def sca_solve(prob: PowerProblem, p_init, tol=1e-4, max_iter=50) -> ScaResult:
    """SCA loop: rebuild the minorant at the iterate, solve, stop on small relative step.

    The true objective is non-decreasing across iterations (a step that would
    decrease it is rejected and the loop ends).
    """
    p = restore_feasibility(prob, p_init)
    obj = prob.objective(p)
    res = ScaResult(p, [obj])
    for s in range(max_iter):
        sub = solve_convex_subproblem(prob, p)
        res.solver_iterations += sub.iterations
        res.iterations = s + 1
        new_obj = prob.objective(sub.p)
        if new_obj < obj:
            break
        step = np.linalg.norm(sub.p - p) / np.linalg.norm(p)
        p, obj = sub.p, new_obj
        res.objective_history.append(obj)
        if step < tol:
            break
    res.p = p
    return res
