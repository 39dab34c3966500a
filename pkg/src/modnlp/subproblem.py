"""Local approximations: the SQP/SLP QP (optionally trust-region bounded and
with elastics), and the primal-dual interior-point step with
fraction-to-boundary step caps and barrier-parameter management.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteEvaluationError
from .linalg import (
    QPData,
    RegularizationSchedule,
    inertia_correct,
    make_positive_definite,
    solve_factorized,
)
from .model import Evaluations

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"


@dataclass
class Direction:
    """Primal-dual direction with step caps and reduction-model ingredients.

    dy is the change of the equality multipliers; dzl/dzu are the changes of
    the bound multipliers (lower/upper side). alpha_max is 1 for SQP/LP
    subproblems and the primal fraction-to-boundary value for IPM; dual_scale
    is the corresponding dual step length (bound multipliers always step by
    dual_scale, independently of the backtracked primal step).
    """

    dx: np.ndarray
    dy: np.ndarray
    dzl: np.ndarray
    dzu: np.ndarray
    status: str
    alpha_max: float = 1.0
    dual_scale: float = 1.0
    subproblem_objective: float = 0.0
    gtd: float = 0.0
    dwd: float = 0.0
    btd: float = 0.0
    dbd: float = 0.0
    tr_active: np.ndarray | None = None  # mask: trust region binds this component
    info: dict = field(default_factory=dict)

    @property
    def dz(self) -> np.ndarray:
        return self.dzl - self.dzu

    @property
    def is_zero_step(self) -> bool:
        return float(np.max(np.abs(self.dx), initial=0.0)) == 0.0


@dataclass
class BarrierState:
    """Monotone (Fiacco-McCormick) barrier parameter state."""

    mu: float = 0.1
    tau_min: float = 0.99
    kappa_epsilon: float = 10.0
    kappa_mu: float = 0.2
    theta_mu: float = 1.5
    delta_w: float = 0.0
    delta_c: float = 0.0

    @property
    def tau(self) -> float:
        return max(self.tau_min, 1.0 - self.mu)


def update_barrier_parameter(
    barrier: BarrierState, kkt_error: float, epsilon: float
) -> tuple[BarrierState, bool]:
    """Decrease mu once the barrier-problem KKT error is below
    kappa_epsilon * mu; the caller must flush the filter on change."""
    if kkt_error > barrier.kappa_epsilon * barrier.mu:
        return barrier, False
    new_mu = max(
        epsilon / 10.0,
        min(barrier.kappa_mu * barrier.mu, barrier.mu**barrier.theta_mu),
    )
    if new_mu >= barrier.mu:
        return barrier, False
    barrier.mu = new_mu
    return barrier, True


def build_sqp_qp(
    evals: Evaluations,
    x: np.ndarray,
    rho: float,
    lower: np.ndarray,
    upper: np.ndarray,
    trust_radius: float | None = None,
    regularize: bool = False,
    schedule: RegularizationSchedule | None = None,
    second_order: bool = True,
) -> tuple[QPData, float, np.ndarray]:
    """Assemble the QP  min 1/2 d'Wd + rho grad_f'd  s.t. c + Jd = 0,
    bounds on x + d, and optionally ||d||_inf <= trust_radius.

    With regularize, W is shifted to W + delta_w I positive definite (the
    line-search lineage requirement). With second_order False the QP is an LP
    (W = 0). Returns (qp, delta_w, trust-region-active-candidate mask pair).
    """
    n = x.size
    if second_order:
        W = np.asarray(evals.hessian, dtype=float)
    else:
        W = np.zeros((n, n))
    delta_w = 0.0
    if regularize and second_order:
        W, delta_w = make_positive_definite(W, schedule or RegularizationSchedule())
    g = rho * np.asarray(evals.grad_f, dtype=float)
    A = np.asarray(evals.jac_c, dtype=float)
    b = -np.asarray(evals.c, dtype=float)
    lb = lower - x
    ub = upper - x
    tr_lower = np.zeros(n, dtype=bool)
    tr_upper = np.zeros(n, dtype=bool)
    if trust_radius is not None and np.isfinite(trust_radius):
        tr_lower = -trust_radius > lb
        tr_upper = trust_radius < ub
        lb = np.maximum(lb, -trust_radius)
        ub = np.minimum(ub, trust_radius)
    qp = QPData(W, g, A, b, lb, ub)
    return qp, delta_w, np.stack([tr_lower, tr_upper])


def extend_with_elastics(qp: QPData) -> QPData:
    """Append elastic columns: constraints become c + Jd - u+ + u- = 0 with
    u+,u- >= 0 and unit objective weight; the extension is always feasible."""
    n, m = qp.n, qp.m
    ne = n + 2 * m
    W = np.zeros((ne, ne))
    W[:n, :n] = qp.W
    g = np.concatenate([qp.g, np.ones(2 * m)])
    A = np.hstack([qp.A, -np.eye(m), np.eye(m)])
    lb = np.concatenate([qp.d_lower, np.zeros(2 * m)])
    ub = np.concatenate([qp.d_upper, np.full(2 * m, np.inf)])
    return QPData(W, g, A, qp.b, lb, ub)


def fraction_to_boundary(
    x: np.ndarray,
    dx: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    tau: float,
) -> float:
    """Largest alpha in (0, 1] with x + alpha dx >= l + (1 - tau)(x - l) and
    x + alpha dx <= u - (1 - tau)(u - x) componentwise."""
    alpha = 1.0
    for xi, di, lo, hi in zip(x, dx, lower, upper):
        if di < 0.0 and np.isfinite(lo):
            alpha = min(alpha, -tau * (xi - lo) / di)
        elif di > 0.0 and np.isfinite(hi):
            alpha = min(alpha, tau * (hi - xi) / di)
    return max(min(alpha, 1.0), 0.0)


def fraction_to_boundary_dual(zl, dzl, zu, dzu, tau) -> float:
    alpha = 1.0
    for z, dz in ((zl, dzl), (zu, dzu)):
        neg = dz < 0.0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-tau * z[neg] / dz[neg])))
    return max(min(alpha, 1.0), 0.0)


def push_to_interior(x, lower, upper, kappa: float = 1e-2) -> np.ndarray:
    """Move x strictly inside its finite bounds (at least kappa-relative)."""
    x = np.asarray(x, dtype=float).copy()
    for i in range(x.size):
        lo, hi = lower[i], upper[i]
        pad_lo = kappa * max(1.0, abs(lo)) if np.isfinite(lo) else 0.0
        pad_hi = kappa * max(1.0, abs(hi)) if np.isfinite(hi) else 0.0
        if np.isfinite(lo) and np.isfinite(hi):
            width = hi - lo
            pad_lo = min(pad_lo, 0.25 * width)
            pad_hi = min(pad_hi, 0.25 * width)
        if np.isfinite(lo):
            x[i] = max(x[i], lo + pad_lo)
        if np.isfinite(hi):
            x[i] = min(x[i], hi - pad_hi)
    return x


def initial_bound_multipliers(lower, upper) -> tuple[np.ndarray, np.ndarray]:
    zl = np.where(np.isfinite(lower), 1.0, 0.0)
    zu = np.where(np.isfinite(upper), 1.0, 0.0)
    return zl, zu


def barrier_gradient_terms(x, lower, upper, mu) -> np.ndarray:
    """-mu/(x-l) + mu/(u-x) over the finite bounds (gradient of the barrier)."""
    out = np.zeros(x.size)
    finite_lo = np.isfinite(lower)
    finite_hi = np.isfinite(upper)
    out[finite_lo] -= mu / (x[finite_lo] - lower[finite_lo])
    out[finite_hi] += mu / (upper[finite_hi] - x[finite_hi])
    return out


def primal_dual_diagonal(x, lower, upper, zl, zu) -> np.ndarray:
    """Sigma = Zl (X - L)^{-1} + Zu (U - X)^{-1} over the finite bounds."""
    sigma = np.zeros(x.size)
    finite_lo = np.isfinite(lower)
    finite_hi = np.isfinite(upper)
    sigma[finite_lo] += zl[finite_lo] / (x[finite_lo] - lower[finite_lo])
    sigma[finite_hi] += zu[finite_hi] / (upper[finite_hi] - x[finite_hi])
    return sigma


def ipm_solve_step(
    evals: Evaluations,
    x: np.ndarray,
    y: np.ndarray,
    zl: np.ndarray,
    zu: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    barrier: BarrierState,
    schedule: RegularizationSchedule,
    delta_c_scale: float = 1e-8,
) -> Direction:
    """One primal-dual interior-point step: assemble and solve the
    symmetrized system

        [[W + Sigma + dw I, J^T], [J, -dc I]] (dx, -dy) = -(r_d, c),

    with r_d = grad_f - J^T y - barrier gradient terms, recover the bound
    dual directions, and apply the fraction-to-boundary rule. The system is
    inertia-corrected to (n, m, 0).
    """
    if not evals.is_finite:
        raise NonFiniteEvaluationError("IPM step requires finite evaluations")
    n = x.size
    m = y.size
    mu = barrier.mu
    W = np.asarray(evals.hessian, dtype=float)
    J = np.asarray(evals.jac_c, dtype=float)
    c = np.asarray(evals.c, dtype=float)
    grad = np.asarray(evals.grad_f, dtype=float)

    sigma = primal_dual_diagonal(x, lower, upper, zl, zu)
    H = W + np.diag(sigma)
    r_d = grad - (J.T @ y if m else 0.0) + barrier_gradient_terms(x, lower, upper, mu)

    fact, delta_w, delta_c = inertia_correct(
        H, J, schedule, delta_c_value=delta_c_scale * max(mu, 1e-8) ** 0.25
    )
    barrier.delta_w, barrier.delta_c = delta_w, delta_c
    rhs = np.concatenate([-r_d, -c])
    sol = solve_factorized(fact, rhs)
    dx = sol[:n]
    dy = -sol[n:]

    finite_lo = np.isfinite(lower)
    finite_hi = np.isfinite(upper)
    dzl = np.zeros(n)
    dzu = np.zeros(n)
    gap_lo = x[finite_lo] - lower[finite_lo]
    gap_hi = upper[finite_hi] - x[finite_hi]
    dzl[finite_lo] = (mu - zl[finite_lo] * dx[finite_lo]) / gap_lo - zl[finite_lo]
    dzu[finite_hi] = (mu + zu[finite_hi] * dx[finite_hi]) / gap_hi - zu[finite_hi]

    tau = barrier.tau
    alpha_x = fraction_to_boundary(x, dx, lower, upper, tau)
    alpha_z = fraction_to_boundary_dual(zl[finite_lo], dzl[finite_lo], zu[finite_hi], dzu[finite_hi], tau)

    gtd = float(grad @ dx)
    dwd = float(dx @ W @ dx)
    btd = float(-barrier_gradient_terms(x, lower, upper, mu) @ dx)
    dbd = float(dx @ H @ dx)
    return Direction(
        dx=dx,
        dy=dy,
        dzl=dzl,
        dzu=dzu,
        status=OPTIMAL,
        alpha_max=alpha_x,
        dual_scale=alpha_z,
        subproblem_objective=float(0.5 * dx @ H @ dx + (grad + barrier_gradient_terms(x, lower, upper, mu)) @ dx),
        gtd=gtd,
        dwd=dwd,
        btd=btd,
        dbd=dbd,
    )


def barrier_kkt_error(
    evals: Evaluations,
    x: np.ndarray,
    y: np.ndarray,
    zl: np.ndarray,
    zu: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    mu: float,
    scaling_cap: float = 100.0,
) -> float:
    """Scaled KKT error of the barrier problem (drives the mu update)."""
    n, m = x.size, y.size
    grad = np.asarray(evals.grad_f, dtype=float)
    J = np.asarray(evals.jac_c, dtype=float)
    stat = grad - (J.T @ y if m else 0.0) - zl + zu
    finite_lo = np.isfinite(lower)
    finite_hi = np.isfinite(upper)
    comp_lo = (x[finite_lo] - lower[finite_lo]) * zl[finite_lo] - mu
    comp_hi = (upper[finite_hi] - x[finite_hi]) * zu[finite_hi] - mu
    multiplier_mass = float(np.sum(np.abs(y)) + np.sum(np.abs(zl)) + np.sum(np.abs(zu)))
    s_d = max(1.0, multiplier_mass / (scaling_cap * max(1, n + m)))
    parts = [float(np.max(np.abs(stat), initial=0.0)) / s_d]
    parts.append(float(np.max(np.abs(evals.c), initial=0.0)))
    parts.append(float(np.max(np.abs(comp_lo), initial=0.0)) / s_d)
    parts.append(float(np.max(np.abs(comp_hi), initial=0.0)) / s_d)
    return max(parts)
