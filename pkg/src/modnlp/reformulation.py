"""Automatic model transformations: slack reformulation to equality form,
gradient-based function scaling, and the smooth elastic reformulation of the
l1 relaxed / l1 feasibility problems.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InconsistentBoundsError, NonFiniteEvaluationError
from .model import Model


def to_equality_form(model: Model) -> Model:
    """Turn every general row l <= c(x) <= u into an equality.

    Equality rows pass through shifted to c(x) - b = 0; inequality rows get a
    slack with the row bounds and become c(x) - s = 0. Slacks are appended
    after the original variables.
    """
    lo, hi = model.constraint_lower, model.constraint_upper
    if np.any(lo > hi):
        bad = int(np.argmax(lo > hi))
        raise InconsistentBoundsError(
            "constraint %d has lower bound %g > upper bound %g" % (bad, lo[bad], hi[bad])
        )
    if model.is_equality_form:
        return model

    n, m = model.n, model.m
    slack_rows = [j for j in range(m) if lo[j] < hi[j]]
    shift = np.where(lo == hi, lo, 0.0)
    n_slack = len(slack_rows)
    slack_of_row = {j: k for k, j in enumerate(slack_rows)}

    E = np.zeros((m, n_slack))
    for j, k in slack_of_row.items():
        E[j, k] = 1.0

    base_c = model.eval_constraints
    base_jac = model.eval_constraint_jacobian
    base_grad = model.eval_objective_gradient
    base_f = model.eval_objective
    base_hess = model.eval_lagrangian_hessian

    def constraints(w):
        return base_c(w[:n]) - shift - E @ w[n:]

    def jacobian(w):
        return np.hstack([base_jac(w[:n]), -E])

    def objective(w):
        return base_f(w[:n])

    def gradient(w):
        return np.concatenate([base_grad(w[:n]), np.zeros(n_slack)])

    def hessian(w, rho, y):
        W = np.zeros((n + n_slack, n + n_slack))
        W[:n, :n] = base_hess(w[:n], rho, y)
        return W

    c0 = np.asarray(base_c(model.initial_point), dtype=float)
    s0 = np.clip(np.nan_to_num(c0[slack_rows], nan=0.0, posinf=0.0, neginf=0.0),
                 lo[slack_rows], hi[slack_rows])

    return Model(
        name=model.name,
        n=n + n_slack,
        m=m,
        variable_lower=np.concatenate([model.variable_lower, lo[slack_rows]]),
        variable_upper=np.concatenate([model.variable_upper, hi[slack_rows]]),
        constraint_lower=np.zeros(m),
        constraint_upper=np.zeros(m),
        eval_objective=objective,
        eval_constraints=constraints,
        eval_objective_gradient=gradient,
        eval_constraint_jacobian=jacobian,
        eval_lagrangian_hessian=hessian,
        initial_point=np.concatenate([model.initial_point, s0]),
        linear_rows=model.linear_rows,
    )


@dataclass(frozen=True)
class ScalingFactors:
    s_f: float
    s_c: np.ndarray
    s_max: float = 100.0


def scale_functions(model: Model, x0: np.ndarray, s_max: float = 100.0):
    """Scale f and each c_j by min(1, s_max / ||gradient at x0||_inf).

    Applied once at the initial point and never rescaled.
    """
    grad0 = np.asarray(model.eval_objective_gradient(x0), dtype=float)
    jac0 = np.asarray(model.eval_constraint_jacobian(x0), dtype=float).reshape(model.m, model.n)
    if not (np.all(np.isfinite(grad0)) and np.all(np.isfinite(jac0))):
        raise NonFiniteEvaluationError("cannot scale: non-finite derivatives at x0")

    def factor(row_norm):
        return 1.0 if row_norm == 0.0 else min(1.0, s_max / row_norm)

    s_f = factor(float(np.max(np.abs(grad0), initial=0.0)))
    s_c = np.array(
        [factor(float(np.max(np.abs(jac0[j]), initial=0.0))) for j in range(model.m)]
    )
    factors = ScalingFactors(s_f=s_f, s_c=s_c, s_max=s_max)

    base_f = model.eval_objective
    base_grad = model.eval_objective_gradient
    base_c = model.eval_constraints
    base_jac = model.eval_constraint_jacobian
    base_hess = model.eval_lagrangian_hessian

    scaled = replace(
        model,
        constraint_lower=model.constraint_lower * s_c,
        constraint_upper=model.constraint_upper * s_c,
        eval_objective=lambda x: s_f * base_f(x),
        eval_objective_gradient=lambda x: s_f * np.asarray(base_grad(x)),
        eval_constraints=lambda x: s_c * np.asarray(base_c(x)),
        eval_constraint_jacobian=lambda x: s_c[:, None] * np.asarray(base_jac(x)),
        eval_lagrangian_hessian=lambda x, rho, y: base_hess(x, rho * s_f, s_c * np.asarray(y)),
    )
    return scaled, factors


def elastic_init(c_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Positive and negative parts of c: u+ = max(c, 0), u- = max(-c, 0)."""
    c = np.asarray(c_values, dtype=float)
    return np.maximum(c, 0.0), np.maximum(-c, 0.0)


class ElasticModel:
    """Smooth elastic reformulation over variables (x, u+, u-):

        min  rho * f(x) + e^T u+ + e^T u-
        s.t. c(x) - u+ + u- = 0,  u+ >= 0,  u- >= 0  (plus the x bounds).

    rho = 0 is the l1 feasibility problem. rho is mutable in place (penalty
    steering updates it without rebuilding). The elastic identity blocks make
    the constraint Jacobian full row rank everywhere.
    """

    def __init__(self, base: Model, rho: float):
        if not base.is_equality_form:
            raise ValueError("elastic reformulation requires an equality-form model")
        self.base = base
        self.rho = float(rho)
        n, m = base.n, base.m
        self.name = base.name + "+elastic"
        self.n = n + 2 * m
        self.m = m
        self.n_elastic = 2 * m
        self.variable_lower = np.concatenate([base.variable_lower, np.zeros(2 * m)])
        self.variable_upper = np.concatenate([base.variable_upper, np.full(2 * m, np.inf)])
        self.constraint_lower = np.zeros(m)
        self.constraint_upper = np.zeros(m)
        self.linear_rows = base.linear_rows

        c0 = np.asarray(base.eval_constraints(base.initial_point), dtype=float)
        u_plus, u_minus = elastic_init(np.nan_to_num(c0, nan=0.0, posinf=0.0, neginf=0.0))
        self.initial_point = np.concatenate([base.initial_point, u_plus, u_minus])

        def objective(w):
            return self.rho * base.eval_objective(w[:n]) + float(np.sum(w[n:]))

        def constraints(w):
            return (
                np.asarray(base.eval_constraints(w[:n]))
                - w[n:n + m]
                + w[n + m:]
            )

        def gradient(w):
            return np.concatenate(
                [self.rho * np.asarray(base.eval_objective_gradient(w[:n])), np.ones(2 * m)]
            )

        def jacobian(w):
            J = np.asarray(base.eval_constraint_jacobian(w[:n]))
            return np.hstack([J, -np.eye(m), np.eye(m)])

        def hessian(w, rho_outer, y):
            W = np.zeros((self.n, self.n))
            W[:n, :n] = base.eval_lagrangian_hessian(w[:n], rho_outer * self.rho, y)
            return W

        self.eval_objective = objective
        self.eval_constraints = constraints
        self.eval_objective_gradient = gradient
        self.eval_constraint_jacobian = jacobian
        self.eval_lagrangian_hessian = hessian

    @property
    def is_equality_form(self) -> bool:
        return True

    def set_rho(self, rho: float) -> None:
        self.rho = float(rho)

    def embed(self, x: np.ndarray, c_values: np.ndarray) -> np.ndarray:
        """Lift a base-space point to the elastic space with exact equality
        residuals (u from the positive/negative parts of c)."""
        u_plus, u_minus = elastic_init(c_values)
        return np.concatenate([x, u_plus, u_minus])


def make_l1_relaxed(model: Model, rho: float) -> ElasticModel:
    return ElasticModel(model, rho)
