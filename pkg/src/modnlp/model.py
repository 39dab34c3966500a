"""Evaluable NLP models: the model interface, evaluation records, derivative
checking, and evaluation-counting instrumentation.

Models carry general row bounds l <= c(x) <= u; the solver itself operates on
equality form (every row reduced to c(x) = 0), produced by the reformulation
module.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import NonFiniteEvaluationError


@dataclass(frozen=True)
class Model:
    """An evaluable NLP: min f(x) s.t. l_c <= c(x) <= u_c, l_x <= x <= u_x.

    After reformulation all constraint rows are equalities (l_c = u_c = 0).
    eval_lagrangian_hessian(x, rho, y) returns
    W_rho(x, y) = rho * H_f(x) - sum_j y_j * H_cj(x), exactly symmetric.
    """

    name: str
    n: int
    m: int
    variable_lower: np.ndarray
    variable_upper: np.ndarray
    constraint_lower: np.ndarray
    constraint_upper: np.ndarray
    eval_objective: Callable[[np.ndarray], float]
    eval_constraints: Callable[[np.ndarray], np.ndarray]
    eval_objective_gradient: Callable[[np.ndarray], np.ndarray]
    eval_constraint_jacobian: Callable[[np.ndarray], np.ndarray]
    eval_lagrangian_hessian: Callable[[np.ndarray, float, np.ndarray], np.ndarray]
    initial_point: np.ndarray
    linear_rows: tuple[int, ...] = ()

    @property
    def is_equality_form(self) -> bool:
        return bool(
            np.all(self.constraint_lower == 0.0) and np.all(self.constraint_upper == 0.0)
        )


@dataclass(frozen=True)
class Evaluations:
    """Cached function values at one point; is_finite is false iff any stored
    entry is NaN or infinite."""

    f: float
    c: np.ndarray
    grad_f: np.ndarray | None = None
    jac_c: np.ndarray | None = None
    hessian: np.ndarray | None = None

    @property
    def is_finite(self) -> bool:
        for part in (self.f, self.c, self.grad_f, self.jac_c, self.hessian):
            if part is None:
                continue
            if not np.all(np.isfinite(part)):
                return False
        return True


def evaluate(
    model: Model,
    x: np.ndarray,
    rho: float = 1.0,
    y: np.ndarray | None = None,
    with_hessian: bool = False,
    with_derivatives: bool = True,
) -> Evaluations:
    """Evaluate the model at x. Non-finite values are reported through
    Evaluations.is_finite rather than raised; the driver decides recovery."""
    x = np.asarray(x, dtype=float)
    if y is None:
        y = np.zeros(model.m)
    with np.errstate(all="ignore"):
        f = float(model.eval_objective(x))
        c = np.asarray(model.eval_constraints(x), dtype=float).reshape(model.m)
        grad = jac = hess = None
        if with_derivatives:
            grad = np.asarray(model.eval_objective_gradient(x), dtype=float).reshape(model.n)
            jac = np.asarray(model.eval_constraint_jacobian(x), dtype=float).reshape(
                model.m, model.n
            )
        if with_hessian:
            hess = np.asarray(
                model.eval_lagrangian_hessian(x, float(rho), np.asarray(y, dtype=float)),
                dtype=float,
            ).reshape(model.n, model.n)
    return Evaluations(f, c, grad, jac, hess)


@dataclass(frozen=True)
class DerivativeReport:
    gradient_error: float
    jacobian_error: float
    hessian_error: float
    threshold: float

    @property
    def ok(self) -> bool:
        return (
            self.gradient_error <= self.threshold
            and self.jacobian_error <= self.threshold
            and self.hessian_error <= self.threshold
        )


def check_derivatives(model: Model, x: np.ndarray, h: float = 1e-6) -> DerivativeReport:
    """Compare hand-coded derivatives against central differences.

    Steps are h * (1 + |x_i|) per coordinate. Raises NonFiniteEvaluationError
    if any probe is non-finite.
    """
    x = np.asarray(x, dtype=float)
    n, m = model.n, model.m
    rho = 1.0
    y = np.array([(-1.0) ** j / (1.0 + j) for j in range(m)])

    base = evaluate(model, x, rho, y, with_hessian=True)
    if not base.is_finite:
        raise NonFiniteEvaluationError("non-finite evaluation at the probe center")

    fd_grad = np.zeros(n)
    fd_jac = np.zeros((m, n))
    fd_hess = np.zeros((n, n))
    for i in range(n):
        step = h * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        ep = evaluate(model, xp, rho, y)
        em = evaluate(model, xm, rho, y)
        if not (ep.is_finite and em.is_finite):
            raise NonFiniteEvaluationError("non-finite evaluation at a probe point")
        fd_grad[i] = (ep.f - em.f) / (2.0 * step)
        fd_jac[:, i] = (ep.c - em.c) / (2.0 * step)
        grad_lag_p = rho * ep.grad_f - ep.jac_c.T @ y
        grad_lag_m = rho * em.grad_f - em.jac_c.T @ y
        fd_hess[:, i] = (grad_lag_p - grad_lag_m) / (2.0 * step)

    def rel_err(approx, exact):
        if exact.size == 0:
            return 0.0
        scale = 1.0 + float(np.max(np.abs(exact)))
        return float(np.max(np.abs(approx - exact))) / scale

    return DerivativeReport(
        gradient_error=rel_err(fd_grad, base.grad_f),
        jacobian_error=rel_err(fd_jac, base.jac_c),
        hessian_error=rel_err(fd_hess, base.hessian),
        threshold=1e-5,
    )


@dataclass
class EvaluationCounts:
    objective: int = 0
    constraints: int = 0
    objective_gradient: int = 0
    constraint_jacobian: int = 0
    hessian: int = 0


def instrument(model: Model) -> tuple[Model, EvaluationCounts]:
    """Wrap a model so every callback invocation is counted.

    The objective counter is the comparison metric across solver
    configurations.
    """
    counts = EvaluationCounts()
    f, c = model.eval_objective, model.eval_constraints
    g, J, H = (
        model.eval_objective_gradient,
        model.eval_constraint_jacobian,
        model.eval_lagrangian_hessian,
    )

    def count_f(x):
        counts.objective += 1
        return f(x)

    def count_c(x):
        counts.constraints += 1
        return c(x)

    def count_g(x):
        counts.objective_gradient += 1
        return g(x)

    def count_J(x):
        counts.constraint_jacobian += 1
        return J(x)

    def count_H(x, rho, y):
        counts.hessian += 1
        return H(x, rho, y)

    wrapped = replace(
        model,
        eval_objective=count_f,
        eval_constraints=count_c,
        eval_objective_gradient=count_g,
        eval_constraint_jacobian=count_J,
        eval_lagrangian_hessian=count_H,
    )
    return wrapped, counts
