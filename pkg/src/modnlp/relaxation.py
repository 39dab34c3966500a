"""Constraint relaxation strategies: l1 relaxation with penalty steering and
feasibility restoration with phase switching. Both own the progress-measure
definitions and produce feasible directions through a subproblem method.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QPFailureError, SingularMatrixError
from .globalization import (
    FilterMethod,
    GlobalizationStrategy,
    ProgressMeasures,
    ReductionModels,
    barrier_value,
    compute_measures,
    infeasibility_armijo,
)
from .linalg import (
    ITERATION_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    RegularizationSchedule,
    ldlt_factorize,
    qp_solve,
    solve_factorized,
)
from .model import Evaluations, evaluate
from .reformulation import ElasticModel, elastic_init, make_l1_relaxed
from .state import Iterate, Workspace
from .subproblem import (
    Direction,
    barrier_kkt_error,
    build_sqp_qp,
    extend_with_elastics,
    ipm_solve_step,
    update_barrier_parameter,
)

OPTIMALITY, RESTORATION = "Optimality", "Restoration"


def linearized_infeasibility(c: np.ndarray, jac: np.ndarray, dx: np.ndarray) -> float:
    """l(d) = ||c + J d||_1."""
    return float(np.sum(np.abs(c + jac @ dx)))


def l1_sign_residual(c: np.ndarray, y: np.ndarray) -> float:
    """Complementarity-type terms of the l1 error measure: |y_j c_j| on the
    satisfied rows, |(y_j + 1) c_j| where c_j > 0, |(y_j - 1) c_j| where
    c_j < 0."""
    total = 0.0
    for cj, yj in zip(c, y):
        if cj > 0.0:
            total += abs((yj + 1.0) * cj)
        elif cj < 0.0:
            total += abs((yj - 1.0) * cj)
        else:
            total += abs(yj * cj)
    return total


def projected_stationarity_l1(
    g: np.ndarray, x: np.ndarray, lower: np.ndarray, upper: np.ndarray
) -> float:
    """l1 norm of the distance of g = rho grad_f - J^T y from the multiplier
    cone allowed by the bound activities (the implicit optimal z)."""
    total = 0.0
    for gi, xi, lo, hi in zip(g, x, lower, upper):
        at_lower = np.isfinite(lo) and xi - lo <= 1e-5 * (1.0 + abs(lo))
        at_upper = np.isfinite(hi) and hi - xi <= 1e-5 * (1.0 + abs(hi))
        if at_lower and at_upper:
            continue
        if at_lower:
            total += max(-gi, 0.0)
        elif at_upper:
            total += max(gi, 0.0)
        else:
            total += abs(gi)
    return total


def error_measure(
    evals: Evaluations,
    x: np.ndarray,
    y: np.ndarray,
    rho: float,
    lower: np.ndarray,
    upper: np.ndarray,
) -> float:
    """E_rho: aggregated dual Fritz John residuals of the l1 problem."""
    g = rho * np.asarray(evals.grad_f) - (np.asarray(evals.jac_c).T @ y if y.size else 0.0)
    return projected_stationarity_l1(g, x, lower, upper) + l1_sign_residual(evals.c, y)


# ---------------------------------------------------------------------------
# Subproblem methods
# ---------------------------------------------------------------------------


class QPSubproblem:
    """Inequality-constrained QP subproblem solved by the active-set solver."""

    name = "QP"
    second_order = True
    is_interior = False

    def __init__(self, regularize: bool):
        self.regularize = regularize
        self.schedule = RegularizationSchedule()
        self.warm_optimality = None
        self.warm_elastic = None

    def optimality_direction(self, ws, evals, iterate, trust_radius):
        qp, delta_w, tr_masks = build_sqp_qp(
            evals, iterate.x, 1.0, ws.lower, ws.upper,
            trust_radius=trust_radius,
            regularize=self.regularize,
            schedule=self.schedule,
            second_order=self.second_order,
        )
        ws.subproblem_solves += 1
        sol = qp_solve(qp, warm_start=self.warm_optimality)
        if sol.status == OPTIMAL:
            self.warm_optimality = sol.active_set
        return sol, _qp_direction(sol, iterate, trust_radius, tr_masks), qp

    def elastic_direction(self, ws, evals, iterate, rho, trust_radius, start_dx=None):
        """Solve the elastic QP (rho possibly 0: the feasibility QP)."""
        qp, delta_w, tr_masks = build_sqp_qp(
            evals, iterate.x, rho, ws.lower, ws.upper,
            trust_radius=trust_radius,
            regularize=self.regularize,
            schedule=self.schedule,
            second_order=self.second_order,
        )
        eqp = extend_with_elastics(qp)
        n, m = qp.n, qp.m
        dx0 = np.zeros(n) if start_dx is None else np.clip(start_dx, qp.d_lower, qp.d_upper)
        u_plus, u_minus = elastic_init(evals.c + evals.jac_c @ dx0)
        start = np.concatenate([dx0, u_plus, u_minus])
        ws.subproblem_solves += 1
        sol = qp_solve(eqp, warm_start=self.warm_elastic, start=start)
        if sol.status == OPTIMAL:
            self.warm_elastic = sol.active_set
        direction = _qp_direction(sol, iterate, trust_radius, tr_masks, n_base=n)
        return sol, direction


class LPSubproblem(QPSubproblem):
    """Sequential linear programming: no second-order information."""

    name = "LP"
    second_order = False

    def __init__(self, regularize: bool):
        super().__init__(regularize=False)


class IPMSubproblem:
    """Primal-dual interior-point subproblem on the symmetrized system."""

    name = "primal_dual_IPM"
    second_order = True
    is_interior = True

    def __init__(self, barrier: BarrierState, epsilon: float):
        self.barrier = barrier
        self.epsilon = epsilon
        self.schedule = RegularizationSchedule()

    def maybe_update_mu(self, ws, iterate, elastic: ElasticModel | None = None) -> bool:
        """Decrease mu when the barrier problem being solved (the elastic one
        during restoration) is converged to its mu-tolerance."""
        if elastic is None:
            error = barrier_kkt_error(
                iterate.evals, iterate.x, iterate.y, iterate.zl, iterate.zu,
                ws.lower, ws.upper, self.barrier.mu,
            )
        else:
            w, zl_full, zu_full = self._elastic_point(ws, iterate)
            eev = evaluate(elastic, w, rho=1.0, y=iterate.y)
            error = barrier_kkt_error(
                eev, w, iterate.y, zl_full, zu_full,
                elastic.variable_lower, elastic.variable_upper, self.barrier.mu,
            )
        _, changed = update_barrier_parameter(self.barrier, error, self.epsilon)
        return changed

    def base_direction(self, ws, evals, iterate) -> Direction:
        ws.subproblem_solves += 1
        return ipm_solve_step(
            evals, iterate.x, iterate.y, iterate.zl, iterate.zu,
            ws.lower, ws.upper, self.barrier, self.schedule,
        )

    def _elastic_point(self, ws, iterate):
        """Current iterate lifted to the elastic space (re-seeded every step).

        The elastic values solve the one-dimensional central-path conditions
        z+ = mu/u+, z- = mu/u-, z+ + z- = 2, u+ - u- = c exactly, so the
        lifted point is strictly interior with exact equality residuals and
        mu-consistent complementarity.
        """
        mu = self.barrier.mu
        c = np.asarray(iterate.evals.c, dtype=float)
        u_minus = 0.5 * ((mu - c) + np.sqrt(c * c + mu * mu))
        u_plus = c + u_minus
        u = np.concatenate([u_plus, u_minus])
        w = np.concatenate([iterate.x, u])
        zl_full = np.concatenate([iterate.zl, mu / u])
        zu_full = np.concatenate([iterate.zu, np.zeros(u.size)])
        return w, zl_full, zu_full

    def elastic_direction(self, ws, elastic: ElasticModel, iterate) -> Direction:
        """Step of the barrier problem on the elastic model."""
        n = ws.model.n
        w, zl_full, zu_full = self._elastic_point(ws, iterate)
        eev = evaluate(elastic, w, rho=1.0, y=iterate.y, with_hessian=True)
        ws.subproblem_solves += 1
        full = ipm_solve_step(
            eev, w, iterate.y, zl_full, zu_full,
            elastic.variable_lower, elastic.variable_upper,
            self.barrier, self.schedule,
        )
        return Direction(
            dx=full.dx[:n],
            dy=full.dy,
            dzl=full.dzl[:n],
            dzu=full.dzu[:n],
            status=full.status,
            alpha_max=full.alpha_max,
            dual_scale=full.dual_scale,
            subproblem_objective=full.subproblem_objective,
        )


def _qp_direction(sol, iterate, trust_radius, tr_masks, n_base=None) -> Direction:
    n = iterate.x.size if n_base is None else n_base
    if sol.status != OPTIMAL:
        return Direction(
            dx=sol.d[:n].copy(),
            dy=np.zeros_like(iterate.y),
            dzl=np.zeros_like(iterate.zl),
            dzu=np.zeros_like(iterate.zu),
            status=sol.status,
        )
    dx = sol.d[:n].copy()
    z_hat = sol.multipliers_bounds[:n]
    zl_hat = np.maximum(z_hat, 0.0)
    zu_hat = np.maximum(-z_hat, 0.0)
    tr_active = None
    if trust_radius is not None and np.isfinite(trust_radius):
        tol = 1e-10 * max(1.0, trust_radius)
        tr_active = (tr_masks[0][:n] & (dx <= -trust_radius + tol)) | (
            tr_masks[1][:n] & (dx >= trust_radius - tol)
        )
    return Direction(
        dx=dx,
        dy=sol.multipliers_eq - iterate.y,
        dzl=zl_hat - iterate.zl,
        dzu=zu_hat - iterate.zu,
        status=OPTIMAL,
        subproblem_objective=sol.objective_value,
        tr_active=tr_active,
    )


# ---------------------------------------------------------------------------
# Relaxation strategies
# ---------------------------------------------------------------------------


@dataclass
class SteeringState:
    rho: float = 1.0
    epsilon1: float = 0.1
    epsilon2: float = 0.1
    rho_decrease_factor: float = 0.1
    rho_min: float = 1e-14


@dataclass
class PhaseState:
    phase: str = OPTIMALITY
    reference: ProgressMeasures | None = None


class ConstraintRelaxationStrategy:
    """Base: owns the subproblem method and the globalization strategy; builds
    the progress measures and reduction models its strategy reads."""

    def __init__(self, ws: Workspace, subproblem, strategy: GlobalizationStrategy,
                 restoration_sigma: float = 1e-8):
        self.ws = ws
        self.subproblem = subproblem
        self.strategy = strategy
        self.restoration_sigma = restoration_sigma
        self._zero_tol = 5e-15

    # -- measures -----------------------------------------------------------

    def measure_rho(self) -> float:
        return 1.0

    def auxiliary_term(self, x: np.ndarray) -> float:
        if self.subproblem.is_interior:
            return barrier_value(x, self.ws.lower, self.ws.upper, self.subproblem.barrier.mu)
        return 0.0

    def measures_from(self, iterate: Iterate) -> ProgressMeasures:
        rho = 1.0 if self.strategy.uses_fixed_rho_one else self.measure_rho()
        return compute_measures(
            iterate.evals.f, iterate.evals.c, rho=rho,
            barrier_term=self.auxiliary_term(iterate.x),
        )

    def reduction_models(self, iterate: Iterate, direction: Direction) -> ReductionModels:
        rho = 1.0 if self.strategy.uses_fixed_rho_one else self.measure_rho()
        return ReductionModels(
            c=np.asarray(iterate.evals.c, dtype=float),
            jd=np.asarray(iterate.evals.jac_c, dtype=float) @ direction.dx,
            gtd=float(np.asarray(iterate.evals.grad_f) @ direction.dx),
            dwd=direction.dwd,
            rho=rho,
            btd=direction.btd,
            dbd=direction.dbd,
        )

    def _is_zero_step(self, iterate: Iterate, direction: Direction) -> bool:
        scale = 1.0 + float(np.max(np.abs(iterate.x), initial=0.0))
        return float(np.max(np.abs(direction.dx), initial=0.0)) <= self._zero_tol * scale

    def _barrier_reference_model(self):
        """The model whose barrier problem is currently being solved (the
        elastic one for relaxation/restoration steps)."""
        return None

    def _maybe_update_barrier(self, iterate: Iterate) -> None:
        if not self.subproblem.is_interior:
            return
        if self.subproblem.maybe_update_mu(self.ws, iterate, self._barrier_reference_model()):
            # filter entries depend on mu through xi: flush on every update
            eta = float(np.sum(np.abs(iterate.evals.c)))
            self.strategy.reset(eta)

    def initialize(self, iterate: Iterate) -> None:
        eta0 = float(np.sum(np.abs(iterate.evals.c)))
        if isinstance(self.strategy, FilterMethod):
            self.strategy.initialize(eta0)

    # -- interface used by the mechanisms ------------------------------------

    def compute_direction(self, iterate: Iterate, trust_radius=None) -> Direction:
        raise NotImplementedError

    def is_acceptable(self, iterate, trial, direction, alpha) -> bool:
        raise NotImplementedError

    def handle_small_step(self, iterate: Iterate) -> Direction | None:
        return None


class L1Relaxation(ConstraintRelaxationStrategy):
    """Penalty steering on the smooth elastic l1 relaxation (inverse penalty
    parameter rho decreases until the step makes sufficient progress on the
    linearized infeasibility and the merit model)."""

    def __init__(self, ws, subproblem, strategy, steering: SteeringState | None = None,
                 restoration_sigma: float = 1e-8):
        super().__init__(ws, subproblem, strategy, restoration_sigma)
        self.steering = steering or SteeringState()
        self.elastic = make_l1_relaxed(ws.model, self.steering.rho)
        self._feas_tol = 1e-9

    def measure_rho(self) -> float:
        return self.steering.rho

    def _barrier_reference_model(self):
        return self.elastic if self.subproblem.is_interior else None

    def _set_rho(self, rho: float, iterate: Iterate) -> None:
        self.steering.rho = rho
        self.elastic.set_rho(rho)
        iterate.rho = rho

    def _solve_at(self, iterate: Iterate, rho: float, trust_radius):
        """Direction of the elastic subproblem at the given rho, with the
        base-model reduction ingredients attached."""
        if self.subproblem.is_interior:
            self.elastic.set_rho(rho)
            direction = self.subproblem.elastic_direction(self.ws, self.elastic, iterate)
            W = self.ws.hessian_at(iterate.x, rho, iterate.y)
        else:
            evals = iterate.evals
            W = self.ws.hessian_at(iterate.x, rho, iterate.y)
            evals = Evaluations(evals.f, evals.c, evals.grad_f, evals.jac_c, W)
            sol, direction = self.subproblem.elastic_direction(
                self.ws, evals, iterate, rho, trust_radius
            )
            if direction.status in (UNBOUNDED, ITERATION_LIMIT):
                raise QPFailureError("elastic QP failed with status " + direction.status)
        direction.gtd = float(np.asarray(iterate.evals.grad_f) @ direction.dx)
        direction.dwd = float(direction.dx @ W @ direction.dx)
        return direction

    def _merit_model_reduction(self, iterate, direction, rho) -> float:
        models = ReductionModels(
            c=np.asarray(iterate.evals.c, dtype=float),
            jd=np.asarray(iterate.evals.jac_c, dtype=float) @ direction.dx,
            gtd=direction.gtd,
            dwd=direction.dwd,
            rho=rho,
        )
        return models.merit_reduction(1.0)

    def compute_direction(self, iterate: Iterate, trust_radius=None) -> Direction:
        self._maybe_update_barrier(iterate)
        self.ws.ensure_derivatives(iterate)
        st = self.steering
        c = np.asarray(iterate.evals.c, dtype=float)
        jac = np.asarray(iterate.evals.jac_c, dtype=float)
        l0 = float(np.sum(np.abs(c)))
        feas_tol = self._feas_tol * (1.0 + l0)

        direction = self._solve_at(iterate, st.rho, trust_radius)
        l_d = linearized_infeasibility(c, jac, direction.dx)
        info = {"steered": False, "rho": st.rho, "l0": l0, "l_d": l_d}
        if l_d <= feas_tol:
            direction.info = info
            self._set_rho(st.rho, iterate)
            return direction

        # Steering (the penalty update may involve several subproblem solves).
        info["steered"] = True
        d_bar = self._solve_at(iterate, 0.0, trust_radius)
        l_bar = linearized_infeasibility(c, jac, d_bar.dx)
        if l_bar > l0 + feas_tol:
            # a nonconvex subproblem returned a feasibility step that worsens
            # the linearization; no rho can be blamed for that, so leave the
            # penalty alone and let the globalization mechanism recover
            info.update(steered=False, skipped="feasibility step made no progress")
            direction.info = info
            self._set_rho(st.rho, iterate)
            return direction
        dm0_bar = self._merit_model_reduction(iterate, d_bar, 0.0)
        rho = st.rho

        def conditions_hold(direction, rho):
            l_d = linearized_infeasibility(c, jac, direction.dx)
            if l_bar <= feas_tol:
                cond1 = l_d <= feas_tol
            else:
                cond1 = l0 - l_d >= st.epsilon1 * (l0 - l_bar) - 1e-12 * (1.0 + l0)
            dm = self._merit_model_reduction(iterate, direction, rho)
            cond2 = dm >= st.epsilon2 * dm0_bar - 1e-12 * (1.0 + abs(dm0_bar))
            return cond1, cond2, l_d

        rho_entry = st.rho
        cond1, cond2, l_d = conditions_hold(direction, rho)
        while not cond1 and rho > st.rho_min:
            rho *= st.rho_decrease_factor
            direction = self._solve_at(iterate, rho, trust_radius)
            cond1, cond2, l_d = conditions_hold(direction, rho)
        while cond1 and not cond2 and rho > st.rho_min:
            rho *= st.rho_decrease_factor
            direction = self._solve_at(iterate, rho, trust_radius)
            cond1, cond2, l_d = conditions_hold(direction, rho)
        if not (cond1 and cond2) and d_bar.status == OPTIMAL:
            # nonconvex subproblems can defeat the steering conditions at any
            # rho; the collapse carries no evidence, so take the pure
            # feasibility step instead and keep the entry penalty
            info.update(skipped="steering conditions unattainable", l_bar=l_bar)
            direction = d_bar
            direction.info = info
            self._set_rho(rho_entry, iterate)
            return direction

        # Cap by the scaled dual FJ residual at the feasibility multipliers.
        # The cap only means something when even the pure feasibility step
        # cannot zero the linearized constraints (E_0 vanishes at any
        # linearized-feasible point, which would spuriously collapse rho).
        y_bar = iterate.y + d_bar.dy
        e0 = error_measure(iterate.evals, iterate.x, y_bar, 0.0, self.ws.lower, self.ws.upper)
        cap = (e0 / max(1.0, l0)) ** 2 if l_bar > feas_tol else np.inf
        if cap < rho:
            rho = max(cap, st.rho_min)
            direction = self._solve_at(iterate, rho, trust_radius)
            cond1, cond2, l_d = conditions_hold(direction, rho)
            while not (cond1 and cond2) and rho > st.rho_min:
                rho *= st.rho_decrease_factor
                direction = self._solve_at(iterate, rho, trust_radius)
                cond1, cond2, l_d = conditions_hold(direction, rho)

        self._set_rho(rho, iterate)
        info.update(
            rho=rho, l_d=l_d, l_bar=l_bar, dm0_bar=dm0_bar, cap=cap,
            cond1=cond1, cond2=cond2,
            dm=self._merit_model_reduction(iterate, direction, rho),
        )
        direction.info = info
        return direction

    def is_acceptable(self, iterate, trial, direction, alpha) -> bool:
        if self._is_zero_step(iterate, direction):
            return True
        current = self.measures_from(iterate)
        trial_m = self.measures_from(trial)
        models = self.reduction_models(iterate, direction)
        return self.strategy.check_acceptance(current, trial_m, models, alpha)


class FeasibilityRestoration(ConstraintRelaxationStrategy):
    """Optimality phase on the original problem; on subproblem infeasibility
    (or a collapsed line-search step for interior methods) temporarily
    minimize the l1 infeasibility through the elastic feasibility subproblem.
    """

    def __init__(self, ws, subproblem, strategy, restoration_sigma: float = 1e-8,
                 restoration_exit_factor: float = 0.9):
        super().__init__(ws, subproblem, strategy, restoration_sigma)
        self.state = PhaseState()
        self.restoration_exit_factor = restoration_exit_factor
        self.elastic = make_l1_relaxed(ws.model, 0.0)
        self._optimality_feasible = False
        self._last_restoration_mu = np.inf

    @property
    def phase(self) -> str:
        return self.state.phase

    def _barrier_reference_model(self):
        return self.elastic if self.state.phase == RESTORATION else None

    def _enter_restoration(self, iterate: Iterate) -> None:
        self.state.phase = RESTORATION
        self.state.reference = self.measures_from(iterate)
        self.strategy.register_current(self.state.reference)
        # the restoration problem has its own multipliers; carrying over
        # (possibly diverging) optimality multipliers poisons its Hessian
        iterate.y = np.zeros_like(iterate.y)
        if self.subproblem.is_interior:
            # without multipliers the restoration Hessian has no curvature in
            # the unbounded primal block; seed them with the least-squares
            # estimate for the elastic problem instead
            iterate.y = self._restoration_multiplier_estimate(iterate)

    def _restoration_multiplier_estimate(self, iterate: Iterate) -> np.ndarray:
        w, zl_full, zu_full = self.subproblem._elastic_point(self.ws, iterate)
        eev = evaluate(self.elastic, w, rho=1.0, y=iterate.y)
        J = np.asarray(eev.jac_c)
        ne, m = self.elastic.n, self.elastic.m
        K = np.zeros((ne + m, ne + m))
        K[:ne, :ne] = np.eye(ne)
        K[:ne, ne:] = J.T
        K[ne:, :ne] = J
        rhs = np.concatenate([np.asarray(eev.grad_f) - (zl_full - zu_full), np.zeros(m)])
        try:
            y = solve_factorized(ldlt_factorize(K), rhs)[ne:]
        except SingularMatrixError:
            return np.zeros(m)
        if not np.all(np.isfinite(y)):
            return np.zeros(m)
        # elastic multipliers live in [-1, 1]
        return np.clip(y, -1.0, 1.0)

    def _exit_restoration(self, iterate_measures: ProgressMeasures) -> None:
        self.state.phase = OPTIMALITY
        self.strategy.register_current(iterate_measures)

    def _with_hessian(self, iterate: Iterate, rho: float) -> Evaluations:
        ev = iterate.evals
        W = self.ws.hessian_at(iterate.x, rho, iterate.y)
        return Evaluations(ev.f, ev.c, ev.grad_f, ev.jac_c, W)

    def compute_direction(self, iterate: Iterate, trust_radius=None) -> Direction:
        self._maybe_update_barrier(iterate)
        self.ws.ensure_derivatives(iterate)
        if self.subproblem.is_interior:
            if self.state.phase == OPTIMALITY:
                evals = self._with_hessian(iterate, 1.0)
                direction = self.subproblem.base_direction(self.ws, evals, iterate)
                direction.dwd = float(direction.dx @ evals.hessian @ direction.dx)
                return direction
            self._last_restoration_mu = self.subproblem.barrier.mu
            return self._interior_restoration_direction(iterate)

        # QP/LP flavor
        if self.state.phase == OPTIMALITY:
            evals = self._with_hessian(iterate, 1.0)
            sol, direction, _ = self.subproblem.optimality_direction(
                self.ws, evals, iterate, trust_radius
            )
            if direction.status == OPTIMAL:
                direction.gtd = float(np.asarray(evals.grad_f) @ direction.dx)
                direction.dwd = float(direction.dx @ evals.hessian @ direction.dx) \
                    if evals.hessian is not None else 0.0
                return direction
            if direction.status in (UNBOUNDED, ITERATION_LIMIT):
                raise QPFailureError("optimality QP failed with status " + direction.status)
            # infeasible linearization: switch to restoration
            self._enter_restoration(iterate)
            partial_dx = direction.dx
            return self._restoration_direction(iterate, trust_radius, start_dx=partial_dx)
        return self._restoration_direction(iterate, trust_radius)

    def _restoration_direction(self, iterate, trust_radius, start_dx=None) -> Direction:
        # the switch back to optimality needs to know whether the optimality
        # subproblem is feasible at the current point and radius
        evals1 = self._with_hessian(iterate, 1.0)
        sol_probe, probe, _ = self.subproblem.optimality_direction(
            self.ws, evals1, iterate, trust_radius
        )
        self._optimality_feasible = probe.status == OPTIMAL

        evals0 = self._with_hessian(iterate, 0.0)
        sol, direction = self.subproblem.elastic_direction(
            self.ws, evals0, iterate, 0.0, trust_radius, start_dx=start_dx
        )
        if direction.status != OPTIMAL:
            raise QPFailureError(
                "feasibility QP unexpectedly failed with status " + direction.status
            )
        direction.gtd = float(np.asarray(iterate.evals.grad_f) @ direction.dx)
        direction.dwd = float(direction.dx @ evals0.hessian @ direction.dx)
        return direction

    def is_acceptable(self, iterate, trial, direction, alpha) -> bool:
        if self._is_zero_step(iterate, direction):
            return True
        current = self.measures_from(iterate)
        trial_m = self.measures_from(trial)
        models = self.reduction_models(iterate, direction)

        if self.state.phase == RESTORATION and not self.subproblem.is_interior:
            # trust-region flavor: return to optimality before the acceptance
            # test once the optimality subproblem is feasible and the trial
            # beats the least-infeasible filter entry
            eta_min = self._filter_eta_min()
            if self._optimality_feasible and trial_m.eta < eta_min:
                self._exit_restoration(current)

        if self.state.phase == RESTORATION:
            accepted = infeasibility_armijo(
                current, trial_m, models, alpha, self.restoration_sigma
            )
            if not accepted and self.subproblem.is_interior:
                # an interior restoration step targets the barrier-smoothed
                # infeasibility, which can move raw eta the wrong way near an
                # l1 kink; accept on sufficient smoothed decrease instead
                accepted = self._smoothed_infeasibility_armijo(iterate, trial, direction, alpha)
            if accepted and self.subproblem.is_interior:
                # line-search flavor switch-back
                if (
                    self._filter_accepts(trial_m)
                    and trial_m.eta <= self.restoration_exit_factor * current.eta
                ):
                    self._exit_restoration(current)
            return accepted
        return self.strategy.check_acceptance(current, trial_m, models, alpha)

    def _smoothed_infeasibility(self, x: np.ndarray, c: np.ndarray) -> float:
        """Elastic barrier objective with the elastic block eliminated at its
        central values: sum(u+ + u- - mu log(u+ u-)) plus the x-block barrier."""
        mu = self.subproblem.barrier.mu
        u_minus = 0.5 * ((mu - c) + np.sqrt(c * c + mu * mu))
        u_plus = c + u_minus
        if np.any(u_plus <= 0.0) or np.any(u_minus <= 0.0):
            return np.inf
        value = float(np.sum(u_plus + u_minus) - mu * np.sum(np.log(u_plus) + np.log(u_minus)))
        return value + barrier_value(x, self.ws.lower, self.ws.upper, mu)

    def _smoothed_infeasibility_armijo(self, iterate, trial, direction, alpha) -> bool:
        mu = self.subproblem.barrier.mu
        c = np.asarray(iterate.evals.c, dtype=float)
        u_minus = 0.5 * ((mu - c) + np.sqrt(c * c + mu * mu))
        u_plus = c + u_minus
        y_central = mu / u_plus - 1.0
        grad = -(np.asarray(iterate.evals.jac_c).T @ y_central)
        finite_lo = np.isfinite(self.ws.lower)
        finite_hi = np.isfinite(self.ws.upper)
        grad[finite_lo] -= mu / (iterate.x[finite_lo] - self.ws.lower[finite_lo])
        grad[finite_hi] += mu / (self.ws.upper[finite_hi] - iterate.x[finite_hi])
        slope = float(grad @ direction.dx)
        if slope >= 0.0:
            return False
        current_value = self._smoothed_infeasibility(iterate.x, c)
        trial_value = self._smoothed_infeasibility(trial.x, np.asarray(trial.evals.c))
        decrease = current_value - trial_value
        slack = 10.0 * np.finfo(float).eps * max(1.0, abs(current_value))
        return decrease + slack >= self.restoration_sigma * (-slope) * alpha

    def handle_small_step(self, iterate: Iterate) -> Direction | None:
        if self.state.phase == RESTORATION:
            # the restoration barrier problem may simply be over-smoothed for
            # the current point: retry after a barrier decrease, fail otherwise
            if self.subproblem.is_interior:
                self._maybe_update_barrier(iterate)
                if self.subproblem.barrier.mu < self._last_restoration_mu:
                    self._last_restoration_mu = self.subproblem.barrier.mu
                    return self._interior_restoration_direction(iterate)
            return None
        self._enter_restoration(iterate)
        if self.subproblem.is_interior:
            self._maybe_update_barrier(iterate)
            self._last_restoration_mu = self.subproblem.barrier.mu
            return self._interior_restoration_direction(iterate)
        return self._restoration_direction(iterate, None)

    def _interior_restoration_direction(self, iterate: Iterate) -> Direction:
        direction = self.subproblem.elastic_direction(self.ws, self.elastic, iterate)
        W0 = self.ws.hessian_at(iterate.x, 0.0, iterate.y)
        direction.gtd = float(np.asarray(iterate.evals.grad_f) @ direction.dx)
        direction.dwd = float(direction.dx @ W0 @ direction.dx)
        return direction

    def _filter_eta_min(self) -> float:
        if isinstance(self.strategy, FilterMethod):
            return self.strategy.filter.eta_min()
        if self.state.reference is not None:
            return self.state.reference.eta
        return np.inf

    def _filter_accepts(self, trial_m: ProgressMeasures) -> bool:
        if isinstance(self.strategy, FilterMethod):
            return self.strategy.filter.acceptable(trial_m.eta, trial_m.phi)
        return True
