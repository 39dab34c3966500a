import numpy as np
import pytest

from modnlp.corpus import corpus_get
from modnlp.driver import (
    _build_ingredients,
    estimate_initial_multipliers,
    preprocess_initial_point,
    preset_options,
    validate_options,
)
from modnlp.globalization import FilterMethod
from modnlp.linalg import OPTIMAL, qp_solve
from modnlp.model import Evaluations, evaluate, instrument
from modnlp.reformulation import scale_functions, to_equality_form
from modnlp.relaxation import (
    L1Relaxation,
    OPTIMALITY,
    RESTORATION,
    QPSubproblem,
    SteeringState,
    error_measure,
    l1_sign_residual,
    linearized_infeasibility,
)
from modnlp.state import Iterate, Workspace

INF = np.inf


def prepared(name, preset="byrd"):
    opts = validate_options(preset_options(preset))
    counted, _ = instrument(corpus_get(name))
    working = to_equality_form(counted)
    working, _ = scale_functions(working, working.initial_point, 100.0)
    ws = Workspace(working)
    x0 = preprocess_initial_point(working, working.initial_point)
    y0 = estimate_initial_multipliers(working, x0, np.zeros(working.n), 1e3)
    it = Iterate(x0, y0, np.zeros(working.n), np.zeros(working.n), 1.0, evaluate(working, x0))
    relaxation, mechanism = _build_ingredients(ws, opts)
    relaxation.initialize(it)
    return ws, it, relaxation, mechanism


class TestErrorMeasure:
    def evals_for(self, grad, jac, c):
        return Evaluations(
            f=0.0, c=np.asarray(c, dtype=float),
            grad_f=np.asarray(grad, dtype=float), jac_c=np.asarray(jac, dtype=float),
        )

    def test_zero_at_kkt_point(self):
        # min (x-1)^2 unconstrained-in-c with one equality x1 - 1 = 0
        ev = self.evals_for([0.0], [[1.0]], [0.0])
        e = error_measure(ev, np.array([1.0]), np.array([0.0]), 1.0,
                          np.array([-INF]), np.array([INF]))
        assert e == 0.0

    def test_feasible_wrong_multiplier(self):
        ev = self.evals_for([0.5], [[1.0]], [0.0])
        e = error_measure(ev, np.array([1.0]), np.array([0.0]), 1.0,
                          np.array([-INF]), np.array([INF]))
        assert e == pytest.approx(0.5)

    def test_l1_subgradient_consistency(self):
        # upper violated constraint with y = -1 contributes nothing
        ev = self.evals_for([0.0], [[0.0]], [2.0])
        e = l1_sign_residual(ev.c, np.array([-1.0]))
        assert e == 0.0
        assert l1_sign_residual(ev.c, np.array([0.0])) == pytest.approx(2.0)

    def test_bound_projection(self):
        # at an active lower bound a positive reduced gradient is optimal
        ev = self.evals_for([1.0], np.zeros((0, 1)), np.zeros(0))
        e = error_measure(ev, np.array([0.0]), np.zeros(0), 1.0,
                          np.array([0.0]), np.array([INF]))
        assert e == 0.0
        ev = self.evals_for([-1.0], np.zeros((0, 1)), np.zeros(0))
        e = error_measure(ev, np.array([0.0]), np.zeros(0), 1.0,
                          np.array([0.0]), np.array([INF]))
        assert e == pytest.approx(1.0)


class TestSteering:
    def test_no_steering_when_linearization_consistent(self):
        ws, it, relaxation, _ = prepared("hs028")
        ws.ensure_derivatives(it)
        d = relaxation.compute_direction(it)
        assert not d.info["steered"]
        assert relaxation.steering.rho == 1.0

    def test_steering_reduces_rho_until_linearized_feasible(self):
        # maratos at its on-circle start needs |y| approx 1.5 > 1: the elastic
        # QP violates at rho = 1 and steering must bring l(d) to zero
        ws, it, relaxation, _ = prepared("maratos")
        ws.ensure_derivatives(it)
        d = relaxation.compute_direction(it)
        info = d.info
        assert info["steered"]
        assert relaxation.steering.rho < 1.0
        c = np.asarray(it.evals.c)
        jac = np.asarray(it.evals.jac_c)
        assert linearized_infeasibility(c, jac, d.dx) <= 1e-9 * (1.0 + info["l0"])

    def test_steering_conditions_verified_by_rho_grid_oracle(self):
        # sweep rho over a grid and check that the returned rho satisfies the
        # conditions while every larger scheduled rho fails at least one
        ws, it, relaxation, _ = prepared("maratos")
        ws.ensure_derivatives(it)
        d = relaxation.compute_direction(it)
        rho_star = relaxation.steering.rho
        c = np.asarray(it.evals.c)
        jac = np.asarray(it.evals.jac_c)
        l0 = float(np.sum(np.abs(c)))

        def l_at(rho):
            probe = L1Relaxation(
                ws, QPSubproblem(regularize=True), relaxation.strategy,
                SteeringState(rho=rho),
            )
            direction = probe._solve_at(it, rho, None)
            return linearized_infeasibility(c, jac, direction.dx)

        assert l_at(rho_star) <= 1e-9 * (1.0 + l0)
        rho = 1.0
        while rho > rho_star * 1.001:
            assert l_at(rho) > 1e-9 * (1.0 + l0)  # cond1 fails above rho*
            rho *= relaxation.steering.rho_decrease_factor

    def test_cap_no_decrease_at_feasible_points(self):
        # at a feasible point whose feasibility step stays linearized-feasible
        # the dual-residual cap must not collapse rho
        ws, it, relaxation, _ = prepared("hs048")
        ws.ensure_derivatives(it)
        relaxation.compute_direction(it)
        assert relaxation.steering.rho > 1e-3

    def test_rho_nonincreasing_over_solve(self):
        from modnlp.driver import solve

        seen = []
        result = solve(
            corpus_get("hs063"), preset_options("byrd"),
            log=lambda rec: seen.append(rec["rho"]),
        )
        assert all(b <= a + 1e-15 for a, b in zip(seen, seen[1:]))


class TestRestoration:
    def test_consistent_linearization_stays_optimality(self):
        ws, it, relaxation, _ = prepared("hs028", preset="filtersqp")
        ws.ensure_derivatives(it)
        d = relaxation.compute_direction(it, trust_radius=10.0)
        assert relaxation.phase == OPTIMALITY
        assert d.status == OPTIMAL

    def test_infeasible_qp_switches_and_fqp_is_feasible(self):
        ws, it, relaxation, _ = prepared("infeasible1", preset="filtersqp")
        ws.ensure_derivatives(it)
        # tiny trust region + inconsistent rows make the optimality QP infeasible
        d = relaxation.compute_direction(it, trust_radius=1e-3)
        assert relaxation.phase == RESTORATION
        assert d.status == OPTIMAL  # the elastic FQP is always feasible
        assert np.all(it.y == 0.0)  # multipliers reset on entry

    def test_filter_recorded_on_entry(self):
        ws, it, relaxation, _ = prepared("infeasible1", preset="filtersqp")
        ws.ensure_derivatives(it)
        assert isinstance(relaxation.strategy, FilterMethod)
        before = len(relaxation.strategy.filter.entries)
        relaxation.compute_direction(it, trust_radius=1e-3)
        assert len(relaxation.strategy.filter.entries) == before + 1

    def test_restoration_converges_to_certificate(self):
        from modnlp.driver import solve

        result = solve(corpus_get("infeasible1"), preset_options("filtersqp"))
        assert result.status == "InfeasibleStationary"
        # analytic minimum of |x^2| + |x^2 + 1| is 1 at x = 0; the certificate
        # tolerances admit points within O(sqrt(10 eps)) of it
        assert result.feasibility == pytest.approx(1.0, abs=1e-4)
        assert abs(result.x[0]) <= 1e-2

    def test_restoration_certificate_infeasible2(self):
        from modnlp.driver import solve

        result = solve(corpus_get("infeasible2"), preset_options("filtersqp"))
        assert result.status == "InfeasibleStationary"
        # analytic l1 minimum on the circle: eta = 3 - sqrt(2) at x = (1,1)/sqrt(2)
        np.testing.assert_allclose(result.x, np.full(2, np.sqrt(0.5)), atol=1e-4)

    def test_elastic_fqp_never_infeasible(self):
        rng = np.random.RandomState(3)
        from modnlp.subproblem import build_sqp_qp, extend_with_elastics

        for _ in range(25):
            n, m = 3, 2
            ev = Evaluations(
                f=0.0, c=rng.randn(m), grad_f=rng.randn(n), jac_c=rng.randn(m, n),
                hessian=np.eye(n),
            )
            qp, _, _ = build_sqp_qp(
                ev, rng.rand(n), 0.0, np.zeros(n), np.full(n, INF),
                trust_radius=10 ** rng.uniform(-3, 1),
            )
            sol = qp_solve(extend_with_elastics(qp))
            assert sol.status == OPTIMAL
