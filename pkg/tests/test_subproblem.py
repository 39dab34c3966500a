import numpy as np
import pytest

from modnlp.corpus import corpus_get
from modnlp.linalg import RegularizationSchedule
from modnlp.model import Evaluations, evaluate
from modnlp.reformulation import to_equality_form
from modnlp.subproblem import (
    BarrierState,
    build_sqp_qp,
    extend_with_elastics,
    fraction_to_boundary,
    fraction_to_boundary_dual,
    ipm_solve_step,
    push_to_interior,
    update_barrier_parameter,
)

INF = np.inf


def scalar_model_evals(W, g, c, J):
    return Evaluations(
        f=0.0,
        c=np.asarray(c, dtype=float),
        grad_f=np.asarray(g, dtype=float),
        jac_c=np.asarray(J, dtype=float),
        hessian=np.asarray(W, dtype=float),
    )


class TestBuildQP:
    def test_bound_encoding(self):
        # min x^2 s.t. x >= 0 at x = 2: step to the origin
        ev = scalar_model_evals([[2.0]], [4.0], np.zeros(0), np.zeros((0, 1)))
        qp, dw, tr = build_sqp_qp(ev, np.array([2.0]), 1.0, np.array([0.0]), np.array([INF]))
        assert qp.d_lower[0] == -2.0 and qp.d_upper[0] == INF
        from modnlp.linalg import qp_solve

        sol = qp_solve(qp)
        np.testing.assert_allclose(sol.d, [-2.0])

    def test_trust_region_caps_step(self):
        ev = scalar_model_evals([[2.0]], [4.0], np.zeros(0), np.zeros((0, 1)))
        qp, dw, tr = build_sqp_qp(
            ev, np.array([2.0]), 1.0, np.array([0.0]), np.array([INF]), trust_radius=1.0
        )
        assert qp.d_lower[0] == -1.0 and qp.d_upper[0] == 1.0
        from modnlp.linalg import qp_solve

        np.testing.assert_allclose(qp_solve(qp).d, [-1.0])

    def test_infinite_trust_region_is_identity(self):
        ev = scalar_model_evals(np.eye(2), [1.0, -1.0], np.zeros(0), np.zeros((0, 2)))
        x = np.array([0.5, 1.5])
        lower, upper = np.zeros(2), np.array([2.0, INF])
        plain, _, _ = build_sqp_qp(ev, x, 1.0, lower, upper)
        capped, _, _ = build_sqp_qp(ev, x, 1.0, lower, upper, trust_radius=np.inf)
        assert np.array_equal(plain.d_lower, capped.d_lower)
        assert np.array_equal(plain.d_upper, capped.d_upper)

    def test_regularize_makes_positive_definite(self):
        ev = scalar_model_evals([[-1.0]], [0.0], np.zeros(0), np.zeros((0, 1)))
        qp, dw, _ = build_sqp_qp(
            ev, np.array([0.0]), 1.0, np.array([-INF]), np.array([INF]),
            regularize=True, schedule=RegularizationSchedule(),
        )
        assert dw > 1.0
        # independent eigen check of the returned Hessian
        assert np.all(np.linalg.eigvalsh(qp.W) > 0.0)

    def test_elastic_extension_always_feasible(self):
        ev = scalar_model_evals(np.eye(1), [0.0], [1.0], [[1.0]])
        qp, _, _ = build_sqp_qp(
            ev, np.array([0.0]), 1.0, np.array([0.0]), np.array([0.0])
        )  # d fixed to 0, c = 1: inconsistent without elastics
        from modnlp.linalg import INFEASIBLE, OPTIMAL, qp_solve

        assert qp_solve(qp).status == INFEASIBLE
        elastic = extend_with_elastics(qp)
        sol = qp_solve(elastic)
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(1.0)  # one unit of violation


class TestFractionToBoundary:
    def test_closed_form_example(self):
        alpha = fraction_to_boundary(
            np.array([1.0]), np.array([-2.0]), np.array([0.0]), np.array([INF]), 0.995
        )
        assert alpha == pytest.approx(0.4975)

    def test_interior_step_uncapped(self):
        alpha = fraction_to_boundary(
            np.array([1.0]), np.array([0.5]), np.array([0.0]), np.array([2.0]), 0.995
        )
        assert alpha == 1.0

    def test_dual_side(self):
        alpha = fraction_to_boundary_dual(
            np.array([1.0]), np.array([-4.0]), np.zeros(0), np.zeros(0), 0.5
        )
        assert alpha == pytest.approx(0.125)


class TestBarrierUpdate:
    def test_decrease_formula(self):
        barrier = BarrierState(mu=0.1, kappa_mu=0.2, theta_mu=1.5)
        barrier, changed = update_barrier_parameter(barrier, kkt_error=0.5, epsilon=1e-6)
        assert changed
        assert barrier.mu == pytest.approx(min(0.02, 0.1**1.5))

    def test_not_triggered_when_error_large(self):
        barrier = BarrierState(mu=0.1)
        barrier, changed = update_barrier_parameter(barrier, kkt_error=10.0, epsilon=1e-6)
        assert not changed and barrier.mu == 0.1

    def test_floor_clamp(self):
        barrier = BarrierState(mu=2e-7)
        barrier, changed = update_barrier_parameter(barrier, kkt_error=0.0, epsilon=1e-6)
        assert changed and barrier.mu == pytest.approx(1e-7)

    def test_tau_close_to_one(self):
        assert BarrierState(mu=0.1).tau == 0.99
        assert BarrierState(mu=1e-4).tau == pytest.approx(1.0 - 1e-4)


class TestIPMStep:
    def test_scalar_barrier_newton(self):
        # min x s.t. x >= 0 at x = 1, z = 1, mu = 0.1: dx = -0.9
        ev = scalar_model_evals([[0.0]], [1.0], np.zeros(0), np.zeros((0, 1)))
        d = ipm_solve_step(
            ev, np.array([1.0]), np.zeros(0), np.array([1.0]), np.array([0.0]),
            np.array([0.0]), np.array([INF]), BarrierState(mu=0.1),
            RegularizationSchedule(),
        )
        np.testing.assert_allclose(d.dx, [-0.9], atol=1e-12)

    def test_full_primal_dual_residual_reconstruction(self):
        # the symmetrized system plus the dz recovery must reproduce the full
        # primal-dual Newton system residual on strictly interior points
        rng = np.random.RandomState(9)
        for _ in range(20):
            n, m = 5, 2
            x = 0.5 + rng.rand(n)
            y = rng.randn(m)
            zl = 0.5 + rng.rand(n)
            W = rng.randn(n, n)
            W = W + W.T
            J = rng.randn(m, n)
            g = rng.randn(n)
            c = rng.randn(m)
            mu = 0.05
            lower = np.zeros(n)
            upper = np.full(n, INF)
            ev = scalar_model_evals(W, g, c, J)
            barrier = BarrierState(mu=mu)
            d = ipm_solve_step(
                ev, x, y, zl, np.zeros(n), lower, upper, barrier,
                RegularizationSchedule(),
            )
            if barrier.delta_w != 0.0 or barrier.delta_c != 0.0:
                continue  # the identity holds for the unregularized system
            dx, dy, dz = d.dx, d.dy, d.dzl
            X, Z = np.diag(x), np.diag(zl)
            r1 = W @ dx - J.T @ dy - dz + (g - J.T @ y - zl)
            r2 = J @ dx + c
            r3 = Z @ dx + X @ dz + (x * zl - mu)
            scale = 1.0 + max(np.max(np.abs(g)), np.max(np.abs(c)))
            assert np.max(np.abs(r1)) <= 1e-10 * scale
            assert np.max(np.abs(r2)) <= 1e-10 * scale
            assert np.max(np.abs(r3)) <= 1e-10 * scale

    def test_linearized_complementarity_row(self):
        # X(z + dz) + Z dx = mu e after one step
        rng = np.random.RandomState(4)
        n, m = 4, 1
        x = 0.3 + rng.rand(n)
        zl = 0.2 + rng.rand(n)
        ev = scalar_model_evals(np.eye(n), rng.randn(n), rng.randn(m), rng.randn(m, n))
        mu = 0.02
        d = ipm_solve_step(
            ev, x, np.zeros(m), zl, np.zeros(n), np.zeros(n), np.full(n, INF),
            BarrierState(mu=mu), RegularizationSchedule(),
        )
        resid = x * (zl + d.dzl) + zl * d.dx - mu
        assert np.max(np.abs(resid)) <= 1e-10

    def test_fraction_to_boundary_invariant_along_step(self):
        rng = np.random.RandomState(31)
        for _ in range(20):
            n, m = 4, 2
            x = 0.1 + rng.rand(n)
            zl = 0.1 + rng.rand(n)
            W = rng.randn(n, n)
            W = W + W.T
            ev = scalar_model_evals(W, rng.randn(n), rng.randn(m), rng.randn(m, n))
            barrier = BarrierState(mu=0.05)
            tau = barrier.tau
            d = ipm_solve_step(
                ev, x, rng.randn(m), zl, np.zeros(n), np.zeros(n), np.full(n, INF),
                barrier, RegularizationSchedule(),
            )
            assert 0.0 < d.alpha_max <= 1.0
            x_new = x + d.alpha_max * d.dx
            z_new = zl + d.dual_scale * d.dzl
            assert np.all(x_new >= (1.0 - tau) * x - 1e-14)
            assert np.all(z_new >= (1.0 - tau) * zl - 1e-14)
            assert np.all(x_new > 0.0) and np.all(z_new > 0.0)


def test_push_to_interior():
    lower = np.array([0.0, -INF, 1.0])
    upper = np.array([INF, 2.0, 1.5])
    x = push_to_interior(np.array([0.0, 5.0, 1.0]), lower, upper, kappa=1e-2)
    assert x[0] >= 0.01
    assert x[1] <= 2.0 - 0.01 * 2.0 + 1e-15
    assert lower[2] < x[2] < upper[2]


def test_ipm_on_equality_model_matches_newton():
    # unconstrained-variable model: the step reduces to a plain Newton-KKT solve
    model = to_equality_form(corpus_get("hs028"))
    x = model.initial_point.astype(float)
    y = np.zeros(model.m)
    ev = evaluate(model, x, 1.0, y, with_hessian=True)
    d = ipm_solve_step(
        ev, x, y, np.zeros(model.n), np.zeros(model.n),
        model.variable_lower, model.variable_upper,
        BarrierState(mu=0.1), RegularizationSchedule(),
    )
    K = np.block([[ev.hessian, ev.jac_c.T], [ev.jac_c, np.zeros((model.m, model.m))]])
    rhs = np.concatenate([-(ev.grad_f), -ev.c])
    expected = np.linalg.solve(K, rhs)
    np.testing.assert_allclose(d.dx, expected[: model.n], atol=1e-9)
