"""Partial minimization: gradients, Hessian brackets, rates, KL estimates."""

import math

import numpy as np
import pytest

from tensorot import (
    ContractViolation,
    PmProblem,
    RateParams,
    SinkhornConfig,
    Tensor,
    apply_scaling,
    g_gradient,
    g_sublevel_params,
    g_value,
    hessian_bounds,
    l1_norm,
    mode_orthogonal_blocks,
    ones_tensor,
    pm_minimize,
    projection_kl_bounds,
    rate_bound,
    scaling_block_minimizer,
    sinkhorn_scale,
)

from conftest import random_marginals, random_positive_tensor


def normalized(A):
    return Tensor(A.data / l1_norm(A))


def g_problem(A, P, tol=1e-8, max_iter=500, s=1.0):
    d, n = P.d, P.n
    return PmProblem(
        objective=lambda x: g_value(A, P, x.reshape(d, n)),
        gradient=lambda x: g_gradient(A, P, x.reshape(d, n)).ravel(),
        blocks=mode_orthogonal_blocks(P),
        x0=np.zeros(d * n),
        s=s,
        tol=tol,
        max_iter=max_iter,
        minimizer=scaling_block_minimizer(A, P),
    )


class TestGPotential:
    def test_value_at_zero(self, rng):
        A = normalized(random_positive_tensor(rng, 3, 2))
        P = random_marginals(rng, 3, 2)
        assert g_value(A, P, np.zeros((3, 2))) == pytest.approx(1.0, abs=1e-12)

    def test_gradient_zero_at_feasible_point(self, rng):
        from tensorot import outer

        P = random_marginals(rng, 3, 3)
        A = outer(P.p)
        grad = g_gradient(A, P, np.zeros((3, 3)))
        assert np.abs(grad).max() < 1e-12

    def test_gradient_matches_finite_differences(self, rng):
        for _ in range(100):
            A = random_positive_tensor(rng, 3, 2, floor=0.2)
            P = random_marginals(rng, 3, 2)
            Y = 0.3 * rng.normal(size=(3, 2))
            grad = g_gradient(A, P, Y)
            h = 1e-6
            for j in range(3):
                for i in range(2):
                    Yp, Ym = Y.copy(), Y.copy()
                    Yp[j, i] += h
                    Ym[j, i] -= h
                    fd = (g_value(A, P, Yp) - g_value(A, P, Ym)) / (2 * h)
                    assert grad[j, i] == pytest.approx(fd, rel=1e-6, abs=1e-8)


class TestHessianBounds:
    def test_all_ones(self):
        assert hessian_bounds(ones_tensor(2, 2), np.zeros((2, 2))) == (1.0, 1.0)

    def test_support_extremes(self):
        A = Tensor([[1.0, 2.0], [3.0, 4.0]])
        assert hessian_bounds(A, np.zeros((2, 2))) == (1.0, 4.0)

    def test_contains_restricted_hessian_eigenvalues(self, rng):
        # The potential is the entrywise-exponential sum re-parametrized by
        # the additive embedding of per-mode exponents into tensor entries;
        # its Hessian there is diagonal with the scaled entries.  Restrict
        # that diagonal to the embedded 2(n-1)-dim search space and check
        # the eigenvalue bracket.
        n = 2
        A = random_positive_tensor(rng, 2, n)
        P = random_marginals(rng, 2, n)
        Y = 0.2 * rng.normal(size=(2, n))
        blocks = np.hstack(mode_orthogonal_blocks(P))  # basis of the search space
        embedded = []
        for col in blocks.T:
            u = col.reshape(2, n)
            embedded.append(np.add.outer(u[0], u[1]).ravel())
        from scipy.linalg import orth

        Q = orth(np.array(embedded).T)
        assert Q.shape[1] == 2 * (n - 1)
        scaled = apply_scaling(A, Y).data.ravel()
        restricted = Q.T @ np.diag(scaled) @ Q
        eigs = np.linalg.eigvalsh(restricted)
        alpha, beta = hessian_bounds(A, Y)
        assert eigs.min() >= alpha - 1e-10
        assert eigs.max() <= beta + 1e-10

    def test_empty_support_rejected(self):
        with pytest.raises(ContractViolation):
            hessian_bounds(Tensor(np.zeros((2, 2))), np.zeros((2, 2)))


class TestPmMinimize:
    def test_separable_quadratic_two_steps(self):
        prob = PmProblem(
            objective=lambda x: x[0] ** 2 + x[1] ** 2,
            gradient=lambda x: 2 * x,
            blocks=[np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])],
            x0=np.array([1.0, 1.0]),
            tol=1e-12,
        )
        res = pm_minimize(prob)
        assert res.converged
        assert res.steps == 2
        assert np.abs(res.x).max() < 1e-12

    def test_shifted_quadratic(self):
        prob = PmProblem(
            objective=lambda x: (x[0] - 1.0) ** 2 + 2.0 * (x[1] + 1.0) ** 2,
            gradient=lambda x: np.array([2 * (x[0] - 1.0), 4 * (x[1] + 1.0)]),
            blocks=[np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])],
            x0=np.array([4.0, -3.0]),
            tol=1e-10,
        )
        res = pm_minimize(prob)
        assert np.allclose(res.x, [1.0, -1.0], atol=1e-9)

    def test_newton_fallback_matches_closed_form(self, rng):
        A = normalized(random_positive_tensor(rng, 2, 2))
        P = random_marginals(rng, 2, 2)
        with_closed = pm_minimize(g_problem(A, P, tol=1e-7))
        prob = g_problem(A, P, tol=1e-7)
        prob.minimizer = None
        with_newton = pm_minimize(prob)
        assert with_closed.f_values[-1] == pytest.approx(with_newton.f_values[-1], abs=1e-8)

    def test_descent_along_trace(self, rng):
        A = normalized(random_positive_tensor(rng, 2, 3))
        P = random_marginals(rng, 2, 3)
        res = pm_minimize(g_problem(A, P, tol=1e-6))
        diffs = np.diff(res.f_values)
        assert np.all(diffs < 0)

    def test_matches_sinkhorn_iterates(self, rng):
        for _ in range(5):
            d = int(rng.integers(2, 4))
            n = int(rng.integers(2, 4))
            A0 = normalized(random_positive_tensor(rng, d, n))
            P = random_marginals(rng, d, n)
            res = pm_minimize(g_problem(A0, P, tol=1e-8))
            _, _, trace = sinkhorn_scale(A0, P, SinkhornConfig(epsilon=1e-4))
            steps = min(trace.k_stop, res.steps)
            assert [r.mode for r in trace.records[:steps]] == res.blocks_chosen[:steps]
            # normalized materialized PM iterates equal the scaling iterates
            log_p = np.log(P.p)
            X = np.zeros((d, n))
            for m in range(1, steps + 1):
                tilde = apply_scaling(A0, res.iterates[m].reshape(d, n))
                pm_plan = tilde.data / l1_norm(tilde)
                from tensorot import marginal

                mode = trace.records[m - 1].mode
                X[mode] += log_p[mode] - np.log(marginal(apply_scaling(A0, X), mode))
                sk_plan = apply_scaling(A0, X).data
                assert np.abs(pm_plan - sk_plan).max() < 1e-9

    def test_incompatible_blocks_rejected(self):
        # blocks spanning only x cannot explain a gradient with a y part
        prob = PmProblem(
            objective=lambda x: x[0] ** 2 + (x[1] - 1.0) ** 2,
            gradient=lambda x: np.array([2 * x[0], 2 * (x[1] - 1.0)]),
            blocks=[np.array([[1.0], [0.0]])],
            x0=np.array([2.0, 0.0]),
            tol=1e-10,
        )
        res = pm_minimize(prob)  # restricted problem converges on its span
        assert abs(res.x[0]) < 1e-9
        assert res.x[1] == 0.0

    def test_s_out_of_range(self):
        with pytest.raises(ValueError):
            PmProblem(objective=lambda x: 0.0, gradient=lambda x: x,
                      blocks=[np.eye(1)], x0=np.zeros(1), s=3.0)


class TestRateBound:
    def test_quadratic_bound_zero_after_two_steps(self):
        # kappa = 1, d = 2, one-dimensional blocks: the bound collapses to 0
        f_values = [2.0, 1.0, 0.0]
        params = RateParams(alpha=2.0, beta=2.0, ell=1, s=2.0)
        report = rate_bound(f_values, params, d=2, f_star=0.0)
        assert report.bounds[1] == pytest.approx(1.0)
        assert report.bounds[2] == pytest.approx(0.0, abs=1e-12)
        assert report.ok

    def test_bounds_nonincreasing(self, rng):
        A = normalized(random_positive_tensor(rng, 2, 3))
        P = random_marginals(rng, 2, 3)
        res = pm_minimize(g_problem(A, P, tol=1e-8))
        params = g_sublevel_params(A, P, res.iterates, rng=rng)
        report = rate_bound(res.f_values, params, d=2, f_star=res.f_values[-1])
        assert np.all(np.diff(report.bounds) <= 1e-15)

    def test_g_trace_never_violates_sweep_bound(self, rng):
        for _ in range(5):
            d = int(rng.integers(2, 4))
            n = int(rng.integers(2, 4))
            A = normalized(random_positive_tensor(rng, d, n))
            P = random_marginals(rng, d, n)
            res = pm_minimize(g_problem(A, P, tol=1e-9, max_iter=2000))
            params = g_sublevel_params(A, P, res.iterates, rng=rng)
            report = rate_bound(res.f_values, params, d=d, f_star=res.f_values[-1])
            assert report.ok, report.violations

    def test_per_iterate_kappas_hold_on_g_traces(self, rng):
        # the stricter per-iterate condition numbers still certify the runs
        for _ in range(5):
            A = normalized(random_positive_tensor(rng, 2, 3))
            P = random_marginals(rng, 2, 3)
            res = pm_minimize(g_problem(A, P, tol=1e-8))
            kappas = []
            for x in res.iterates[:-1]:
                alpha, beta = hessian_bounds(A, x.reshape(2, 3))
                kappas.append(beta / alpha)
            params = RateParams(alpha=1.0, beta=kappas[0], ell=2, s=1.0)
            report = rate_bound(res.f_values, params, d=2,
                                f_star=res.f_values[-1], kappas=kappas)
            assert len(report.bounds) == len(res.f_values)
            assert report.ok, report.violations

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            RateParams(alpha=0.0, beta=1.0, ell=1)


class TestProjectionKlBounds:
    def test_equal_uniform(self):
        p = np.full(4, 0.25)
        rec = projection_kl_bounds(p, p)
        assert rec.scale == pytest.approx(1.0)
        assert rec.residual_l1 == pytest.approx(0.0, abs=1e-15)
        assert rec.all_ok

    def test_extremal_pair_attains_max_scale(self):
        p = np.array([0.5, 1 / 6, 1 / 6, 1 / 6])
        q = np.array([1.0, 0.0, 0.0, 0.0])
        rec = projection_kl_bounds(p, q)
        assert rec.scale == pytest.approx((math.sqrt(4) + 1) / 2, abs=1e-12)
        assert rec.kl == math.inf
        assert rec.all_ok

    def test_random_pairs_all_inequalities(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 6))
            p = rng.dirichlet(np.ones(n)) + 1e-6
            p /= p.sum()
            q = rng.dirichlet(np.ones(n))
            rec = projection_kl_bounds(p, q)
            assert rec.all_ok

    def test_rejects_boundary_p(self):
        with pytest.raises(ContractViolation):
            projection_kl_bounds([1.0, 0.0], [0.5, 0.5])
