import numpy as np
import pytest

from proxnewton.core import certificate_tolerance, make_config
from proxnewton.operators import build_metric, residual_fb, subproblem_residual
from proxnewton.problems import (make_box_ge, make_lasso_degenerate,
                                 make_quadratic_singular)
from proxnewton.subproblem import (InnerBudgetExhausted, model_value,
                                   numerical_floor, solve_subproblem)


@pytest.fixture(scope="module")
def quad():
    return make_quadratic_singular(n=10, rank=4, seed=1)


@pytest.fixture(scope="module")
def lasso():
    return make_lasso_degenerate(m=20, n=30, rank=8, lam=0.2, seed=1)


def setup_step(problem, x, config):
    _, r = residual_fb(problem, x)
    H = build_metric(problem, x, r, config)
    return r, H


class TestModelValue:
    def test_hand_computed(self, quad):
        # 1-term model on a 2-point example against a manual evaluation
        x_t = np.zeros(quad.dim)
        g = quad.map_value(x_t)
        cfg = make_config(c=1.0, rho=1.0)
        r, H = setup_step(quad, x_t, cfg)
        d = 0.1 * np.ones(quad.dim)
        expected = float(g @ d) + 0.5 * float(d @ H.apply(d))
        assert model_value(quad, x_t, g, H, x_t + d) == pytest.approx(expected, rel=1e-12)

    def test_zero_at_center_when_psi_zero(self, quad):
        x_t = np.ones(quad.dim)
        g = quad.map_value(x_t)
        cfg = make_config()
        _, H = setup_step(quad, x_t, cfg)
        assert model_value(quad, x_t, g, H, x_t) == 0.0


class TestOptimizationPath:
    def test_matches_dense_solve_oracle(self, quad):
        # psi = 0: the exact subproblem solution is x - H^{-1} g
        rng = np.random.default_rng(0)
        x = rng.standard_normal(quad.dim)
        cfg = make_config(rho=0.5, nu=0.01)
        r, H = setup_step(quad, x, cfg)
        res = solve_subproblem(quad, x, r, H, cfg)
        exact = x - np.linalg.solve(H.dense(), quad.map_value(x))
        assert np.linalg.norm(res.x_tilde - exact) <= 10 * res.tol_used
        assert res.hatr <= res.tol_used

    def test_certificate_tolerance_formula(self, lasso):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(lasso.dim)
        cfg = make_config(rho=0.5, nu=0.1)
        r, H = setup_step(lasso, x, cfg)
        res = solve_subproblem(lasso, x, r, H, cfg)
        expected = max(certificate_tolerance(r, cfg, True),
                       numerical_floor(lasso, x))
        assert res.tol_used == pytest.approx(expected, rel=1e-12)
        assert res.hatr <= res.tol_used

    def test_model_never_increases(self, lasso):
        rng = np.random.default_rng(2)
        x = rng.standard_normal(lasso.dim)
        cfg = make_config(rho=0.5, nu=0.1)
        r, H = setup_step(lasso, x, cfg)
        res = solve_subproblem(lasso, x, r, H, cfg)
        g = lasso.regularized.f_grad(x)
        q_center = model_value(lasso, x, g, H, x)
        q_out = model_value(lasso, x, g, H, res.x_tilde)
        assert q_out <= q_center + 1e-12
        assert res.model_decrease_ok

    def test_residual_step_comparability(self, lasso):
        # accepted steps cannot be arbitrarily small relative to the residual
        rng = np.random.default_rng(3)
        x = rng.standard_normal(lasso.dim)
        cfg = make_config(rho=0.5, nu=0.1)
        r, H = setup_step(lasso, x, cfg)
        res = solve_subproblem(lasso, x, r, H, cfg)
        p_norm = np.linalg.norm(res.x_tilde - x)
        assert (1.0 - cfg.nu) * r <= (H.norm_bound + 2.0) * p_norm + 1e-10

    def test_early_exit_when_already_certified(self, quad):
        # at residual below the machine floor the center itself certifies
        x = np.linalg.lstsq(quad.regularized.f_hess(None),
                            -quad.map_value(np.zeros(quad.dim)), rcond=None)[0]
        _, r = residual_fb(quad, x)
        r = max(r, 1e-16)
        cfg = make_config(rho=0.5, nu=0.1)
        H = build_metric(quad, x, 1e-15, cfg)
        res = solve_subproblem(quad, x, 1e-15, H, cfg)
        assert res.inner_iters == 0
        assert np.array_equal(res.x_tilde, x)

    def test_rejects_nonpositive_residual(self, quad):
        cfg = make_config()
        H = build_metric(quad, np.zeros(quad.dim), 1.0, cfg)
        with pytest.raises(ValueError):
            solve_subproblem(quad, np.zeros(quad.dim), 0.0, H, cfg)

    def test_budget_exhaustion_carries_best_iterate(self, lasso):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(lasso.dim)
        cfg = make_config(rho=1.0, nu=0.0, max_inner=2)
        r, H = setup_step(lasso, x, cfg)
        with pytest.raises(InnerBudgetExhausted) as err:
            solve_subproblem(lasso, x, r, H, cfg)
        best = err.value.result
        assert best.hatr <= r  # never worse than the warm start
        assert best.inner_iters == 2


class TestGeneralizedPath:
    def test_certified_solution_on_box_problem(self):
        prob = make_box_ge(n=12, seed=2, nonsymmetric=True)
        rng = np.random.default_rng(5)
        x = rng.uniform(-0.9, 0.9, prob.dim)
        cfg = make_config(rho=0.5, nu=0.1)
        r, H = setup_step(prob, x, cfg)
        res = solve_subproblem(prob, x, r, H, cfg)
        assert res.hatr <= res.tol_used
        _, check = subproblem_residual(prob, x, H, res.x_tilde)
        assert check == pytest.approx(res.hatr, rel=1e-9, abs=1e-14)

    def test_generalized_tolerance_uses_power_rule(self):
        prob = make_box_ge(n=8, seed=3)
        x = 5.0 * np.ones(prob.dim)  # large residual: tol is nu * r^(1+rho)
        cfg = make_config(rho=0.5, nu=0.1)
        r, H = setup_step(prob, x, cfg)
        assert r > 1.0
        res = solve_subproblem(prob, x, r, H, cfg)
        assert res.tol_used == pytest.approx(0.1 * r**1.5, rel=1e-12)
        assert res.hatr <= res.tol_used

    def test_progress_is_monotone_in_reported_residual(self):
        # the reported iterate is best-so-far: rerunning with a smaller budget
        # can never report a smaller residual than the full run
        prob = make_box_ge(n=10, seed=4)
        x = np.zeros(prob.dim)
        cfg_tight = make_config(rho=0.5, nu=0.01)
        r, H = setup_step(prob, x, cfg_tight)
        full = solve_subproblem(prob, x, r, H, cfg_tight)
        cfg_small = make_config(rho=0.5, nu=0.01, max_inner=1)
        try:
            partial = solve_subproblem(prob, x, r, H, cfg_small)
            partial_hatr = partial.hatr
        except InnerBudgetExhausted as err:
            partial_hatr = err.result.hatr
        assert full.hatr <= partial_hatr + 1e-15
        assert partial_hatr <= r
