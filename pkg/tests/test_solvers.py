import numpy as np
import pytest

from proxnewton.analysis import audit_trace, estimate_rate
from proxnewton.core import ConfigError, make_config
from proxnewton.operators import build_metric, residual_fb, subproblem_residual
from proxnewton.problems import (make_box_ge, make_holder,
                                 make_lasso_degenerate,
                                 make_quadratic_singular)
from proxnewton.solvers import (Termination, run_alg1, run_alg2, run_alg3,
                                run_local)


@pytest.fixture(scope="module")
def quad():
    return make_quadratic_singular(n=20, rank=8, seed=0)


@pytest.fixture(scope="module")
def lasso():
    return make_lasso_degenerate(m=40, n=60, rank=15, lam=0.2, seed=0)


@pytest.fixture(scope="module")
def holder():
    return make_holder(n=20, gamma=1.5, seed=0)


class DenseSolveProvider:
    """Exact subproblem solution for smooth problems via a dense linear solve."""

    def propose(self, problem, x_t, r_t, metric, config):
        return x_t + np.linalg.solve(metric.dense(), -problem.map_value(x_t))


class TestRunLocal:
    def test_converges_on_quadratic(self, quad):
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-11)
        res = run_local(quad, quad.default_x0, cfg)
        assert res.termination is Termination.ResidualTol
        assert res.final_r <= 1e-11

    def test_trace_ends_with_terminal_row(self, quad):
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-11)
        res = run_local(quad, quad.default_x0, cfg)
        rows = res.trace.rows
        assert rows[-1].is_terminal
        assert all(not row.is_terminal for row in rows[:-1])
        assert rows[-1].r == res.final_r

    def test_superlinear_tail(self, quad):
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-11)
        res = run_local(quad, quad.default_x0, cfg)
        rate = estimate_rate(res.trace)
        assert rate is not None and rate.q_order > 1.2

    def test_iterates_are_cauchy_like(self, quad):
        # step norms decay fast enough to sum: tail below any fixed epsilon
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-11)
        res = run_local(quad, quad.default_x0, cfg)
        steps = [row.step_norm for row in res.trace.rows[:-1]]
        assert sum(steps[-3:]) < 1e-4 * sum(steps)

    def test_handles_generalized_equation(self):
        prob = make_box_ge(n=15, seed=1)
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-10)
        res = run_local(prob, prob.default_x0, cfg)
        assert res.final_r <= 1e-10
        assert all(row.F is None for row in res.trace.rows)

    def test_start_at_solution_is_graceful(self, quad):
        cfg = make_config(rho=0.5, r_tol=1e-11)
        sol = run_local(quad, quad.default_x0, cfg).final_x
        res = run_local(quad, sol, cfg)
        assert res.termination is Termination.ResidualTol
        assert len(res.trace.rows) >= 1

    def test_outer_budget_respected(self, quad):
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-15, max_outer=3)
        res = run_local(quad, quad.default_x0, cfg)
        assert res.termination in (Termination.OuterBudget, Termination.ResidualTol)
        assert sum(1 for row in res.trace.rows if not row.is_terminal) <= 3

    def test_audit_clean(self, quad):
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-11)
        res = run_local(quad, quad.default_x0, cfg)
        assert audit_trace(res.trace, quad, cfg, "local") == []


class TestRunAlg1:
    def test_rejects_generalized_equation(self):
        prob = make_box_ge(n=10, seed=0)
        with pytest.raises(ConfigError):
            run_alg1(prob, prob.default_x0, make_config())

    def test_hybrid_acceptance_engages(self, lasso):
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-10)
        res = run_alg1(lasso, lasso.default_x0, cfg)
        assert res.final_r <= 1e-10
        rows = res.trace.rows
        assert not rows[0].unit_step  # hybrid requires t > 0
        assert any(row.unit_step for row in rows[:-1])

    def test_eta_gauge_monotone(self, lasso):
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-10)
        res = run_alg1(lasso, lasso.default_x0, cfg)
        assert audit_trace(res.trace, lasso, cfg, "alg1") == []

    def test_objective_bounded_by_cap(self, lasso):
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-10)
        res = run_alg1(lasso, lasso.default_x0, cfg)
        c_bar = lasso.objective(lasso.default_x0) + 1.0
        assert all(row.F <= c_bar + 1e-12 for row in res.trace.rows)

    def test_custom_cap_is_honored(self, lasso):
        f0 = lasso.objective(lasso.default_x0)
        cfg = make_config(rho=0.5, nu=0.1, r_tol=1e-10, c_bar=f0 + 5.0)
        res = run_alg1(lasso, lasso.default_x0, cfg)
        assert res.final_r <= 1e-10


class TestRunAlg2:
    def test_converges_with_strict_decrease(self, lasso):
        cfg = make_config(rho=1.0, nu=0.1, delta=2.0, r_tol=1e-9)
        res = run_alg2(lasso, lasso.default_x0, cfg)
        assert res.final_r <= 1e-9
        Fs = [row.F for row in res.trace.rows]
        assert all(Fs[i + 1] < Fs[i] for i in range(len(Fs) - 1))

    def test_step_size_floor_holds(self, lasso):
        cfg = make_config(rho=1.0, nu=0.1, delta=2.0, r_tol=1e-9)
        res = run_alg2(lasso, lasso.default_x0, cfg)
        assert audit_trace(res.trace, lasso, cfg, "alg2") == []

    def test_objective_gap_superlinear(self, quad):
        # F_t - F* contracts faster than linearly once steps are unit
        cfg = make_config(rho=1.0, nu=0.1, delta=2.0, r_tol=1e-11)
        res = run_alg2(quad, quad.default_x0, cfg)
        f_star = quad.metadata.f_star
        gaps = [row.F - f_star for row in res.trace.rows
                if row.F - f_star > 1e-12]
        ratios = [gaps[i + 1] / gaps[i] for i in range(len(gaps) - 1)]
        assert ratios[-1] < 0.1 * ratios[0]

    def test_accept_min_variant_never_worse(self, lasso):
        cfg = make_config(rho=1.0, nu=0.1, delta=2.0, r_tol=1e-9)
        cfg_min = make_config(rho=1.0, nu=0.1, delta=2.0, r_tol=1e-9,
                              accept_min_variant=True)
        base = run_alg2(lasso, lasso.default_x0, cfg)
        variant = run_alg2(lasso, lasso.default_x0, cfg_min)
        assert variant.final_r <= 1e-9
        assert lasso.objective(variant.final_x) <= lasso.objective(base.final_x) + 1e-9

    def test_direction_provider_is_used(self, quad):
        cfg = make_config(rho=1.0, nu=0.1, delta=2.0, r_tol=1e-10)
        res = run_alg2(quad, quad.default_x0, cfg, provider=DenseSolveProvider())
        assert res.final_r <= 1e-10
        # provider rows report a recomputed subproblem residual, not a stale one
        rows = [row for row in res.trace.rows if not row.is_terminal]
        assert all(row.inner_iters == 0 for row in rows)
        first = rows[0]
        H = build_metric(quad, quad.default_x0, first.r, cfg)
        exact = quad.default_x0 + np.linalg.solve(H.dense(),
                                                  -quad.map_value(quad.default_x0))
        _, hatr = subproblem_residual(quad, quad.default_x0, H, exact)
        assert first.subres == pytest.approx(hatr, rel=1e-9, abs=1e-13)

    def test_rejects_generalized_equation(self):
        prob = make_box_ge(n=10, seed=0)
        with pytest.raises(ConfigError):
            run_alg2(prob, prob.default_x0, make_config())


class TestRunAlg3:
    def test_requires_zero_regularizer(self, lasso):
        with pytest.raises(ConfigError):
            run_alg3(lasso, lasso.default_x0, make_config())

    def test_converges_on_smooth_problems(self, holder):
        cfg = make_config(rho=0.25, nu=0.1, r_tol=1e-11)
        res = run_alg3(holder, holder.default_x0, cfg)
        assert res.final_r <= 1e-11
        assert audit_trace(res.trace, holder, cfg, "alg3") == []

    def test_strict_decrease(self, holder):
        cfg = make_config(rho=0.25, nu=0.1, r_tol=1e-11)
        res = run_alg3(holder, holder.default_x0, cfg)
        Fs = [row.F for row in res.trace.rows]
        assert all(Fs[i + 1] < Fs[i] for i in range(len(Fs) - 1))

    def test_distance_column_tracks_oracle(self, holder):
        cfg = make_config(rho=0.25, nu=0.1, r_tol=1e-11)
        res = run_alg3(holder, holder.default_x0, cfg)
        for row in res.trace.rows:
            assert row.dist is not None and row.dist >= 0.0
        assert res.trace.rows[-1].dist < 1e-8


class TestTraceColumns:
    def test_mu_matches_damping_rule(self, quad):
        cfg = make_config(c=2.0, rho=0.5, nu=0.1, r_tol=1e-11)
        res = run_local(quad, quad.default_x0, cfg)
        for row in res.trace.rows:
            assert row.mu == pytest.approx(cfg.damping(row.r), rel=1e-12)

    def test_t_column_is_contiguous(self, quad):
        cfg = make_config(rho=0.5, r_tol=1e-11)
        res = run_local(quad, quad.default_x0, cfg)
        assert [row.t for row in res.trace.rows] == list(range(len(res.trace.rows)))
