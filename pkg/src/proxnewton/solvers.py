"""Outer loops: the unit-step local scheme and three globalized variants.

All runners share the same per-iteration shape: evaluate the forward-backward
residual, build the damped metric, obtain an inexact subproblem solution (or a
user-provided direction), pick a step length, and record one trace row. The
trace row at index t describes the state at x_t together with the step taken
from it; step_norm is the norm of the *proposed* direction p_t (before the
line-search scaling), so residual/step relations stay auditable from the CSV.
A zero-step terminal row records the final point whenever its residual is
positive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional, Protocol

import numpy as np

from .core import (FLAG_CERTIFICATE, FLAG_METRIC_PSD, FLAG_RESIDUAL_BOUND,
                   ConfigError, IterateTrace, Point, SolverConfig, TraceRow)
from .operators import Metric, build_metric, prox_gradient, residual_fb, subproblem_residual
from .subproblem import InnerBudgetExhausted, solve_subproblem

if TYPE_CHECKING:  # pragma: no cover
    from .problems import ProblemInstance

MAX_HALVINGS = 60

Perturbation = Callable[[Point, float], np.ndarray]


class Termination(enum.Enum):
    ResidualTol = "residual_tol"
    StepZero = "step_zero"
    OuterBudget = "outer_budget"
    InnerBudgetExhausted = "inner_budget"


class DirectionProvider(Protocol):
    """External source of trial points, bypassing the built-in inner solver."""

    def propose(self, problem: "ProblemInstance", x_t: Point, r_t: float,
                metric: Metric, config: SolverConfig) -> Point:
        ...  # pragma: no cover


@dataclass(frozen=True)
class RunResult:
    final_x: Point
    trace: IterateTrace
    termination: Termination

    @property
    def final_r(self) -> float:
        return float(self.trace.rows[-1].r)


def _evaluate(problem: "ProblemInstance", x: Point) -> tuple[float, Optional[float], Optional[float]]:
    _, r = residual_fb(problem, x)
    F = problem.objective(x) if problem.is_regularized else None
    oracle = problem.metadata.dist_oracle
    dist = float(oracle(x)) if oracle is not None else None
    return r, F, dist


def _propose(problem, x_t, r_t, H, config, provider):
    """Trial point, its subproblem residual, tolerance used, and inner count."""
    if provider is not None:
        x_tilde = provider.propose(problem, x_t, r_t, H, config)
        from .core import certificate_tolerance
        from .subproblem import numerical_floor
        tol = certificate_tolerance(r_t, config, problem.is_regularized)
        tol_eff = max(tol, numerical_floor(problem, x_t))
        _, hatr = subproblem_residual(problem, x_t, H, x_tilde)
        return x_tilde, hatr, tol_eff, 0
    res = solve_subproblem(problem, x_t, r_t, H, config)
    return res.x_tilde, res.hatr, res.tol_used, res.inner_iters


def _step_flags(H: Metric, r_t: float, p_norm: float, hatr: float,
                tol_used: float, nu: float) -> int:
    flags = 0
    if H.psd_symmetric_part():
        flags |= FLAG_METRIC_PSD
    if (1.0 - nu) * r_t <= (H.norm_bound + 2.0) * p_norm + 1e-10:
        flags |= FLAG_RESIDUAL_BOUND
    if hatr <= tol_used + 1e-13:
        flags |= FLAG_CERTIFICATE
    return flags


def _append_terminal(trace: IterateTrace, r: float, F, dist, config: SolverConfig) -> None:
    if r <= 0.0 and trace.rows:
        return
    trace.append(TraceRow(
        t=len(trace.rows), r=r, F=F, dist=dist, alpha=1.0,
        mu=config.damping(r), step_norm=0.0, inner_iters=0, subres=0.0,
        unit_step=True))


def run_local(problem: "ProblemInstance", x0: Point, config: SolverConfig,
              perturbation: Optional[Perturbation] = None,
              provider: Optional[DirectionProvider] = None) -> RunResult:
    """Unit-step scheme: x_{t+1} is the inexact subproblem solution.

    Works in both optimization and generalized-equation mode; no objective
    values are needed, so no descent is enforced.
    """
    x = np.asarray(x0, dtype=float).copy()
    trace = IterateTrace()
    termination = Termination.OuterBudget
    for _ in range(config.max_outer):
        r, F, dist = _evaluate(problem, x)
        if r <= config.r_tol:
            termination = Termination.ResidualTol
            break
        H = build_metric(problem, x, r, config, perturbation)
        try:
            x_tilde, hatr, tol_used, inner = _propose(problem, x, r, H, config, provider)
        except InnerBudgetExhausted:
            termination = Termination.InnerBudgetExhausted
            break
        p_norm = float(np.linalg.norm(x_tilde - x))
        flags = _step_flags(H, r, p_norm, hatr, tol_used, config.nu)
        trace.append(TraceRow(
            t=len(trace.rows), r=r, F=F, dist=dist, alpha=1.0, mu=H.mu,
            step_norm=p_norm, inner_iters=inner, subres=hatr, unit_step=True,
            invariant_flags=flags, h_norm=H.norm_bound))
        if p_norm == 0.0:
            termination = Termination.StepZero
            x = x_tilde
            break
        x = x_tilde
    r, F, dist = _evaluate(problem, x)
    if r <= config.r_tol and termination is Termination.OuterBudget:
        termination = Termination.ResidualTol
    _append_terminal(trace, r, F, dist, config)
    return RunResult(final_x=x, trace=trace, termination=termination)


def _require_objective(problem: "ProblemInstance", name: str) -> None:
    if not problem.is_regularized:
        raise ConfigError(f"{name} needs objective values; use run_local for "
                          "generalized equations")


def run_alg1(problem: "ProblemInstance", x0: Point, config: SolverConfig,
             perturbation: Optional[Perturbation] = None,
             provider: Optional[DirectionProvider] = None) -> RunResult:
    """Hybrid globalization: accept the unit step when the trial residual has
    dropped below sigma times a monotone gauge (and the objective stays
    bounded); otherwise backtrack with a damped Armijo condition.

    The unit_step column records hybrid acceptance specifically, so the gauge
    sequence can be reconstructed from the trace.
    """
    _require_objective(problem, "run_alg1")
    x = np.asarray(x0, dtype=float).copy()
    trace = IterateTrace()
    termination = Termination.OuterBudget
    r0, F0, _ = _evaluate(problem, x)
    eta = r0
    c_bar = config.c_bar if config.c_bar is not None else F0 + 1.0
    for t in range(config.max_outer):
        r, F, dist = _evaluate(problem, x)
        if r <= config.r_tol:
            termination = Termination.ResidualTol
            break
        H = build_metric(problem, x, r, config, perturbation)
        try:
            x_tilde, hatr, tol_used, inner = _propose(problem, x, r, H, config, provider)
        except InnerBudgetExhausted:
            termination = Termination.InnerBudgetExhausted
            break
        p = x_tilde - x
        p_norm = float(np.linalg.norm(p))
        flags = _step_flags(H, r, p_norm, hatr, tol_used, config.nu)
        if p_norm == 0.0:
            trace.append(TraceRow(
                t=len(trace.rows), r=r, F=F, dist=dist, alpha=1.0, mu=H.mu,
                step_norm=0.0, inner_iters=inner, subres=hatr, unit_step=False,
                invariant_flags=flags, h_norm=H.norm_bound))
            termination = Termination.StepZero
            break
        _, r_tilde = residual_fb(problem, x_tilde)
        F_tilde = problem.objective(x_tilde)
        hybrid = t > 0 and r_tilde <= config.sigma * eta and F_tilde <= c_bar
        if hybrid:
            alpha = 1.0
            x_next = x_tilde
            eta = r_tilde
        else:
            alpha = None
            for m in range(MAX_HALVINGS + 1):
                a = config.beta**m
                candidate = x + a * p
                if problem.objective(candidate) <= F - config.gamma * H.mu * a * p_norm**2:
                    alpha = a
                    x_next = candidate
                    break
            if alpha is None:
                trace.append(TraceRow(
                    t=len(trace.rows), r=r, F=F, dist=dist, alpha=0.0, mu=H.mu,
                    step_norm=p_norm, inner_iters=inner, subres=hatr,
                    unit_step=False, invariant_flags=flags, h_norm=H.norm_bound))
                termination = Termination.StepZero
                break
        trace.append(TraceRow(
            t=len(trace.rows), r=r, F=F, dist=dist, alpha=alpha, mu=H.mu,
            step_norm=p_norm, inner_iters=inner, subres=hatr, unit_step=hybrid,
            invariant_flags=flags, h_norm=H.norm_bound))
        x = x_next
    r, F, dist = _evaluate(problem, x)
    if r <= config.r_tol and termination is Termination.OuterBudget:
        termination = Termination.ResidualTol
    _append_terminal(trace, r, F, dist, config)
    return RunResult(final_x=x, trace=trace, termination=termination)


def run_alg2(problem: "ProblemInstance", x0: Point, config: SolverConfig,
             perturbation: Optional[Perturbation] = None,
             provider: Optional[DirectionProvider] = None) -> RunResult:
    """Prox-gradient composed globalization: the trial y = x + alpha*p is
    post-processed by one prox-gradient step, and the result must decrease the
    objective by gamma * alpha^2 * ||p||^(2+delta).

    With accept_min_variant, the raw trial point replaces the post-processed
    one whenever it has the lower objective value.
    """
    _require_objective(problem, "run_alg2")
    x = np.asarray(x0, dtype=float).copy()
    trace = IterateTrace()
    termination = Termination.OuterBudget
    for _ in range(config.max_outer):
        r, F, dist = _evaluate(problem, x)
        if r <= config.r_tol:
            termination = Termination.ResidualTol
            break
        H = build_metric(problem, x, r, config, perturbation)
        try:
            x_tilde, hatr, tol_used, inner = _propose(problem, x, r, H, config, provider)
        except InnerBudgetExhausted:
            termination = Termination.InnerBudgetExhausted
            break
        p = x_tilde - x
        p_norm = float(np.linalg.norm(p))
        flags = _step_flags(H, r, p_norm, hatr, tol_used, config.nu)
        if p_norm == 0.0:
            trace.append(TraceRow(
                t=len(trace.rows), r=r, F=F, dist=dist, alpha=1.0, mu=H.mu,
                step_norm=0.0, inner_iters=inner, subres=hatr, unit_step=True,
                invariant_flags=flags, h_norm=H.norm_bound))
            termination = Termination.StepZero
            break
        alpha = None
        for m in range(MAX_HALVINGS + 1):
            a = config.beta**m
            _, xbar = prox_gradient(problem, x + a * p)
            F_bar = problem.objective(xbar)
            if F_bar <= F - config.gamma * a**2 * p_norm**(2.0 + config.delta):
                alpha = a
                x_next, F_next = xbar, F_bar
                break
        if alpha is None:
            trace.append(TraceRow(
                t=len(trace.rows), r=r, F=F, dist=dist, alpha=0.0, mu=H.mu,
                step_norm=p_norm, inner_iters=inner, subres=hatr,
                unit_step=False, invariant_flags=flags, h_norm=H.norm_bound))
            termination = Termination.StepZero
            break
        if config.accept_min_variant:
            F_tilde = problem.objective(x_tilde)
            if F_tilde < F_next:
                x_next = x_tilde
        trace.append(TraceRow(
            t=len(trace.rows), r=r, F=F, dist=dist, alpha=alpha, mu=H.mu,
            step_norm=p_norm, inner_iters=inner, subres=hatr,
            unit_step=alpha == 1.0, invariant_flags=flags, h_norm=H.norm_bound))
        x = x_next
    r, F, dist = _evaluate(problem, x)
    if r <= config.r_tol and termination is Termination.OuterBudget:
        termination = Termination.ResidualTol
    _append_terminal(trace, r, F, dist, config)
    return RunResult(final_x=x, trace=trace, termination=termination)


def run_alg3(problem: "ProblemInstance", x0: Point, config: SolverConfig,
             perturbation: Optional[Perturbation] = None,
             provider: Optional[DirectionProvider] = None) -> RunResult:
    """Smooth-objective globalization (regularizer identically zero): the trial
    x + alpha*p itself must decrease F by gamma * alpha^2 * ||p||^(2+delta)."""
    _require_objective(problem, "run_alg3")
    if not problem.regularized.psi_is_zero:
        raise ConfigError("run_alg3 requires a problem whose regularizer is "
                          "identically zero")
    x = np.asarray(x0, dtype=float).copy()
    trace = IterateTrace()
    termination = Termination.OuterBudget
    for _ in range(config.max_outer):
        r, F, dist = _evaluate(problem, x)
        if r <= config.r_tol:
            termination = Termination.ResidualTol
            break
        H = build_metric(problem, x, r, config, perturbation)
        try:
            x_tilde, hatr, tol_used, inner = _propose(problem, x, r, H, config, provider)
        except InnerBudgetExhausted:
            termination = Termination.InnerBudgetExhausted
            break
        p = x_tilde - x
        p_norm = float(np.linalg.norm(p))
        flags = _step_flags(H, r, p_norm, hatr, tol_used, config.nu)
        if p_norm == 0.0:
            trace.append(TraceRow(
                t=len(trace.rows), r=r, F=F, dist=dist, alpha=1.0, mu=H.mu,
                step_norm=0.0, inner_iters=inner, subres=hatr, unit_step=True,
                invariant_flags=flags, h_norm=H.norm_bound))
            termination = Termination.StepZero
            break
        alpha = None
        for m in range(MAX_HALVINGS + 1):
            a = config.beta**m
            candidate = x + a * p
            F_cand = problem.objective(candidate)
            if F_cand <= F - config.gamma * a**2 * p_norm**(2.0 + config.delta):
                alpha = a
                x_next = candidate
                break
        if alpha is None:
            trace.append(TraceRow(
                t=len(trace.rows), r=r, F=F, dist=dist, alpha=0.0, mu=H.mu,
                step_norm=p_norm, inner_iters=inner, subres=hatr,
                unit_step=False, invariant_flags=flags, h_norm=H.norm_bound))
            termination = Termination.StepZero
            break
        trace.append(TraceRow(
            t=len(trace.rows), r=r, F=F, dist=dist, alpha=alpha, mu=H.mu,
            step_norm=p_norm, inner_iters=inner, subres=hatr,
            unit_step=alpha == 1.0, invariant_flags=flags, h_norm=H.norm_bound))
        x = x_next
    r, F, dist = _evaluate(problem, x)
    if r <= config.r_tol and termination is Termination.OuterBudget:
        termination = Termination.ResidualTol
    _append_terminal(trace, r, F, dist, config)
    return RunResult(final_x=x, trace=trace, termination=termination)


ALGORITHMS = {
    "local": run_local,
    "alg1": run_alg1,
    "alg2": run_alg2,
    "alg3": run_alg3,
}
