"""Inexact solution of the per-iteration scaled subproblem.

Optimization mode minimizes the quadratic-plus-psi model with an accelerated
proximal-gradient loop (momentum for the strongly convex model, restart on
model increase). Generalized-equation mode solves the strongly monotone
inclusion with a safeguarded semismooth Newton step on the fixed-point
residual, falling back to forward-backward-forward steps. Both loops track
the best certified iterate, so the reported residual is nonincreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .core import Point, SolverConfig, certificate_tolerance
from .operators import Metric, subproblem_residual

if TYPE_CHECKING:  # pragma: no cover
    from .problems import ProblemInstance


@dataclass(frozen=True)
class SubproblemResult:
    x_tilde: Point
    hatr: float
    model_decrease_ok: bool
    inner_iters: int
    tol_used: float


class InnerBudgetExhausted(RuntimeError):
    """Inner budget ran out before the inexactness certificate held; carries
    the best iterate found so far."""

    def __init__(self, result: SubproblemResult):
        super().__init__(
            f"inner budget exhausted at residual {result.hatr:.3e} "
            f"(tolerance {result.tol_used:.3e})")
        self.result = result


def model_value(problem, x_t: Point, g_t: Point, H: Metric, x: Point) -> float:
    """Value of the local model <g_t, x-x_t> + 0.5 <H(x-x_t), x-x_t> + psi(x)."""
    reg = getattr(problem, "regularized", None) or problem
    d = x - x_t
    return float(g_t @ d) + 0.5 * float(d @ H.apply(d)) + float(reg.psi_value(x))


def numerical_floor(problem, x_t: Point) -> float:
    """Smallest subproblem residual distinguishable from float noise.

    Evaluating the fixed-point residual involves values at the scale of the
    iterate and of the map, so accuracy below roughly eps times that scale is
    not certifiable.
    """
    scale = 1.0 + float(np.linalg.norm(x_t)) + float(np.linalg.norm(problem.map_value(x_t)))
    return 1e-13 * scale


def solve_subproblem(problem: "ProblemInstance", x_t: Point, r_t: float,
                     H: Metric, config: SolverConfig) -> SubproblemResult:
    """Iterate on the scaled subproblem until the inexactness certificate holds.

    The tolerance is the mode-appropriate certificate level, floored at
    machine-precision scale; optimization mode additionally requires the
    model value not to exceed its value at x_t.
    """
    if not r_t > 0:
        raise ValueError("solve_subproblem requires r_t > 0")
    tol = certificate_tolerance(r_t, config, problem.is_regularized)
    tol_eff = max(tol, numerical_floor(problem, x_t))
    if problem.is_regularized:
        return _solve_optimization(problem, x_t, H, config, tol_eff)
    return _solve_generalized(problem, x_t, H, config, tol_eff)


def _solve_optimization(problem, x_t, H, config, tol_eff) -> SubproblemResult:
    reg = problem.regularized
    g = reg.f_grad(x_t)
    q0 = float(reg.psi_value(x_t))

    _, hatr0 = subproblem_residual(problem, x_t, H, x_t)
    best_x, best_hatr = x_t, hatr0
    if best_hatr <= tol_eff:
        return SubproblemResult(best_x, best_hatr, True, 0, tol_eff)

    tau = 1.0 / H.norm_bound
    theta = min(1.0, math.sqrt(H.mu * tau))
    momentum = (1.0 - theta) / (1.0 + theta)

    z = x_t
    v = x_t
    q_prev = q0
    for k in range(1, config.max_inner + 1):
        z_new = reg.psi_prox(tau, v - tau * (g + H.apply(v - x_t)))
        d = z_new - x_t
        q_new = float(g @ d) + 0.5 * float(d @ H.apply(d)) + float(reg.psi_value(z_new))
        if q_new > q_prev:
            v = z_new  # restart: drop momentum after a model increase
        else:
            v = z_new + momentum * (z_new - z)
        _, hatr = subproblem_residual(problem, x_t, H, z_new)
        if q_new <= q0 and hatr < best_hatr:
            best_x, best_hatr = z_new, hatr
            if best_hatr <= tol_eff:
                return SubproblemResult(best_x, best_hatr, True, k, tol_eff)
        z, q_prev = z_new, q_new

    raise InnerBudgetExhausted(
        SubproblemResult(best_x, best_hatr, True, config.max_inner, tol_eff))


def _fd_resolvent_jacobian(problem, w: Point) -> np.ndarray:
    """Forward-difference linearization of z -> resolvent(1, z) at w."""
    base = problem.resolvent(1.0, w)
    n = w.size
    jac = np.empty((n, n))
    for i in range(n):
        h = 1e-7 * (1.0 + abs(float(w[i])))
        probe = w.copy()
        probe[i] += h
        jac[:, i] = (problem.resolvent(1.0, probe) - base) / h
    return jac


def _solve_generalized(problem, x_t, H, config, tol_eff) -> SubproblemResult:
    a_t = problem.map_value(x_t)
    h_mat = H.dense()
    n = x_t.size
    eye = np.eye(n)

    def operator(z):
        return a_t + h_mat @ (z - x_t)

    def fixed_point_residual(z):
        w = z - operator(z)
        return z - problem.resolvent(1.0, w), w

    z = x_t
    phi, w = fixed_point_residual(z)
    best_x, best_hatr = z, float(np.linalg.norm(phi))
    if best_hatr <= tol_eff:
        return SubproblemResult(best_x, best_hatr, True, 0, tol_eff)

    tau = 0.5 / H.norm_bound
    for k in range(1, config.max_inner + 1):
        stepped = False
        # Semismooth Newton attempt on the fixed-point residual.
        jac_res = _fd_resolvent_jacobian(problem, w)
        newton_mat = eye - jac_res @ (eye - h_mat)
        try:
            dz = np.linalg.solve(newton_mat, -phi)
            z_newton = z + dz
            phi_newton, w_newton = fixed_point_residual(z_newton)
            hatr_newton = float(np.linalg.norm(phi_newton))
            if hatr_newton < best_hatr:
                z, phi, w = z_newton, phi_newton, w_newton
                best_x, best_hatr = z, hatr_newton
                stepped = True
        except np.linalg.LinAlgError:
            pass
        if not stepped:
            # Forward-backward-forward safeguard (convergent for monotone
            # Lipschitz operators, including non-Hermitian scaling).
            t_z = operator(z)
            z_half = problem.resolvent(tau, z - tau * t_z)
            z_next = z_half - tau * (operator(z_half) - t_z)
            phi, w = fixed_point_residual(z_next)
            z = z_next
            hatr = float(np.linalg.norm(phi))
            if hatr < best_hatr:
                best_x, best_hatr = z, hatr
        if best_hatr <= tol_eff:
            return SubproblemResult(best_x, best_hatr, True, k, tol_eff)

    raise InnerBudgetExhausted(
        SubproblemResult(best_x, best_hatr, True, config.max_inner, tol_eff))
