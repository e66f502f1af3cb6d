"""Residual and proximal primitives: the forward-backward residual, the
subproblem residual, the prox-gradient mapping, and scaled-metric construction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Optional

import numpy as np

from .core import ConfigError, Point, SolverConfig

if TYPE_CHECKING:  # pragma: no cover
    from .problems import ProblemInstance


@dataclass(frozen=True)
class Metric:
    """The scaling operator mu*Id + J used by one outer iteration.

    J may be non-Hermitian; only its symmetric part needs to be positive
    semidefinite. norm_bound is an upper estimate of the operator norm of
    mu*Id + J, used for inner step sizes (overestimation is safe).
    """

    mu: float
    j_op: np.ndarray
    norm_bound: float

    def apply(self, v: Point) -> Point:
        return self.mu * v + self.j_op @ v

    def dense(self) -> np.ndarray:
        return self.mu * np.eye(self.j_op.shape[0]) + self.j_op

    def psd_symmetric_part(self, n_samples: int = 8, seed: int = 0) -> bool:
        """Sampled check that <v, J v> >= -1e-10 ||v||^2."""
        rng = np.random.default_rng(seed)
        for _ in range(n_samples):
            v = rng.standard_normal(self.j_op.shape[0])
            if float(v @ (self.j_op @ v)) < -1e-10 * float(v @ v):
                return False
        return True


def residual_fb(problem: "ProblemInstance", x: Point) -> tuple[Point, float]:
    """Forward-backward step R(x) = x - resolvent(1, x - A(x)) and its norm."""
    R = x - problem.resolvent(1.0, x - problem.map_value(x))
    return R, float(np.linalg.norm(R))


def subproblem_residual(problem: "ProblemInstance", x_t: Point, H: Metric,
                        x: Point) -> tuple[Point, float]:
    """Residual of the scaled subproblem at x; coincides with R at x = x_t
    and vanishes exactly at the exact subproblem solution."""
    w = x - H.apply(x - x_t) - problem.map_value(x_t)
    hatR = x - problem.resolvent(1.0, w)
    return hatR, float(np.linalg.norm(hatR))


def prox_gradient(problem, x: Point) -> tuple[Point, Point]:
    """Prox-gradient mapping G_L(x) and the post-step point x - G_L(x)/L.

    problem is a RegularizedProblem (or a ProblemInstance wrapping one).
    """
    reg = getattr(problem, "regularized", None) or problem
    L = reg.lipschitz_L
    xbar = reg.psi_prox(1.0 / L, x - reg.f_grad(x) / L)
    G = L * (x - xbar)
    return G, xbar


def _power_iteration_norm(mat: np.ndarray, iters: int = 20) -> float:
    """Largest singular value of mat, estimated by power iteration on mat^T mat."""
    n = mat.shape[0]
    v = np.ones(n) / math.sqrt(n)
    est = 0.0
    for _ in range(iters):
        w = mat.T @ (mat @ v)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        est = math.sqrt(norm_w)
    return est


def build_metric(problem: "ProblemInstance", x_t: Point, r_t: float,
                 config: SolverConfig,
                 perturbation: Optional[Callable[[Point, float], np.ndarray]] = None,
                 ) -> Metric:
    """Assemble mu_t*Id + J_t at x_t.

    J_t defaults to the exact Jacobian (Hessian, symmetrized, in optimization
    mode). perturbation(x_t, r_t), when given, returns an additive matrix used
    to exercise inexact-Jacobian behavior.
    """
    if not r_t > 0:
        raise ValueError("build_metric requires r_t > 0")
    mu = config.damping(r_t)
    j = problem.jacobian(x_t)
    if perturbation is not None:
        j = j + perturbation(x_t, r_t)
    h = mu * np.eye(j.shape[0]) + j
    bound = 1.1 * _power_iteration_norm(h)
    bound = max(bound, mu)
    return Metric(mu=mu, j_op=j, norm_bound=bound)


def log_modulus(s: float) -> float:
    """Logarithmic modulus 1 / (1 + ln(1 + 1/s)), extended by 0 at s = 0."""
    if s <= 0.0:
        return 0.0
    return 1.0 / (1.0 + math.log1p(1.0 / s))


def power_modulus(a: float) -> Callable[[float], float]:
    """Power modulus s -> s^a for a in (0, 1]."""
    if not 0 < a <= 1:
        raise ConfigError(f"power modulus exponent must lie in (0, 1], got {a}")

    def omega(s: float) -> float:
        return 0.0 if s <= 0.0 else s**a

    return omega
