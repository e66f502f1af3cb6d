"""Convergence-order analysis and trace auditing.

check_region evaluates the two feasibility systems that relate the Jacobian
smoothness exponent p, the error-bound exponent q, and the damping exponent
rho to guaranteed superlinear orders (in the distance and in the residual,
respectively). estimate_rate fits an empirical order to a recorded residual
history. audit_trace replays a trace against the invariants the solvers must
maintain and reports every violated inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (FLAG_METRIC_PSD, ConfigError, IterateTrace, SolverConfig,
                   certificate_tolerance)


@dataclass(frozen=True)
class RegionReport:
    p: float
    q: float
    rho: float
    feasible_q: bool
    feasible_r: bool
    s: Optional[float]
    s_bar: Optional[float]

    def delta_min_ok(self, delta: float) -> bool:
        """Whether a line-search exponent delta is compatible with the region."""
        return delta > 1.0 / self.q - 1.0 and 2.0 + delta >= (1.0 + self.p) * (1.0 + self.q)


def check_region(p: float, q: float, rho: float) -> RegionReport:
    """Feasibility of the distance-order and residual-order systems.

    s (distance order minus one) and s_bar (residual order minus one) are
    reported only when the corresponding system is feasible.
    """
    if not (0.0 < p <= 1.0):
        raise ConfigError(f"p must lie in (0, 1], got {p}")
    if not (0.0 < q <= 1.0):
        raise ConfigError(f"q must lie in (0, 1], got {q}")
    if not (0.0 <= rho <= 1.0):
        raise ConfigError(f"rho must lie in [0, 1], got {rho}")

    t1 = (1.0 + rho) * q
    t2 = (1.0 + p) * q
    t3 = (q + p * q - rho) * (1.0 + p)
    feasible_q = t1 > 1.0 and t2 > 1.0 and t3 > 1.0
    feasible_r = t2 > 1.0 and t3 > 1.0 and rho + q > 1.0 and rho > 0.0

    s = min(t1, t2, t3) - 1.0 if feasible_q else None
    s_bar = min(t2, t3, rho + q, 1.0 + rho) - 1.0 if feasible_r else None
    return RegionReport(p=p, q=q, rho=rho, feasible_q=feasible_q,
                        feasible_r=feasible_r, s=s, s_bar=s_bar)


@dataclass(frozen=True)
class RateEstimate:
    """Least-squares fit of log r_{t+1} against log r_t over a residual window."""

    q_order: float
    window: tuple[int, int]
    residual_of_fit: float
    ratio_sequence: tuple[float, ...]
    n_pairs: int


def estimate_rate(trace: IterateTrace, floor: float = 1e-11,
                  ceiling: float = 1e-2) -> Optional[RateEstimate]:
    """Empirical convergence order of the residual column of a trace.

    Uses consecutive pairs whose predecessor lies in (floor, ceiling] and
    whose successor is positive. Returns None when the trace is too short to
    support a fit (fewer than 5 residuals above the floor or fewer than 3
    usable pairs to determine a slope).
    """
    r = [row.r for row in trace.rows]
    if sum(1 for v in r if v > floor) < 5:
        return None
    xs, ys, idxs = [], [], []
    for t in range(len(r) - 1):
        if floor < r[t] <= ceiling and r[t + 1] > 0.0:
            xs.append(math.log(r[t]))
            ys.append(math.log(r[t + 1]))
            idxs.append(t)
    if len(xs) < 2:
        return None
    slope, intercept = np.polyfit(xs, ys, 1)
    fit = slope * np.asarray(xs) + intercept
    rms = float(np.sqrt(np.mean((np.asarray(ys) - fit) ** 2)))
    ratios = tuple(r[t + 1] / r[t] for t in range(len(r) - 1)
                   if r[t] > floor and r[t + 1] > floor)
    return RateEstimate(q_order=float(slope), window=(idxs[0], idxs[-1] + 1),
                        residual_of_fit=rms, ratio_sequence=ratios,
                        n_pairs=len(xs))


def _violation(rule: str, row: int, lhs: float, rhs: float) -> dict:
    return {"rule": rule, "row": row, "lhs": lhs, "rhs": rhs,
            "margin": lhs - rhs}


def audit_trace(trace: IterateTrace, problem, config: SolverConfig,
                algorithm: str) -> list[dict]:
    """Replay a trace against the solver invariants; returns one record per
    violated inequality (empty list means the trace is clean).

    The checks use only CSV-visible columns plus the problem's Lipschitz
    constant, so a trace read back from disk audits identically to a live one.
    """
    if algorithm not in ("local", "alg1", "alg2", "alg3"):
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    violations: list[dict] = []
    rows = trace.rows
    L = problem.lipschitz()
    regularized = problem.is_regularized

    for i, row in enumerate(rows):
        if row.is_terminal:
            continue
        # Inexactness certificate on the accepted subproblem residual. The
        # solver floors the tolerance at the float-noise scale of the iterate
        # and map values, which are not in the CSV; 1e-11 covers data of
        # magnitude up to ~100.
        tol = certificate_tolerance(row.r, config, regularized)
        rhs = max(tol, 1e-11) + 1e-13
        if row.subres > rhs:
            violations.append(_violation("Certificate", i, row.subres, rhs))
        # Residual-versus-step comparability (damped metric norm bounded by
        # mu + L + 2 for exact Jacobians).
        if row.step_norm > 0.0:
            lhs = (1.0 - config.nu) * row.r
            rhs = (row.mu + L + 2.0) * row.step_norm + 1e-10
            if lhs > rhs:
                violations.append(_violation("LemmaB1", i, lhs, rhs))
        # Metric positive semidefiniteness, when the in-memory flag survives.
        if row.invariant_flags is not None and not row.invariant_flags & FLAG_METRIC_PSD:
            violations.append(_violation("MetricPSD", i, 0.0, 1.0))

    if algorithm in ("alg2", "alg3"):
        for i, row in enumerate(rows):
            if row.is_terminal or row.step_norm == 0.0 or row.alpha == 0.0:
                continue
            floor = config.beta * row.mu / (
                L + 2.0 * config.gamma * row.step_norm**config.delta)
            if row.alpha != 1.0 and row.alpha < min(1.0, floor) - 1e-12:
                violations.append(_violation("StepSizeFloor", i, row.alpha, floor))
        for i in range(len(rows) - 1):
            if rows[i].is_terminal or rows[i].alpha == 0.0:
                continue
            if rows[i].F is not None and rows[i + 1].F is not None:
                if not rows[i + 1].F < rows[i].F:
                    violations.append(
                        _violation("StrictDecrease", i + 1, rows[i + 1].F, rows[i].F))

    if algorithm == "alg1":
        eta = rows[0].r if rows else 0.0
        for i in range(len(rows) - 1):
            if rows[i].is_terminal:
                continue
            if rows[i].unit_step:
                r_next = rows[i + 1].r
                bound = config.sigma * eta + 1e-13
                if r_next > bound:
                    violations.append(_violation("EtaMonotone", i, r_next, bound))
                eta = r_next
    return violations
