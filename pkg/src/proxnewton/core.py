"""Shared domain types: problem callbacks, solver configuration, and iteration traces.

Vectors ("points") are plain 1-D numpy arrays of float64. All types here are
immutable after construction; traces are built single-writer by a solver run.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Point = np.ndarray


class ConfigError(ValueError):
    """Raised when a solver configuration violates a parameter range."""


class TraceError(ValueError):
    """Raised on malformed traces (bad row order, schema mismatch on read)."""


@dataclass(frozen=True)
class SmoothMap:
    """A continuously differentiable map with a local Lipschitz bound on its norm."""

    eval: Callable[[Point], Point]
    jacobian: Callable[[Point], np.ndarray]
    lipschitz_bound: float

    def __post_init__(self):
        if not self.lipschitz_bound > 0:
            raise ConfigError("lipschitz_bound must be positive")


@dataclass(frozen=True)
class MonotoneOperator:
    """A maximal monotone operator, represented through its resolvent.

    resolvent(tau, z) must compute (Id + tau*B)^{-1}(z); it is single-valued
    and firmly nonexpansive for any tau > 0.
    """

    resolvent: Callable[[float, Point], Point]


@dataclass(frozen=True)
class RegularizedProblem:
    """Composite objective f + psi with smooth convex f and convex closed psi.

    f_hess may be None when update directions come from an external provider.
    psi_prox(tau, z) computes the proximal point of tau*psi at z.
    """

    f_value: Callable[[Point], float]
    f_grad: Callable[[Point], Point]
    f_hess: Optional[Callable[[Point], np.ndarray]]
    psi_value: Callable[[Point], float]
    psi_prox: Callable[[float, Point], Point]
    lipschitz_L: float
    psi_is_zero: bool = False

    def __post_init__(self):
        if not self.lipschitz_L > 0:
            raise ConfigError("lipschitz_L must be positive")

    def objective(self, x: Point) -> float:
        return float(self.f_value(x)) + float(self.psi_value(x))


@dataclass(frozen=True)
class ProblemMetadata:
    """Optional ground-truth facts about a problem instance.

    holder_p / holder_zeta describe the smoothness order of the Jacobian near
    solutions; eb_q / eb_kappa the local error-bound exponent and constant.
    dist_oracle, when present, returns the exact distance to the solution set.
    """

    holder_p: Optional[float] = None
    holder_zeta: Optional[float] = None
    eb_q: Optional[float] = None
    eb_kappa: Optional[float] = None
    dist_oracle: Optional[Callable[[Point], float]] = None
    f_star: Optional[float] = None


def _check_modulus(omega: Callable[[float], float]) -> None:
    """Reject moduli that fail to vanish at zero or break monotonicity or
    subadditivity on a logarithmic test grid."""
    if abs(omega(0.0)) > 1e-12:
        raise ConfigError("modulus must satisfy omega(0) = 0")
    grid = np.logspace(-12, 2, 40)
    vals = np.array([omega(float(s)) for s in grid])
    if np.any(vals < -1e-15):
        raise ConfigError("modulus must be nonnegative")
    if np.any(np.diff(vals) < -1e-12):
        raise ConfigError("modulus must be nondecreasing")
    for a in grid[::4]:
        for b in grid[::4]:
            if omega(float(a + b)) > omega(float(a)) + omega(float(b)) + 1e-10:
                raise ConfigError("modulus must be subadditive")


@dataclass(frozen=True)
class SolverConfig:
    """All outer-loop parameters, tolerances, and budgets.

    Ranges are enforced at construction; use make_config for defaults.
    """

    c: float = 1.0
    rho: float = 0.5
    nu: float = 0.1
    theta: float = 0.5
    beta: float = 0.5
    gamma: float = 1e-3
    delta: float = 2.0
    sigma: float = 0.5
    c_bar: Optional[float] = None
    max_outer: int = 200
    max_inner: int = 400_000
    r_tol: float = 1e-12
    damping_mode: str = "power"
    modulus: Optional[Callable[[float], float]] = None
    accept_min_variant: bool = False

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if not 0 < self.rho <= 1:
            raise ConfigError(f"rho must lie in (0, 1], got {self.rho}")
        if not 0 <= self.nu < 1:
            raise ConfigError(f"nu must lie in [0, 1), got {self.nu}")
        if not self.theta >= self.rho:
            raise ConfigError(f"theta must be >= rho, got theta={self.theta} rho={self.rho}")
        if not 0 < self.beta < 1:
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if not 0 < self.gamma < 1:
            raise ConfigError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.delta >= 0:
            raise ConfigError(f"delta must be nonnegative, got {self.delta}")
        if not 0 < self.sigma < 1:
            raise ConfigError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not self.r_tol > 0:
            raise ConfigError(f"r_tol must be positive, got {self.r_tol}")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ConfigError("iteration budgets must be at least 1")
        if self.damping_mode not in ("power", "modulus"):
            raise ConfigError(f"unknown damping_mode {self.damping_mode!r}")
        if self.damping_mode == "modulus":
            if self.modulus is None:
                raise ConfigError("damping_mode='modulus' requires a modulus function")
            _check_modulus(self.modulus)

    def damping(self, r: float) -> float:
        """Damping coefficient at residual level r (power or modulus rule)."""
        if self.damping_mode == "modulus":
            return self.c * self.modulus(r)
        return self.c * r**self.rho


def make_config(**params) -> SolverConfig:
    """Build a validated SolverConfig; theta defaults to rho when omitted."""
    if "theta" not in params and "rho" in params:
        params["theta"] = params["rho"]
    return SolverConfig(**params)


def certificate_tolerance(r: float, config: SolverConfig, regularized: bool) -> float:
    """Inexactness tolerance on the subproblem residual at residual level r.

    Optimization mode caps the power rule at nu*r; generalized-equation mode
    uses nu*r^(1+rho). nu = 0 requests an exact solve up to a machine surrogate.
    """
    if config.nu == 0.0:
        return max(1e-14, 1e-14 * r)
    if config.damping_mode == "modulus":
        return config.nu * config.modulus(r) * r
    base = r ** (1.0 + config.rho)
    return config.nu * (min(base, r) if regularized else base)


# Bits recorded in per-row invariant flags (in-memory only, never serialized).
FLAG_METRIC_PSD = 1
FLAG_RESIDUAL_BOUND = 2
FLAG_CERTIFICATE = 4


@dataclass(frozen=True)
class TraceRow:
    """One outer iteration: the state at x_t and the step taken from it.

    A solver appends a final zero-step row recording the terminal point, so
    the r column carries the full residual history of the run.
    """

    t: int
    r: float
    F: Optional[float]
    dist: Optional[float]
    alpha: float
    mu: float
    step_norm: float
    inner_iters: int
    subres: float
    unit_step: bool
    invariant_flags: Optional[int] = None
    h_norm: Optional[float] = None

    @property
    def is_terminal(self) -> bool:
        return self.step_norm == 0.0 and self.inner_iters == 0 and self.subres == 0.0


CSV_COLUMNS = ["t", "r", "F", "dist", "alpha", "mu", "step_norm",
               "inner_iters", "subres", "unit_step"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _parse_opt_float(text: str) -> Optional[float]:
    return None if text == "" else float(text)


class IterateTrace:
    """Append-only per-iteration record of a single solver run."""

    def __init__(self):
        self.rows: list[TraceRow] = []

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def append(self, row: TraceRow) -> None:
        expected = self.rows[-1].t + 1 if self.rows else 0
        if row.t != expected:
            raise TraceError(f"row t={row.t} out of order, expected {expected}")
        if not math.isfinite(row.r):
            raise TraceError(f"non-finite residual at t={row.t}")
        self.rows.append(row)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([row.r for row in self.rows])

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow([
                    _fmt(row.t), _fmt(row.r), _fmt(row.F), _fmt(row.dist),
                    _fmt(row.alpha), _fmt(row.mu), _fmt(row.step_norm),
                    _fmt(row.inner_iters), _fmt(row.subres), _fmt(row.unit_step),
                ])

    @classmethod
    def read_csv(cls, path) -> "IterateTrace":
        trace = cls()
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise TraceError(f"{path}: empty trace file")
            if header != CSV_COLUMNS:
                raise TraceError(f"{path}: unexpected header {header}")
            for line in reader:
                if len(line) != len(CSV_COLUMNS):
                    raise TraceError(f"{path}: malformed row {line}")
                try:
                    row = TraceRow(
                        t=int(line[0]),
                        r=float(line[1]),
                        F=_parse_opt_float(line[2]),
                        dist=_parse_opt_float(line[3]),
                        alpha=float(line[4]),
                        mu=float(line[5]),
                        step_norm=float(line[6]),
                        inner_iters=int(line[7]),
                        subres=float(line[8]),
                        unit_step={"true": True, "false": False}[line[9]],
                    )
                except (ValueError, KeyError) as exc:
                    raise TraceError(f"{path}: malformed row {line}: {exc}") from exc
                trace.append(row)
        return trace
