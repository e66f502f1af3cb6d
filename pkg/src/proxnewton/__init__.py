"""Damped inexact proximal-Newton solvers for degenerate regularized
optimization and generalized equations, with rate analysis and trace auditing."""

from .analysis import (RateEstimate, RegionReport, audit_trace, check_region,
                       estimate_rate)
from .core import (ConfigError, IterateTrace, MonotoneOperator,
                   ProblemMetadata, RegularizedProblem, SmoothMap,
                   SolverConfig, TraceError, TraceRow, certificate_tolerance,
                   make_config)
from .operators import (Metric, build_metric, log_modulus, power_modulus,
                        prox_gradient, residual_fb, subproblem_residual)
from .problems import (REGISTRY, ProblemInstance, make_box_ge, make_holder,
                       make_lasso_degenerate, make_nonmonotone_ge,
                       make_problem, make_quadratic_singular,
                       min_norm_subgradient, soft_threshold)
from .solvers import (ALGORITHMS, DirectionProvider, RunResult, Termination,
                      run_alg1, run_alg2, run_alg3, run_local)
from .subproblem import (InnerBudgetExhausted, SubproblemResult, model_value,
                         solve_subproblem)

__all__ = [
    "ALGORITHMS", "ConfigError", "DirectionProvider", "InnerBudgetExhausted",
    "IterateTrace", "Metric", "MonotoneOperator", "ProblemInstance",
    "ProblemMetadata", "REGISTRY", "RateEstimate", "RegionReport",
    "RegularizedProblem", "RunResult", "SmoothMap", "SolverConfig",
    "SubproblemResult", "Termination", "TraceError", "TraceRow",
    "audit_trace", "build_metric", "certificate_tolerance", "check_region",
    "estimate_rate", "log_modulus", "make_box_ge", "make_config",
    "make_holder", "make_lasso_degenerate", "make_nonmonotone_ge",
    "make_problem", "make_quadratic_singular", "min_norm_subgradient",
    "model_value", "power_modulus", "prox_gradient", "residual_fb",
    "run_alg1", "run_alg2", "run_alg3", "run_local", "soft_threshold",
    "solve_subproblem", "subproblem_residual",
]

__version__ = "0.1.0"
