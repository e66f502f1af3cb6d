"""Command-line front end.

Subcommands:
  run           execute an experiment described by a JSON config, writing a
                trace CSV, a residual-history figure next to it, and a JSON
                report (exit 2 when the built-in audit finds violations)
  check-region  evaluate the convergence-order feasibility systems for
                exponents p q rho (exit 0 both/distance system feasible,
                3 residual system only, 4 neither)
  audit         re-check a previously written trace CSV against the
                invariants implied by a config (exit 2 on violations)

Exit code 1 signals configuration, schema, or runtime errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import audit_trace, check_region, estimate_rate
from .core import (ConfigError, IterateTrace, SolverConfig, TraceError,
                   make_config)
from .operators import log_modulus, power_modulus
from .problems import make_problem
from .solvers import ALGORITHMS

_SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverConfig)} - {"modulus", "damping_mode"}


def _require_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _build_solver_config(spec: dict) -> SolverConfig:
    _require_keys(spec, _SOLVER_KEYS | {"modulus"}, "solver")
    params = dict(spec)
    modulus_spec = params.pop("modulus", None)
    if modulus_spec is not None:
        if modulus_spec == "log":
            params["modulus"] = log_modulus
        elif isinstance(modulus_spec, dict) and set(modulus_spec) == {"power"}:
            params["modulus"] = power_modulus(float(modulus_spec["power"]))
        else:
            raise ConfigError(f"modulus must be \"log\" or {{\"power\": a}}, "
                              f"got {modulus_spec!r}")
        params["damping_mode"] = "modulus"
    return make_config(**params)


def _suffixed(path: str, index: int, repeat: int) -> Path:
    p = Path(path)
    if repeat == 1:
        return p
    return p.with_name(f"{p.stem}_{index}{p.suffix}")


def _render_figure(trace: IterateTrace, out_path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    r = [row.r for row in trace.rows if row.r > 0]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(range(len(r)), r, marker="o", markersize=3)
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("residual norm")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def _rate_payload(rate) -> dict | None:
    if rate is None:
        return None
    return {"q_order": rate.q_order, "window": list(rate.window),
            "residual_of_fit": rate.residual_of_fit, "n_pairs": rate.n_pairs}


def _run_single(cfg: dict, index: int, repeat: int) -> int:
    problem_spec = cfg["problem"]
    seed = int(problem_spec.get("seed", 0)) + index
    problem = make_problem(problem_spec["name"],
                           problem_spec.get("parameters"), seed=seed)
    algorithm = cfg["algorithm"]
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; known: "
                          f"{sorted(ALGORITHMS)}")
    if not problem.is_regularized and algorithm != "local":
        raise ConfigError(f"algorithm {algorithm!r} uses a line search, which "
                          "requires objective values; generalized equations "
                          "support only 'local'")
    config = _build_solver_config(cfg.get("solver", {}))
    if "x0" in cfg:
        x0 = np.asarray(cfg["x0"], dtype=float)
        if x0.shape != (problem.dim,):
            raise ConfigError(f"x0 must have length {problem.dim}, got {x0.shape}")
    else:
        x0 = problem.default_x0

    result = ALGORITHMS[algorithm](problem, x0, config)

    output = cfg["output"]
    trace_path = _suffixed(output["trace_path"], index, repeat)
    trace_path.parent.mkdir(parents=True, exist_ok=True)
    result.trace.write_csv(trace_path)
    _render_figure(result.trace, trace_path.with_suffix(".png"))

    rate = estimate_rate(result.trace)
    violations = audit_trace(result.trace, problem, config, algorithm)
    final_row = result.trace.rows[-1]
    report = {
        "problem": problem.name,
        "algorithm": algorithm,
        "seed": seed,
        "termination": result.termination.value,
        "final_r": final_row.r,
        "final_F": final_row.F,
        "iterations": sum(1 for row in result.trace.rows if not row.is_terminal),
        "rate": _rate_payload(rate),
        "audit": violations,
    }
    report_path = _suffixed(output["report_path"], index, repeat)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")
    print(f"{problem.name}/{algorithm}: {result.termination.value}, "
          f"final residual {final_row.r:.3e}, trace -> {trace_path}")
    return 2 if violations else 0


def _cmd_run(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    _require_keys(cfg, {"problem", "algorithm", "solver", "output", "repeat", "x0"},
                  "config")
    _require_keys(cfg["problem"], {"name", "parameters", "seed"}, "problem")
    _require_keys(cfg["output"], {"trace_path", "report_path"}, "output")
    repeat = int(cfg.get("repeat", 1))
    if repeat < 1:
        raise ConfigError(f"repeat must be >= 1, got {repeat}")
    worst = 0
    for i in range(repeat):
        worst = max(worst, _run_single(cfg, i, repeat))
    return worst


def _cmd_check_region(args) -> int:
    values = {}
    for label, text in (("p", args.p), ("q", args.q), ("rho", args.rho),
                        ("delta", args.delta)):
        if text is None:
            values[label] = None
            continue
        try:
            values[label] = float(text)
        except ValueError:
            print(f"error: {label} must be a number, got {text!r}", file=sys.stderr)
            return 1
    report = check_region(values["p"], values["q"], values["rho"])
    print(f"p={report.p} q={report.q} rho={report.rho}")
    print(f"distance-order system feasible: {report.feasible_q}"
          + (f" (order 1+s = {1.0 + report.s:.6g})" if report.s is not None else ""))
    print(f"residual-order system feasible: {report.feasible_r}"
          + (f" (order 1+s_bar = {1.0 + report.s_bar:.6g})" if report.s_bar is not None else ""))
    if values["delta"] is not None:
        print(f"delta={values['delta']} admissible: {report.delta_min_ok(values['delta'])}")
    if report.feasible_q:
        return 0
    return 3 if report.feasible_r else 4


def _cmd_audit(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    _require_keys(cfg, {"problem", "algorithm", "solver", "output", "repeat", "x0"},
                  "config")
    problem_spec = cfg["problem"]
    problem = make_problem(problem_spec["name"], problem_spec.get("parameters"),
                           seed=int(problem_spec.get("seed", 0)))
    config = _build_solver_config(cfg.get("solver", {}))
    trace = IterateTrace.read_csv(args.trace)
    violations = audit_trace(trace, problem, config, cfg["algorithm"])
    for v in violations:
        print(f"{v['rule']} at row {v['row']}: lhs={v['lhs']:.6e} "
              f"rhs={v['rhs']:.6e} margin={v['margin']:.3e}")
    print(f"{len(violations)} violation(s) in {args.trace}")
    return 2 if violations else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="proxnewton",
        description="Damped inexact proximal-Newton experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to config JSON")
    p_run.set_defaults(func=_cmd_run)

    p_region = sub.add_parser("check-region",
                              help="evaluate order feasibility for p, q, rho")
    p_region.add_argument("--p", required=True, help="Jacobian smoothness exponent")
    p_region.add_argument("--q", required=True, help="error-bound exponent")
    p_region.add_argument("--rho", required=True, help="damping exponent")
    p_region.add_argument("--delta", help="optionally test a line-search exponent")
    p_region.set_defaults(func=_cmd_check_region)

    p_audit = sub.add_parser("audit", help="re-audit a trace CSV")
    p_audit.add_argument("--config", required=True, help="path to config JSON")
    p_audit.add_argument("--trace", required=True, help="path to trace CSV")
    p_audit.set_defaults(func=_cmd_audit)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
