"""Rendering of solver trace CSVs into figures.

The tool is decoupled from the solver library: it consumes only the trace CSV
contract (columns t, r, F, dist, alpha, mu, step_norm, inner_iters, subres,
unit_step; UTF-8; LF; header mandatory). The order fit reproduces the solver
library's definition exactly — least-squares slope of log r_{t+1} against
log r_t over pairs whose predecessor lies in (floor, 1e-2] — so the displayed
slope agrees with the run report.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CSV_COLUMNS = ["t", "r", "F", "dist", "alpha", "mu", "step_norm",
               "inner_iters", "subres", "unit_step"]

KINDS = ("residual", "stepsize", "objective_gap", "order_fit")

DEFAULT_FLOOR = 1e-11
FIT_CEILING = 1e-2


class TraceSchemaError(ValueError):
    """Raised when a CSV does not conform to the trace contract."""


@dataclass(frozen=True)
class TraceData:
    name: str
    t: np.ndarray
    r: np.ndarray
    F: np.ndarray  # NaN where absent
    alpha: np.ndarray
    step_norm: np.ndarray


@dataclass(frozen=True)
class PlotSpec:
    trace_paths: tuple
    kind: str
    output_path: str
    s_overlay: Optional[float] = None
    title: str = ""
    floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        if not self.trace_paths:
            raise TraceSchemaError("at least one trace path is required")
        if self.kind not in KINDS:
            raise TraceSchemaError(f"unknown plot kind {self.kind!r}; "
                                   f"known: {', '.join(KINDS)}")


def load_trace(path) -> TraceData:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceSchemaError(f"{path}: empty file")
        if header != CSV_COLUMNS:
            raise TraceSchemaError(f"{path}: unexpected header {header}")
        rows = list(reader)
    if not rows:
        raise TraceSchemaError(f"{path}: trace has no rows")
    try:
        t = np.array([int(row[0]) for row in rows])
        r = np.array([float(row[1]) for row in rows])
        F = np.array([float(row[2]) if row[2] else math.nan for row in rows])
        alpha = np.array([float(row[4]) for row in rows])
        step = np.array([float(row[6]) for row in rows])
    except (ValueError, IndexError) as exc:
        raise TraceSchemaError(f"{path}: malformed row: {exc}") from exc
    return TraceData(name=path.stem, t=t, r=r, F=F, alpha=alpha, step_norm=step)


def fit_order(r: np.ndarray, floor: float = DEFAULT_FLOOR) -> Optional[dict]:
    """Least-squares convergence order of a residual sequence.

    Mirrors the solver library's estimator: pairs with r_t in (floor, 1e-2]
    and r_{t+1} > 0; needs at least 5 residuals above the floor and 2 pairs.
    Returns {"slope", "intercept", "xs", "ys"} or None.
    """
    r = np.asarray(r, dtype=float)
    if int(np.sum(r > floor)) < 5:
        return None
    xs, ys = [], []
    for i in range(len(r) - 1):
        if floor < r[i] <= FIT_CEILING and r[i + 1] > 0.0:
            xs.append(math.log(r[i]))
            ys.append(math.log(r[i + 1]))
    if len(xs) < 2:
        return None
    slope, intercept = np.polyfit(xs, ys, 1)
    return {"slope": float(slope), "intercept": float(intercept),
            "xs": np.asarray(xs), "ys": np.asarray(ys)}


def _plot_residual(ax, traces):
    for tr in traces:
        mask = tr.r > 0
        ax.semilogy(tr.t[mask], tr.r[mask], marker="o", markersize=3, label=tr.name)
    ax.set_xlabel("outer iteration t")
    ax.set_ylabel("residual $r_t$")


def _plot_stepsize(ax, traces):
    for tr in traces:
        steps = ~((tr.step_norm == 0) & (tr.t == tr.t[-1]))  # drop terminal row
        ax.plot(tr.t[steps], tr.alpha[steps], marker="o", markersize=3,
                label=f"{tr.name} (step length)")
        pos = tr.step_norm > 0
        ax.semilogy(tr.t[pos], tr.step_norm[pos], marker="s", markersize=3,
                    linestyle="--", label=f"{tr.name} (direction norm)")
    ax.set_xlabel("outer iteration t")
    ax.set_ylabel("step size")


def _plot_objective_gap(ax, traces):
    plotted = False
    for tr in traces:
        F = tr.F[~np.isnan(tr.F)]
        if F.size == 0:
            continue
        gap = tr.F - np.nanmin(tr.F)
        mask = ~np.isnan(gap) & (gap > 0)
        if mask.any():
            ax.semilogy(tr.t[mask], gap[mask], marker="o", markersize=3,
                        label=tr.name)
            plotted = True
    if not plotted:
        raise TraceSchemaError("objective_gap plot needs traces with a "
                               "populated F column")
    ax.set_xlabel("outer iteration t")
    ax.set_ylabel("objective gap $F_t - \\min_t F_t$")


def _plot_order_fit(ax, traces, s_overlay, floor):
    any_fit = False
    for tr in traces:
        fit = fit_order(tr.r, floor=floor)
        if fit is None:
            continue
        any_fit = True
        ax.scatter(fit["xs"], fit["ys"], s=18, label=f"{tr.name} pairs")
        grid = np.linspace(fit["xs"].min(), fit["xs"].max(), 10)
        ax.plot(grid, fit["slope"] * grid + fit["intercept"],
                label=f"{tr.name} fit: slope {fit['slope']:.6f}")
    if not any_fit:
        raise TraceSchemaError("order_fit plot needs a trace with enough "
                               "residuals in the fitting window")
    if s_overlay is not None:
        ref_slope = 1.0 + s_overlay
        xs = np.asarray(ax.get_xlim())
        anchor = ax.get_ylim()[1]
        ax.plot(xs, ref_slope * (xs - xs[1]) + anchor, linestyle=":",
                color="gray", label=f"reference order {ref_slope:g}")
    ax.set_xlabel("$\\log r_t$")
    ax.set_ylabel("$\\log r_{t+1}$")


def render(spec: PlotSpec) -> Path:
    """Render a figure from one or more traces; returns the output path."""
    traces = [load_trace(p) for p in spec.trace_paths]
    fig, ax = plt.subplots(figsize=(6, 4))
    if spec.kind == "residual":
        _plot_residual(ax, traces)
    elif spec.kind == "stepsize":
        _plot_stepsize(ax, traces)
    elif spec.kind == "objective_gap":
        _plot_objective_gap(ax, traces)
    else:
        _plot_order_fit(ax, traces, spec.s_overlay, spec.floor)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(spec.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out
