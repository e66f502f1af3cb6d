"""Post-hoc figure generation from solver trace CSVs."""

from .plots import (KINDS, PlotSpec, TraceData, TraceSchemaError, fit_order,
                    load_trace, render)

__all__ = ["KINDS", "PlotSpec", "TraceData", "TraceSchemaError", "fit_order",
           "load_trace", "render"]

__version__ = "0.1.0"
