"""Central finite-difference oracles used by problem self-checks and tests."""

from __future__ import annotations

from typing import Callable

import numpy as np


def fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central-difference gradient with step 1e-6 * (1 + ||x||)."""
    h = 1e-6 * (1.0 + np.linalg.norm(x))
    g = np.zeros_like(x, dtype=float)
    for i in range(x.size):
        e = np.zeros_like(x, dtype=float)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def fd_jacobian(A: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian with step 1e-6 * (1 + ||x||)."""
    h = 1e-6 * (1.0 + np.linalg.norm(x))
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x, dtype=float)
        e[i] = h
        cols.append((np.asarray(A(x + e), dtype=float) - np.asarray(A(x - e), dtype=float)) / (2.0 * h))
    return np.stack(cols, axis=1)


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    return float(np.linalg.norm(approx - exact) / max(1.0, np.linalg.norm(exact)))
