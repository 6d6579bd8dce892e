"""Central finite differences for gradients, Jacobians and Hessians."""

from __future__ import annotations

from typing import Callable

import numpy as np

Scalar = Callable[[np.ndarray], float]
VectorFn = Callable[[np.ndarray], np.ndarray]


def _steps(x: np.ndarray, rel_step: float) -> np.ndarray:
    # Per-coordinate step scaled by magnitude so the stencil stays relative.
    return rel_step * (1.0 + np.abs(x))


def central_gradient(f: Scalar, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    xv = np.asarray(x, dtype=float)
    h = _steps(xv, rel_step)
    out = np.empty_like(xv)
    for i in range(xv.size):
        e = np.zeros_like(xv)
        e[i] = h[i]
        out[i] = (f(xv + e) - f(xv - e)) / (2.0 * h[i])
    return out


def central_jacobian(f: VectorFn, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian (m x p) of a vector function."""
    xv = np.asarray(x, dtype=float)
    h = _steps(xv, rel_step)
    cols = []
    for i in range(xv.size):
        e = np.zeros_like(xv)
        e[i] = h[i]
        cols.append((np.asarray(f(xv + e), dtype=float) - np.asarray(f(xv - e), dtype=float)) / (2.0 * h[i]))
    return np.column_stack(cols)


def central_hessian(f: Scalar, x, rel_step: float = 5e-5) -> np.ndarray:
    """Central-difference Hessian of a scalar function (symmetrized stencil)."""
    xv = np.asarray(x, dtype=float)
    p = xv.size
    h = _steps(xv, rel_step)
    H = np.empty((p, p))
    f0 = f(xv)
    for i in range(p):
        ei = np.zeros_like(xv)
        ei[i] = h[i]
        H[i, i] = (f(xv + 2 * ei) - 2.0 * f0 + f(xv - 2 * ei)) / (4.0 * h[i] * h[i])
        for j in range(i + 1, p):
            ej = np.zeros_like(xv)
            ej[j] = h[j]
            v = (
                f(xv + ei + ej)
                - f(xv + ei - ej)
                - f(xv - ei + ej)
                + f(xv - ei - ej)
            ) / (4.0 * h[i] * h[j])
            H[i, j] = v
            H[j, i] = v
    return H
