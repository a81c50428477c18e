# src/utils/quadrature.py
"""Gauss-Kronrod panel quadrature and a checked wrapper around scipy's quad."""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from src.config.constants import GK_MAX_DEPTH, QUAD_LIMIT, QUAD_TOL
from src.utils.errors import QuadratureFailure

logger = logging.getLogger(__name__)

# 15-point Kronrod nodes on [-1, 1] with the embedded 7-point Gauss weights
_NODES = np.array([
    -0.991455371120812639, -0.949107912342758525, -0.864864423359769073,
    -0.741531185599394440, -0.586087235467691130, -0.405845151377397167,
    -0.207784955007898468, 0.0,
    0.207784955007898468, 0.405845151377397167, 0.586087235467691130,
    0.741531185599394440, 0.864864423359769073, 0.949107912342758525,
    0.991455371120812639,
])
_KRONROD = np.array([
    0.022935322010529225, 0.063092092629978553, 0.104790010322250184,
    0.140653259715525919, 0.169004726639267903, 0.190350578064785410,
    0.204432940075298892, 0.209482141084727828,
    0.204432940075298892, 0.190350578064785410, 0.169004726639267903,
    0.140653259715525919, 0.104790010322250184, 0.063092092629978553,
    0.022935322010529225,
])
_GAUSS = np.array([
    0.0, 0.129484966168869693, 0.0, 0.279705391489276668, 0.0,
    0.381830050505118945, 0.0, 0.417959183673469388,
    0.0, 0.381830050505118945, 0.0, 0.279705391489276668, 0.0,
    0.129484966168869693, 0.0,
])

VectorFunction = Callable[[np.ndarray], np.ndarray]


def gauss_kronrod_panels(func: VectorFunction, left, right) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate a vectorized function over many panels at once.

    Args:
        func: Function accepting an array of any shape and returning the same shape
        left: Left panel ends
        right: Right panel ends (may be smaller than left; the sign follows)

    Returns:
        Tuple of Kronrod estimates and |Kronrod - Gauss| error estimates per panel
    """
    left = np.atleast_1d(np.asarray(left, dtype=float))
    right = np.atleast_1d(np.asarray(right, dtype=float))
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    points = mid[:, None] + half[:, None] * _NODES[None, :]
    values = np.asarray(func(points), dtype=float)
    kronrod = (values @ _KRONROD) * half
    gauss = (values @ _GAUSS) * half
    return kronrod, np.abs(kronrod - gauss)


def _refine_panels(func: VectorFunction, left: np.ndarray, right: np.ndarray,
                   tol_density: float, depth: int) -> np.ndarray:
    values, errors = gauss_kronrod_panels(func, left, right)
    # Roundoff floor keeps refinement from chasing machine precision
    allowed = np.maximum(tol_density * np.abs(right - left), 1e3 * np.finfo(float).eps * np.abs(values))
    bad = errors > allowed
    if not np.any(bad):
        return values
    if depth >= GK_MAX_DEPTH:
        worst = int(np.argmax(errors - allowed))
        raise QuadratureFailure(
            f"Panel [{left[worst]:.6g}, {right[worst]:.6g}] did not converge "
            f"(error estimate {errors[worst]:.3g})"
        )
    mid = 0.5 * (left[bad] + right[bad])
    n_bad = int(bad.sum())
    halves = _refine_panels(
        func,
        np.concatenate([left[bad], mid]),
        np.concatenate([mid, right[bad]]),
        tol_density,
        depth + 1,
    )
    values = values.copy()
    values[bad] = halves[:n_bad] + halves[n_bad:]
    return values


def cumulative_integral(func: VectorFunction, grid: Sequence[float], tol: float = QUAD_TOL) -> np.ndarray:
    """
    Running integral of func from grid[0] to every grid node.

    Each panel is refined by bisection until its error estimate falls below its
    share of tol, so the total absolute error stays below tol.

    Args:
        func: Vectorized integrand
        grid: Increasing nodes
        tol: Absolute tolerance for the whole range

    Returns:
        Array F with F[0] = 0 and F[k] = integral over [grid[0], grid[k]]
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        return np.zeros_like(grid)
    span = grid[-1] - grid[0]
    panels = _refine_panels(func, grid[:-1], grid[1:], tol / span, 0)
    return np.concatenate([[0.0], np.cumsum(panels)])


def integrate(func: Callable[[float], float], a: float, b: float, tol: float = QUAD_TOL,
              points: Optional[Sequence[float]] = None) -> float:
    """
    Adaptive quadrature of a scalar function with an explicit failure signal.

    Args:
        func: Scalar integrand
        a: Lower limit
        b: Upper limit (may be below a)
        tol: Absolute and relative tolerance
        points: Interior break points (kinks) to split at

    Returns:
        The integral value

    Raises:
        QuadratureFailure: if the integrator reports non-convergence
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    breaks = [a]
    if points is not None:
        breaks.extend(sorted(p for p in points if a < p < b))
    breaks.append(b)

    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        result = quad(func, lo, hi, epsabs=tol, epsrel=tol, limit=QUAD_LIMIT, full_output=1)
        value, abserr = result[0], result[1]
        # quad appends a message only when it flags a problem
        if len(result) > 3 and abserr > 10.0 * tol * max(1.0, abs(value)):
            raise QuadratureFailure(
                f"Integral over [{lo:.6g}, {hi:.6g}] did not converge: {result[3]} (error {abserr:.3g})"
            )
        total += value
    return sign * total
