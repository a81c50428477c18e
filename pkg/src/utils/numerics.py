# src/utils/numerics.py
"""Finite differences and sampled checks used by the diagnostics."""

from typing import Callable, List, Tuple

import numpy as np


def central_difference(func: Callable[[float], float], x: float, h: float) -> float:
    """Second-order centered first derivative."""
    return (func(x + h) - func(x - h)) / (2.0 * h)


def second_difference(func: Callable[[float], float], x: float, h: float) -> float:
    """Second-order centered second derivative."""
    return (func(x + h) - 2.0 * func(x) + func(x - h)) / (h * h)


def backward_difference(func: Callable[[float], float], x: float, h: float) -> float:
    """Second-order one-sided first derivative using points at and below x."""
    return (3.0 * func(x) - 4.0 * func(x - h) + func(x - 2.0 * h)) / (2.0 * h)


def forward_difference(func: Callable[[float], float], x: float, h: float) -> float:
    """Second-order one-sided first derivative using points at and above x."""
    return (-3.0 * func(x) + 4.0 * func(x + h) - func(x + 2.0 * h)) / (2.0 * h)


def strictly_increasing(values) -> bool:
    values = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(values) > 0.0))


def monotone_violations(values: np.ndarray, axis: int, increasing: bool, slack: float,
                        mask: np.ndarray) -> List[Tuple[int, int]]:
    """
    Neighbor pairs along an axis that break the requested monotonicity.

    Args:
        values: 2D table
        axis: 0 compares rows, 1 compares columns
        increasing: Direction required along the axis
        slack: Tolerated violation
        mask: Cells that take part in the comparison (both neighbors must be set)

    Returns:
        List of (row, column) indices of the first cell of each offending pair
    """
    diff = np.diff(values, axis=axis)
    pair_mask = mask[:-1, :] & mask[1:, :] if axis == 0 else mask[:, :-1] & mask[:, 1:]
    bad = (diff < -slack) if increasing else (diff > slack)
    rows, cols = np.nonzero(bad & pair_mask)
    return list(zip(rows.tolist(), cols.tolist()))
