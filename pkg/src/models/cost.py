# src/models/cost.py
"""Running costs c(i, x, s) of the range problem."""

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import pandas as pd
from scipy.interpolate import PchipInterpolator, RegularGridInterpolator

CostCallable = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
UnivariateCallable = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SeparableParts:
    """c(i, x, s) = c2(s) - c1(i), both parts increasing."""
    c1: UnivariateCallable
    c1_prime: UnivariateCallable
    c2: UnivariateCallable
    c2_prime: UnivariateCallable


@dataclass(frozen=True)
class CostFunction:
    """A running cost with its partial derivatives in i and s."""
    c: CostCallable
    dc_di: CostCallable
    dc_ds: CostCallable
    separable: Optional[SeparableParts] = None
    name: str = "cost"

    def __call__(self, i, x, s):
        return self.c(i, x, s)

    @property
    def is_separable(self) -> bool:
        return self.separable is not None


def _full(value: float) -> CostCallable:
    return lambda i, x, s: value * np.ones(np.broadcast(np.asarray(i), np.asarray(x), np.asarray(s)).shape)


def constant_cost(c: float) -> CostFunction:
    """c(i, x, s) = c."""
    if c <= 0.0:
        raise ValueError(f"cost constant must be positive, got {c}")
    parts = SeparableParts(
        c1=lambda i: np.zeros_like(np.asarray(i, dtype=float)),
        c1_prime=lambda i: np.zeros_like(np.asarray(i, dtype=float)),
        c2=lambda s: c * np.ones_like(np.asarray(s, dtype=float)),
        c2_prime=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
    )
    return CostFunction(c=_full(c), dc_di=_full(0.0), dc_ds=_full(0.0), separable=parts,
                        name=f"constant({c:g})")


def detection_cost(c: float) -> CostFunction:
    """
    c(i, x, s) = c (s - i), the cost a detection problem with constant c induces
    on the range process X = 2F(Z) - 1.
    """
    if c <= 0.0:
        raise ValueError(f"cost constant must be positive, got {c}")
    parts = SeparableParts(
        c1=lambda i: c * np.asarray(i, dtype=float),
        c1_prime=lambda i: c * np.ones_like(np.asarray(i, dtype=float)),
        c2=lambda s: c * np.asarray(s, dtype=float),
        c2_prime=lambda s: c * np.ones_like(np.asarray(s, dtype=float)),
    )
    return CostFunction(
        c=lambda i, x, s: c * (np.asarray(s, dtype=float) - np.asarray(i, dtype=float)) + 0.0 * np.asarray(x),
        dc_di=_full(-c),
        dc_ds=_full(c),
        separable=parts,
        name=f"detection({c:g})",
    )


def separable_cost(c1: UnivariateCallable, c1_prime: UnivariateCallable,
                   c2: UnivariateCallable, c2_prime: UnivariateCallable,
                   name: str = "separable") -> CostFunction:
    """c(i, x, s) = c2(s) - c1(i) from its two increasing parts."""
    parts = SeparableParts(c1=c1, c1_prime=c1_prime, c2=c2, c2_prime=c2_prime)

    def shape(i, x, s):
        return np.broadcast(np.asarray(i), np.asarray(x), np.asarray(s)).shape

    return CostFunction(
        c=lambda i, x, s: np.asarray(c2(s), dtype=float) - np.asarray(c1(i), dtype=float) + np.zeros(shape(i, x, s)),
        dc_di=lambda i, x, s: -np.asarray(c1_prime(i), dtype=float) + np.zeros(shape(i, x, s)),
        dc_ds=lambda i, x, s: np.asarray(c2_prime(s), dtype=float) + np.zeros(shape(i, x, s)),
        separable=parts,
        name=name,
    )


def position_cost(c: UnivariateCallable, name: str = "position") -> CostFunction:
    """c(i, x, s) = c(x): no dependence on the running extrema."""
    def zero(i, x, s):
        return np.zeros(np.broadcast(np.asarray(i), np.asarray(x), np.asarray(s)).shape)

    return CostFunction(
        c=lambda i, x, s: np.asarray(c(x), dtype=float) + zero(i, x, s),
        dc_di=zero,
        dc_ds=zero,
        name=name,
    )


def check_cost(cost: CostFunction, truncation, n_samples: int = 9, rel_tol: float = 1e-6) -> List[str]:
    """
    Sampled check of positivity, monotonicity and partial-derivative consistency.

    Args:
        cost: Cost to check
        truncation: Interval (lo, hi) to sample
        n_samples: Samples per axis
        rel_tol: Relative tolerance of the centered-difference comparison

    Returns:
        List of human-readable problems; empty when every check passes
    """
    lo, hi = truncation
    nodes = np.linspace(lo, hi, n_samples)
    problems: List[str] = []
    h = 1e-6 * max(1.0, hi - lo)
    for a, i in enumerate(nodes):
        for s in nodes[a + 1:]:
            for x in np.linspace(i, s, 3):
                value = float(cost(i, x, s))
                if value <= 0.0:
                    problems.append(f"c({i:.4g},{x:.4g},{s:.4g}) = {value:.3g} is not positive")
                di = float(cost.dc_di(i, x, s))
                ds = float(cost.dc_ds(i, x, s))
                if di > 0.0:
                    problems.append(f"dc/di({i:.4g},{x:.4g},{s:.4g}) = {di:.3g} > 0")
                if ds < 0.0:
                    problems.append(f"dc/ds({i:.4g},{x:.4g},{s:.4g}) = {ds:.3g} < 0")
                fd_i = (float(cost(i + h, x, s)) - float(cost(i - h, x, s))) / (2 * h)
                fd_s = (float(cost(i, x, s + h)) - float(cost(i, x, s - h))) / (2 * h)
                scale = max(1.0, abs(value))
                if abs(fd_i - di) > rel_tol * scale or abs(fd_s - ds) > rel_tol * scale:
                    problems.append(f"partials at ({i:.4g},{x:.4g},{s:.4g}) disagree with centered differences")
                if cost.separable is not None:
                    split = float(cost.separable.c2(s)) - float(cost.separable.c1(i))
                    if abs(split - value) > 1e-12 * scale:
                        problems.append(f"separable parts do not reproduce c at ({i:.4g},{x:.4g},{s:.4g})")
    return problems


def cost_from_table(frame: pd.DataFrame, name: str = "table") -> CostFunction:
    """
    Cost read from a table.

    A frame with columns x, c1, c2 gives the separable cost c2(s) - c1(i) with
    PCHIP parts. A frame with columns i, x, s, c on a full regular grid gives a
    general cost, linearly interpolated, with centered-difference partials.
    """
    columns = set(frame.columns)
    if {"x", "c1", "c2"} <= columns:
        frame = frame.sort_values("x")
        nodes = frame["x"].to_numpy(dtype=float)
        c1 = PchipInterpolator(nodes, frame["c1"].to_numpy(dtype=float))
        c2 = PchipInterpolator(nodes, frame["c2"].to_numpy(dtype=float))
        return separable_cost(c1, c1.derivative(), c2, c2.derivative(), name=name)
    if not {"i", "x", "s", "c"} <= columns:
        raise ValueError("cost table needs columns x, c1, c2 or i, x, s, c")

    axes = tuple(np.unique(frame[col].to_numpy(dtype=float)) for col in ("i", "x", "s"))
    shape = tuple(axis.size for axis in axes)
    if len(frame) != int(np.prod(shape)):
        raise ValueError(f"general cost table must fill a regular grid of shape {shape}")
    ordered = frame.sort_values(["i", "x", "s"])
    table = RegularGridInterpolator(axes, ordered["c"].to_numpy(dtype=float).reshape(shape),
                                    bounds_error=False, fill_value=None)
    h = 1e-6 * max(1.0, float(axes[0][-1] - axes[0][0]))

    def c(i, x, s):
        i_arr, x_arr, s_arr = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (i, x, s)))
        points = np.stack([i_arr.ravel(), x_arr.ravel(), s_arr.ravel()], axis=-1)
        values = table(points).reshape(i_arr.shape)
        return values if values.ndim else float(values)

    return CostFunction(
        c=c,
        dc_di=lambda i, x, s: (np.asarray(c(np.asarray(i) + h, x, s)) - np.asarray(c(np.asarray(i) - h, x, s))) / (2 * h),
        dc_ds=lambda i, x, s: (np.asarray(c(i, x, np.asarray(s) + h)) - np.asarray(c(i, x, np.asarray(s) - h))) / (2 * h),
        name=name,
    )
