# src/models/surfaces.py
"""Grids, diagonal-start curves and the surface pair (f*, g*)."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator


@dataclass(frozen=True, eq=False)
class TriangleGrid:
    """Nodes of the (i, s) triangle; a cell (i, s) is active when i < s."""
    i_nodes: np.ndarray
    s_nodes: np.ndarray

    def __post_init__(self):
        for name in ("i_nodes", "s_nodes"):
            nodes = np.asarray(getattr(self, name), dtype=float)
            if nodes.ndim != 1 or nodes.size < 2:
                raise ValueError(f"{name} needs at least two nodes")
            if np.any(np.diff(nodes) <= 0.0):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, nodes)

    @classmethod
    def uniform(cls, truncation: Tuple[float, float], points: int) -> "TriangleGrid":
        """Same uniform nodes on both axes."""
        if points < 2:
            raise ValueError(f"grid needs at least two points, got {points}")
        nodes = np.linspace(truncation[0], truncation[1], points)
        return cls(i_nodes=nodes, s_nodes=nodes.copy())

    @property
    def shape(self) -> Tuple[int, int]:
        return self.i_nodes.size, self.s_nodes.size

    @property
    def step(self) -> float:
        return float(max(np.max(np.diff(self.i_nodes)), np.max(np.diff(self.s_nodes))))

    @cached_property
    def active(self) -> np.ndarray:
        return self.i_nodes[:, None] < self.s_nodes[None, :]


@dataclass(frozen=True, eq=False)
class DiagonalCurve:
    """
    One solution started on a diagonal, tabulated on nodes of its free variable.

    For f-curves the free variable is i and the curve starts at f(i_start) = i_start;
    for g-curves it is s and the curve starts at g(s_start) = s_start.
    """
    nodes: np.ndarray
    values: np.ndarray
    clipped: np.ndarray
    start: float
    switch_point: Optional[float]
    hit_point: Optional[float]
    negative_slope: bool = False


@dataclass(frozen=True)
class CurveProvenance:
    """How one column of a surface was obtained."""
    node: float
    last_start: float
    residual: float
    terms: int
    hit_point: Optional[float]
    crossings: int = 0
    negative_slope: bool = False

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "last_start": self.last_start,
            "residual": self.residual,
            "terms": self.terms,
            "hit_point": self.hit_point,
            "crossings": self.crossings,
            "negative_slope": self.negative_slope,
        }


@dataclass(frozen=True, eq=False)
class SurfacePair:
    """
    Tabulated extremal surfaces.

    `f_values[j, k]` and `g_values[j, k]` hold f*(i_j, s_k) and g*(i_j, s_k) on
    active cells and NaN elsewhere. Clipped cells are those where a curve
    reached the opposite diagonal.
    """
    grid: TriangleGrid
    f_values: np.ndarray
    g_values: np.ndarray
    f_clipped: np.ndarray
    g_clipped: np.ndarray
    f_provenance: Tuple[CurveProvenance, ...] = field(default_factory=tuple)
    g_provenance: Tuple[CurveProvenance, ...] = field(default_factory=tuple)

    @cached_property
    def _interpolators(self) -> Tuple[RegularGridInterpolator, RegularGridInterpolator]:
        active = self.grid.active
        i_mesh, s_mesh = np.meshgrid(self.grid.i_nodes, self.grid.s_nodes, indexing="ij")
        # Inactive cells take the diagonal values so interpolation near i = s stays sane
        f_filled = np.where(active, self.f_values, s_mesh)
        g_filled = np.where(active, self.g_values, i_mesh)
        axes = (self.grid.i_nodes, self.grid.s_nodes)
        return (
            RegularGridInterpolator(axes, f_filled, bounds_error=False, fill_value=None),
            RegularGridInterpolator(axes, g_filled, bounds_error=False, fill_value=None),
        )

    def f_at(self, i, s):
        """Interpolated f*(i, s), vectorized."""
        return self._evaluate(0, i, s)

    def g_at(self, i, s):
        """Interpolated g*(i, s), vectorized."""
        return self._evaluate(1, i, s)

    def _evaluate(self, which: int, i, s):
        i_arr, s_arr = np.broadcast_arrays(np.asarray(i, dtype=float), np.asarray(s, dtype=float))
        points = np.stack([i_arr.ravel(), s_arr.ravel()], axis=-1)
        values = self._interpolators[which](points).reshape(i_arr.shape)
        return values if values.ndim else float(values)

    def in_c0(self, i, s):
        return np.asarray(self.f_at(i, s)) > np.asarray(self.g_at(i, s))

    def to_frame(self, residual_f: Optional[np.ndarray] = None,
                 residual_g: Optional[np.ndarray] = None) -> pd.DataFrame:
        """Active cells in i-major order."""
        rows_j, rows_k = np.nonzero(self.grid.active)
        f = self.f_values[rows_j, rows_k]
        g = self.g_values[rows_j, rows_k]
        nan = np.full(f.shape, np.nan)
        return pd.DataFrame({
            "i": self.grid.i_nodes[rows_j],
            "s": self.grid.s_nodes[rows_k],
            "f_star": f,
            "g_star": g,
            "in_C0": f > g,
            "residual_f": nan if residual_f is None else residual_f[rows_j, rows_k],
            "residual_g": nan if residual_g is None else residual_g[rows_j, rows_k],
        })

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "SurfacePair":
        """
        Rebuild a surface pair from an exported table; provenance is not restored.

        The table holds active cells only, which miss the top i-node and the
        bottom s-node, so both axes take the union of the i and s columns.
        """
        missing = {"i", "s", "f_star", "g_star"} - set(frame.columns)
        if missing:
            raise ValueError(f"surface table lacks columns: {sorted(missing)}")
        nodes = np.union1d(frame["i"].to_numpy(dtype=float), frame["s"].to_numpy(dtype=float))
        grid = TriangleGrid(i_nodes=nodes, s_nodes=nodes.copy())
        i_nodes, s_nodes = grid.i_nodes, grid.s_nodes
        j = np.searchsorted(i_nodes, frame["i"].to_numpy(dtype=float))
        k = np.searchsorted(s_nodes, frame["s"].to_numpy(dtype=float))
        f_values = np.full(grid.shape, np.nan)
        g_values = np.full(grid.shape, np.nan)
        f_values[j, k] = frame["f_star"].to_numpy(dtype=float)
        g_values[j, k] = frame["g_star"].to_numpy(dtype=float)
        if np.any(np.isnan(f_values[grid.active])) or np.any(np.isnan(g_values[grid.active])):
            raise ValueError("surface table does not cover every active cell of a square grid")
        s_mesh = np.broadcast_to(s_nodes[None, :], grid.shape)
        i_mesh = np.broadcast_to(i_nodes[:, None], grid.shape)
        return cls(
            grid=grid,
            f_values=f_values,
            g_values=g_values,
            f_clipped=grid.active & (f_values >= s_mesh),
            g_clipped=grid.active & (g_values <= i_mesh),
        )
