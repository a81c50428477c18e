# src/services/value_function.py
"""
Value function of the range problem.

Off C0 the value is explicit: one excursion integral up to f* or down from g*.
On C0 it is A(i, s) L(x) + B(i, s) + (c2(s) - c1(i)) H(x) with H = L M - P; the
coefficients are carried in from the boundary of C0 along i or along s, giving
two independent evaluations that must agree.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from src.config.constants import A_PRIME_TABLE_POINTS, C0_GAP_TOL, EDGE_DISTANCE, FD_STEP, QUAD_TOL, REGION_TOL
from src.models.cost import CostFunction
from src.models.diffusion import TransformedModel
from src.models.surfaces import SurfacePair
from src.services.surface_solver import (
    DEFAULT_SETTINGS,
    SolverSettings,
    boundary_maps,
    lower_boundary_map,
    rhs_f,
    rhs_g,
    upper_boundary_map,
)
from src.utils.errors import NoRootInTruncation, NumericalError, RegionMismatch, UnsupportedCost
from src.utils.numerics import backward_difference, central_difference, forward_difference, second_difference
from src.utils.quadrature import integrate

logger = logging.getLogger(__name__)


def particular_solution_H(model: TransformedModel, x):
    """H(x) = L(x) M(x) - P(x), a solution of (sigma^2/2) H'' + mu H' = 1 with H(0) = 0."""
    return np.asarray(model.scale(x), dtype=float) * np.asarray(model.speed_mass(x), dtype=float) \
        - np.asarray(model.scale_speed_mass(x), dtype=float)


def _cost_constant_in_x(cost: CostFunction) -> bool:
    return cost.separable is not None


def lower_excursion_value(model: TransformedModel, cost: CostFunction, i: float, x: float, s: float,
                          upper: float, tol: float = QUAD_TOL) -> float:
    """s - i + int_x^upper c(i, y, s) [L(y) - L(x)] m(dy)."""
    if _cost_constant_in_x(cost):
        return s - i + float(cost(i, x, s)) * model.speed_moment(x, upper, x)
    scale_x = float(model.scale(x))
    return s - i + integrate(
        lambda y: float(cost(i, y, s)) * (float(model.scale(y)) - scale_x) * float(model.speed_density(y)),
        x, upper, tol=tol,
    )


def upper_excursion_value(model: TransformedModel, cost: CostFunction, i: float, x: float, s: float,
                          lower: float, tol: float = QUAD_TOL) -> float:
    """s - i + int_lower^x c(i, y, s) [L(x) - L(y)] m(dy)."""
    if _cost_constant_in_x(cost):
        return s - i - float(cost(i, x, s)) * model.speed_moment(lower, x, x)
    scale_x = float(model.scale(x))
    return s - i + integrate(
        lambda y: float(cost(i, y, s)) * (scale_x - float(model.scale(y))) * float(model.speed_density(y)),
        lower, x, tol=tol,
    )


def _surface_values(surfaces: SurfacePair, i: float, s: float) -> Tuple[float, float]:
    return float(surfaces.f_at(i, s)), float(surfaces.g_at(i, s))


def value_on_Cminus(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair,
                    i: float, x: float, s: float) -> float:
    """
    Value on C- = {i <= x < f*(i, s) <= g*(i, s)}; at x = f* it equals s - i.

    Raises:
        RegionMismatch: if (i, x, s) is not in the closure of C-
    """
    f, g = _surface_values(surfaces, i, s)
    if f > g + REGION_TOL or not i - REGION_TOL <= x <= f + REGION_TOL:
        raise RegionMismatch(f"({i:.6g}, {x:.6g}, {s:.6g}) is not in C-: f*={f:.6g}, g*={g:.6g}")
    return lower_excursion_value(model, cost, i, x, s, f)


def value_on_Cplus(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair,
                   i: float, x: float, s: float) -> float:
    """
    Value on C+ = {f*(i, s) <= g*(i, s) < x <= s}; at x = g* it equals s - i.

    Raises:
        RegionMismatch: if (i, x, s) is not in the closure of C+
    """
    f, g = _surface_values(surfaces, i, s)
    if f > g + REGION_TOL or not g - REGION_TOL <= x <= s + REGION_TOL:
        raise RegionMismatch(f"({i:.6g}, {x:.6g}, {s:.6g}) is not in C+: f*={f:.6g}, g*={g:.6g}")
    return upper_excursion_value(model, cost, i, x, s, g)


def _require_separable(cost: CostFunction):
    if cost.separable is None:
        raise UnsupportedCost(f"the value on C0 needs a cost of the form c2(s) - c1(i); {cost.name} is not")
    return cost.separable


def _surface_slope_in_s(surfaces: SurfacePair, which: str, i: float, s: float) -> float:
    # Centered across one grid spacing, one-sided at the grid edge
    h = surfaces.grid.step
    lo, hi = surfaces.grid.s_nodes[0], surfaces.grid.s_nodes[-1]
    at = surfaces.f_at if which == "f" else surfaces.g_at
    left, right = max(lo, s - h), min(hi, s + h)
    return (float(at(i, right)) - float(at(i, left))) / (right - left)


def _surface_slope_in_i(surfaces: SurfacePair, which: str, i: float, s: float) -> float:
    h = surfaces.grid.step
    lo, hi = surfaces.grid.i_nodes[0], surfaces.grid.i_nodes[-1]
    at = surfaces.f_at if which == "f" else surfaces.g_at
    left, right = max(lo, i - h), min(hi, i + h)
    return (float(at(left, s)) - float(at(right, s))) / (left - right)


def a2_prime(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair, s: float,
             settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """
    s-derivative of the L-coefficient on C0, read off the lower boundary i(s) of C0.

    Raises:
        UnsupportedCost: if the cost is not separable
        NoRootInTruncation: if i(s) lies outside the grid
    """
    parts = _require_separable(cost)
    i_s = lower_boundary_map(model, cost, surfaces, s, settings=settings)
    meet = float(surfaces.f_at(i_s, s))
    f_s = _surface_slope_in_s(surfaces, "f", i_s, s)
    f_i = rhs_f(model, cost, i_s, s, meet, settings.quad_tol)
    inner_lower = model.speed_moment(i_s, meet, i_s)
    inner_origin = float(model.scale_speed_mass(meet)) - float(model.scale(i_s)) * float(model.speed_mass(meet))
    bracket = (f_s / f_i) * (1.0 + float(parts.c1_prime(i_s)) * inner_lower) \
        + 1.0 + float(parts.c2_prime(s)) * (float(particular_solution_H(model, s)) + inner_origin)
    return -bracket / (float(model.scale(s)) - float(model.scale(i_s)))


def a1_prime(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair, i: float,
             settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """
    i-derivative of the L-coefficient on C0, read off the upper boundary s(i) of C0.

    Raises:
        UnsupportedCost: if the cost is not separable
        NoRootInTruncation: if s(i) lies outside the grid
    """
    parts = _require_separable(cost)
    s_i = upper_boundary_map(model, cost, surfaces, i, settings=settings)
    meet = float(surfaces.g_at(i, s_i))
    g_i = _surface_slope_in_i(surfaces, "g", i, s_i)
    g_s = rhs_g(model, cost, i, s_i, meet, settings.quad_tol)
    scale_s = float(model.scale(s_i))
    inner_upper = scale_s * (float(model.speed_mass(s_i)) - float(model.speed_mass(meet))) \
        - (float(model.scale_speed_mass(s_i)) - float(model.scale_speed_mass(meet)))
    inner_origin = scale_s * float(model.speed_mass(meet)) - float(model.scale_speed_mass(meet))
    bracket = (g_i / g_s) * (1.0 + float(parts.c2_prime(s_i)) * inner_upper) \
        + 1.0 + float(parts.c1_prime(i)) * (float(particular_solution_H(model, i)) - inner_origin)
    return -bracket / (scale_s - float(model.scale(i)))


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Tabulated a1' or a2' with a cubic spline over the nodes where it exists."""
    nodes: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        finite = np.isfinite(self.values)
        object.__setattr__(self, "_finite", finite)
        spline = CubicSpline(self.nodes[finite], self.values[finite]) if finite.sum() >= 2 else None
        object.__setattr__(self, "_spline", spline)

    @property
    def domain(self) -> Tuple[float, float]:
        known = self.nodes[self._finite]
        if known.size == 0:
            return (np.nan, np.nan)
        return float(known[0]), float(known[-1])

    def __call__(self, x: float) -> float:
        lo, hi = self.domain
        if self._spline is None or not lo - 1e-12 <= x <= hi + 1e-12:
            raise NoRootInTruncation(f"{self.label} is not available at {x:.6g}; known on [{lo:.6g}, {hi:.6g}]")
        return float(self._spline(x))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"node": self.nodes, self.label: self.values})


def tabulate_coefficient(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair, which: str,
                         a: float, b: float, points: int = A_PRIME_TABLE_POINTS,
                         settings: SolverSettings = DEFAULT_SETTINGS) -> CoefficientTable:
    """Evaluate a1' (which='a1') or a2' (which='a2') on an even grid of [a, b]; NaN where undefined."""
    nodes = np.linspace(a, b, points) if b > a else np.array([a])
    compute = a1_prime if which == "a1" else a2_prime
    values = np.full(nodes.shape, np.nan)
    for k, node in enumerate(nodes):
        try:
            values[k] = compute(model, cost, surfaces, float(node), settings)
        except NumericalError as exc:
            logger.debug("%s' undefined at %.6g: %s", which, node, exc)
    return CoefficientTable(nodes=nodes, values=values, label=f"{which}_prime")


def value_on_C0(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair, i: float, x: float,
                s: float, a1_table: Optional[CoefficientTable] = None,
                a2_table: Optional[CoefficientTable] = None,
                settings: SolverSettings = DEFAULT_SETTINGS) -> Tuple[float, float]:
    """
    The two evaluations of the value on C0.

    The first carries the coefficients in along i from the boundary point
    (i(s), s), the second along s from (i, s(i)).

    Returns:
        Tuple (value_from_lower_boundary, value_from_upper_boundary)

    Raises:
        UnsupportedCost: if the cost is not separable
        RegionMismatch: if (i, s) is not in C0
        NoRootInTruncation: if a boundary map leaves the grid
    """
    parts = _require_separable(cost)
    if not i - REGION_TOL <= x <= s + REGION_TOL:
        raise RegionMismatch(f"x={x:.6g} is outside [{i:.6g}, {s:.6g}]")
    i_s, s_i = boundary_maps(model, cost, surfaces, i, s, settings)
    if a1_table is None:
        a1_table = tabulate_coefficient(model, cost, surfaces, "a1", i_s, i, settings=settings)
    if a2_table is None:
        a2_table = tabulate_coefficient(model, cost, surfaces, "a2", s, s_i, settings=settings)

    def c1(u):
        return float(parts.c1(u))

    def c2(v):
        return float(parts.c2(v))

    def h(y):
        return float(particular_solution_H(model, y))

    def scale(y):
        return float(model.scale(y))

    scale_x, h_x = scale(x), h(x)
    spread = c2(s) - c1(i)

    f_meet = float(surfaces.f_at(i_s, s))
    spread_lower = c2(s) - c1(i_s)
    coef_a = -spread_lower * float(model.speed_mass(f_meet)) + integrate(a1_table, i_s, i)
    coef_b = s - i_s + spread_lower * float(model.scale_speed_mass(f_meet)) + integrate(
        lambda u: -scale(u) * a1_table(u) + float(parts.c1_prime(u)) * h(u), i_s, i)
    from_lower = coef_a * scale_x + coef_b + spread * h_x

    g_meet = float(surfaces.g_at(i, s_i))
    spread_upper = c2(s_i) - c1(i)
    coef_a = -spread_upper * float(model.speed_mass(g_meet)) - integrate(a2_table, s, s_i)
    coef_b = s_i - i + spread_upper * float(model.scale_speed_mass(g_meet)) + integrate(
        lambda v: scale(v) * a2_table(v) + float(parts.c2_prime(v)) * h(v), s, s_i)
    from_upper = coef_a * scale_x + coef_b + spread * h_x
    return from_lower, from_upper


def classify_region(surfaces: SurfacePair, i: float, x: float, s: float) -> str:
    """One of 'C0', 'Cminus', 'Cplus', 'D' for a point with i <= x <= s."""
    if s - i <= REGION_TOL:
        return "C0"
    f, g = _surface_values(surfaces, i, s)
    if f > g:
        return "C0"
    if x < f:
        return "Cminus"
    if x > g:
        return "Cplus"
    return "D"


class ValueField:
    """
    The value function assembled over all regions of one solved model.

    Coefficient tables for C0 are built once over the grid when the cost is
    separable; otherwise C0 points raise UnsupportedCost.
    """

    def __init__(self, model: TransformedModel, cost: CostFunction, surfaces: SurfacePair,
                 table_points: int = A_PRIME_TABLE_POINTS, settings: SolverSettings = DEFAULT_SETTINGS,
                 build_tables: bool = True):
        self.model = model
        self.cost = cost
        self.surfaces = surfaces
        self.settings = settings
        self.a1_table: Optional[CoefficientTable] = None
        self.a2_table: Optional[CoefficientTable] = None
        if build_tables and cost.is_separable:
            lo, hi = model.truncation
            logger.info("Tabulating C0 coefficients on %d points", table_points)
            self.a1_table = tabulate_coefficient(model, cost, surfaces, "a1", lo, hi, table_points, settings)
            self.a2_table = tabulate_coefficient(model, cost, surfaces, "a2", lo, hi, table_points, settings)

    def region(self, i: float, x: float, s: float) -> str:
        return classify_region(self.surfaces, i, x, s)

    def components(self, i: float, x: float, s: float) -> Dict[str, object]:
        """Region, value and, on C0, both evaluations and their gap."""
        region = self.region(i, x, s)
        result: Dict[str, object] = {"region": region, "v_lower": np.nan, "v_upper": np.nan, "c0_gap": np.nan}
        if region == "D":
            result["value"] = s - i
        elif region == "Cminus":
            result["value"] = value_on_Cminus(self.model, self.cost, self.surfaces, i, x, s)
        elif region == "Cplus":
            result["value"] = value_on_Cplus(self.model, self.cost, self.surfaces, i, x, s)
        else:
            lower, upper = value_on_C0(self.model, self.cost, self.surfaces, i, x, s,
                                       self.a1_table, self.a2_table, self.settings)
            gap = abs(lower - upper)
            if gap > C0_GAP_TOL * max(1.0, abs(lower)):
                logger.warning("C0 evaluations differ by %.3g at (%.4f, %.4f, %.4f)", gap, i, x, s)
            result.update(value=0.5 * (lower + upper), v_lower=lower, v_upper=upper, c0_gap=gap)
        return result

    def __call__(self, i: float, x: float, s: float) -> float:
        return float(self.components(i, x, s)["value"])


def value_table(field: ValueField, points: Sequence[Tuple[float, float, float]]) -> pd.DataFrame:
    """Rows i, x, s, region, value, v_lower, v_upper, c0_gap for each point."""
    rows = []
    for i, x, s in points:
        row = {"i": float(i), "x": float(x), "s": float(s)}
        row.update(field.components(float(i), float(x), float(s)))
        rows.append(row)
    return pd.DataFrame(rows, columns=["i", "x", "s", "region", "value", "v_lower", "v_upper", "c0_gap"])


def default_value_points(surfaces: SurfacePair, stride: int = 16) -> List[Tuple[float, float, float]]:
    """Origin plus grid cells at a stride, each with x at the quarter points of [i, s]."""
    grid = surfaces.grid
    points: List[Tuple[float, float, float]] = []
    lo, hi = grid.i_nodes[0], grid.i_nodes[-1]
    if lo <= 0.0 <= hi:
        points.append((0.0, 0.0, 0.0))
    for i in grid.i_nodes[::stride]:
        for s in grid.s_nodes[::stride]:
            if s > i:
                points.extend((float(i), float(i + w * (s - i)), float(s)) for w in (0.25, 0.5, 0.75))
    return points


def default_residual_sample(surfaces: SurfacePair, stride: int = 8,
                            edge_distance: float = EDGE_DISTANCE) -> List[Tuple[float, float, float]]:
    """
    Interior points of C- and C+ (midpoints of [i, f*] and [g*, s]) on grid cells
    with f* <= g* and a margin from the truncation edge.
    """
    grid = surfaces.grid
    lo, hi = grid.i_nodes[0], grid.s_nodes[-1]
    points: List[Tuple[float, float, float]] = []
    for i in grid.i_nodes[::stride]:
        for s in grid.s_nodes[::stride]:
            if not (s > i and i - lo >= edge_distance and hi - s >= edge_distance):
                continue
            f, g = _surface_values(surfaces, float(i), float(s))
            if f > g:
                continue
            points.append((float(i), 0.5 * (i + f), float(s)))
            points.append((float(i), 0.5 * (g + s), float(s)))
    return points


def freeboundary_residuals(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair,
                           field: ValueField, sample: Sequence[Tuple[float, float, float]],
                           step: float = FD_STEP) -> Dict[str, float]:
    """
    Finite-difference residuals of the free-boundary conditions.

    Keys:
        eq312: relative generator residual |L V - c| / c in C- and C+
        eq313: normal reflection dV/di at x = i (backward difference in i)
        eq314: normal reflection dV/ds at x = s (forward difference in s)
        eq315: |V(f*-) - (s - i)|
        eq316: |V(g*+) - (s - i)|
        eq317: smooth fit dV/dx at f*-
        eq318: smooth fit dV/dx at g*+
    Each value is the maximum over the sample; 0.0 when nothing was measurable.
    """
    worst = {key: 0.0 for key in ("eq312", "eq313", "eq314", "eq315", "eq316", "eq317", "eq318")}
    h = step

    def record(key: str, value: float) -> None:
        if np.isfinite(value):
            worst[key] = max(worst[key], abs(value))

    pairs = set()
    for i, x, s in sample:
        region = field.region(i, x, s)
        if region in ("Cminus", "Cplus"):
            f, g = _surface_values(surfaces, i, s)
            low, high = (i, f) if region == "Cminus" else (g, s)
            if low + h <= x - h and x + h <= high - h:
                if region == "Cminus":
                    def v(y):
                        return lower_excursion_value(model, cost, i, y, s, f)
                else:
                    def v(y):
                        return upper_excursion_value(model, cost, i, y, s, g)
                generator = float(model.half_variance(x)) * second_difference(v, x, h) \
                    + float(model.mu(x)) * central_difference(v, x, h)
                running = float(cost(i, x, s))
                record("eq312", (generator - running) / running)
            pairs.add((i, s))

    for i, s in sorted(pairs):
        f, g = _surface_values(surfaces, i, s)
        lo, hi = surfaces.grid.i_nodes[0], surfaces.grid.s_nodes[-1]
        if f - i > 2.0 * h and i - 2.0 * h >= lo:
            record("eq313", backward_difference(
                lambda u: lower_excursion_value(model, cost, u, i, s, float(surfaces.f_at(u, s))), i, h))
        if s - g > 2.0 * h and s + 2.0 * h <= hi:
            record("eq314", forward_difference(
                lambda w: upper_excursion_value(model, cost, i, s, w, float(surfaces.g_at(i, w))), s, h))
        if f - i > 2.0 * h:
            record("eq315", lower_excursion_value(model, cost, i, f - h, s, f) - (s - i))
            record("eq317", backward_difference(lambda y: lower_excursion_value(model, cost, i, y, s, f), f, h))
        if s - g > 2.0 * h:
            record("eq316", upper_excursion_value(model, cost, i, g + h, s, g) - (s - i))
            record("eq318", forward_difference(lambda y: upper_excursion_value(model, cost, i, y, s, g), g, h))
    logger.info("Free-boundary residuals over %d points: %s", len(sample),
                ", ".join(f"{k}={v:.2e}" for k, v in worst.items()))
    return worst
