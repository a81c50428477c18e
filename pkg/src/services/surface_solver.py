# src/services/surface_solver.py
"""
Extremal stopping surfaces.

f*(., s) is the smallest solution of the f-equation that stays above the lower
diagonal i = f, g*(i, .) the largest solution of the g-equation that stays
below the upper diagonal g = s. Both are limits of curves started on the
diagonal at points approaching the edge of the state space.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from src.config.constants import (
    MONOTONICITY_SLACK,
    ODE_ATOL,
    ODE_METHOD,
    ODE_RTOL,
    QUAD_TOL,
    REGION_TOL,
    SCALE_TOL,
    SCHEDULE_MAX_TERMS,
    SLOPE_SWITCH,
    STAGE_SLOPE_CAP,
    TOL_SUP,
)
from src.models.cost import CostFunction
from src.models.diffusion import TransformedModel
from src.models.surfaces import CurveProvenance, DiagonalCurve, SurfacePair, TriangleGrid
from src.utils.errors import (
    MonotonicityViolation,
    NoRootInTruncation,
    NotConverged,
    RegionMismatch,
    SingularDenominator,
    StepFailure,
)
from src.utils.numerics import monotone_violations
from src.utils.quadrature import integrate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and switches of the surface solver."""
    slope_switch: float = SLOPE_SWITCH
    rtol: float = ODE_RTOL
    atol: float = ODE_ATOL
    method: str = ODE_METHOD
    tol_sup: float = TOL_SUP
    max_terms: int = SCHEDULE_MAX_TERMS
    quad_tol: float = QUAD_TOL
    monotonicity_slack: float = MONOTONICITY_SLACK
    threads: int = 1


DEFAULT_SETTINGS = SolverSettings()


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def _lower_bracket(model: TransformedModel, cost: CostFunction, i: float, s: float, f: float,
                   quad_tol: float) -> float:
    """1 - int_i^f dc/di(i, y, s) [L(y) - L(i)] m(dy)."""
    if cost.separable is not None:
        return 1.0 + float(cost.separable.c1_prime(i)) * model.speed_moment(i, f, i)
    scale_i = float(model.scale(i))

    def integrand(y: float) -> float:
        return float(cost.dc_di(i, y, s)) * (float(model.scale(y)) - scale_i) * float(model.speed_density(y))

    return 1.0 - integrate(integrand, i, f, tol=quad_tol)


def _upper_bracket(model: TransformedModel, cost: CostFunction, i: float, s: float, g: float,
                   quad_tol: float) -> float:
    """1 + int_g^s dc/ds(i, y, s) [L(s) - L(y)] m(dy)."""
    if cost.separable is not None:
        return 1.0 - float(cost.separable.c2_prime(s)) * model.speed_moment(g, s, s)
    scale_s = float(model.scale(s))

    def integrand(y: float) -> float:
        return float(cost.dc_ds(i, y, s)) * (scale_s - float(model.scale(y))) * float(model.speed_density(y))

    return 1.0 + integrate(integrand, g, s, tol=quad_tol)


def _drift_factor(model: TransformedModel, y: float) -> float:
    return float(model.half_variance(y)) * float(model.scale_derivative(y))


def rhs_f(model: TransformedModel, cost: CostFunction, i: float, s: float, f: float,
          quad_tol: float = QUAD_TOL) -> float:
    """
    Slope df/di of the lower surface at (i, s) when f(i, s) = f.

    Raises:
        SingularDenominator: if f sits on the lower diagonal
    """
    gap = float(model.scale(f)) - float(model.scale(i))
    if gap < SCALE_TOL:
        raise SingularDenominator(f"L(f) - L(i) = {gap:.3g} at i={i:.6g}, f={f:.6g}")
    bracket = _lower_bracket(model, cost, i, s, f, quad_tol)
    return _drift_factor(model, f) / (float(cost(i, f, s)) * gap) * bracket


def rhs_g(model: TransformedModel, cost: CostFunction, i: float, s: float, g: float,
          quad_tol: float = QUAD_TOL) -> float:
    """
    Slope dg/ds of the upper surface at (i, s) when g(i, s) = g.

    Raises:
        SingularDenominator: if g sits on the upper diagonal
    """
    gap = float(model.scale(s)) - float(model.scale(g))
    if gap < SCALE_TOL:
        raise SingularDenominator(f"L(s) - L(g) = {gap:.3g} at s={s:.6g}, g={g:.6g}")
    bracket = _upper_bracket(model, cost, i, s, g, quad_tol)
    return _drift_factor(model, g) / (float(cost(i, g, s)) * gap) * bracket


def _inverse_f(model, cost, i, s, f, quad_tol) -> float:
    # di/df; vanishes on the diagonal
    gap = float(model.scale(f)) - float(model.scale(i))
    return float(cost(i, f, s)) * gap / (_drift_factor(model, f) * _lower_bracket(model, cost, i, s, f, quad_tol))


def _inverse_g(model, cost, i, s, g, quad_tol) -> float:
    # ds/dg
    gap = float(model.scale(s)) - float(model.scale(g))
    return float(cost(i, g, s)) * gap / (_drift_factor(model, g) * _upper_bracket(model, cost, i, s, g, quad_tol))


# ---------------------------------------------------------------------------
# Curves from the diagonal
# ---------------------------------------------------------------------------

def _trace_from_diagonal(direct: Callable[[float, float], float], inverse: Callable[[float, float], float],
                         start: float, stop: float, barrier: float, nodes: np.ndarray,
                         settings: SolverSettings) -> DiagonalCurve:
    """
    Integrate a surface equation away from the diagonal point y(start) = start.

    The free variable t runs from `start` to `stop`; the curve value y moves from
    `start` toward `barrier` (the opposite diagonal). Near the diagonal the
    inverse equation dt/dy is integrated in y; once dt/dy exceeds
    1/slope_switch the direct equation dy/dt takes over.
    """
    sense = 1.0 if stop >= start else -1.0
    values = np.full(nodes.shape, np.nan)
    clipped = np.zeros(nodes.shape, dtype=bool)
    solver_options = dict(method=settings.method, rtol=settings.rtol, atol=settings.atol, dense_output=True)

    if (barrier - start) * sense <= 0.0:
        values[:] = barrier
        clipped[:] = True
        return DiagonalCurve(nodes, values, clipped, start, None, start)

    threshold = 1.0 / settings.slope_switch

    def inverse_rhs(y, state):
        return [inverse(state[0], y)]

    def switch_event(y, state):
        return inverse(state[0], y) - threshold

    def stop_event(y, state):
        return state[0] - stop

    switch_event.terminal = True
    switch_event.direction = 1.0
    stop_event.terminal = True

    first = solve_ivp(inverse_rhs, (start, barrier), [start], events=(switch_event, stop_event), **solver_options)
    if first.status == -1:
        raise StepFailure(f"inverse stepper failed from diagonal start {start:.6g}: {first.message}")
    first_y_end, first_t_end = float(first.t[-1]), float(first.y[0, -1])

    switch_point: Optional[float] = None
    hit_point: Optional[float] = None
    second = None
    negative = False
    reached_stop = first.t_events[1].size > 0
    if not reached_stop and first.t_events[0].size:
        switch_point = first_t_end
        if abs(stop - switch_point) > 1e-14:
            def direct_rhs(t, state):
                try:
                    return [direct(t, state[0])]
                except SingularDenominator:
                    # a trial stage crossed the diagonal; the steep slope gets the step rejected
                    return [STAGE_SLOPE_CAP]

            def barrier_event(t, state):
                return state[0] - barrier

            barrier_event.terminal = True
            second = solve_ivp(direct_rhs, (switch_point, stop), [first_y_end], events=(barrier_event,),
                               **solver_options)
            if second.status == -1:
                raise StepFailure(f"direct stepper failed after switch at {switch_point:.6g}: {second.message}")
            if second.t_events[0].size:
                hit_point = float(second.t_events[0][0])
            slopes = np.array([direct_rhs(t, [y])[0] for t, y in zip(second.t, second.y[0])])
            negative = bool(np.any(slopes < 0.0))
    elif not reached_stop:
        # the inverse leg ran into the opposite diagonal
        hit_point = first_t_end

    y_low, y_high = sorted((start, first_y_end))
    for idx, t in enumerate(nodes):
        if (t - start) * sense < 0.0 or (t - stop) * sense > 0.0:
            continue
        if hit_point is not None and (t - hit_point) * sense >= 0.0:
            values[idx] = barrier
            clipped[idx] = True
        elif t == start:
            values[idx] = start
        elif (t - first_t_end) * sense <= 0.0:
            values[idx] = brentq(lambda y: float(first.sol(y)[0]) - t, y_low, y_high, xtol=1e-14)
        else:
            values[idx] = float(second.sol(t)[0])
    return DiagonalCurve(nodes, values, clipped, start, switch_point, hit_point, negative)


def solve_f_from_diagonal(model: TransformedModel, cost: CostFunction, s: float, i_start: float,
                          i_stop: float, nodes: Optional[Sequence[float]] = None,
                          settings: SolverSettings = DEFAULT_SETTINGS) -> DiagonalCurve:
    """
    Solution i -> f(i, s) of the f-equation with f(i_start, s) = i_start.

    Args:
        model: Transformed model
        cost: Running cost
        s: Fixed running maximum
        i_start: Diagonal start
        i_stop: Last i to cover (at most s)
        nodes: Where to tabulate; defaults to 65 equispaced points
        settings: Solver tolerances

    Returns:
        DiagonalCurve on the nodes in [i_start, i_stop]; cells past the point
        where the curve meets f = s are clipped to s
    """
    if not i_start <= i_stop <= s:
        raise ValueError(f"need i_start <= i_stop <= s, got {i_start}, {i_stop}, {s}")
    nodes = np.linspace(i_start, i_stop, 65) if nodes is None else np.sort(np.asarray(nodes, dtype=float))
    nodes = nodes[(nodes >= i_start) & (nodes <= i_stop)]
    if i_stop == i_start:
        point = np.array([i_start])
        return DiagonalCurve(point, point.copy(), np.array([i_start == s]), i_start, None, None)

    return _trace_from_diagonal(
        lambda i, f: rhs_f(model, cost, i, s, f, settings.quad_tol),
        lambda i, f: _inverse_f(model, cost, i, s, f, settings.quad_tol),
        i_start, i_stop, s, nodes, settings,
    )


def solve_g_from_diagonal(model: TransformedModel, cost: CostFunction, i: float, s_start: float,
                          s_stop: float, nodes: Optional[Sequence[float]] = None,
                          settings: SolverSettings = DEFAULT_SETTINGS) -> DiagonalCurve:
    """
    Solution s -> g(i, s) of the g-equation with g(i, s_start) = s_start,
    integrated backwards in s down to s_stop; nodes are returned in decreasing order.
    """
    if not i <= s_stop <= s_start:
        raise ValueError(f"need i <= s_stop <= s_start, got {i}, {s_stop}, {s_start}")
    nodes = np.linspace(s_start, s_stop, 65) if nodes is None else np.sort(np.asarray(nodes, dtype=float))[::-1]
    nodes = nodes[(nodes >= s_stop) & (nodes <= s_start)]
    if s_stop == s_start:
        point = np.array([s_start])
        return DiagonalCurve(point, point.copy(), np.array([s_start == i]), s_start, None, None)

    return _trace_from_diagonal(
        lambda s, g: rhs_g(model, cost, i, s, g, settings.quad_tol),
        lambda s, g: _inverse_g(model, cost, i, s, g, settings.quad_tol),
        s_start, s_stop, i, nodes, settings,
    )


# ---------------------------------------------------------------------------
# Extremal limit
# ---------------------------------------------------------------------------

def diagonal_starts(model: TransformedModel, side: str, terms: int = SCHEDULE_MAX_TERMS) -> np.ndarray:
    """
    Geometric schedule of diagonal starts between the truncation and the support edge.

    The n-th lower start is lo_support + (x_lo - lo_support) 2^-n, so starts
    decrease toward the support edge; upper starts mirror this.
    """
    n = np.arange(1, terms + 1, dtype=float)
    if side == "lower":
        edge = model.support[0]
        return edge + (model.truncation[0] - edge) * 0.5 ** n
    if side == "upper":
        edge = model.support[1]
        return edge - (edge - model.truncation[1]) * 0.5 ** n
    raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")


def _limit_of_curves(solve: Callable[[float], DiagonalCurve], starts: np.ndarray, node: float,
                     rising: bool, settings: SolverSettings, label: str) -> Tuple[DiagonalCurve, CurveProvenance]:
    previous: Optional[np.ndarray] = None
    crossings = 0
    residual = np.inf
    negative = False
    for term, start in enumerate(starts, start=1):
        try:
            curve = solve(float(start))
        except (StepFailure, SingularDenominator) as exc:
            logger.debug("%s at %.6g: start %.6g skipped (%s)", label, node, start, exc)
            continue
        negative = negative or curve.negative_slope
        if previous is not None:
            change = curve.values - previous
            # Curves from starts nearer the edge lie above (f) or below (g) the earlier ones
            crossed = change < -settings.monotonicity_slack if rising else change > settings.monotonicity_slack
            crossings += int(np.count_nonzero(crossed))
            residual = float(np.max(np.abs(change)))
            if residual < settings.tol_sup:
                provenance = CurveProvenance(node=node, last_start=float(start), residual=residual, terms=term,
                                             hit_point=curve.hit_point, crossings=crossings,
                                             negative_slope=negative)
                return curve, provenance
        previous = curve.values
    raise NotConverged(
        f"{label} at {node:.6g} did not settle after {len(starts)} starts (last change {residual:.3g})",
        node=node, residual=residual,
    )


def _solve_f_column(model, cost, grid: TriangleGrid, k: int, starts: np.ndarray, settings: SolverSettings):
    s = float(grid.s_nodes[k])
    rows = np.nonzero(grid.i_nodes < s)[0]
    if rows.size == 0:
        return k, rows, None, None
    nodes = grid.i_nodes[rows]
    if starts[0] >= nodes[0]:
        raise ValueError("lower diagonal starts must lie below the first i-node")
    curve, provenance = _limit_of_curves(
        lambda start: solve_f_from_diagonal(model, cost, s, start, float(nodes[-1]), nodes, settings),
        starts, s, True, settings, "f-column",
    )
    logger.debug("f column s=%.4f: %d terms, residual %.2e", s, provenance.terms, provenance.residual)
    return k, rows, curve, provenance


def _solve_g_row(model, cost, grid: TriangleGrid, j: int, starts: np.ndarray, settings: SolverSettings):
    i = float(grid.i_nodes[j])
    cols = np.nonzero(grid.s_nodes > i)[0]
    if cols.size == 0:
        return j, cols, None, None
    nodes = grid.s_nodes[cols]
    if starts[0] <= nodes[-1]:
        raise ValueError("upper diagonal starts must lie above the last s-node")
    curve, provenance = _limit_of_curves(
        lambda start: solve_g_from_diagonal(model, cost, i, start, float(nodes[0]), nodes, settings),
        starts, i, False, settings, "g-row",
    )
    logger.debug("g row i=%.4f: %d terms, residual %.2e", i, provenance.terms, provenance.residual)
    return j, cols, curve, provenance


def extremal_surfaces(model: TransformedModel, cost: CostFunction, grid: TriangleGrid,
                      start_sequence: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
                      settings: SolverSettings = DEFAULT_SETTINGS) -> SurfacePair:
    """
    Tabulate f* and g* on the grid as limits over a diagonal-start schedule.

    Args:
        model: Transformed model
        cost: Running cost
        grid: Triangle grid inside the truncation
        start_sequence: Pair (lower starts decreasing, upper starts increasing);
            defaults to the geometric schedule toward the support edges
        settings: Solver tolerances and thread count

    Returns:
        SurfacePair that passed the diagonal and monotonicity checks

    Raises:
        NotConverged: if a column or row does not settle within the schedule
        MonotonicityViolation: with the first offending cell
    """
    if start_sequence is None:
        lower = diagonal_starts(model, "lower", settings.max_terms)
        upper = diagonal_starts(model, "upper", settings.max_terms)
    else:
        lower = np.asarray(start_sequence[0], dtype=float)
        upper = np.asarray(start_sequence[1], dtype=float)
        if np.any(np.diff(lower) >= 0.0) or np.any(np.diff(upper) <= 0.0):
            raise ValueError("lower starts must decrease and upper starts must increase")

    n_i, n_s = grid.shape
    logger.info("Solving %d f-columns and %d g-rows with %d thread(s)", n_s, n_i, settings.threads)
    with ThreadPoolExecutor(max_workers=max(1, settings.threads)) as pool:
        f_results = list(pool.map(lambda k: _solve_f_column(model, cost, grid, k, lower, settings), range(n_s)))
        g_results = list(pool.map(lambda j: _solve_g_row(model, cost, grid, j, upper, settings), range(n_i)))

    f_values = np.full(grid.shape, np.nan)
    g_values = np.full(grid.shape, np.nan)
    f_clipped = np.zeros(grid.shape, dtype=bool)
    g_clipped = np.zeros(grid.shape, dtype=bool)
    f_provenance: List[CurveProvenance] = []
    g_provenance: List[CurveProvenance] = []
    for k, rows, curve, provenance in f_results:
        if curve is None:
            continue
        f_values[rows, k] = curve.values
        f_clipped[rows, k] = curve.clipped
        f_provenance.append(provenance)
    for j, cols, curve, provenance in g_results:
        if curve is None:
            continue
        # g-curves come back in decreasing s
        g_values[j, cols] = curve.values[::-1]
        g_clipped[j, cols] = curve.clipped[::-1]
        g_provenance.append(provenance)

    surfaces = SurfacePair(grid, f_values, g_values, f_clipped, g_clipped,
                           tuple(f_provenance), tuple(g_provenance))
    problems = check_monotonicity(surfaces, settings.monotonicity_slack)
    if problems:
        message, cell = problems[0]
        raise MonotonicityViolation(message, cell=cell)
    logger.info("Surfaces solved: %d cells in C0 of %d active", int(np.count_nonzero(f_values > g_values)),
                int(np.count_nonzero(grid.active)))
    return surfaces


def check_monotonicity(surfaces: SurfacePair, slack: float = MONOTONICITY_SLACK) -> List[Tuple[str, tuple]]:
    """
    Grid-wide diagonal, monotonicity and no-crossing checks.

    Returns:
        List of (message, cell) pairs, empty when everything holds
    """
    grid = surfaces.grid
    active = grid.active
    i_mesh, s_mesh = np.meshgrid(grid.i_nodes, grid.s_nodes, indexing="ij")
    problems: List[Tuple[str, tuple]] = []

    below = np.argwhere(active & ~(surfaces.f_values > i_mesh))
    if below.size:
        j, k = below[0]
        problems.append((f"f* does not stay above the lower diagonal at i={i_mesh[j, k]:.6g}, s={s_mesh[j, k]:.6g}",
                         (float(i_mesh[j, k]), float(s_mesh[j, k]))))
    above = np.argwhere(active & ~(surfaces.g_values < s_mesh))
    if above.size:
        j, k = above[0]
        problems.append((f"g* does not stay below the upper diagonal at i={i_mesh[j, k]:.6g}, s={s_mesh[j, k]:.6g}",
                         (float(i_mesh[j, k]), float(s_mesh[j, k]))))

    f_mask = active & ~surfaces.f_clipped
    g_mask = active & ~surfaces.g_clipped
    checks = (
        (surfaces.f_values, 0, True, f_mask, "f* not increasing in i"),
        (surfaces.f_values, 1, False, f_mask, "f* not decreasing in s"),
        (surfaces.g_values, 1, True, g_mask, "g* not increasing in s"),
        (surfaces.g_values, 0, False, g_mask, "g* not decreasing in i"),
    )
    for values, axis, increasing, mask, label in checks:
        for j, k in monotone_violations(values, axis, increasing, slack, mask)[:1]:
            problems.append((f"{label} at i={grid.i_nodes[j]:.6g}, s={grid.s_nodes[k]:.6g}",
                             (float(grid.i_nodes[j]), float(grid.s_nodes[k]))))

    for provenance in surfaces.f_provenance + surfaces.g_provenance:
        if provenance.crossings:
            problems.append((f"diagonal-start curves crossed {provenance.crossings} time(s) at node "
                             f"{provenance.node:.6g}", (provenance.node,)))
    return problems


def ode_residuals(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair,
                  quad_tol: float = QUAD_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Centered-difference slopes of the tabulated surfaces against the equations.

    Returns:
        Arrays (residual_f, residual_g) of |difference - slope|, NaN where the
        three-point stencil leaves the unclipped active cells
    """
    grid = surfaces.grid
    usable_f = grid.active & ~surfaces.f_clipped
    usable_g = grid.active & ~surfaces.g_clipped
    residual_f = np.full(grid.shape, np.nan)
    residual_g = np.full(grid.shape, np.nan)
    i_nodes, s_nodes = grid.i_nodes, grid.s_nodes
    f, g = surfaces.f_values, surfaces.g_values

    stencil_f = usable_f[1:-1, :] & usable_f[:-2, :] & usable_f[2:, :]
    for j, k in np.argwhere(stencil_f):
        j += 1
        difference = (f[j + 1, k] - f[j - 1, k]) / (i_nodes[j + 1] - i_nodes[j - 1])
        slope = rhs_f(model, cost, float(i_nodes[j]), float(s_nodes[k]), float(f[j, k]), quad_tol)
        residual_f[j, k] = abs(difference - slope)

    stencil_g = usable_g[:, 1:-1] & usable_g[:, :-2] & usable_g[:, 2:]
    for j, k in np.argwhere(stencil_g):
        k += 1
        difference = (g[j, k + 1] - g[j, k - 1]) / (s_nodes[k + 1] - s_nodes[k - 1])
        slope = rhs_g(model, cost, float(i_nodes[j]), float(s_nodes[k]), float(g[j, k]), quad_tol)
        residual_g[j, k] = abs(difference - slope)
    return residual_f, residual_g


def ode_residual_tolerance(grid: TriangleGrid) -> float:
    return max(1e-4, 10.0 * grid.step ** 2)


# ---------------------------------------------------------------------------
# Boundary maps
# ---------------------------------------------------------------------------

def _refined_root(gap: Callable[[float], float], coarse_gap: Callable[[float], float], a: float, b: float) -> float:
    """Root of gap in [a, b], falling back to the interpolated gap when the refined one has no sign change."""
    try:
        ga, gb = gap(a), gap(b)
        if ga * gb <= 0.0:
            return brentq(gap, a, b, xtol=1e-13)
    except (StepFailure, SingularDenominator, ValueError):
        pass
    return brentq(coarse_gap, a, b, xtol=1e-13)


def lower_boundary_map(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair, s: float,
                       below: Optional[float] = None, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """
    The root i(s) of u -> f*(u, s) - g*(u, s) below `below` (default: s).

    Raises:
        NoRootInTruncation: if the difference stays positive down to the grid edge
    """
    top = s if below is None else below
    nodes = surfaces.grid.i_nodes
    u = nodes[nodes < top]
    if u.size == 0:
        raise NoRootInTruncation(f"no i-nodes below {top:.6g}")
    gaps = np.asarray(surfaces.f_at(u, s) - surfaces.g_at(u, s), dtype=float)
    if top < s - REGION_TOL:
        u = np.append(u, top)
        gaps = np.append(gaps, float(surfaces.f_at(top, s) - surfaces.g_at(top, s)))
    nonpositive = np.nonzero(gaps <= 0.0)[0]
    if nonpositive.size == 0:
        raise NoRootInTruncation(f"i(s) for s={s:.6g} lies below the truncation")
    k = int(nonpositive[-1])
    if k == u.size - 1:
        return float(u[k])
    a, b = float(u[k]), float(u[k + 1])
    if gaps[k] == 0.0:
        return a

    def coarse_gap(x: float) -> float:
        return float(surfaces.f_at(x, s)) - float(surfaces.g_at(x, s))

    f_start = float(surfaces.f_at(a, s))
    if f_start >= s - REGION_TOL or f_start <= a:
        return brentq(coarse_gap, a, b, xtol=1e-13)
    local = solve_ivp(lambda x, y: [rhs_f(model, cost, x, s, y[0], settings.quad_tol)], (a, b), [f_start],
                      method=settings.method, rtol=settings.rtol, atol=settings.atol, dense_output=True)
    if local.status != 0:
        return brentq(coarse_gap, a, b, xtol=1e-13)
    return _refined_root(lambda x: float(local.sol(x)[0]) - float(surfaces.g_at(x, s)), coarse_gap, a, b)


def upper_boundary_map(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair, i: float,
                       above: Optional[float] = None, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    """
    The root s(i) of v -> f*(i, v) - g*(i, v) above `above` (default: i).

    Raises:
        NoRootInTruncation: if the difference stays positive up to the grid edge
    """
    bottom = i if above is None else above
    nodes = surfaces.grid.s_nodes
    v = nodes[nodes > bottom]
    if v.size == 0:
        raise NoRootInTruncation(f"no s-nodes above {bottom:.6g}")
    gaps = np.asarray(surfaces.f_at(i, v) - surfaces.g_at(i, v), dtype=float)
    if bottom > i + REGION_TOL:
        v = np.insert(v, 0, bottom)
        gaps = np.insert(gaps, 0, float(surfaces.f_at(i, bottom) - surfaces.g_at(i, bottom)))
    nonpositive = np.nonzero(gaps <= 0.0)[0]
    if nonpositive.size == 0:
        raise NoRootInTruncation(f"s(i) for i={i:.6g} lies above the truncation")
    k = int(nonpositive[0])
    if k == 0:
        return float(v[0])
    a, b = float(v[k - 1]), float(v[k])
    if gaps[k] == 0.0:
        return b

    def coarse_gap(x: float) -> float:
        return float(surfaces.f_at(i, x)) - float(surfaces.g_at(i, x))

    g_start = float(surfaces.g_at(i, a))
    if g_start <= i + REGION_TOL or g_start >= a:
        return brentq(coarse_gap, a, b, xtol=1e-13)
    local = solve_ivp(lambda x, y: [rhs_g(model, cost, i, x, y[0], settings.quad_tol)], (a, b), [g_start],
                      method=settings.method, rtol=settings.rtol, atol=settings.atol, dense_output=True)
    if local.status != 0:
        return brentq(coarse_gap, a, b, xtol=1e-13)
    return _refined_root(lambda x: float(surfaces.f_at(i, x)) - float(local.sol(x)[0]), coarse_gap, a, b)


def boundary_maps(model: TransformedModel, cost: CostFunction, surfaces: SurfacePair, i: float, s: float,
                  settings: SolverSettings = DEFAULT_SETTINGS) -> Tuple[float, float]:
    """
    The pair (i(s), s(i)) for a point of C0.

    A diagonal point i = s counts as C0: stopping with zero range is never optimal.

    Raises:
        RegionMismatch: if f*(i, s) < g*(i, s)
        NoRootInTruncation: if a root escapes the grid
    """
    if s - i > REGION_TOL:
        gap = float(surfaces.f_at(i, s)) - float(surfaces.g_at(i, s))
        if gap < -REGION_TOL:
            raise RegionMismatch(f"(i, s) = ({i:.6g}, {s:.6g}) is not in C0: f* - g* = {gap:.3g}")
        if gap <= REGION_TOL:
            return i, s
    i_of_s = lower_boundary_map(model, cost, surfaces, s, below=i, settings=settings)
    s_of_i = upper_boundary_map(model, cost, surfaces, i, above=s, settings=settings)
    return i_of_s, s_of_i


def resolution_study(model: TransformedModel, cost: CostFunction, sizes: Sequence[int],
                     settings: SolverSettings = DEFAULT_SETTINGS) -> pd.DataFrame:
    """
    Solve on several grid sizes and compare each against the finest one.

    Returns:
        DataFrame with columns points, step, sup_diff_f, sup_diff_g, measured on
        the coarse nodes away from clipped cells
    """
    sizes = sorted(set(int(n) for n in sizes))
    if len(sizes) < 2:
        raise ValueError("resolution study needs at least two grid sizes")
    solved = {n: extremal_surfaces(model, cost, TriangleGrid.uniform(model.truncation, n), settings=settings)
              for n in sizes}
    finest = solved[sizes[-1]]
    rows = []
    for n in sizes[:-1]:
        coarse = solved[n]
        grid = coarse.grid
        i_mesh, s_mesh = np.meshgrid(grid.i_nodes, grid.s_nodes, indexing="ij")
        f_mask = grid.active & ~coarse.f_clipped
        g_mask = grid.active & ~coarse.g_clipped
        f_diff = np.abs(coarse.f_values - finest.f_at(i_mesh, s_mesh))[f_mask]
        g_diff = np.abs(coarse.g_values - finest.g_at(i_mesh, s_mesh))[g_mask]
        rows.append({
            "points": n,
            "step": grid.step,
            "sup_diff_f": float(np.max(f_diff)) if f_diff.size else 0.0,
            "sup_diff_g": float(np.max(g_diff)) if g_diff.size else 0.0,
        })
    return pd.DataFrame(rows)
