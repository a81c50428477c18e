# src/services/pipeline.py
"""Turns a RunConfig into the objects the services work on."""

import logging
from typing import Optional, Tuple

from src.config.constants import DEFAULT_NATURAL_TRUNCATION
from src.config.settings import RunConfig
from src.data.loader import load_surfaces, read_table
from src.models.cost import CostFunction, constant_cost, cost_from_table, detection_cost
from src.models.diffusion import DiffusionSpec, HiddenLevelLaw, TransformedModel
from src.models.presets import bm_gaussian, coefficients_from_frame
from src.models.surfaces import SurfacePair, TriangleGrid
from src.services.detection_sim import PathConfig, StoppingRule
from src.services.diffusion_core import natural_scale_model, transform_model
from src.services.surface_solver import SolverSettings, extremal_surfaces
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


def observed_process(config: RunConfig) -> Tuple[DiffusionSpec, HiddenLevelLaw]:
    """The observed diffusion and hidden-level law behind a (-1, 1) model."""
    preset = config.model.preset
    if preset == "bm-gaussian":
        return bm_gaussian()
    if preset == "table":
        return coefficients_from_frame(read_table(config.model.coefficients_file))
    raise ConfigError(f"preset {preset!r} has no observed process; detection runs need 'bm-gaussian' or 'table'")


def build_model(config: RunConfig) -> TransformedModel:
    model_config = config.model
    if model_config.preset == "natural-scale":
        truncation = model_config.truncation or DEFAULT_NATURAL_TRUNCATION
        return natural_scale_model(truncation, model_config.support_margin)
    spec, law = observed_process(config)
    try:
        return transform_model(spec, law, truncation=model_config.truncation, epsilon=model_config.epsilon,
                               grid_points=model_config.scale_grid_points, tol=config.solver.quad_tol,
                               name=model_config.preset)
    except ValueError as exc:
        raise ConfigError(f"model configuration rejected: {exc}") from exc


def build_cost(config: RunConfig) -> CostFunction:
    cost_config = config.cost
    if cost_config.kind == "constant":
        return constant_cost(cost_config.c)
    if cost_config.kind == "detection":
        return detection_cost(cost_config.c)
    try:
        cost = cost_from_table(read_table(cost_config.table_file), name=cost_config.kind)
    except ValueError as exc:
        raise ConfigError(f"cost table rejected: {exc}") from exc
    if cost_config.kind == "separable" and not cost.is_separable:
        raise ConfigError("cost kind 'separable' needs a table with columns x, c1, c2")
    return cost


def solver_settings(config: RunConfig) -> SolverSettings:
    solver = config.solver
    return SolverSettings(
        slope_switch=solver.slope_switch,
        rtol=solver.rtol,
        atol=solver.atol,
        method=solver.method,
        tol_sup=solver.tol_sup,
        max_terms=solver.max_terms,
        quad_tol=solver.quad_tol,
        monotonicity_slack=solver.monotonicity_slack,
        threads=config.threads,
    )


def solve_surfaces(config: RunConfig, model: TransformedModel, cost: CostFunction) -> SurfacePair:
    """Load surfaces from value.surfaces_file when given, otherwise solve them."""
    if config.value.surfaces_file is not None:
        return load_surfaces(config.value.surfaces_file)
    grid = TriangleGrid.uniform(model.truncation, config.grid.points)
    return extremal_surfaces(model, cost, grid, settings=solver_settings(config))


def path_config(config: RunConfig, n_paths: Optional[int] = None) -> PathConfig:
    sim = config.simulation
    return PathConfig(
        dt=sim.dt,
        horizon=sim.horizon,
        n_paths=sim.n_paths if n_paths is None else n_paths,
        seed=sim.seed,
        scheme=sim.scheme,
        block_size=sim.block_size,
        threads=config.threads,
        bridge=sim.bridge,
        censoring_cap=sim.censoring_cap,
        trace_paths=sim.trace_paths,
    )


def make_rule(config: RunConfig, surfaces: Optional[SurfacePair]) -> StoppingRule:
    sim = config.simulation
    try:
        if sim.rule == "extremal":
            if surfaces is None:
                raise ConfigError("the extremal rule needs surfaces")
            return StoppingRule.extremal(surfaces)
        if sim.rule == "range_threshold":
            return StoppingRule.range_threshold(sim.threshold)
        if sim.rule == "quantile_hit":
            return StoppingRule.quantile_hit(sim.quantile)
        return StoppingRule.immediate()
    except ValueError as exc:
        raise ConfigError(f"simulation rule rejected: {exc}") from exc
