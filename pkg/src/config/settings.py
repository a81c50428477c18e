# src/config/settings.py
"""
Run configuration: nested frozen dataclasses read from a YAML file.

Every section is optional in the file; missing keys take the defaults from
constants.py. Unknown keys are rejected so typos do not pass silently.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import yaml

from src.config.constants import (
    A_PRIME_TABLE_POINTS,
    CENSORING_CAP,
    COST_KINDS,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_DT,
    DEFAULT_EPSILON,
    DEFAULT_HORIZON,
    DEFAULT_N_PATHS,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_SUPPORT_MARGIN,
    DOOB_THRESHOLDS,
    DP_SPACE_STEPS,
    DP_TRUNCATION,
    FD_STEP,
    GRID_POINTS,
    MODEL_PRESETS,
    MONOTONICITY_SLACK,
    ODE_ATOL,
    ODE_METHOD,
    ODE_RTOL,
    QUAD_TOL,
    RULE_KINDS,
    SCALE_GRID_POINTS,
    SCHEDULE_MAX_TERMS,
    SCHEMES,
    SLOPE_SWITCH,
    THREADS_ENV_VAR,
    TOL_SUP,
)
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

Triple = Tuple[float, float, float]


@dataclass(frozen=True)
class ModelConfig:
    preset: str = "natural-scale"
    coefficients_file: Optional[str] = None
    truncation: Optional[Tuple[float, float]] = None
    epsilon: float = DEFAULT_EPSILON
    support_margin: float = DEFAULT_SUPPORT_MARGIN
    scale_grid_points: int = SCALE_GRID_POINTS


@dataclass(frozen=True)
class CostConfig:
    kind: str = "constant"
    c: float = 1.0
    table_file: Optional[str] = None


@dataclass(frozen=True)
class GridConfig:
    points: int = GRID_POINTS


@dataclass(frozen=True)
class SolverConfig:
    slope_switch: float = SLOPE_SWITCH
    rtol: float = ODE_RTOL
    atol: float = ODE_ATOL
    method: str = ODE_METHOD
    tol_sup: float = TOL_SUP
    max_terms: int = SCHEDULE_MAX_TERMS
    quad_tol: float = QUAD_TOL
    monotonicity_slack: float = MONOTONICITY_SLACK


@dataclass(frozen=True)
class ValueConfig:
    surfaces_file: Optional[str] = None
    points: Optional[Tuple[Triple, ...]] = None
    residual_points: Optional[Tuple[Triple, ...]] = None
    table_points: int = A_PRIME_TABLE_POINTS
    fd_step: float = FD_STEP


@dataclass(frozen=True)
class SimulationConfig:
    mode: str = "range"
    rule: str = "extremal"
    threshold: Optional[float] = None
    quantile: Optional[float] = None
    start: Triple = (0.0, 0.0, 0.0)
    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON
    n_paths: int = DEFAULT_N_PATHS
    seed: int = 0
    scheme: str = "euler-maruyama"
    block_size: int = DEFAULT_BLOCK_SIZE
    bridge: bool = True
    censoring_cap: float = CENSORING_CAP
    trace_paths: int = 0


@dataclass(frozen=True)
class ValidationConfig:
    statistical: bool = True
    mc_paths: int = 200_000
    identity_paths: int = 100_000
    doob_paths: int = 20_000
    quantile: float = 0.5
    thresholds: Tuple[float, ...] = DOOB_THRESHOLDS
    dp_truncation: Tuple[float, float] = DP_TRUNCATION
    dp_space_steps: int = DP_SPACE_STEPS


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    cost: CostConfig = field(default_factory=CostConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    value: ValueConfig = field(default_factory=ValueConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    output_dir: str = str(DEFAULT_OUTPUT_DIR)
    threads: int = 1

    def to_dict(self) -> Dict[str, Any]:
        """Resolved configuration as plain data (tuples become lists)."""
        return _plain(asdict(self))


_SECTIONS = {
    "model": ModelConfig,
    "cost": CostConfig,
    "grid": GridConfig,
    "solver": SolverConfig,
    "value": ValueConfig,
    "simulation": SimulationConfig,
    "validation": ValidationConfig,
}


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _tuple_of(value: Any, name: str, length: Optional[int] = None) -> tuple:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name} must be a list, got {value!r}")
    items = tuple(float(v) for v in value)
    if length is not None and len(items) != length:
        raise ConfigError(f"{name} must have {length} entries, got {len(items)}")
    return items


def _section(cls, raw: Any, name: str):
    if raw is None:
        return cls()
    if not isinstance(raw, Mapping):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {unknown}")
    values = dict(raw)
    for key in ("truncation", "dp_truncation"):
        if values.get(key) is not None:
            values[key] = _tuple_of(values[key], f"{name}.{key}", 2)
    if values.get("start") is not None:
        values["start"] = _tuple_of(values["start"], f"{name}.start", 3)
    if values.get("thresholds") is not None:
        values["thresholds"] = _tuple_of(values["thresholds"], f"{name}.thresholds")
    if cls is ValueConfig:
        for key in ("points", "residual_points"):
            if values.get(key) is not None:
                if not isinstance(values[key], (list, tuple)):
                    raise ConfigError(f"{name}.{key} must be a list of (i, x, s) triples")
                values[key] = tuple(_tuple_of(p, f"{name}.{key}", 3) for p in values[key])
    try:
        return cls(**values)
    except TypeError as exc:
        raise ConfigError(f"invalid section {name!r}: {exc}") from exc


def _positive(value: float, name: str) -> None:
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value}")


def _existing(path: Optional[str], name: str, base: Optional[Path]) -> Optional[str]:
    if path is None:
        return None
    candidate = Path(path)
    if not candidate.is_absolute() and base is not None and not candidate.exists():
        candidate = base / candidate
    if not candidate.exists():
        raise ConfigError(f"{name} not found: {path}")
    return str(candidate)


def validate_config(config: RunConfig, base: Optional[Path] = None) -> RunConfig:
    """
    Check ranges and references; relative file paths are resolved against `base`.

    Raises:
        ConfigError: with a message naming the offending key
    """
    model, cost, grid, solver = config.model, config.cost, config.grid, config.solver
    if model.preset not in MODEL_PRESETS and model.preset != "table":
        raise ConfigError(f"unknown model preset {model.preset!r}; choose from {sorted(MODEL_PRESETS)} or 'table'")
    if model.preset == "table" and model.coefficients_file is None:
        raise ConfigError("model.preset 'table' needs model.coefficients_file")
    if model.truncation is not None and not model.truncation[0] < model.truncation[1]:
        raise ConfigError(f"model.truncation must be increasing, got {model.truncation}")
    _positive(model.epsilon, "model.epsilon")
    if model.support_margin < 0:
        raise ConfigError("model.support_margin must be non-negative")
    if model.scale_grid_points < 16:
        raise ConfigError("model.scale_grid_points must be at least 16")

    if cost.kind not in COST_KINDS:
        raise ConfigError(f"unknown cost kind {cost.kind!r}; choose from {COST_KINDS}")
    _positive(cost.c, "cost.c")
    if cost.kind in ("separable", "general") and cost.table_file is None:
        raise ConfigError(f"cost kind {cost.kind!r} needs cost.table_file")

    if grid.points < 2:
        raise ConfigError(f"grid.points must be at least 2, got {grid.points}: the grid would be empty")
    for name in ("slope_switch", "rtol", "atol", "tol_sup", "quad_tol", "monotonicity_slack"):
        _positive(getattr(solver, name), f"solver.{name}")
    if solver.max_terms < 2:
        raise ConfigError("solver.max_terms must be at least 2")

    _positive(config.value.fd_step, "value.fd_step")
    if config.value.table_points < 4:
        raise ConfigError("value.table_points must be at least 4")

    sim = config.simulation
    if sim.mode not in ("range", "detection"):
        raise ConfigError(f"simulation.mode must be 'range' or 'detection', got {sim.mode!r}")
    if sim.rule not in RULE_KINDS:
        raise ConfigError(f"unknown rule {sim.rule!r}; choose from {RULE_KINDS}")
    if sim.scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {sim.scheme!r}; choose from {SCHEMES}")
    _positive(sim.dt, "simulation.dt")
    _positive(sim.horizon, "simulation.horizon")
    if sim.n_paths < 1 or sim.block_size < 1:
        raise ConfigError("simulation.n_paths and simulation.block_size must be at least 1")
    steps = config.validation.dp_space_steps
    if steps < 4 or steps % 2:
        raise ConfigError(f"validation.dp_space_steps must be even and at least 4, got {steps}")
    if config.threads < 0:
        raise ConfigError(f"threads must be non-negative, got {config.threads}")

    return replace(
        config,
        model=replace(model, coefficients_file=_existing(model.coefficients_file, "model.coefficients_file", base)),
        cost=replace(cost, table_file=_existing(cost.table_file, "cost.table_file", base)),
        value=replace(config.value, surfaces_file=_existing(config.value.surfaces_file, "value.surfaces_file", base)),
    )


def resolve_threads(requested: Optional[int], fallback: int = 1) -> int:
    """--threads value, else HTD_THREADS, else the fallback; 0 means one per CPU."""
    if requested is None:
        env = os.environ.get(THREADS_ENV_VAR)
        try:
            requested = fallback if env is None else int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {env!r}") from exc
    if requested < 0:
        raise ConfigError(f"thread count must be non-negative, got {requested}")
    return requested or (os.cpu_count() or 1)


def load_config(path: Optional[str] = None, seed: Optional[int] = None, threads: Optional[int] = None,
                output_dir: Optional[str] = None) -> RunConfig:
    """
    Read a YAML run configuration and apply command-line overrides.

    Args:
        path: YAML file; None gives the defaults
        seed: Overrides simulation.seed
        threads: Overrides threads (None falls back to HTD_THREADS)
        output_dir: Overrides output_dir

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: for a missing file, malformed YAML, unknown keys or invalid values
    """
    raw: Dict[str, Any] = {}
    base: Optional[Path] = None
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigError(f"config file not found: {path}")
        base = config_path.parent
        try:
            raw = yaml.safe_load(config_path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
        if not isinstance(raw, Mapping):
            raise ConfigError(f"config file {path} must hold a mapping at the top level")

    unknown = sorted(set(raw) - set(_SECTIONS) - {"output_dir", "threads"})
    if unknown:
        raise ConfigError(f"unknown top-level keys: {unknown}")
    sections = {name: _section(cls, raw.get(name), name) for name, cls in _SECTIONS.items()}
    config = RunConfig(**sections, output_dir=str(raw.get("output_dir", DEFAULT_OUTPUT_DIR)),
                       threads=int(raw.get("threads", 1)))

    if seed is not None:
        config = replace(config, simulation=replace(config.simulation, seed=int(seed)))
    if output_dir is not None:
        config = replace(config, output_dir=str(output_dir))
    config = replace(config, threads=resolve_threads(threads, fallback=config.threads))
    config = validate_config(config, base)
    logger.debug("Resolved configuration: %s", config.to_dict())
    return config
