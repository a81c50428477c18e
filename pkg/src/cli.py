# src/cli.py
"""
Batch front end: python -m src.cli {surfaces,value,simulate,validate}.

Each command reads the YAML configuration, runs one stage and writes its
artifacts to the output directory. Every JSON artifact echoes the resolved
configuration under "config".
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from src.config.constants import (
    CONVERGENCE_FILE,
    EXIT_NUMERICAL_FAILURE,
    EXIT_OK,
    REPORT_FILE,
    RESIDUALS_FILE,
    SURFACES_FILE,
    TRACE_FILE,
    VALIDATION_FILE,
    VALUE_FILE,
)
from src.config.settings import RunConfig, load_config
from src.data.writer import write_csv, write_json
from src.models.surfaces import SurfacePair, TriangleGrid
from src.services.detection_sim import LossReport, simulate_detection, simulate_range_objective
from src.services.pipeline import (
    build_cost,
    build_model,
    make_rule,
    observed_process,
    path_config,
    solve_surfaces,
    solver_settings,
)
from src.services.surface_solver import check_monotonicity, extremal_surfaces, ode_residual_tolerance, ode_residuals
from src.services.validation import results_frame, run_validation
from src.services.value_function import (
    ValueField,
    default_residual_sample,
    default_value_points,
    freeboundary_residuals,
    value_table,
)
from src.utils.errors import ExcessiveCensoring, HiddenTargetError, exit_code_for
from src.utils.logging_setup import configure_logging

logger = logging.getLogger(__name__)


def _output(config: RunConfig, name: str) -> Path:
    return Path(config.output_dir) / name


def _provenance(surfaces: SurfacePair) -> dict:
    return {
        "f_columns": [p.to_dict() for p in surfaces.f_provenance],
        "g_rows": [p.to_dict() for p in surfaces.g_provenance],
    }


def cmd_surfaces(config: RunConfig) -> int:
    """Solve f* and g*, write the surface table and the convergence log."""
    model = build_model(config)
    cost = build_cost(config)
    grid = TriangleGrid.uniform(model.truncation, config.grid.points)
    settings = solver_settings(config)
    surfaces = extremal_surfaces(model, cost, grid, settings=settings)

    residual_f, residual_g = ode_residuals(model, cost, surfaces, quad_tol=settings.quad_tol)
    write_csv(surfaces.to_frame(residual_f, residual_g), _output(config, SURFACES_FILE))
    worst = float(np.nanmax(np.concatenate([residual_f.ravel(), residual_g.ravel(), [0.0]])))
    write_json({
        "model": model.name,
        "caveat": model.caveat,
        "truncation": list(model.truncation),
        "support": list(model.support),
        "grid_points": config.grid.points,
        "ode_residual_max": worst,
        "ode_residual_tolerance": ode_residual_tolerance(grid),
        "monotonicity_violations": len(check_monotonicity(surfaces, settings.monotonicity_slack)),
        "provenance": _provenance(surfaces),
    }, _output(config, CONVERGENCE_FILE), config=config.to_dict())
    return EXIT_OK


def cmd_value(config: RunConfig) -> int:
    """Evaluate V at the configured points and write the free-boundary residuals."""
    model = build_model(config)
    cost = build_cost(config)
    surfaces = solve_surfaces(config, model, cost)
    field = ValueField(model, cost, surfaces, config.value.table_points, solver_settings(config))

    points = list(config.value.points or default_value_points(surfaces))
    write_csv(value_table(field, points), _output(config, VALUE_FILE))

    sample = list(config.value.residual_points or default_residual_sample(surfaces))
    residuals = freeboundary_residuals(model, cost, surfaces, field, sample, config.value.fd_step)
    tables = {}
    for table in (field.a1_table, field.a2_table):
        if table is not None:
            tables[table.label] = table.to_frame()
    write_json({
        "residuals": residuals,
        "sample_size": len(sample),
        "fd_step": config.value.fd_step,
        "coefficient_tables": tables,
    }, _output(config, RESIDUALS_FILE), config=config.to_dict())
    return EXIT_OK


def _write_report(config: RunConfig, report: LossReport) -> None:
    write_json({"report": report.to_dict()}, _output(config, REPORT_FILE), config=config.to_dict())
    if report.trace is not None:
        write_csv(report.trace, _output(config, TRACE_FILE))


def cmd_simulate(config: RunConfig) -> int:
    """Simulate the configured rule and write the loss report (and traces when asked)."""
    sim = config.simulation
    model = build_model(config)
    cost = build_cost(config)
    surfaces = solve_surfaces(config, model, cost) if sim.rule == "extremal" else None
    rule = make_rule(config, surfaces)
    paths = path_config(config)
    try:
        if sim.mode == "detection":
            if sim.rule == "extremal" and config.cost.kind != "detection":
                logger.warning("Extremal rule for detection solved with cost kind %r; 'detection' matches the loss",
                               config.cost.kind)
            spec, law = observed_process(config)
            report = simulate_detection(spec, law, config.cost.c, rule, paths)
        else:
            report = simulate_range_objective(model, cost, sim.start, rule, paths)
    except ExcessiveCensoring as exc:
        if isinstance(exc.report, LossReport):
            _write_report(config, exc.report)
        raise
    _write_report(config, report)
    return EXIT_OK


def cmd_validate(config: RunConfig) -> int:
    """Run the acceptance checks, print the table to stdout; exit 0 only if all pass."""
    results = run_validation(config)
    frame = results_frame(results)
    passed = bool(frame["passed"].all()) if not frame.empty else True
    write_json({"checks": frame, "passed": passed}, _output(config, VALIDATION_FILE), config=config.to_dict())
    print(frame.to_string(index=False))
    return EXIT_OK if passed else EXIT_NUMERICAL_FAILURE


COMMANDS = {
    "surfaces": cmd_surfaces,
    "value": cmd_value,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="simulation seed (overrides simulation.seed)")
    common.add_argument("--threads", type=int, help="worker threads, 0 for one per CPU")
    common.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="log level for stderr")

    parser = argparse.ArgumentParser(prog="python -m src.cli",
                                     description="Hidden target detection: surfaces, value, simulation")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("surfaces", parents=[common], help="solve the extremal surfaces f* and g*")
    subparsers.add_parser("value", parents=[common], help="evaluate the value function and its residuals")
    subparsers.add_parser("simulate", parents=[common], help="Monte Carlo loss of a stopping rule")
    subparsers.add_parser("validate", parents=[common], help="run the acceptance checks")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.log_level)

    try:
        config = load_config(args.config, seed=args.seed, threads=args.threads, output_dir=args.out)
        logger.info("Running %s with %d thread(s), output in %s", args.command, config.threads, config.output_dir)
        return COMMANDS[args.command](config)
    except HiddenTargetError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
