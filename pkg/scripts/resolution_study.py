# scripts/resolution_study.py
"""
Grid-resolution study for the extremal surfaces.

Usage:
    python -m scripts.resolution_study --config configs/natural_scale.yaml --sizes 17 33 65 129
"""

import argparse
import logging
import sys
from pathlib import Path

from src.config.settings import load_config
from src.data.writer import write_csv
from src.services.pipeline import build_cost, build_model, solver_settings
from src.services.surface_solver import resolution_study
from src.utils.errors import HiddenTargetError, exit_code_for
from src.utils.logging_setup import configure_logging

logger = logging.getLogger(__name__)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Compare coarse surface grids against the finest one")
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument("--sizes", type=int, nargs="+", default=[17, 33, 65, 129], help="grid sizes to solve")
    parser.add_argument("--out", help="CSV file for the study table")
    parser.add_argument("--threads", type=int)
    parser.add_argument("--log-level", default="INFO")
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        config = load_config(args.config, threads=args.threads)
        table = resolution_study(build_model(config), build_cost(config), args.sizes, solver_settings(config))
    except HiddenTargetError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exit_code_for(exc)

    print(table.to_string(index=False))
    if args.out:
        write_csv(table, Path(args.out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
