# src/data/loader.py
"""Readers for coefficient tables, cost tables and the artifacts of earlier runs."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd

from src.config.constants import (
    CONVERGENCE_FILE,
    REPORT_FILE,
    RESIDUALS_FILE,
    SURFACES_FILE,
    TRACE_FILE,
    VALIDATION_FILE,
    VALUE_FILE,
)
from src.models.surfaces import SurfacePair
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


def read_table(file_path: str) -> pd.DataFrame:
    """
    Load a CSV table.

    Args:
        file_path: String path to the CSV file

    Returns:
        DataFrame with the file contents

    Raises:
        ConfigError: if the file is missing, empty or unreadable
    """
    path = Path(file_path)
    if not path.exists():
        raise ConfigError(f"Table not found: {file_path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ConfigError(f"Error reading table {file_path}: {str(e)}") from e
    if frame.empty:
        raise ConfigError(f"Table {file_path} has no rows")
    return frame


def load_surfaces(file_path: str) -> SurfacePair:
    """Rebuild a SurfacePair from a surfaces CSV written by the surfaces command."""
    frame = read_table(file_path)
    try:
        surfaces = SurfacePair.from_frame(frame)
    except ValueError as e:
        raise ConfigError(f"Surface table {file_path} is malformed: {str(e)}") from e
    logger.info("Loaded surfaces on a %dx%d grid from %s", *surfaces.grid.shape, file_path)
    return surfaces


def read_json(file_path: str) -> Dict[str, Any]:
    path = Path(file_path)
    if not path.exists():
        raise ConfigError(f"JSON file not found: {file_path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Error reading {file_path}: {str(e)}") from e


def load_artifacts(output_dir: str) -> Dict[str, Optional[Any]]:
    """
    Collect whatever artifacts an output directory holds.

    Missing files map to None so the results browser can show partial runs.
    """
    base = Path(output_dir)
    tables = {"surfaces": SURFACES_FILE, "value": VALUE_FILE, "trace": TRACE_FILE}
    documents = {"convergence": CONVERGENCE_FILE, "residuals": RESIDUALS_FILE,
                 "report": REPORT_FILE, "validation": VALIDATION_FILE}
    artifacts: Dict[str, Optional[Any]] = {}
    for key, name in tables.items():
        path = base / name
        artifacts[key] = pd.read_csv(path) if path.exists() else None
    for key, name in documents.items():
        path = base / name
        artifacts[key] = read_json(str(path)) if path.exists() else None
    return artifacts
