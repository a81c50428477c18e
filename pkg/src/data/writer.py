# src/data/writer.py
"""CSV and JSON artifact writers; the output depends only on the data written."""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.config.constants import CSV_FLOAT_FORMAT

logger = logging.getLogger(__name__)


def _jsonable(value: Any) -> Any:
    """Plain JSON data; NaN and infinities become null."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, pd.DataFrame):
        return _jsonable(value.to_dict(orient="records"))
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write a table with '.' decimals and 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %d rows to %s", len(frame), path)
    return path


def write_json(data: Dict[str, Any], path: Path, config: Optional[Dict[str, Any]] = None) -> Path:
    """Write a JSON document with sorted keys, echoing the resolved configuration under "config"."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = dict(data)
    if config is not None:
        document["config"] = config
    path.write_text(json.dumps(_jsonable(document), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info("Wrote %s", path)
    return path
