# src/config/constants.py
"""Constants and default values for the hidden target detection solver."""

from pathlib import Path
from typing import Dict, Tuple

# Domain truncation: numerics run on [-1 + eps, 1 - eps]
DEFAULT_EPSILON = 1e-3
# Natural-scale models live on the real line; diagonal starts may go this far past the grid
DEFAULT_SUPPORT_MARGIN = 5.0
DEFAULT_NATURAL_TRUNCATION: Tuple[float, float] = (-3.0, 3.0)

# Scale/speed caches
SCALE_GRID_POINTS = 4096
QUAD_TOL = 1e-10
QUAD_LIMIT = 200
GK_MAX_DEPTH = 30
SCALE_TOL = 1e-14
# slope handed to the stepper for a trial stage past the diagonal
STAGE_SLOPE_CAP = 1e12

# Surface solver
GRID_POINTS = 257
SLOPE_SWITCH = 10.0
ODE_RTOL = 1e-8
ODE_ATOL = 1e-10
ODE_METHOD = "DOP853"
SCHEDULE_MAX_TERMS = 40
TOL_SUP = 1e-6
MONOTONICITY_SLACK = 1e-5
EDGE_DISTANCE = 0.25

# Value function
A_PRIME_TABLE_POINTS = 129
FD_STEP = 1e-4
C0_GAP_TOL = 1e-5
REGION_TOL = 1e-12

# Simulation
DEFAULT_DT = 1e-4
DEFAULT_HORIZON = 50.0
DEFAULT_N_PATHS = 10_000
DEFAULT_BLOCK_SIZE = 8192
CENSORING_CAP = 0.01
SCHEMES = ("euler-maruyama", "milstein")
RULE_KINDS = ("extremal", "immediate", "range_threshold", "quantile_hit")
QUANTILE_GRID: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DOOB_THRESHOLDS: Tuple[float, ...] = (0.5, 1.0, 2.0)

# Trinomial oracle
DP_TRUNCATION: Tuple[float, float] = (-2.0, 2.0)
DP_SPACE_STEPS = 100
DP_TIME_FACTOR = 1.5

# Model presets selectable by name
MODEL_PRESETS: Dict[str, str] = {
    "bm-gaussian": "Brownian motion observed, standard normal hidden level",
    "natural-scale": "Standard Brownian motion as the range process, truncated",
}
COST_KINDS = ("constant", "detection", "separable", "general")

# CLI
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3
THREADS_ENV_VAR = "HTD_THREADS"
DEFAULT_OUTPUT_DIR = Path("output")
CSV_FLOAT_FORMAT = "%.17g"

# Artifact file names
SURFACES_FILE = "surfaces.csv"
CONVERGENCE_FILE = "convergence.json"
VALUE_FILE = "value.csv"
RESIDUALS_FILE = "residuals.json"
REPORT_FILE = "report.json"
TRACE_FILE = "trace.csv"
VALIDATION_FILE = "validation.json"

# Region labels
REGIONS: Tuple[str, ...] = ("C0", "Cminus", "Cplus", "D")

# Application settings
APP_SETTINGS = {
    "page_title": "Hidden Target Detection",
    "page_icon": "🎯",
    "layout": "wide",
    "initial_sidebar_state": "expanded"
}

PAGES = ("Surfaces", "Value Function", "Simulation", "Validation", "About")
