"""Shared fixtures: the natural-scale model and its solved surfaces."""

import numpy as np
import pytest

from src.models.cost import constant_cost, detection_cost
from src.models.presets import bm_gaussian
from src.models.surfaces import TriangleGrid
from src.services.diffusion_core import natural_scale_model, transform_model
from src.services.surface_solver import extremal_surfaces

# Closed forms on the natural scale with c = 1: f* = i + 1/2, g* = s - 1/2
HALF = 0.5


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale runs (deselect with -m 'not slow')")


@pytest.fixture(scope="session")
def natural_model():
    return natural_scale_model((-2.0, 2.0))


@pytest.fixture(scope="session")
def unit_cost():
    return constant_cost(1.0)


@pytest.fixture(scope="session")
def small_grid(natural_model):
    # step 0.25 puts every kink of the closed forms on a node
    return TriangleGrid.uniform(natural_model.truncation, 17)


@pytest.fixture(scope="session")
def natural_surfaces(natural_model, unit_cost, small_grid):
    return extremal_surfaces(natural_model, unit_cost, small_grid)


@pytest.fixture(scope="session")
def gaussian_model():
    spec, law = bm_gaussian()
    return transform_model(spec, law, name="bm-gaussian")


@pytest.fixture(scope="session")
def gaussian_detection_cost():
    return detection_cost(1.0)


@pytest.fixture
def closed_form():
    """Exact f*, g* on the natural scale for c = 1."""
    def surfaces(i, s):
        i, s = np.asarray(i, dtype=float), np.asarray(s, dtype=float)
        return np.minimum(i + HALF, s), np.maximum(s - HALF, i)
    return surfaces
