# src/models/presets.py
"""Named model presets and user coefficient tables."""

import logging
from typing import Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import PchipInterpolator
from scipy.special import ndtr, ndtri

from src.models.diffusion import DiffusionSpec, HiddenLevelLaw

logger = logging.getLogger(__name__)

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

COEFFICIENT_COLUMNS = ("z", "a", "b", "F", "dF", "d2F")


def _normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def standard_normal_law() -> HiddenLevelLaw:
    return HiddenLevelLaw(
        cdf=ndtr,
        pdf=_normal_pdf,
        pdf_derivative=lambda z: -np.asarray(z, dtype=float) * _normal_pdf(z),
        quantile=ndtri,
    )


def brownian_spec() -> DiffusionSpec:
    """dZ = dB on the real line."""
    return DiffusionSpec(
        drift=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
        diffusion=lambda z: np.ones_like(np.asarray(z, dtype=float)),
        domain=(-np.inf, np.inf),
        diffusion_derivative=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
    )


def bm_gaussian() -> Tuple[DiffusionSpec, HiddenLevelLaw]:
    """Observed Brownian motion with a standard normal hidden level."""
    return brownian_spec(), standard_normal_law()


def coefficients_from_frame(frame: pd.DataFrame) -> Tuple[DiffusionSpec, HiddenLevelLaw]:
    """
    Build a diffusion and a hidden-level law from tabulated coefficients.

    Args:
        frame: Columns z, a, b, F, dF, d2F with z strictly increasing

    Returns:
        Tuple of DiffusionSpec and HiddenLevelLaw interpolated with PCHIP
    """
    missing = [c for c in COEFFICIENT_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"coefficient table lacks columns: {missing}")
    frame = frame.sort_values("z")
    z = frame["z"].to_numpy(dtype=float)
    if np.any(np.diff(z) <= 0.0):
        raise ValueError("coefficient table has repeated z values")
    cdf_values = frame["F"].to_numpy(dtype=float)
    if np.any(np.diff(cdf_values) <= 0.0):
        raise ValueError("tabulated F must be strictly increasing")

    drift = PchipInterpolator(z, frame["a"].to_numpy(dtype=float), extrapolate=False)
    diffusion = PchipInterpolator(z, frame["b"].to_numpy(dtype=float), extrapolate=False)
    cdf = PchipInterpolator(z, cdf_values, extrapolate=False)
    pdf = PchipInterpolator(z, frame["dF"].to_numpy(dtype=float), extrapolate=False)
    pdf_derivative = PchipInterpolator(z, frame["d2F"].to_numpy(dtype=float), extrapolate=False)
    quantile = PchipInterpolator(cdf_values, z, extrapolate=False)

    spec = DiffusionSpec(
        drift=drift,
        diffusion=diffusion,
        domain=(float(z[0]), float(z[-1])),
        diffusion_derivative=diffusion.derivative(),
    )
    law = HiddenLevelLaw(cdf=cdf, pdf=pdf, pdf_derivative=pdf_derivative, quantile=quantile)
    logger.info("Loaded coefficient table with %d rows on [%g, %g]", len(frame), z[0], z[-1])
    return spec, law
