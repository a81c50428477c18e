# src/models/diffusion.py
"""Observed diffusion, hidden-level law and the transformed model on (-1, 1)."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

RealFunction = Callable[[np.ndarray], np.ndarray]
Interval = Tuple[float, float]


@dataclass(frozen=True)
class DiffusionSpec:
    """The observed process dZ = a(Z) dt + b(Z) dB on an open interval containing 0."""
    drift: RealFunction
    diffusion: RealFunction
    domain: Interval = (-np.inf, np.inf)
    diffusion_derivative: Optional[RealFunction] = None


@dataclass(frozen=True)
class HiddenLevelLaw:
    """Distribution of the hidden level: F, F', F'' and the quantile function."""
    cdf: RealFunction
    pdf: RealFunction
    pdf_derivative: RealFunction
    quantile: RealFunction


@dataclass(frozen=True)
class TransformedModel:
    """
    A diffusion on the real line described through its scale and speed.

    `speed_mass` is M(x) = int_0^x m(dy) and `scale_speed_mass` is
    P(x) = int_0^x L(y) m(dy); the solver reads inner integrals off these two.
    `support` contains `truncation` and is where diagonal starts may be placed.
    """
    mu: RealFunction
    sigma: RealFunction
    scale: RealFunction
    scale_derivative: RealFunction
    speed_density: RealFunction
    speed_mass: RealFunction
    scale_speed_mass: RealFunction
    truncation: Interval
    support: Interval
    name: str = "model"
    caveat: str = ""

    def half_variance(self, x):
        return 0.5 * np.asarray(self.sigma(x), dtype=float) ** 2

    def contains(self, x: float, tol: float = 1e-12) -> bool:
        lo, hi = self.truncation
        return lo - tol <= x <= hi + tol

    def speed_moment(self, a: float, b: float, anchor: float) -> float:
        """int_a^b [L(y) - L(anchor)] m(dy)."""
        p = float(self.scale_speed_mass(b)) - float(self.scale_speed_mass(a))
        m = float(self.speed_mass(b)) - float(self.speed_mass(a))
        return p - float(self.scale(anchor)) * m


def validate_diffusion(spec: DiffusionSpec, samples: np.ndarray) -> None:
    """Raise ValueError unless b > 0 at every sample."""
    values = np.asarray(spec.diffusion(samples), dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values <= 0.0):
        bad = samples[np.argmin(np.where(np.isfinite(values), values, -np.inf))]
        raise ValueError(f"diffusion coefficient must be positive; b({bad:.6g}) is not")


def check_lipschitz_b2(spec: DiffusionSpec, samples: np.ndarray, bound: float = 1e6) -> float:
    """
    Largest difference quotient of b^2 over consecutive samples.

    Only a warning is logged when it exceeds the bound; a sampled quotient says
    nothing definite about local Lipschitz continuity.
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    b2 = np.asarray(spec.diffusion(samples), dtype=float) ** 2
    quotients = np.abs(np.diff(b2)) / np.diff(samples)
    worst = float(np.max(quotients)) if quotients.size else 0.0
    if worst > bound:
        logger.warning("b^2 difference quotient %.3g exceeds %.3g; local Lipschitz continuity is doubtful",
                       worst, bound)
    return worst


def validate_law(law: HiddenLevelLaw, samples: np.ndarray, tol: float = 1e-8) -> None:
    """
    Sampled checks on the hidden-level law.

    Raises:
        ValueError: if F is not strictly increasing, F(F^-1(u)) != u, F' < 0,
            or F' disagrees with a centered difference of F
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    cdf = np.asarray(law.cdf(samples), dtype=float)
    if np.any(np.diff(cdf) <= 0.0):
        raise ValueError("hidden-level cdf must be strictly increasing")
    if np.any((cdf <= 0.0) | (cdf >= 1.0)):
        raise ValueError("hidden-level cdf must take values in (0, 1)")

    u = np.linspace(0.05, 0.95, 19)
    roundtrip = np.asarray(law.cdf(law.quantile(u)), dtype=float)
    if np.max(np.abs(roundtrip - u)) > tol:
        raise ValueError("cdf(quantile(u)) does not reproduce u")

    pdf = np.asarray(law.pdf(samples), dtype=float)
    if np.any(pdf < 0.0):
        raise ValueError("hidden-level density must be non-negative")
    h = 1e-5
    centered = (np.asarray(law.cdf(samples + h)) - np.asarray(law.cdf(samples - h))) / (2.0 * h)
    scale = np.maximum(np.abs(pdf), 1e-12)
    if np.max(np.abs(centered - pdf) / scale) > 1e-4:
        raise ValueError("hidden-level density disagrees with a centered difference of the cdf")
