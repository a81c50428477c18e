# src/services/diffusion_core.py
"""
One-dimensional diffusion apparatus: the transform X = 2F(Z) - 1, scale and
speed caches, hitting probabilities, the Green function and occupation integrals.
"""

import logging
from typing import Callable, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from src.config.constants import (
    DEFAULT_EPSILON,
    DEFAULT_SUPPORT_MARGIN,
    QUAD_TOL,
    SCALE_GRID_POINTS,
    SCALE_TOL,
)
from src.models.diffusion import (
    DiffusionSpec,
    HiddenLevelLaw,
    Interval,
    TransformedModel,
    check_lipschitz_b2,
)
from src.utils.errors import DegenerateInterval, NonPositiveSigma
from src.utils.quadrature import cumulative_integral, gauss_kronrod_panels, integrate

logger = logging.getLogger(__name__)


def _monotone_hermite(nodes: np.ndarray, values: np.ndarray, slopes: np.ndarray) -> CubicHermiteSpline:
    """Hermite interpolant with slopes limited so the cubic stays monotone (Fritsch-Carlson)."""
    secants = np.diff(values) / np.diff(nodes)
    bound = np.full(nodes.shape, np.inf)
    bound[:-1] = np.minimum(bound[:-1], 3.0 * secants)
    bound[1:] = np.minimum(bound[1:], 3.0 * secants)
    return CubicHermiteSpline(nodes, values, np.clip(slopes, 0.0, bound))


def transform_model(spec: DiffusionSpec, law: HiddenLevelLaw, truncation: Interval = None,
                    epsilon: float = DEFAULT_EPSILON, grid_points: int = SCALE_GRID_POINTS,
                    tol: float = QUAD_TOL, name: str = "transformed") -> TransformedModel:
    """
    Build the model of X = 2F(Z) - 1 with cached scale and speed.

    Args:
        spec: Observed diffusion Z
        law: Law of the hidden level
        truncation: Interval inside (-1, 1) for the numerics; defaults to [-1+eps, 1-eps]
        epsilon: Distance of the default truncation from +-1; the support reaches eps/2
        grid_points: Size of the uniform cache grid over the support
        tol: Absolute quadrature tolerance of the caches
        name: Label carried into reports

    Returns:
        TransformedModel whose callables are vectorized

    Raises:
        NonPositiveSigma: if sigma is not positive on the truncation
        QuadratureFailure: if a cached integral does not converge
    """
    if truncation is None:
        truncation = (-1.0 + epsilon, 1.0 - epsilon)
    lo, hi = float(truncation[0]), float(truncation[1])
    if not -1.0 < lo < hi < 1.0:
        raise ValueError(f"truncation must lie inside (-1, 1), got [{lo}, {hi}]")
    support = (min(lo, -1.0 + 0.5 * epsilon), max(hi, 1.0 - 0.5 * epsilon))

    def level(x):
        return law.quantile(0.5 * (np.asarray(x, dtype=float) + 1.0))

    z_lo, z_hi = float(level(support[0])), float(level(support[1]))
    if not spec.domain[0] < z_lo < z_hi < spec.domain[1]:
        raise ValueError(
            f"observed domain {spec.domain} does not cover the preimage [{z_lo:.6g}, {z_hi:.6g}] of the support"
        )

    def mu(x):
        z = level(x)
        return 2.0 * spec.drift(z) * law.pdf(z) + spec.diffusion(z) ** 2 * law.pdf_derivative(z)

    def sigma(x):
        z = level(x)
        return 2.0 * spec.diffusion(z) * law.pdf(z)

    sample_points = np.linspace(lo, hi, 1025)
    sigma_sample = np.asarray(sigma(sample_points), dtype=float)
    if np.any(~np.isfinite(sigma_sample)) or np.any(sigma_sample <= 0.0):
        bad = sample_points[np.argmin(np.where(np.isfinite(sigma_sample), sigma_sample, -np.inf))]
        raise NonPositiveSigma(f"sigma({bad:.6g}) is not positive")
    check_lipschitz_b2(spec, np.asarray(level(sample_points), dtype=float))

    def drift_ratio(x):
        return 2.0 * mu(x) / np.asarray(sigma(x), dtype=float) ** 2

    nodes = np.union1d(np.linspace(support[0], support[1], grid_points), [0.0])
    origin = int(np.searchsorted(nodes, 0.0))

    logger.info("Building scale cache for %s on %d nodes", name, nodes.size)
    log_density = cumulative_integral(drift_ratio, nodes, tol)
    log_density -= log_density[origin]

    def log_scale_density_exact(y):
        # K(y) = K(node below y) + GK15 over the remaining piece
        y = np.asarray(y, dtype=float)
        j = np.clip(np.searchsorted(nodes, y, side="right") - 1, 0, nodes.size - 2)
        inner, _ = gauss_kronrod_panels(drift_ratio, nodes[j].ravel(), y.ravel())
        return log_density[j] + inner.reshape(y.shape)

    scale_nodes = cumulative_integral(lambda y: np.exp(-log_scale_density_exact(y)), nodes, tol)
    scale_nodes -= scale_nodes[origin]

    log_density_interp = CubicHermiteSpline(nodes, log_density, drift_ratio(nodes))
    scale_interp = _monotone_hermite(nodes, scale_nodes, np.exp(-log_density))

    def scale_derivative(x):
        return np.exp(-log_density_interp(x))

    def speed_density(x):
        return 2.0 * np.exp(log_density_interp(x)) / np.asarray(sigma(x), dtype=float) ** 2

    speed_nodes = cumulative_integral(speed_density, nodes, tol)
    speed_nodes -= speed_nodes[origin]
    weighted_nodes = cumulative_integral(lambda y: scale_interp(y) * speed_density(y), nodes, tol)
    weighted_nodes -= weighted_nodes[origin]
    density_nodes = speed_density(nodes)
    speed_interp = CubicHermiteSpline(nodes, speed_nodes, density_nodes)
    weighted_interp = CubicHermiteSpline(nodes, weighted_nodes, scale_nodes * density_nodes)

    return TransformedModel(
        mu=mu,
        sigma=sigma,
        scale=scale_interp,
        scale_derivative=scale_derivative,
        speed_density=speed_density,
        speed_mass=speed_interp,
        scale_speed_mass=weighted_interp,
        truncation=(lo, hi),
        support=support,
        name=name,
    )


def natural_scale_model(truncation: Interval, margin: float = DEFAULT_SUPPORT_MARGIN) -> TransformedModel:
    """
    Standard Brownian motion used directly as the range process.

    The state space is the whole line; numerics run on `truncation` and diagonal
    starts may use `margin` beyond it.
    """
    lo, hi = float(truncation[0]), float(truncation[1])
    if not lo < hi:
        raise ValueError(f"truncation must be a non-empty interval, got [{lo}, {hi}]")

    def as_array(x):
        return np.asarray(x, dtype=float)

    return TransformedModel(
        mu=lambda x: np.zeros_like(as_array(x)),
        sigma=lambda x: np.ones_like(as_array(x)),
        scale=lambda x: as_array(x) * 1.0,
        scale_derivative=lambda x: np.ones_like(as_array(x)),
        speed_density=lambda x: 2.0 * np.ones_like(as_array(x)),
        speed_mass=lambda x: 2.0 * as_array(x),
        scale_speed_mass=lambda x: as_array(x) ** 2,
        truncation=(lo, hi),
        support=(lo - margin, hi + margin),
        name="natural-scale",
        caveat=f"state space truncated to [{lo:g}, {hi:g}]; unbounded behavior is approximated from inside",
    )


def _check_interval(model: TransformedModel, a: float, b: float, *points: float) -> float:
    for p in (a, b) + points:
        if not model.contains(p):
            raise ValueError(f"point {p} lies outside the truncation {model.truncation}")
    if not a <= b or any(not a <= p <= b for p in points):
        raise ValueError(f"need a <= x <= b, got a={a}, b={b}, points={points}")
    width = float(model.scale(b)) - float(model.scale(a))
    if width < SCALE_TOL:
        raise DegenerateInterval(f"L({b}) - L({a}) = {width:.3g} is below tolerance")
    return width


def hitting_probabilities(model: TransformedModel, a: float, x: float, b: float) -> Tuple[float, float]:
    """
    Probabilities that X started at x exits [a, b] at a and at b.

    Returns:
        Tuple (p_lower, p_upper)
    """
    width = _check_interval(model, a, b, x)
    scale_x = float(model.scale(x))
    p_lower = (float(model.scale(b)) - scale_x) / width
    p_upper = (scale_x - float(model.scale(a))) / width
    return p_lower, p_upper


def green_function(model: TransformedModel, a: float, b: float, x: float, y: float) -> float:
    """Green function of X killed on exiting (a, b)."""
    width = _check_interval(model, a, b, x, y)
    low, high = min(x, y), max(x, y)
    return (float(model.scale(b)) - float(model.scale(high))) * (float(model.scale(low)) - float(model.scale(a))) / width


def expected_additive_functional(model: TransformedModel, a: float, b: float, x: float,
                                 h: Callable[[float], float], tol: float = QUAD_TOL) -> float:
    """
    Expected integral of h(X) up to the exit from (a, b), started at x.

    The integrand is split at y = x where the Green function has its kink.
    """
    width = _check_interval(model, a, b, x)
    scale_a, scale_b, scale_x = float(model.scale(a)), float(model.scale(b)), float(model.scale(x))

    def integrand(y: float) -> float:
        scale_y = float(model.scale(y))
        if y <= x:
            kernel = (scale_b - scale_x) * (scale_y - scale_a) / width
        else:
            kernel = (scale_b - scale_y) * (scale_x - scale_a) / width
        return float(h(y)) * kernel * float(model.speed_density(y))

    return integrate(integrand, a, b, tol=tol, points=[x])
