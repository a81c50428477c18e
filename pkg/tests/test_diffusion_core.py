"""Tests for the transformed model and the scale/speed apparatus."""

import numpy as np
import pandas as pd
import pytest
from scipy.special import ndtri

from src.models.diffusion import DiffusionSpec, check_lipschitz_b2, validate_diffusion, validate_law
from src.models.presets import bm_gaussian, brownian_spec, coefficients_from_frame, standard_normal_law
from src.services.diffusion_core import (
    expected_additive_functional,
    green_function,
    hitting_probabilities,
    natural_scale_model,
    transform_model,
)
from src.utils.errors import DegenerateInterval, NonPositiveSigma

# L(x) = 2 phi(0) Phi^-1((x + 1) / 2) for Brownian motion with a normal hidden level
GAUSSIAN_SCALE_FACTOR = 2.0 / np.sqrt(2.0 * np.pi)


class TestNaturalScale:

    def test_hitting_probabilities(self, natural_model):
        p_lower, p_upper = hitting_probabilities(natural_model, -1.0, 0.5, 1.0)
        assert p_lower == pytest.approx(0.25, abs=1e-15)
        assert p_upper == pytest.approx(0.75, abs=1e-15)

    def test_green_function_symmetric_and_vanishing(self, natural_model):
        assert green_function(natural_model, -1.0, 1.0, -0.2, 0.6) == pytest.approx(
            green_function(natural_model, -1.0, 1.0, 0.6, -0.2), abs=1e-14)
        assert green_function(natural_model, -1.0, 1.0, -1.0, 0.3) == 0.0
        assert green_function(natural_model, -1.0, 1.0, 0.3, 1.0) == 0.0

    def test_expected_exit_time(self, natural_model):
        # E_x of the exit time of Brownian motion from (-1, 1) is 1 - x^2
        for x in (0.0, 0.5, -0.8):
            value = expected_additive_functional(natural_model, -1.0, 1.0, x, lambda _: 1.0)
            assert value == pytest.approx(1.0 - x * x, abs=1e-8)

    def test_speed_moment(self, natural_model):
        # int_a^b (y - anchor) 2 dy
        assert natural_model.speed_moment(0.0, 1.0, 0.0) == pytest.approx(1.0)
        assert natural_model.speed_moment(-0.5, 0.5, 0.5) == pytest.approx(-1.0)

    def test_points_outside_truncation_rejected(self, natural_model):
        with pytest.raises(ValueError, match="outside the truncation"):
            hitting_probabilities(natural_model, -3.0, 0.0, 1.0)

    def test_degenerate_interval(self, natural_model):
        with pytest.raises(DegenerateInterval):
            hitting_probabilities(natural_model, 0.5, 0.5, 0.5)

    def test_support_contains_truncation(self):
        model = natural_scale_model((-1.0, 1.0), margin=2.0)
        assert model.support == (-3.0, 3.0)
        assert model.caveat


class TestTransformedGaussian:

    def test_scale_matches_closed_form(self, gaussian_model):
        x = np.linspace(-0.95, 0.95, 39)
        expected = GAUSSIAN_SCALE_FACTOR * ndtri(0.5 * (x + 1.0))
        np.testing.assert_allclose(gaussian_model.scale(x), expected, rtol=1e-7, atol=1e-9)

    def test_hitting_probabilities_follow_observed_levels(self, gaussian_model):
        a, x, b = -0.6, 0.1, 0.8
        z = ndtri(0.5 * (np.array([a, x, b]) + 1.0))
        p_lower, p_upper = hitting_probabilities(gaussian_model, a, x, b)
        assert p_lower == pytest.approx((z[2] - z[1]) / (z[2] - z[0]), abs=1e-7)
        assert p_lower + p_upper == pytest.approx(1.0, abs=1e-12)

    def test_default_truncation_and_support(self, gaussian_model):
        assert gaussian_model.truncation == pytest.approx((-0.999, 0.999))
        assert gaussian_model.support == pytest.approx((-0.9995, 0.9995))

    def test_sigma_positive_and_mu_odd(self, gaussian_model):
        x = np.linspace(-0.9, 0.9, 7)
        assert np.all(gaussian_model.sigma(x) > 0.0)
        np.testing.assert_allclose(gaussian_model.mu(x), -gaussian_model.mu(-x), atol=1e-12)

    def test_truncation_must_be_inside_unit_interval(self):
        spec, law = bm_gaussian()
        with pytest.raises(ValueError, match="inside"):
            transform_model(spec, law, truncation=(-1.0, 0.5))

    def test_vanishing_diffusion_rejected(self):
        spec = DiffusionSpec(drift=lambda z: 0.0 * np.asarray(z), diffusion=lambda z: np.asarray(z, dtype=float))
        with pytest.raises(NonPositiveSigma):
            transform_model(spec, standard_normal_law(), grid_points=64)


class TestValidation:

    def test_validate_law_accepts_normal(self):
        validate_law(standard_normal_law(), np.linspace(-3.0, 3.0, 25))

    def test_validate_law_rejects_wrong_density(self):
        law = standard_normal_law()
        broken = law.__class__(cdf=law.cdf, pdf=lambda z: 2.0 * law.pdf(z),
                               pdf_derivative=law.pdf_derivative, quantile=law.quantile)
        with pytest.raises(ValueError, match="density"):
            validate_law(broken, np.linspace(-2.0, 2.0, 9))

    def test_validate_diffusion(self):
        validate_diffusion(brownian_spec(), np.linspace(-1.0, 1.0, 5))
        spec = DiffusionSpec(drift=np.zeros_like, diffusion=lambda z: np.asarray(z, dtype=float))
        with pytest.raises(ValueError, match="positive"):
            validate_diffusion(spec, np.linspace(-1.0, 1.0, 5))

    def test_lipschitz_check_only_warns(self, caplog):
        spec = DiffusionSpec(drift=np.zeros_like, diffusion=lambda z: 1.0 + np.sqrt(np.abs(np.asarray(z))))
        worst = check_lipschitz_b2(spec, np.linspace(-1e-8, 1e-8, 3), bound=10.0)
        assert worst > 10.0
        assert "Lipschitz" in caplog.text


class TestCoefficientTable:

    def test_table_reproduces_brownian_preset(self):
        z = np.linspace(-5.0, 5.0, 401)
        law = standard_normal_law()
        frame = pd.DataFrame({"z": z, "a": 0.0, "b": 1.0, "F": law.cdf(z), "dF": law.pdf(z),
                              "d2F": law.pdf_derivative(z)})
        spec, table_law = coefficients_from_frame(frame)
        assert spec.domain == (-5.0, 5.0)
        assert float(table_law.cdf(0.3)) == pytest.approx(float(law.cdf(0.3)), abs=1e-5)
        assert float(table_law.quantile(0.7)) == pytest.approx(float(law.quantile(0.7)), abs=1e-4)

    def test_missing_columns(self):
        with pytest.raises(ValueError, match="lacks columns"):
            coefficients_from_frame(pd.DataFrame({"z": [0.0, 1.0], "a": [0.0, 0.0]}))
