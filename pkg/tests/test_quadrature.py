"""Tests for the Gauss-Kronrod panels and the checked quad wrapper."""

import numpy as np
import pytest

from src.utils.errors import QuadratureFailure
from src.utils.numerics import (
    backward_difference,
    central_difference,
    forward_difference,
    monotone_violations,
    second_difference,
    strictly_increasing,
)
from src.utils.quadrature import cumulative_integral, gauss_kronrod_panels, integrate


class TestGaussKronrod:

    def test_polynomial_is_exact(self):
        values, errors = gauss_kronrod_panels(lambda x: x ** 6 - 3 * x ** 2, [0.0, -1.0], [1.0, 2.0])
        expected = [1 / 7 - 1, (2 ** 7 + 1) / 7 - (8 + 1)]
        assert values == pytest.approx(expected, rel=1e-13)
        assert np.all(errors < 1e-12)

    def test_reversed_panel_changes_sign(self):
        forward, _ = gauss_kronrod_panels(np.exp, [0.0], [1.0])
        backward, _ = gauss_kronrod_panels(np.exp, [1.0], [0.0])
        assert backward[0] == pytest.approx(-forward[0], rel=1e-15)

    def test_cumulative_integral_matches_antiderivative(self):
        grid = np.linspace(0.0, 3.0, 13)
        running = cumulative_integral(np.cos, grid, tol=1e-12)
        assert running[0] == 0.0
        np.testing.assert_allclose(running, np.sin(grid), atol=1e-11)

    def test_cumulative_integral_refines_steep_integrand(self):
        grid = np.array([0.0, 1.0])
        running = cumulative_integral(lambda x: 50.0 * np.exp(-50.0 * x), grid, tol=1e-10)
        assert running[-1] == pytest.approx(1.0 - np.exp(-50.0), abs=1e-10)

    def test_short_grid_gives_zeros(self):
        assert cumulative_integral(np.sin, [0.5]).tolist() == [0.0]


class TestIntegrate:

    def test_basic_value(self):
        assert integrate(np.sin, 0.0, np.pi) == pytest.approx(2.0, abs=1e-10)

    def test_equal_limits(self):
        assert integrate(lambda x: 1.0 / x, 1.0, 1.0) == 0.0

    def test_reversed_limits(self):
        assert integrate(lambda x: x, 1.0, 0.0) == pytest.approx(-0.5, abs=1e-12)

    def test_kink_is_split(self):
        value = integrate(lambda x: abs(x - 0.3), 0.0, 1.0, points=[0.3])
        assert value == pytest.approx(0.5 * 0.3 ** 2 + 0.5 * 0.7 ** 2, abs=1e-12)

    def test_divergent_integral_raises(self):
        with pytest.raises(QuadratureFailure):
            integrate(lambda x: 1.0 / x, 0.0, 1.0, tol=1e-12)


class TestFiniteDifferences:

    def test_second_order_formulas_exact_on_quadratics(self):
        def quadratic(x):
            return 3.0 * x * x - 2.0 * x + 1.0

        for rule in (central_difference, backward_difference, forward_difference):
            assert rule(quadratic, 0.7, 1e-3) == pytest.approx(6.0 * 0.7 - 2.0, abs=1e-7)
        assert second_difference(quadratic, 0.7, 1e-3) == pytest.approx(6.0, abs=1e-5)

    def test_strictly_increasing(self):
        assert strictly_increasing([0.0, 0.1, 0.5])
        assert not strictly_increasing([0.0, 0.0, 0.5])

    def test_monotone_violations_respects_mask_and_slack(self):
        values = np.array([[0.0, 1.0, 0.5], [0.0, 1.0, 2.0]])
        mask = np.ones_like(values, dtype=bool)
        assert monotone_violations(values, 1, True, 0.0, mask) == [(0, 1)]
        assert monotone_violations(values, 1, True, 0.6, mask) == []
        mask[0, 2] = False
        assert monotone_violations(values, 1, True, 0.0, mask) == []
