"""Tests for the value function on the natural scale, where V(0,0,0) = 3/(4c)."""

import numpy as np
import pytest

from src.models.cost import position_cost
from src.services.value_function import (
    ValueField,
    a1_prime,
    a2_prime,
    classify_region,
    default_residual_sample,
    default_value_points,
    freeboundary_residuals,
    lower_excursion_value,
    particular_solution_H,
    upper_excursion_value,
    value_on_C0,
    value_on_Cminus,
    value_on_Cplus,
    value_table,
)
from src.utils.errors import RegionMismatch, UnsupportedCost

TOL = 1e-6


@pytest.fixture(scope="module")
def field(natural_model, unit_cost, natural_surfaces):
    return ValueField(natural_model, unit_cost, natural_surfaces, table_points=33)


class TestRegions:
    @pytest.mark.parametrize("point, region", [
        ((0.0, 0.0, 0.0), "C0"),
        ((-0.2, 0.1, 0.3), "C0"),
        ((-1.0, -0.9, 0.5), "Cminus"),
        ((-1.0, 0.2, 0.5), "Cplus"),
        ((-1.0, -0.25, 0.5), "D"),
    ])
    def test_classify(self, natural_surfaces, point, region):
        assert classify_region(natural_surfaces, *point) == region


class TestExplicitRegions:
    def test_lower_excursion(self, natural_model, unit_cost, natural_surfaces):
        value = value_on_Cminus(natural_model, unit_cost, natural_surfaces, -1.0, -0.9, 0.5)
        assert abs(value - 1.66) < TOL

    def test_upper_excursion(self, natural_model, unit_cost, natural_surfaces):
        value = value_on_Cplus(natural_model, unit_cost, natural_surfaces, -1.0, 0.2, 0.5)
        assert abs(value - 1.54) < TOL

    def test_value_meets_payoff_at_the_boundary(self, natural_model, unit_cost, natural_surfaces):
        f, g = float(natural_surfaces.f_at(-1.0, 0.5)), float(natural_surfaces.g_at(-1.0, 0.5))
        assert abs(value_on_Cminus(natural_model, unit_cost, natural_surfaces, -1.0, f, 0.5) - 1.5) < TOL
        assert abs(value_on_Cplus(natural_model, unit_cost, natural_surfaces, -1.0, g, 0.5) - 1.5) < TOL

    def test_wrong_region_raises(self, natural_model, unit_cost, natural_surfaces):
        with pytest.raises(RegionMismatch):
            value_on_Cminus(natural_model, unit_cost, natural_surfaces, -1.0, 0.2, 0.5)
        with pytest.raises(RegionMismatch):
            value_on_Cplus(natural_model, unit_cost, natural_surfaces, -1.0, -0.9, 0.5)

    def test_fixed_boundary_values_move_with_the_boundary(self, natural_model, unit_cost):
        # V_{f,g} increases in f on C- and decreases in g on C+
        lower = [lower_excursion_value(natural_model, unit_cost, -1.0, -0.9, 0.5, f) for f in (-0.7, -0.5, -0.3)]
        upper = [upper_excursion_value(natural_model, unit_cost, -1.0, 0.2, 0.5, g) for g in (-0.2, 0.0, 0.1)]
        assert np.all(np.diff(lower) > 0.0)
        assert np.all(np.diff(upper) < 0.0)

    def test_particular_solution(self, natural_model):
        # sigma = 1, mu = 0: H(x) = x^2 solves H''/2 = 1 with H(0) = 0
        x = np.array([-1.5, -0.3, 0.0, 0.7])
        assert np.allclose(particular_solution_H(natural_model, x), x ** 2, atol=1e-10)


class TestValueOnC0:
    def test_origin(self, field):
        parts = field.components(0.0, 0.0, 0.0)
        assert parts["region"] == "C0"
        assert abs(parts["value"] - 0.75) < 1e-3
        assert parts["c0_gap"] < 1e-4

    def test_evaluations_agree_off_the_diagonal(self, field):
        parts = field.components(0.0, 0.2, 0.3)
        assert parts["region"] == "C0"
        assert parts["c0_gap"] < 1e-6

    def test_coefficient_slopes(self, natural_model, unit_cost, natural_surfaces):
        # both coefficient slopes are -1 on the natural scale
        assert a2_prime(natural_model, unit_cost, natural_surfaces, 0.3) == pytest.approx(-1.0, abs=1e-4)
        assert a1_prime(natural_model, unit_cost, natural_surfaces, -0.2) == pytest.approx(-1.0, abs=1e-4)

    def test_mirror_symmetry(self, field):
        # the natural scale is symmetric under x -> -x
        assert abs(field(-0.2, 0.1, 0.3) - field(-0.3, -0.1, 0.2)) < 1e-3

    def test_value_dominates_payoff(self, field):
        for i, x, s in [(-0.2, 0.1, 0.3), (-0.4, -0.1, 0.4), (0.5, 0.6, 0.9)]:
            assert field(i, x, s) >= s - i - 1e-9

    def test_x_outside_range_interval(self, natural_model, unit_cost, natural_surfaces):
        with pytest.raises(RegionMismatch):
            value_on_C0(natural_model, unit_cost, natural_surfaces, 0.0, 0.5, 0.2)

    def test_non_separable_cost(self, natural_model, natural_surfaces):
        cost = position_cost(lambda x: 1.0 + x ** 2)
        field = ValueField(natural_model, cost, natural_surfaces)
        assert field.a1_table is None
        with pytest.raises(UnsupportedCost):
            field(0.0, 0.0, 0.0)

    def test_stopping_set_value(self, field):
        assert field(-1.0, -0.25, 0.5) == pytest.approx(1.5)


class TestTablesAndResiduals:
    def test_value_table_columns(self, field, natural_surfaces):
        points = default_value_points(natural_surfaces, stride=8)
        table = value_table(field, points)
        assert list(table.columns) == ["i", "x", "s", "region", "value", "v_lower", "v_upper", "c0_gap"]
        assert len(table) == len(points)
        assert table.iloc[0][["i", "x", "s"]].tolist() == [0.0, 0.0, 0.0]
        off_c0 = table[table["region"] != "C0"]
        assert off_c0["c0_gap"].isna().all()

    def test_freeboundary_residuals(self, natural_model, unit_cost, natural_surfaces, field):
        sample = default_residual_sample(natural_surfaces, stride=2)
        assert sample
        residuals = freeboundary_residuals(natural_model, unit_cost, natural_surfaces, field, sample)
        assert set(residuals) == {"eq312", "eq313", "eq314", "eq315", "eq316", "eq317", "eq318"}
        for key, value in residuals.items():
            assert value < 1e-3, key
