"""Tests for the running-cost families."""

import numpy as np
import pandas as pd
import pytest

from src.models.cost import (
    check_cost,
    constant_cost,
    cost_from_table,
    detection_cost,
    position_cost,
    separable_cost,
)


class TestCostFamilies:

    def test_constant_cost(self):
        cost = constant_cost(2.0)
        assert float(cost(-0.5, 0.0, 0.5)) == 2.0
        assert cost.is_separable
        assert float(cost.separable.c2(0.3)) - float(cost.separable.c1(-0.3)) == 2.0
        assert check_cost(cost, (-1.0, 1.0)) == []

    def test_detection_cost_is_separable_in_range(self):
        cost = detection_cost(1.5)
        assert float(cost(-0.2, 0.1, 0.6)) == pytest.approx(1.5 * 0.8)
        assert float(cost.dc_di(-0.2, 0.1, 0.6)) == -1.5
        assert float(cost.dc_ds(-0.2, 0.1, 0.6)) == 1.5
        assert check_cost(cost, (-0.9, 0.9)) == []

    def test_costs_broadcast(self):
        i = np.array([-1.0, -0.5])
        for cost in (constant_cost(1.0), detection_cost(1.0)):
            assert np.asarray(cost(i, 0.0, 1.0)).shape == (2,)

    def test_nonpositive_constant_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            constant_cost(0.0)
        with pytest.raises(ValueError, match="positive"):
            detection_cost(-1.0)

    def test_separable_cost_partials(self):
        cost = separable_cost(lambda i: np.asarray(i) ** 3, lambda i: 3 * np.asarray(i) ** 2,
                              lambda s: 2 + np.asarray(s), lambda s: np.ones_like(np.asarray(s, dtype=float)))
        assert float(cost(0.5, 0.0, 1.0)) == pytest.approx(3.0 - 0.125)
        assert float(cost.dc_di(0.5, 0.0, 1.0)) == pytest.approx(-0.75)
        assert check_cost(cost, (-1.0, 1.0)) == []

    def test_position_cost_is_not_separable(self):
        cost = position_cost(lambda x: 1.0 + np.asarray(x) ** 2)
        assert not cost.is_separable
        assert float(cost(-1.0, 0.5, 1.0)) == pytest.approx(1.25)
        assert float(cost.dc_di(-1.0, 0.5, 1.0)) == 0.0

    def test_check_cost_flags_wrong_monotonicity(self):
        cost = separable_cost(lambda i: -np.asarray(i), lambda i: -np.ones_like(np.asarray(i, dtype=float)),
                              lambda s: 5 + np.asarray(s), lambda s: np.ones_like(np.asarray(s, dtype=float)))
        assert any("dc/di" in p for p in check_cost(cost, (-1.0, 1.0)))


class TestCostTables:

    def test_separable_table(self):
        x = np.linspace(-1.0, 1.0, 21)
        frame = pd.DataFrame({"x": x, "c1": 0.5 * x, "c2": 1.0 + 0.5 * x})
        cost = cost_from_table(frame, name="table")
        assert cost.is_separable
        assert float(cost(-0.4, 0.0, 0.6)) == pytest.approx(1.0 + 0.5)
        assert float(cost.separable.c1_prime(0.1)) == pytest.approx(0.5)

    def test_general_table_interpolates_linear_cost(self):
        axis = np.linspace(-1.0, 1.0, 5)
        i, x, s = np.meshgrid(axis, axis, axis, indexing="ij")
        frame = pd.DataFrame({"i": i.ravel(), "x": x.ravel(), "s": s.ravel(),
                              "c": (3.0 + s - i + 0.5 * x).ravel()})
        cost = cost_from_table(frame.sample(frac=1.0, random_state=3))
        assert not cost.is_separable
        assert float(cost(-0.3, 0.1, 0.7)) == pytest.approx(3.0 + 1.0 + 0.05)
        assert float(cost.dc_di(-0.3, 0.1, 0.7)) == pytest.approx(-1.0, abs=1e-6)
        assert float(cost.dc_ds(-0.3, 0.1, 0.7)) == pytest.approx(1.0, abs=1e-6)

    def test_incomplete_general_table(self):
        frame = pd.DataFrame({"i": [0.0, 1.0], "x": [0.0, 0.0], "s": [0.0, 1.0], "c": [1.0, 1.0]})
        with pytest.raises(ValueError, match="regular grid"):
            cost_from_table(frame)

    def test_unknown_columns(self):
        with pytest.raises(ValueError, match="columns"):
            cost_from_table(pd.DataFrame({"a": [1.0]}))
