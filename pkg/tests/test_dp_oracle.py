"""Tests for the lattice dynamic program."""

import numpy as np
import pytest

from src.models.cost import constant_cost
from src.services.dp_oracle import extrapolated_value, trinomial_range_value
from src.services.diffusion_core import natural_scale_model

TRUNCATION = (-2.0, 2.0)


@pytest.fixture(scope="module")
def natural_lattice_model():
    return natural_scale_model(TRUNCATION)


@pytest.fixture(scope="module")
def lattice(natural_lattice_model):
    return trinomial_range_value(natural_lattice_model, constant_cost(1.0), TRUNCATION, space_steps=100)


class TestLatticeValue:
    def test_origin_trails_closed_form_by_order_h(self, lattice):
        # the walk's extremes lag the diffusion's, so the lattice sits below 3/4
        value = lattice.value(0.0, 0.0, 0.0)
        assert 0.75 - 2.0 * lattice.step < value < 0.75

    def test_value_dominates_payoff(self, lattice):
        nodes = lattice.nodes
        for (a, b), u in lattice.values.items():
            assert np.all(u >= nodes[b] - nodes[a] - 1e-12)

    def test_edges_keep_the_excess_over_payoff(self, lattice):
        top = lattice.nodes.size - 1
        corner = lattice.values[(0, top)]
        assert corner[top // 2] == pytest.approx(4.0)
        # on C+ at x = s the excess is (s - g)^2 = 1/4
        assert corner[-1] == pytest.approx(4.25, abs=0.1)
        assert corner[0] == pytest.approx(corner[-1], abs=1e-9)

    def test_wide_ranges_stop(self, lattice):
        # beyond range 1 the stopping set covers the middle of [i, s]
        assert lattice.value(-1.0, -0.24, 0.6) == pytest.approx(1.6)
        assert 0.0 < lattice.stop_fraction < 1.0

    def test_mirror_symmetry(self, lattice):
        assert lattice.value(-0.4, -0.2, 0.2) == pytest.approx(lattice.value(-0.2, 0.2, 0.4), abs=1e-9)

    def test_lookup_outside_lattice(self, lattice):
        with pytest.raises(ValueError):
            lattice.value(0.0, 0.0, 3.0)
        with pytest.raises(ValueError):
            lattice.value(0.0, 0.5, 0.2)


class TestExtrapolatedValue:
    def test_origin_matches_closed_form(self, natural_lattice_model):
        value, fine, coarse = extrapolated_value(natural_lattice_model, constant_cost(1.0), (0.0, 0.0, 0.0),
                                                 TRUNCATION, space_steps=100)
        assert coarse < fine < 0.75
        assert abs(value - 0.75) < 1e-2

    def test_point_must_be_a_node(self, natural_lattice_model):
        with pytest.raises(ValueError, match="not a node"):
            extrapolated_value(natural_lattice_model, constant_cost(1.0), (0.0, 0.01, 0.02), TRUNCATION, 20)

    def test_needs_four_steps(self, natural_lattice_model):
        with pytest.raises(ValueError, match="at least 4"):
            extrapolated_value(natural_lattice_model, constant_cost(1.0), (0.0, 0.0, 0.0), TRUNCATION, 2)


@pytest.mark.parametrize("kwargs", [{"space_steps": 1}, {"time_factor": 0.5}])
def test_rejects_bad_lattice(kwargs):
    model = natural_scale_model(TRUNCATION)
    with pytest.raises(ValueError):
        trinomial_range_value(model, constant_cost(1.0), TRUNCATION, **kwargs)
