"""Tests for the triangle grid and the surface pair container."""

import numpy as np
import pytest

from src.models.surfaces import SurfacePair, TriangleGrid


class TestTriangleGrid:

    def test_uniform_grid(self):
        grid = TriangleGrid.uniform((-1.0, 1.0), 5)
        assert grid.shape == (5, 5)
        assert grid.step == pytest.approx(0.5)
        assert grid.active.sum() == 10
        assert not grid.active[2, 2]

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="at least two"):
            TriangleGrid.uniform((-1.0, 1.0), 1)

    def test_nodes_must_increase(self):
        with pytest.raises(ValueError, match="increasing"):
            TriangleGrid(i_nodes=np.array([0.0, 0.0, 1.0]), s_nodes=np.array([0.0, 1.0]))


class TestSurfacePair:

    def test_interpolation_and_c0(self, natural_surfaces, closed_form):
        f, g = closed_form(-1.1, 0.3)
        assert float(natural_surfaces.f_at(-1.1, 0.3)) == pytest.approx(float(f), abs=1e-4)
        assert float(natural_surfaces.g_at(-1.1, 0.3)) == pytest.approx(float(g), abs=1e-4)
        assert bool(natural_surfaces.in_c0(-0.25, 0.5))
        assert not bool(natural_surfaces.in_c0(-1.0, 0.5))

    def test_frame_round_trip(self, natural_surfaces):
        frame = natural_surfaces.to_frame()
        assert list(frame.columns) == ["i", "s", "f_star", "g_star", "in_C0", "residual_f", "residual_g"]
        assert len(frame) == int(natural_surfaces.grid.active.sum())
        rebuilt = SurfacePair.from_frame(frame)
        assert rebuilt.grid.shape == natural_surfaces.grid.shape
        np.testing.assert_array_equal(rebuilt.grid.i_nodes, natural_surfaces.grid.i_nodes)
        np.testing.assert_array_equal(rebuilt.grid.s_nodes, natural_surfaces.grid.s_nodes)
        active = natural_surfaces.grid.active
        np.testing.assert_array_equal(rebuilt.f_values[active], natural_surfaces.f_values[active])
        np.testing.assert_array_equal(rebuilt.g_values[active], natural_surfaces.g_values[active])

    def test_reloaded_grid_interpolates_like_the_original(self, natural_surfaces):
        rebuilt = SurfacePair.from_frame(natural_surfaces.to_frame())
        for i, s in [(-1.9, 1.9), (-1.1, 0.3), (1.5, 1.99)]:
            assert float(rebuilt.f_at(i, s)) == pytest.approx(float(natural_surfaces.f_at(i, s)), abs=1e-12)
            assert float(rebuilt.g_at(i, s)) == pytest.approx(float(natural_surfaces.g_at(i, s)), abs=1e-12)

    def test_from_frame_needs_every_active_cell(self, natural_surfaces):
        frame = natural_surfaces.to_frame().iloc[1:]
        with pytest.raises(ValueError, match="active cell"):
            SurfacePair.from_frame(frame)

    def test_from_frame_needs_columns(self, natural_surfaces):
        frame = natural_surfaces.to_frame().drop(columns=["g_star"])
        with pytest.raises(ValueError, match="g_star"):
            SurfacePair.from_frame(frame)
