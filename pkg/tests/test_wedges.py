import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from equipart.measures import cloud, projection_assignment
from equipart.wedges import (
    DownWedge,
    WedgeFrame,
    WedgeMap,
    down_wedge,
    planar_wedge_oracle,
    planar_wedge_solve,
    quadrant_measure,
    region_measures,
    split_ok,
    wedge_solve,
    wedge_test_map,
)


def uniform_grid_cloud(n=200):
    g = (np.arange(n) + 0.5) / n
    xx, yy = np.meshgrid(g, g)
    return cloud(np.column_stack([xx.ravel(), yy.ravel()]))


class TestQuadrantMeasure:
    def test_covers_everything(self, rng):
        c = cloud(rng.standard_normal((50, 2)))
        total = quadrant_measure(c, 1e9, 1e9, "right", h=0.0)
        assert total == pytest.approx(0.0)  # right of 1e9 is empty
        assert quadrant_measure(c, -1e9, 1e9, "right", h=0.0) == pytest.approx(
            c.total_weight)
        assert quadrant_measure(c, 1e9, 1e9, "left", h=0.0) == pytest.approx(
            c.total_weight)

    def test_corner_cloud(self):
        pts = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
        c = cloud(np.array(pts, dtype=float))
        assert quadrant_measure(c, 0.0, 0.0, "left", h=0.0) == 1.0

    def test_uniform_square_closed_form(self):
        c = uniform_grid_cloud()
        val = quadrant_measure(c, 0.75, 2.0 / 3.0, "left", h=0.01)
        assert val / c.total_weight == pytest.approx(0.5, abs=1e-4)

    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5),
           st.floats(0.01, 0.8), st.floats(0.01, 0.8))
    @settings(max_examples=40, deadline=None)
    def test_monotone(self, t, y, dy, dt):
        c = cloud(np.array([[-0.7, 0.1], [0.2, -0.4], [0.5, 0.8], [1.1, -1.0]]))
        h = 0.3
        base = quadrant_measure(c, t, y, "left", h)
        assert quadrant_measure(c, t, y + dy, "left", h) > base
        assert quadrant_measure(c, t + dt, y, "left", h) > base
        right = quadrant_measure(c, t, y, "right", h)
        assert quadrant_measure(c, t - dt, y, "right", h) > right


class TestDownWedge:
    def test_symmetric_gives_vertical_line(self, rng):
        pts = rng.standard_normal((60, 2))
        sym = cloud(np.vstack([pts, pts * [-1, 1]]))
        w = down_wedge(sym, 0.0, h=0.2)
        assert w.kind == "vertical_line"
        assert w.t == 0.0

    def test_infinite_gives_horizontal_median(self, rng):
        c = cloud(rng.standard_normal((101, 2)))
        w = down_wedge(c, np.inf, h=0.15)
        assert w.kind == "horizontal_line"
        a, b = region_measures(c, w, 0.15)
        assert a == pytest.approx(b, abs=1e-7 * c.total_weight)

    def test_uniform_square_vertex(self):
        c = uniform_grid_cloud()
        w = down_wedge(c, 0.75, h=0.01)
        assert w.kind == "wedge" and w.orientation == "left"
        assert w.t == pytest.approx(0.75)
        assert w.y == pytest.approx(2.0 / 3.0, abs=1e-3)

    def test_bisects_for_a_range_of_rays(self, rng):
        c = cloud(rng.standard_normal((150, 2)) * [1.2, 0.7])
        for t in (-0.8, -0.1, 0.4, 1.5, np.inf):
            w = down_wedge(c, t, h=0.2)
            a, _ = region_measures(c, w, 0.2)
            assert abs(a - 0.5 * c.total_weight) <= 1e-8 * c.total_weight

    def test_vertex_moves_continuously(self, rng):
        c = cloud(rng.standard_normal((120, 2)))
        ts = np.linspace(0.3, 1.2, 30)
        ys = []
        for t in ts:
            w = down_wedge(c, t, h=0.25)
            assert w.kind == "wedge"
            ys.append(w.y)
        gaps = np.abs(np.diff(ys))
        assert np.max(gaps) < 0.5  # no jumps at this sampling scale


class TestRegionMeasures:
    def test_sides_sum_exactly(self, rng):
        c = cloud(rng.standard_normal((40, 2)), rng.uniform(0.5, 2, 40))
        for w in (DownWedge(kind="wedge", t=0.2, y=-0.3, orientation="left"),
                  DownWedge(kind="wedge", t=-0.5, y=0.1, orientation="right"),
                  DownWedge(kind="vertical_line", t=0.3),
                  DownWedge(kind="horizontal_line", y=-0.2)):
            a, b = region_measures(c, w, 0.3)
            assert a + b == pytest.approx(c.total_weight, abs=1e-10)

    def test_closed_double_count(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [-1.0, -1.0], [0.0, -2.0]])
        c = cloud(pts)
        w = DownWedge(kind="wedge", t=0.0, y=0.0, orientation="left")
        a, b = region_measures(c, w, 0.0)
        boundary = np.sum(w.contains(pts) & ~w.strictly_inside(pts))
        assert a + b - boundary == pytest.approx(c.total_weight)

    def test_limit_consistency(self, rng):
        mu = cloud(rng.standard_normal((200, 2)))
        nu = cloud(rng.standard_normal((100, 2)) + [0.4, -0.2])
        h = 0.2
        w_inf = down_wedge(mu, np.inf, h)
        target = region_measures(nu, w_inf, h)[0]
        vals = [region_measures(nu, down_wedge(mu, t, h), h)[0]
                for t in (20.0, 100.0, 1000.0)]
        assert abs(vals[-1] - target) < 1e-6 * nu.total_weight


class TestWedgeMapSymmetries:
    def test_oddness_and_evenness(self, rng):
        specs = [projection_assignment(rng.standard_normal((80, 3))
                                       + rng.standard_normal(3))
                 for _ in range(3)]
        wmap = WedgeMap(specs, h=0.15)
        for _ in range(25):
            th = rng.uniform(0, 2 * np.pi)
            v = np.array([np.cos(th), np.sin(th)])
            assert np.max(np.abs(wmap(v, 1.0) + wmap(-v, 1.0))) <= 1e-9
            assert np.max(np.abs(wmap(v, 0.0) - wmap(-v, 0.0))) <= 1e-9

    def test_identical_assignments_vanish(self, rng):
        spec = projection_assignment(rng.standard_normal((60, 3)))
        wmap = WedgeMap([spec] * 3, h=0.2)
        for _ in range(10):
            th = rng.uniform(0, 2 * np.pi)
            v = np.array([np.cos(th), np.sin(th)])
            t = rng.uniform(0, 1)
            assert np.max(np.abs(wmap(v, t))) <= 1e-8 * spec.total_weight

    def test_function_form(self, rng):
        specs = [projection_assignment(rng.standard_normal((40, 3)))
                 for _ in range(3)]
        out = wedge_test_map([1.0, 0.0], 0.5, specs, h=0.2)
        assert out.shape == (2,)


class TestPlanarSolve:
    def test_identical_clouds(self, rng):
        c = cloud(rng.standard_normal((100, 2)))
        w = planar_wedge_solve(c, c, h=0.2)
        a, b = region_measures(c, w, 0.2)
        assert abs(a - b) <= 1e-7 * c.total_weight

    def test_centrally_symmetric_clouds(self, rng):
        p1 = rng.standard_normal((80, 2))
        p2 = rng.standard_normal((80, 2)) @ np.array([[1.3, 0.2], [0.0, 0.6]])
        mu1 = cloud(np.vstack([p1, -p1]))
        mu2 = cloud(np.vstack([p2, -p2]))
        w = planar_wedge_solve(mu1, mu2, h=0.15)
        for mu in (mu1, mu2):
            a, b = region_measures(mu, w, 0.15)
            assert abs(a - b) <= 1e-6 * mu.total_weight

    def test_discrete_exact_matches_oracle(self, rng):
        for trial in range(5):
            p1 = rng.standard_normal((60, 2)) + rng.standard_normal(2)
            p2 = rng.standard_normal((60, 2)) * rng.uniform(0.5, 1.5, 2)
            w = planar_wedge_solve(cloud(p1), cloud(p2), h=0.0)
            assert split_ok(p1, w)
            assert split_ok(p2, w)
            feasible, witness = planar_wedge_oracle(p1, p2)
            assert feasible
            assert split_ok(p1, witness) and split_ok(p2, witness)


class TestWedgeSolve3D:
    def test_three_measures(self, rng):
        specs = [projection_assignment(rng.standard_normal((250, 3))
                                       + rng.standard_normal(3) * 0.8)
                 for _ in range(3)]
        out = wedge_solve(specs, h=0.12, seed=0)
        assert out["success"]
        weights = np.array([s.total_weight for s in specs])
        assert np.all(out["residuals"] <= 1e-4 * weights)


class TestWedgeFrame:
    def test_basis_rows(self):
        frame = WedgeFrame(v=np.array([0.6, 0.8, 0.0]))
        basis = frame.basis()
        np.testing.assert_allclose(basis.vectors[0], [0.6, 0.8, 0.0])
        np.testing.assert_allclose(basis.vectors[1], [0.0, 0.0, 1.0])

    def test_rejects_non_horizontal(self):
        with pytest.raises(ValueError):
            WedgeFrame(v=np.array([0.6, 0.0, 0.8]))
