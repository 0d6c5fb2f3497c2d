import numpy as np
import pytest
from scipy.spatial import Delaunay

from equipart.geometry import SubspaceBasis
from equipart.measures import assign
from equipart.scenarios import (
    gen_counterexample,
    gen_gaussian_mixture,
    gen_line_families,
    mixture_mean,
    regular_simplex,
    sample_ball,
)
from equipart.solvers import sample_frame


def facet_distance(vertices, drop):
    """Distance from the origin to the affine hull of a facet."""
    facet = np.delete(vertices, drop, axis=0)
    p0 = facet[0]
    edges = facet[1:] - p0
    if edges.shape[0]:
        q, _ = np.linalg.qr(edges.T)
        resid = -p0 - q @ (q.T @ -p0)
    else:
        resid = -p0
    return np.linalg.norm(resid)


class TestRegularSimplex:
    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_shape(self, d):
        verts = regular_simplex(d)
        assert verts.shape == (d + 1, d)
        np.testing.assert_allclose(np.linalg.norm(verts, axis=1), 1.0,
                                   atol=1e-12)
        np.testing.assert_allclose(verts.sum(axis=0), 0.0, atol=1e-12)
        # all pairwise distances equal
        dists = [np.linalg.norm(verts[i] - verts[j])
                 for i in range(d + 1) for j in range(i + 1, d + 1)]
        assert np.ptp(dists) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_facet_distance_is_inradius(self, d):
        verts = regular_simplex(d)
        for drop in range(d + 1):
            assert facet_distance(verts, drop) == pytest.approx(1.0 / d)


class TestCounterexample:
    def test_barycenter_and_containment(self):
        inst = gen_counterexample(2, 2, n_points=300, seed=1)
        np.testing.assert_allclose(inst.centers[0], 0.0, atol=1e-14)
        verts = inst.centers[1:]
        for drop in range(verts.shape[0]):
            # ball radius no bigger than the distance to every facet
            assert inst.radius <= facet_distance(verts, drop) + 1e-12

    def test_samples_inside_balls(self):
        inst = gen_counterexample(3, 2, n_points=200, seed=2)
        for center, c in zip(inst.centers, inst.clouds):
            radii = np.linalg.norm(c.points - center, axis=1)
            assert np.max(radii) <= inst.radius + 1e-12

    def test_deterministic(self):
        a = gen_counterexample(2, 2, n_points=100, seed=5)
        b = gen_counterexample(2, 2, n_points=100, seed=5)
        for ca, cb in zip(a.clouds, b.clouds):
            np.testing.assert_array_equal(ca.points, cb.points)

    def test_projection_commutes_with_hull(self, rng):
        from equipart.geometry import complement_basis

        inst = gen_counterexample(3, 2, n_points=150, seed=3)
        for _ in range(5):
            # random 2-d subspace via a sampled frame's complement
            frame = sample_frame(3, 1, rng)
            basis = complement_basis(frame, k=2)
            proj_verts = basis.coords(inst.centers[1:])
            proj_ball = basis.coords(inst.clouds[0].points)
            tri = Delaunay(proj_verts)
            assert np.all(tri.find_simplex(proj_ball) >= 0)

    def test_capture_mechanism(self):
        # any ball grabbing at least half of every outer cloud swallows the
        # central one almost entirely
        inst = gen_counterexample(2, 2, n_points=400, seed=4)
        rng = np.random.default_rng(0)
        clouds = inst.clouds
        w_half = [0.5 * c.total_weight for c in clouds]
        tested = 0
        for _ in range(4000):
            center = rng.uniform(-1.5, 1.5, 2)
            radius = rng.uniform(0.2, 2.5)
            captures = [np.sum(np.linalg.norm(c.points - center, axis=1) <= radius)
                        for c in clouds]
            if all(captures[j] >= w_half[j] for j in range(1, len(clouds))):
                tested += 1
                assert captures[0] >= 0.99 * clouds[0].total_weight
        assert tested > 10  # the scan must actually exercise the mechanism


class TestLineFamilies:
    def test_invariants(self):
        inst = gen_line_families(10, seed=3)
        dirs = np.vstack([f.directions for f in inst.families])
        assert np.max(np.abs(np.linalg.norm(dirs, axis=1) - 1)) < 1e-12
        cos_tol = np.cos(1e-3)
        assert np.max(np.abs(dirs[:, 2])) < cos_tol
        dots = np.abs(dirs @ dirs.T) - np.eye(len(dirs))
        assert np.max(dots) < cos_tol

    def test_deterministic(self):
        a = gen_line_families(5, seed=9)
        b = gen_line_families(5, seed=9)
        for fa, fb in zip(a.families, b.families):
            np.testing.assert_array_equal(fa.directions, fb.directions)
            np.testing.assert_array_equal(fa.bases, fb.bases)

    def test_assignment_to_vertical_plane(self):
        inst = gen_line_families(7, seed=1)
        basis = SubspaceBasis(d=3, vectors=np.array([[0.6, 0.8, 0.0],
                                                     [0.0, 0.0, 1.0]]))
        for fam in inst.families:
            out = assign(fam, basis)
            assert out.n == 7
            np.testing.assert_array_equal(out.weights, np.ones(7))


class TestGaussianMixture:
    def test_weights_and_determinism(self):
        a = gen_gaussian_mixture(3, 2, 500, seed=8)
        b = gen_gaussian_mixture(3, 2, 500, seed=8)
        assert a.total_weight == 500.0
        np.testing.assert_array_equal(a.points, b.points)

    def test_empirical_mean(self):
        n = 4000
        c = gen_gaussian_mixture(2, 3, n, seed=12)
        target = mixture_mean(2, 3, seed=12)
        # per-coordinate spread of the mixture is bounded by the component
        # scatter plus the component noise
        sigma = np.sqrt(1.5 ** 2 + 0.8 ** 2)
        err = np.abs(c.points.mean(axis=0) - target)
        assert np.all(err <= 5 * sigma / np.sqrt(n))


class TestSampleBall:
    def test_inside_and_deterministic(self):
        rng = np.random.default_rng(1)
        pts = sample_ball(np.array([1.0, -2.0, 0.5]), 0.7, 500, rng)
        assert np.max(np.linalg.norm(pts - [1.0, -2.0, 0.5], axis=1)) <= 0.7
