import numpy as np
import pytest
from sklearn.base import clone

from equipart.estimators import (
    NoZeroFoundError,
    SlabBisector,
    SphereBisector,
    WedgeBisector,
    find_vertical_circle,
    pooled_spread,
)
from equipart.measures import projection_assignment
from equipart.scenarios import gen_gaussian_mixture, gen_line_families
from equipart.validation import InputError, as_assignments


def mixture_clouds(d, count, n, seed0):
    return [gen_gaussian_mixture(d, 3, n, seed=seed0 + j).points
            for j in range(count)]


class TestSphereBisector:
    def test_fit_predict_transform(self):
        clouds = mixture_clouds(2, 3, 400, 100)
        est = SphereBisector(k=2, seed=0).fit(clouds)
        assert est.partition_.kind in ("sphere", "halfspace")
        assert np.max(est.relative_residuals_) <= 1e-3
        labels = est.predict(clouds[0])
        assert set(np.unique(labels)).issubset({-1, 1})
        coords = est.transform(clouds[0])
        assert coords.shape == (400, 2)
        # labels agree with the region test in subspace coordinates
        signed = est.partition_.signed_boundary_distance(coords)
        np.testing.assert_array_equal(labels, np.where(signed >= 0, 1, -1))

    def test_get_params_clone(self):
        est = SphereBisector(k=2, h=0.07, seed=3)
        params = est.get_params()
        assert params["h"] == 0.07 and params["seed"] == 3
        twin = clone(est)
        assert twin.get_params() == params

    def test_prescribed_direction_contained(self):
        clouds = mixture_clouds(3, 4, 400, 200)
        est = SphereBisector(k=2, seed=0).fit(clouds)
        # default prescription keeps e1 inside the subspace
        assert abs(est.frame_.v[0] @ np.array([1.0, 0.0, 0.0])) <= 1e-6

    def test_too_few_measures(self):
        clouds = mixture_clouds(2, 2, 50, 300)
        with pytest.raises(InputError):
            SphereBisector(k=2).fit(clouds)

    def test_counterexample_raises_no_zero(self):
        from equipart.scenarios import gen_counterexample

        inst = gen_counterexample(2, 2, n_points=400, seed=0)
        with pytest.raises(NoZeroFoundError):
            SphereBisector(k=2, seed=0,
                           n_starts=8).fit(inst.assignments)

    def test_not_fitted(self):
        with pytest.raises(InputError):
            SphereBisector().predict(np.zeros((2, 2)))


class TestSlabBisector:
    def test_fit_and_predict(self):
        clouds = mixture_clouds(2, 3, 400, 400)
        est = SlabBisector(k=2, seed=0).fit(clouds)
        assert est.partition_.kind in ("slab", "halfspace")
        assert np.max(est.relative_residuals_) <= 1e-3
        inside = est.predict(clouds[1]) == 1
        coords = est.transform(clouds[1])
        np.testing.assert_array_equal(inside, est.partition_.contains(coords))

    def test_weighted_input_tuples(self, rng):
        items = [(rng.standard_normal((300, 2)), rng.uniform(0.5, 2.0, 300))
                 for _ in range(3)]
        est = SlabBisector(k=2, seed=1).fit(items)
        assert np.max(est.relative_residuals_) <= 1e-3


class TestWedgeBisector:
    def test_planar_exact(self, rng):
        p1 = rng.standard_normal((80, 2)) + [0.5, 0.0]
        p2 = rng.standard_normal((80, 2)) * [1.2, 0.6]
        est = WedgeBisector(h=0.0, seed=0).fit([p1, p2])
        from equipart.wedges import split_ok

        assert split_ok(p1, est.wedge_)
        assert split_ok(p2, est.wedge_)
        labels = est.predict(p1)
        assert set(np.unique(labels)).issubset({-1, 1})

    def test_three_dimensional(self):
        clouds = mixture_clouds(3, 3, 400, 500)
        est = WedgeBisector(seed=0, verify_tol=2e-3).fit(clouds)
        assert np.max(est.relative_residuals_) <= 2e-3
        assert abs(np.linalg.norm(est.plane_.v) - 1.0) < 1e-9

    def test_wrong_count(self):
        clouds = mixture_clouds(3, 4, 50, 600)
        with pytest.raises(InputError):
            WedgeBisector().fit(clouds)


class TestFindVerticalCircle:
    def test_counts_split(self):
        inst = gen_line_families(10, seed=4)
        out = find_vertical_circle(inst.families, seed=0)
        for through, not_through in out["counts"]:
            assert through >= 5 and not_through >= 5
        # the plane contains the vertical direction exactly
        assert out["basis"].vectors[1] @ np.array([0, 0, 1.0]) == 1.0


class TestValidationHelpers:
    def test_as_assignments_mixed_dims(self, rng):
        with pytest.raises(InputError):
            as_assignments([rng.standard_normal((5, 2)),
                            rng.standard_normal((5, 3))])

    def test_as_assignments_passthrough(self, rng):
        spec = projection_assignment(rng.standard_normal((5, 2)))
        out = as_assignments([spec, rng.standard_normal((5, 2))])
        assert out[0] is spec
        assert out[1].kind == "projection"

    def test_pooled_spread_positive(self, rng):
        specs = [projection_assignment(rng.standard_normal((20, 2)))]
        assert pooled_spread(specs) > 0
