import numpy as np
import pytest

from equipart.measures import projection_assignment
from equipart.solvers import (
    SolverConfig,
    canonicalize,
    homotopy_track,
    manifold_dim,
    minimize_norm,
    move,
    polish,
    retract,
    sample_frame,
    solve_map,
    tangent_directions,
)
from equipart.testmaps import (
    CanonicalMap,
    GroupElement,
    SphereTestMap,
    TestMapValue,
    act_domain,
    canonical_g,
    zero_orbit,
)


def orbit_distance(p, d, m):
    best = np.inf
    for member in zero_orbit(d, m):
        err = np.max(np.abs(p.w - member.w))
        if m:
            err = max(err, np.max(np.abs(p.v - member.v)))
        best = min(best, err)
    return best


class TestSampleFrame:
    def test_m_zero(self, rng):
        p = sample_frame(3, 0, rng)
        assert p.m == 0
        p.validate()

    def test_invariants(self, rng):
        for _ in range(20):
            sample_frame(5, 3, rng).validate()

    def test_deterministic(self):
        a = sample_frame(4, 2, np.random.default_rng(42))
        b = sample_frame(4, 2, np.random.default_rng(42))
        np.testing.assert_array_equal(a.w, b.w)
        np.testing.assert_array_equal(a.v, b.v)


class TestCanonicalize:
    def test_first_nonzero_positive(self, rng):
        for _ in range(20):
            p = canonicalize(sample_frame(4, 2, rng))
            mags = np.abs(p.w)
            assert p.w[np.argmax(mags > 1e-6 * mags.max())] > 0
            for row in p.v:
                mags = np.abs(row)
                assert row[np.argmax(mags > 1e-6 * mags.max())] > 0

    def test_preserves_map_norm(self, rng):
        for _ in range(20):
            p = sample_frame(3, 2, rng)
            gel = GroupElement.random(2, rng)
            assert canonical_g(act_domain(gel, p)).sup_norm == pytest.approx(
                canonical_g(p).sup_norm)


class TestTangentAndRetraction:
    def test_dimension_count(self, rng):
        for d, m in ((2, 0), (3, 1), (4, 2), (4, 4)):
            p = sample_frame(d, m, rng)
            assert len(tangent_directions(p)) == manifold_dim(d, m)

    def test_retraction_stays_on_manifold(self, rng):
        p = sample_frame(4, 2, rng)
        dirs = tangent_directions(p)
        for dw, dv in dirs:
            q = retract(p, dw, dv, 0.3)
            q.validate(1e-10)
        z = rng.standard_normal(len(dirs)) * 0.2
        move(p, dirs, z).validate(1e-10)

    def test_tangent_directions_are_tangent(self, rng):
        p = sample_frame(4, 2, rng)
        for dw, dv in tangent_directions(p):
            if dw is not None:
                assert abs(np.dot(dw, p.w)) < 1e-12
            if dv is not None:
                # tangency of the frame part: dV V^T skew-symmetric
                s = dv @ p.v.T
                assert np.max(np.abs(s + s.T)) < 1e-12


class TestMinimizeNorm:
    def test_finds_pilot_orbit(self):
        rep = minimize_norm(CanonicalMap(3, 1), SolverConfig(seed=2, n_starts=8))
        assert rep.success
        assert orbit_distance(rep.point, 3, 1) < 1e-6

    def test_deterministic(self):
        cfg = SolverConfig(seed=11, n_starts=4)
        r1 = minimize_norm(CanonicalMap(3, 2), cfg)
        r2 = minimize_norm(CanonicalMap(3, 2), cfg)
        assert np.max(np.abs(r1.point.w - r2.point.w)) <= 1e-12
        assert np.max(np.abs(r1.point.v - r2.point.v)) <= 1e-12

    def test_report_value_consistent(self):
        pilot = CanonicalMap(2, 1)
        rep = minimize_norm(pilot, SolverConfig(seed=0, n_starts=4))
        assert rep.value_sup == pytest.approx(pilot(rep.point).sup_norm,
                                              abs=1e-12)

    def test_threaded_runs_are_deterministic(self):
        cfg = SolverConfig(seed=6, n_starts=6, threads=3)
        first = minimize_norm(CanonicalMap(3, 1), cfg)
        second = minimize_norm(CanonicalMap(3, 1), cfg)
        np.testing.assert_array_equal(first.point.w, second.point.w)
        np.testing.assert_array_equal(first.point.v, second.point.v)

    def test_threads_env_cap(self, monkeypatch):
        monkeypatch.setenv("EQUIPART_THREADS", "5")
        assert SolverConfig().resolved_threads() == 5
        monkeypatch.setenv("EQUIPART_THREADS", "bogus")
        assert SolverConfig().resolved_threads() == 1
        assert SolverConfig(threads=2).resolved_threads() == 2

    def test_identical_assignment_instance_trivial(self, rng):
        spec = projection_assignment(rng.standard_normal((60, 2)))
        F = SphereTestMap([spec] * 3, k=2, h=0.2, mode="direct")
        rep = minimize_norm(F, SolverConfig(seed=1, n_starts=4))
        assert rep.success


class TestHomotopy:
    def test_pilot_to_itself_is_constant(self):
        rep = homotopy_track(CanonicalMap(3, 1), SolverConfig())
        assert rep.success
        assert rep.t_reached == pytest.approx(1.0)
        assert orbit_distance(rep.point, 3, 1) < 1e-9

    def test_small_equivariant_perturbation(self):
        base = CanonicalMap(3, 1)

        class Perturbed:
            d, m = 3, 1
            block_dims = base.block_dims
            weight_scales = base.weight_scales
            accept_tol = base.accept_tol

            def __call__(self, p):
                val = canonical_g(p)
                blocks = list(val.blocks)
                blocks[0] = blocks[0] + 0.01 * p.w[:3]
                return TestMapValue(blocks=tuple(blocks))

        rep = homotopy_track(Perturbed(), SolverConfig())
        assert rep.success
        assert orbit_distance(rep.point, 3, 1) < 0.1
        other = minimize_norm(Perturbed(), SolverConfig(seed=0, n_starts=8))
        assert other.success
        assert orbit_distance(other.point, 3, 1) < 0.1

    def test_nodes_satisfy_corrector_tolerance(self, rng):
        specs = [projection_assignment(rng.standard_normal((150, 2))
                                       + rng.standard_normal(2))
                 for _ in range(3)]
        F = SphereTestMap(specs, k=2, h=0.12, mode="direct")
        cfg = SolverConfig()
        rep = homotopy_track(F, cfg)
        assert rep.success
        assert rep.nodes, "path should store nodes"
        assert max(r for _, r in rep.nodes) <= cfg.homotopy.corrector_tol

    def test_sphere_instance_end_to_end(self, rng):
        from equipart.verify import verify_sphere

        specs = [projection_assignment(rng.standard_normal((200, 2)) * 1.4
                                       + rng.standard_normal(2))
                 for _ in range(3)]
        F = SphereTestMap(specs, k=2, h=0.12, mode="direct")
        rep = homotopy_track(F, SolverConfig())
        assert rep.success
        residuals = verify_sphere(specs, F.extract(rep.point)["partition"], 0.12)
        weights = np.array([s.total_weight for s in specs])
        assert np.all(residuals <= 2e-6 * weights)


class TestSolveMapDispatch:
    def test_overdetermined_skips_homotopy(self, rng):
        spec = projection_assignment(rng.standard_normal((30, 2)))
        specs = [projection_assignment(rng.standard_normal((30, 2)))
                 for _ in range(4)] + [spec]
        F = SphereTestMap(specs, k=2, h=0.2, mode="direct")
        rep = homotopy_track(F, SolverConfig())
        assert not rep.success
        assert "square" in rep.message

    def test_polish_refines(self, rng):
        pilot = CanonicalMap(3, 1)
        start = sample_frame(3, 1, np.random.default_rng(3))
        rep = polish(pilot, start, SolverConfig())
        # polish is local refinement; from a random point it may or may not
        # land, but from a near-zero it must converge
        near = zero_orbit(3, 1)[0]
        jittered = retract(near, tangent_directions(near)[0][0], None, 1e-3)
        rep = polish(pilot, jittered, SolverConfig())
        assert rep.success

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            solve_map(CanonicalMap(2, 0), SolverConfig(), "banana")
