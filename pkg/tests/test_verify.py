import numpy as np
import pytest

from equipart.geometry import SlabPartition, SpherePartition, SubspaceBasis
from equipart.measures import cloud, projection_assignment
from equipart.scenarios import gen_counterexample, gen_line_families
from equipart.verify import (
    ScanGrid,
    count_lines_through_disc,
    optimality_scan,
    passes,
    relative_residuals,
    verify_slab,
    verify_sphere,
    verify_wedge,
)
from equipart.wedges import DownWedge, WedgeFrame


def eye_basis(d):
    return SubspaceBasis(d=d, vectors=np.eye(d))


class TestVerifySphere:
    def test_identical_clouds_equal_residuals(self, rng):
        spec = projection_assignment(rng.standard_normal((100, 2)))
        part = SpherePartition(basis=eye_basis(2), kind="sphere",
                               center=np.array([0.2, -0.1]), radius=0.8)
        res = verify_sphere([spec] * 3, part, h=0.1)
        assert np.ptp(res) == 0.0

    def test_constructed_half_inside(self, rng):
        # 50 points inside the unit circle, 50 outside
        angles = rng.uniform(0, 2 * np.pi, 100)
        radii = np.concatenate([rng.uniform(0.1, 0.8, 50),
                                rng.uniform(1.2, 2.0, 50)])
        pts = radii[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])
        spec = projection_assignment(pts)
        part = SpherePartition(basis=eye_basis(2), kind="sphere",
                               center=np.zeros(2), radius=1.0)
        res = verify_sphere([spec], part, h=0.0)
        assert res[0] == 0.0

    def test_halfspace_kind(self, rng):
        pts = rng.standard_normal((101, 3))
        spec = projection_assignment(np.vstack([pts, -pts]))
        part = SpherePartition(basis=eye_basis(3), kind="halfspace",
                               normal=np.array([1.0, 0, 0]), offset=0.0)
        res = verify_sphere([spec], part, h=0.3)
        assert res[0] <= 1e-9 * spec.total_weight

    def test_passes_helper(self, rng):
        spec = projection_assignment(rng.standard_normal((40, 2)))
        part = SpherePartition(basis=eye_basis(2), kind="sphere",
                               center=np.zeros(2), radius=1e-6)
        res = verify_sphere([spec], part, h=0.0)
        assert not passes([spec], res, tol=1e-3)
        assert relative_residuals([spec], res)[0] == pytest.approx(0.5)


class TestVerifySlab:
    def test_everything_slab_fails(self, rng):
        spec = projection_assignment(rng.standard_normal((60, 2)))
        part = SlabPartition(basis=eye_basis(2), kind="slab", r1=-1e9, r2=1e9)
        res = verify_slab([spec] * 3, part, h=0.0)
        np.testing.assert_allclose(res, 0.5 * spec.total_weight)

    def test_symmetric_half_slab(self, rng):
        ys = np.concatenate([rng.uniform(-0.5, 0.5, 50),
                             rng.uniform(1.0, 2.0, 25),
                             rng.uniform(-2.0, -1.0, 25)])
        pts = np.column_stack([rng.standard_normal(100), ys])
        spec = projection_assignment(pts)
        part = SlabPartition(basis=eye_basis(2), kind="slab", r1=-0.5, r2=0.5)
        res = verify_slab([spec], part, h=0.0)
        assert res[0] == 0.0

    def test_halfspace_side(self, rng):
        vals = np.array([-2.0, -1.0, 1.0, 2.0])
        spec = projection_assignment(np.column_stack([np.zeros(4), vals]))
        part = SlabPartition(basis=eye_basis(2), kind="halfspace",
                             offset=0.0, side=1)
        assert verify_slab([spec], part, h=0.0)[0] == 0.0


class TestVerifyWedge:
    def test_quadrant_half(self):
        pts = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]],
                       dtype=float)
        spec = projection_assignment(pts)
        frame = WedgeFrame(v=np.array([1.0, 0.0]))
        wedge = DownWedge(kind="vertical_line", t=0.0)
        res = verify_wedge([spec], wedge, frame, h=0.0)
        assert res[0] == 0.0

    def test_wedge_region(self, rng):
        pts = rng.standard_normal((200, 3))
        spec = projection_assignment(pts)
        frame = WedgeFrame(v=np.array([0.0, 1.0, 0.0]))
        wedge = DownWedge(kind="wedge", t=0.0, y=10.0, orientation="left")
        res = verify_wedge([spec], wedge, frame, h=0.0)
        # y cut far above the data: reduces to the vertical split
        near = abs(np.sum(pts[:, 1] <= 0.0) - 100)
        assert res[0] == pytest.approx(near)


class TestCountLines:
    def test_huge_and_tiny_radius(self):
        inst = gen_line_families(8, seed=2)
        basis = SubspaceBasis(d=3, vectors=np.array([[1.0, 0, 0], [0, 0, 1.0]]))
        fam = inst.families[0]
        through, not_through = count_lines_through_disc(fam, basis,
                                                        np.zeros(2), 1e9)
        assert through == 8 and not_through == 0
        through, not_through = count_lines_through_disc(fam, basis,
                                                        np.array([1e6, 1e6]), 1e-9)
        assert through == 0 and not_through == 8

    def test_boundary_counts_both(self):
        # a line crossing the plane exactly on the circle boundary
        basis = SubspaceBasis(d=3, vectors=np.array([[1.0, 0, 0], [0, 0, 1.0]]))
        from equipart.measures import line_family_assignment
        fam = line_family_assignment([[1.0, 1.0, 0.0]], [[0.0, 1.0, 0.0]])
        through, not_through = count_lines_through_disc(fam, basis,
                                                        np.zeros(2), 1.0)
        assert through == 1 and not_through == 1


class TestOptimalityScan:
    def test_single_assignment_near_zero(self, rng):
        spec = projection_assignment(rng.standard_normal((500, 2)))
        grid = ScanGrid(centers_per_axis=15, n_radii=15, refine_rounds=2,
                        n_halfspace_dirs=16)
        out = optimality_scan([spec], k=2, grid=grid)
        assert out.relative_delta < 5e-3

    def test_refinement_never_increases(self):
        inst = gen_counterexample(2, 2, n_points=300, seed=6)
        subset = inst.assignments[:3]
        coarse = optimality_scan(subset, k=2,
                                 grid=ScanGrid(centers_per_axis=11, n_radii=11,
                                               refine_rounds=0,
                                               n_halfspace_dirs=8))
        fine = optimality_scan(subset, k=2,
                               grid=ScanGrid(centers_per_axis=11, n_radii=11,
                                             refine_rounds=3,
                                             n_halfspace_dirs=8))
        assert fine.delta <= coarse.delta + 1e-12

    def test_counterexample_is_blocked(self):
        inst = gen_counterexample(2, 2, n_points=400, seed=7)
        grid = ScanGrid(centers_per_axis=21, n_radii=21, refine_rounds=2,
                        n_halfspace_dirs=32)
        out = optimality_scan(inst.assignments, k=2, grid=grid)
        assert out.relative_delta >= 0.05

    def test_subspace_scan_path(self):
        inst = gen_counterexample(3, 2, n_points=200, seed=8)
        grid = ScanGrid(centers_per_axis=9, n_radii=9, refine_rounds=1,
                        n_halfspace_dirs=8, n_subspaces=4)
        out = optimality_scan(inst.assignments, k=2, grid=grid)
        assert out.delta > 0


class TestEndToEndConsistency:
    def test_solver_accepted_passes_verify(self, rng):
        from equipart.solvers import SolverConfig, solve_map
        from equipart.testmaps import SphereTestMap, TOL_MASS_REL

        specs = [projection_assignment(rng.standard_normal((300, 2)) * 1.3
                                       + rng.standard_normal(2))
                 for _ in range(3)]
        F = SphereTestMap(specs, k=2, h=0.1, mode="direct")
        rep = solve_map(F, SolverConfig(seed=4), "auto")
        assert rep.success
        part = F.extract(rep.point)["partition"]
        residuals = verify_sphere(specs, part, 0.1)
        # accepted zeros verify within twice the solver's mass tolerance
        assert passes(specs, residuals, tol=2 * TOL_MASS_REL)
