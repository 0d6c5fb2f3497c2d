"""Equitable mass partitions: bisecting spheres, parallel slabs and
axis-parallel wedges inside well-chosen subspaces, found as zeros of
sign-flip equivariant test maps and independently verified."""

from .estimators import (
    NoZeroFoundError,
    SlabBisector,
    SphereBisector,
    VerificationError,
    WedgeBisector,
    find_vertical_circle,
)
from .geometry import (
    FramePoint,
    Hyperplane,
    SlabPartition,
    SpherePartition,
    SubspaceBasis,
    complement_basis,
    embed_affine,
    inversion,
    parabolic_lift,
    slab_from_hyperplane,
    sphere_from_hyperplane,
    sphere_lift,
)
from .measures import (
    AssignmentSpec,
    WeightedCloud,
    assign,
    bisecting_offset,
    cloud,
    halfspace_measure,
    lift_cloud,
    line_family_assignment,
    projection_assignment,
)
from .scenarios import (
    gen_counterexample,
    gen_gaussian_mixture,
    gen_line_families,
)
from .solvers import (
    SolveReport,
    SolverConfig,
    homotopy_track,
    minimize_norm,
    sample_frame,
    solve_map,
)
from .testmaps import (
    CanonicalMap,
    GroupElement,
    SlabTestMap,
    SphereTestMap,
    TestMapValue,
    act_domain,
    act_range,
    canonical_g,
    canonical_zero,
    slab_test_map,
    sphere_test_map,
    zero_orbit,
)
from .verify import (
    ScanGrid,
    ScanResult,
    count_lines_through_disc,
    optimality_scan,
    verify_slab,
    verify_sphere,
    verify_wedge,
)
from .wedges import (
    DownWedge,
    WedgeFrame,
    down_wedge,
    planar_wedge_oracle,
    planar_wedge_solve,
    quadrant_measure,
    wedge_solve,
    wedge_test_map,
)

__version__ = "0.1.0"
