"""Built-in invariant suite behind ``equipart selftest``.

Fast checks covering group equivariance of the three test maps, the pilot
map's zero orbit, geometric involutions, measure bookkeeping, and the wedge
symmetry identities.  Prints one line per check and returns the number of
failures.
"""

from __future__ import annotations

import numpy as np

from .geometry import SubspaceBasis, Hyperplane, inversion, sphere_from_hyperplane, sphere_lift
from .measures import bisecting_offset, cloud, projection_assignment
from .solvers import SolverConfig, homotopy_track, minimize_norm, sample_frame
from .testmaps import (
    CanonicalMap,
    GroupElement,
    SlabTestMap,
    SphereTestMap,
    act_domain,
    act_range,
    canonical_g,
    canonical_zero,
)
from .wedges import WedgeMap


def _check(name: str, ok: bool, detail: str = "", verbose: bool = True) -> int:
    if verbose:
        status = "PASS" if ok else "FAIL"
        line = f"{status} {name}"
        if detail:
            line += f": {detail}"
        print(line)
    return 0 if ok else 1


def run_selftest(verbose: bool = True, n_random: int = 20) -> int:
    failures = 0
    rng = np.random.default_rng(0)

    # inversion involution
    pts = rng.standard_normal((50, 3))
    err = np.max(np.abs(inversion(inversion(pts)) - pts))
    failures += _check("inversion involution", err < 1e-12, f"err={err:.1e}", verbose)

    # lifted points land on the half-unit sphere
    basis = SubspaceBasis(d=2, vectors=np.eye(2))
    lifted = sphere_lift(rng.standard_normal((50, 2)), basis)
    err = np.max(np.abs(np.linalg.norm(lifted - [0, 0, 0.5], axis=1) - 0.5))
    failures += _check("lift lands on the half sphere", err < 1e-12,
                       f"err={err:.1e}", verbose)

    # bisecting offset is odd in the direction
    c = cloud(rng.standard_normal((80, 3)), rng.uniform(0.5, 2.0, 80))
    w = rng.standard_normal(3)
    w /= np.linalg.norm(w)
    err = abs(bisecting_offset(c, w, 0.2) + bisecting_offset(c, -w, 0.2))
    failures += _check("bisecting offset oddness", err < 1e-12, f"err={err:.1e}",
                       verbose)

    # equivariance of the pilot map
    worst = 0.0
    for d, m in ((2, 1), (3, 2), (4, 2)):
        for _ in range(n_random):
            p = sample_frame(d, m, rng)
            gel = GroupElement.random(m, rng)
            diff = (canonical_g(act_domain(gel, p)).flat
                    - act_range(gel, canonical_g(p)).flat)
            worst = max(worst, float(np.max(np.abs(diff))))
    failures += _check("pilot map equivariance", worst < 1e-12,
                       f"worst={worst:.1e}", verbose)

    # equivariance of the measure maps on a small instance
    d, k = 3, 2
    specs = [projection_assignment(rng.standard_normal((30, d))) for _ in range(d + 1)]
    sphere_map = SphereTestMap(specs, k=k, h=0.3)
    slab_map = SlabTestMap(specs, k=k, h=0.3)
    worst = 0.0
    for _ in range(n_random):
        p = sample_frame(d, d - k, rng)
        gel = GroupElement.random(d - k, rng)
        diff = (sphere_map(act_domain(gel, p)).flat
                - act_range(gel, sphere_map(p)).flat)
        worst = max(worst, float(np.max(np.abs(diff))))
        q = sample_frame(d, d, rng)
        gel = GroupElement.random(d, rng)
        diff = (slab_map(act_domain(gel, q)).flat
                - act_range(gel, slab_map(q)).flat)
        worst = max(worst, float(np.max(np.abs(diff))))
    failures += _check("measure map equivariance", worst < 1e-9,
                       f"worst={worst:.1e}", verbose)

    # pilot zero orbit reachable by both solvers
    pilot = CanonicalMap(3, 1)
    rep = minimize_norm(pilot, SolverConfig(seed=1, n_starts=8))
    z = canonical_zero(3, 1)
    ok = rep.success and (
        min(max(np.max(np.abs(act_domain(g, rep.point).w - z.w)),
                np.max(np.abs(act_domain(g, rep.point).v - z.v)))
            for g in GroupElement.enumerate(1)) < 1e-6)
    failures += _check("multistart finds the pilot orbit", ok,
                       f"residual={rep.residual:.1e}", verbose)
    rep = homotopy_track(pilot, SolverConfig())
    failures += _check("homotopy tracks the pilot map", rep.success,
                       rep.message, verbose)

    # hyperplane pullback resubstitutes
    h = Hyperplane(w=np.array([0.3, -0.2, 0.93]) / np.linalg.norm([0.3, -0.2, 0.93]),
                   c=0.21)
    part = sphere_from_hyperplane(h, basis)
    failures += _check("sphere recovery resubstitution", part.kind == "sphere",
                       part.kind, verbose)

    # wedge symmetry identities
    specs3 = [projection_assignment(rng.standard_normal((60, 3)) + rng.standard_normal(3))
              for _ in range(3)]
    wmap = WedgeMap(specs3, h=0.2)
    worst_odd = worst_even = 0.0
    for _ in range(n_random):
        th = rng.uniform(0.0, 2.0 * np.pi)
        v = np.array([np.cos(th), np.sin(th)])
        worst_odd = max(worst_odd, float(np.max(np.abs(wmap(v, 1.0) + wmap(-v, 1.0)))))
        worst_even = max(worst_even, float(np.max(np.abs(wmap(v, 0.0) - wmap(-v, 0.0)))))
    failures += _check("wedge oddness at t=1", worst_odd < 1e-9,
                       f"worst={worst_odd:.1e}", verbose)
    failures += _check("wedge evenness at t=0", worst_even < 1e-9,
                       f"worst={worst_even:.1e}", verbose)

    if verbose:
        print(f"selftest: {failures} failure(s)")
    return failures
