"""Scikit-learn style estimators wrapping the partition solvers.

Each estimator's ``fit`` takes a sequence of measures (point arrays,
(points, weights) pairs, ``WeightedCloud`` objects, or ``AssignmentSpec``
rules), finds the guaranteed partition, verifies it against the independent
residual oracle, and exposes the result as fitted attributes.  ``predict``
labels ambient points by closed-region membership (+1 inside, -1 outside)
and ``transform`` returns subspace coordinates.  ``fit`` consumes a
sequence of measures while ``predict``/``transform`` take point arrays, so
the estimators expose the standard protocol without the transformer mixin
(whose ``fit_transform`` assumes both sides share one input).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import verify as verify_mod
from .measures import AssignmentSpec
from .solvers import SolveReport, SolverConfig, solve_map
from .testmaps import SlabTestMap, SphereTestMap
from .validation import InputError, as_assignments, as_points_array, unit_vector
from .wedges import planar_wedge_solve, region_measures, split_ok, wedge_solve


class NoZeroFoundError(RuntimeError):
    """The solver exhausted its budget without an accepted zero."""

    def __init__(self, message: str, report: SolveReport | None = None):
        super().__init__(message)
        self.report = report


class VerificationError(RuntimeError):
    """A claimed partition failed the independent residual check."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


def pooled_spread(specs) -> float:
    """Mean cloud spread across assignments; line families contribute the
    spread of their base points."""
    vals = []
    for s in specs:
        if s.kind == "projection":
            vals.append(s.cloud.spread())
        else:
            pts = s.bases
            mean = pts.mean(axis=0)
            vals.append(float(np.sqrt(np.sum((pts - mean) ** 2, axis=1).mean())))
    return float(np.mean(vals)) if vals else 1.0


class _BisectorBase(BaseEstimator):
    def _solver_config(self) -> SolverConfig:
        return SolverConfig(seed=self.seed, n_starts=self.n_starts)

    def _resolve_h(self, specs) -> float:
        if self.h is not None:
            return float(self.h)
        return 0.05 * pooled_spread(specs)

    def _check_fitted(self):
        if not hasattr(self, "report_"):
            raise InputError("estimator is not fitted")


class SphereBisector(_BisectorBase):
    """Find a k-dimensional subspace (optionally through prescribed
    directions) and a sphere in it bisecting d + 1 assigned measures.

    Parameters
    ----------
    k : subspace dimension.
    h : smoothing bandwidth; None picks 0.05 times the pooled cloud spread.
    prescribed : optional (k-1, d) array of directions the subspace must
        contain; defaults to the first k-1 coordinate axes.
    strategy : "auto" (homotopy with multistart fallback), "multistart" or
        "homotopy".
    measure_eval : "direct" evaluates cuts in subspace coordinates (matches
        the verification oracle exactly); "lifted" evaluates them on the
        lifted measures.
    verify_tol : relative residual accepted from the independent oracle.
    """

    def __init__(self, k: int = 2, h: float | None = None, prescribed=None,
                 strategy: str = "auto", seed: int = 0,
                 n_starts: int | None = None, measure_eval: str = "direct",
                 verify_tol: float = 1e-3):
        self.k = k
        self.h = h
        self.prescribed = prescribed
        self.strategy = strategy
        self.seed = seed
        self.n_starts = n_starts
        self.measure_eval = measure_eval
        self.verify_tol = verify_tol

    def fit(self, X, y=None, weights=None):
        specs = as_assignments(X, weights)
        d = specs[0].ambient_dim
        if len(specs) < d + 1:
            raise InputError(f"need at least {d + 1} measures in R^{d}")
        h = self._resolve_h(specs)
        map_ = SphereTestMap(specs, k=self.k, h=h, prescribed=self.prescribed,
                             mode=self.measure_eval)
        report = solve_map(map_, self._solver_config(), self.strategy)
        if not report.success:
            raise NoZeroFoundError(report.message or "no zero found", report)
        ext = map_.extract(report.point)
        self.n_features_in_ = d
        self.h_ = h
        self.frame_ = report.point
        self.basis_ = ext["basis"]
        self.hyperplane_ = ext["hyperplane"]
        self.partition_ = ext["partition"]
        self.report_ = report
        self.assignments_ = specs
        self.residuals_ = verify_mod.verify_sphere(specs, self.partition_, h)
        self.relative_residuals_ = verify_mod.relative_residuals(specs, self.residuals_)
        if np.max(self.relative_residuals_) > self.verify_tol:
            raise VerificationError(
                f"oracle residuals up to {np.max(self.relative_residuals_):.3e} "
                f"exceed the tolerance {self.verify_tol:.1e}", self.residuals_)
        return self

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        return self.basis_.coords(as_points_array(X, self.n_features_in_))

    def predict(self, X) -> np.ndarray:
        """+1 for points whose projection lies in the closed region, else -1."""
        self._check_fitted()
        coords = self.transform(X)
        signed = self.partition_.signed_boundary_distance(coords)
        return np.where(signed >= 0, 1, -1)


class SlabBisector(_BisectorBase):
    """Find a k-dimensional subspace and the region between two parallel
    hyperplanes of it holding exactly half of each of d + 1 measures."""

    def __init__(self, k: int = 2, h: float | None = None, prescribed=None,
                 strategy: str = "auto", seed: int = 0,
                 n_starts: int | None = None, measure_eval: str = "direct",
                 verify_tol: float = 1e-3):
        self.k = k
        self.h = h
        self.prescribed = prescribed
        self.strategy = strategy
        self.seed = seed
        self.n_starts = n_starts
        self.measure_eval = measure_eval
        self.verify_tol = verify_tol

    def fit(self, X, y=None, weights=None):
        specs = as_assignments(X, weights)
        d = specs[0].ambient_dim
        if len(specs) < d + 1:
            raise InputError(f"need at least {d + 1} measures in R^{d}")
        h = self._resolve_h(specs)
        map_ = SlabTestMap(specs, k=self.k, h=h, prescribed=self.prescribed,
                           mode=self.measure_eval)
        report = solve_map(map_, self._solver_config(), self.strategy)
        if not report.success:
            raise NoZeroFoundError(report.message or "no zero found", report)
        ext = map_.extract(report.point)
        self.n_features_in_ = d
        self.h_ = h
        self.frame_ = report.point
        self.basis_ = ext["basis"]
        self.hyperplane_ = ext["hyperplane"]
        self.partition_ = ext["partition"]
        self.report_ = report
        self.assignments_ = specs
        self.residuals_ = verify_mod.verify_slab(specs, self.partition_, h)
        self.relative_residuals_ = verify_mod.relative_residuals(specs, self.residuals_)
        if np.max(self.relative_residuals_) > self.verify_tol:
            raise VerificationError(
                f"oracle residuals up to {np.max(self.relative_residuals_):.3e} "
                f"exceed the tolerance {self.verify_tol:.1e}", self.residuals_)
        return self

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        return self.basis_.coords(as_points_array(X, self.n_features_in_))

    def predict(self, X) -> np.ndarray:
        """+1 for points whose projection lies in the slab region, else -1."""
        self._check_fitted()
        return np.where(self.partition_.contains(self.transform(X)), 1, -1)


class WedgeBisector(_BisectorBase):
    """Find a vertical plane and an axis-parallel down-wedge on it bisecting
    d measures assigned to vertical planes of R^d.

    For d = 2 the plane is fixed and h = 0 requests the exact discrete
    split: the smoothed problem is re-solved along a shrinking bandwidth
    sequence and the limit wedge is snapped onto data coordinates so both
    closed sides carry at least half of every cloud."""

    def __init__(self, h: float | None = None, seed: int = 0,
                 verify_tol: float = 1e-3):
        self.h = h
        self.seed = seed
        self.verify_tol = verify_tol

    def fit(self, X, y=None, weights=None):
        specs = as_assignments(X, weights)
        d = specs[0].ambient_dim
        if len(specs) != d:
            raise InputError(f"need exactly {d} measures in R^{d}")
        if d == 2:
            return self._fit_planar(specs)
        h = self._resolve_h(specs)
        out = wedge_solve(specs, h=h, seed=self.seed)
        if not out["success"]:
            raise NoZeroFoundError(
                f"wedge search stalled at objective {out['objective']:.3e}")
        self.n_features_in_ = d
        self.h_ = h
        self.plane_ = out["frame"]
        self.wedge_ = out["wedge"]
        self.assignments_ = specs
        self.report_ = out
        self.residuals_ = verify_mod.verify_wedge(specs, self.wedge_, self.plane_, h)
        self.relative_residuals_ = verify_mod.relative_residuals(specs, self.residuals_)
        if np.max(self.relative_residuals_) > self.verify_tol:
            raise VerificationError("wedge residuals exceed tolerance",
                                    self.residuals_)
        return self

    def _fit_planar(self, specs):
        from .wedges import WedgeFrame

        if any(s.kind != "projection" for s in specs):
            raise InputError("planar wedges need point-cloud measures")
        mu1, mu2 = specs[0].cloud, specs[1].cloud
        h = 0.0 if self.h is None else float(self.h)
        wedge = planar_wedge_solve(mu1, mu2, h)
        self.n_features_in_ = 2
        self.h_ = h
        self.plane_ = WedgeFrame(v=np.array([1.0, 0.0]))
        self.wedge_ = wedge
        self.assignments_ = specs
        self.report_ = {"strategy": "planar", "h": h}
        if h > 0:
            self.residuals_ = verify_mod.verify_wedge(specs, wedge, self.plane_, h)
            self.relative_residuals_ = verify_mod.relative_residuals(specs, self.residuals_)
            if np.max(self.relative_residuals_) > self.verify_tol:
                raise VerificationError("wedge residuals exceed tolerance",
                                        self.residuals_)
        else:
            counts_ok = all(split_ok(s.cloud.points, wedge) for s in specs)
            self.residuals_ = np.array([
                abs(region_measures(s.cloud, wedge, 0.0)[0] - 0.5 * s.cloud.total_weight)
                for s in specs])
            self.relative_residuals_ = verify_mod.relative_residuals(specs, self.residuals_)
            if not counts_ok:
                raise VerificationError("closed sides miss half of a cloud",
                                        self.residuals_)
        return self

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        return self.plane_.basis().coords(as_points_array(X, self.n_features_in_))

    def predict(self, X) -> np.ndarray:
        """+1 for points whose plane projection lies in the convex side."""
        self._check_fitted()
        return np.where(self.wedge_.contains(self.transform(X)), 1, -1)


# ---------------------------------------------------------------------------
# line families: vertical circle going around half of each family

def find_vertical_circle(families, seed: int = 0, h0: float | None = None,
                         n_shrink: int = 6, strategy: str = "auto") -> dict:
    """A vertical circle in R^3 such that, for each line family, at least
    half the lines pass through the closed disc and at least half do not.

    Solves the sphere problem on vertical planes at a shrinking sequence of
    bandwidths, snaps the plane to contain the vertical axis exactly, then
    snaps the radius (and if needed the center) onto the discrete family
    distances so the closed counts hold exactly."""
    from .geometry import SpherePartition, SubspaceBasis
    from .solvers import polish

    specs = list(families)
    if any(s.kind != "line_family" for s in specs):
        raise InputError("find_vertical_circle needs line-family assignments")
    if len(specs) != 4:
        raise InputError("need four line families in R^3")
    e3 = np.array([0.0, 0.0, 1.0])
    spread = pooled_spread(specs)
    h = h0 if h0 is not None else 0.3 * spread
    map_ = SphereTestMap(specs, k=2, h=h, prescribed=e3[None, :], mode="direct")
    cfg = SolverConfig(seed=seed)
    report = solve_map(map_, cfg, strategy)
    if not report.success:
        raise NoZeroFoundError(report.message or "no zero found", report)
    point = report.point
    for _ in range(n_shrink):
        h *= 0.5
        map_ = SphereTestMap(specs, k=2, h=h, prescribed=e3[None, :], mode="direct")
        refined = polish(map_, point, cfg)
        if not refined.success:
            h *= 2.0
            break
        point = refined.point
    ext = map_.extract(point)
    part = ext["partition"]
    # snap the plane to contain the vertical direction exactly
    b1 = unit_vector(np.cross(e3, point.v[0]))
    basis = SubspaceBasis(d=3, vectors=np.vstack([b1, e3]))
    if part.kind == "sphere":
        ambient_center = ext["basis"].embed(part.center)[0]
    else:
        ambient_center = ext["basis"].embed(part.normal * part.offset)[0]
    center0 = basis.coords(ambient_center)[0]
    hits = [family_plane_hits(spec, basis) for spec in specs]

    def snap(center):
        lows, highs = [], []
        for pts in hits:
            dist = np.sort(np.linalg.norm(pts - center, axis=1))
            n = len(dist)
            lows.append(dist[(n + 1) // 2 - 1])   # smallest r with closed disc >= half
            highs.append(dist[n // 2])            # largest r keeping closed exterior >= half
        lo, hi = max(lows), min(highs)
        if lo <= hi:
            return 0.5 * (lo + hi)
        return None

    radius = snap(center0)
    center = center0
    if radius is None and part.kind == "halfspace":
        # a near-degenerate solution: walk the center out along the normal
        normal2 = basis.coords(ext["basis"].embed(part.normal)[0])[0]
        normal2 /= max(np.linalg.norm(normal2), 1e-12)
        for reach in np.geomspace(1.0, 300.0, 12) * max(spread, 1e-6):
            r = snap(center0 + reach * normal2)
            if r is not None:
                center, radius = center0 + reach * normal2, r
                break
    if radius is None:
        # local center search on a small grid around the solved center
        scale = max(h, 1e-3 * spread)
        for reach in (1.0, 3.0, 9.0):
            offsets = np.linspace(-reach * scale, reach * scale, 7)
            done = False
            for dx in offsets:
                for dy in offsets:
                    cand = center0 + np.array([dx, dy])
                    r = snap(cand)
                    if r is not None:
                        center, radius, done = cand, r, True
                        break
                if done:
                    break
            if done:
                break
    if radius is None:
        raise NoZeroFoundError("could not snap the circle onto the families")
    counts = [verify_mod.count_lines_through_disc(s, basis, center, radius)
              for s in specs]
    return {
        "basis": basis,
        "center": np.asarray(center, dtype=float),
        "radius": float(radius),
        "counts": counts,
        "partition": SpherePartition(basis=basis, kind="sphere",
                                     center=np.asarray(center, dtype=float),
                                     radius=float(radius)),
        "report": report,
        "h_final": h,
    }


def family_plane_hits(spec: AssignmentSpec, basis) -> np.ndarray:
    """Plane coordinates of a line family's intersections with a plane."""
    from .measures import assign

    return assign(spec, basis).points
