"""Weighted point clouds as measures, assignments of measures to subspaces,
Gaussian-smoothed half-space evaluation, and canonical bisecting translates.

Smoothing convention: a bandwidth h > 0 smears every 1-D projection of the
cloud with a Gaussian kernel (evaluated through the standard normal CDF);
h = 0 means discrete counting with closed sides, so boundary atoms count for
both sides of a cut.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .geometry import SubspaceBasis

EPS_BIS_REL = 1e-10   # bisecting-offset mass tolerance, relative to total weight
EPS_PARALLEL = 1e-10  # line-direction-normal dot below which a line is parallel
BISECT_MAX_ITER = 200


class MeasureError(ValueError):
    """An assignment or measure evaluation is infeasible."""


@dataclass(frozen=True)
class WeightedCloud:
    """A finite weighted point set standing in for a mass distribution."""

    points: np.ndarray   # (n, dim)
    weights: np.ndarray  # (n,) positive

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        wts = np.asarray(self.weights, dtype=float)
        if pts.shape[0] != wts.shape[0]:
            raise MeasureError("points and weights disagree in length")
        if pts.shape[0] == 0:
            raise MeasureError("cloud is empty")
        if not np.all(np.isfinite(pts)):
            raise MeasureError("cloud contains non-finite points")
        if not (np.all(wts > 0) and np.all(np.isfinite(wts))):
            raise MeasureError("weights must be positive and finite")
        pts = pts.copy()
        wts = wts.copy()
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def spread(self) -> float:
        """Root total weighted variance; the natural length scale of the cloud."""
        w = self.weights / self.total_weight
        mean = w @ self.points
        var = w @ np.sum((self.points - mean) ** 2, axis=1)
        return float(np.sqrt(max(var, 0.0)))


def cloud(points, weights=None) -> WeightedCloud:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if weights is None:
        weights = np.ones(pts.shape[0])
    return WeightedCloud(points=pts, weights=weights)


@dataclass(frozen=True)
class AssignmentSpec:
    """Rule producing a measure on each admissible subspace.

    kind == "projection": orthogonal projection of a fixed cloud in R^d.
    kind == "line_family": one unit-weight atom per line where it meets a
    2-dimensional subspace of R^3.
    """

    kind: str
    cloud: WeightedCloud | None = None
    bases: np.ndarray | None = None       # (n, 3) points on the lines
    directions: np.ndarray | None = None  # (n, 3) unit directions

    def __post_init__(self):
        if self.kind == "projection":
            if self.cloud is None:
                raise MeasureError("projection assignment needs a cloud")
        elif self.kind == "line_family":
            b = np.atleast_2d(np.asarray(self.bases, dtype=float))
            u = np.atleast_2d(np.asarray(self.directions, dtype=float))
            if b.shape != u.shape or b.shape[1] != 3:
                raise MeasureError("line family needs matching (n, 3) bases and directions")
            norms = np.linalg.norm(u, axis=1)
            if np.max(np.abs(norms - 1.0)) > 1e-8:
                raise MeasureError("line directions must be unit vectors")
            b, u = b.copy(), u.copy()
            b.setflags(write=False)
            u.setflags(write=False)
            object.__setattr__(self, "bases", b)
            object.__setattr__(self, "directions", u)
        else:
            raise MeasureError(f"unknown assignment kind {self.kind!r}")

    @property
    def ambient_dim(self) -> int:
        return self.cloud.dim if self.kind == "projection" else 3

    @property
    def total_weight(self) -> float:
        if self.kind == "projection":
            return self.cloud.total_weight
        return float(self.bases.shape[0])


def projection_assignment(points, weights=None) -> AssignmentSpec:
    return AssignmentSpec(kind="projection", cloud=cloud(points, weights))


def line_family_assignment(bases, directions) -> AssignmentSpec:
    return AssignmentSpec(kind="line_family", bases=bases, directions=directions)


def assign(spec: AssignmentSpec, basis: SubspaceBasis) -> WeightedCloud:
    """Measure assigned to the subspace spanned by ``basis``, in L-coordinates."""
    if spec.kind == "projection":
        if spec.cloud.dim != basis.d:
            raise MeasureError("cloud dimension does not match the subspace ambient dimension")
        return WeightedCloud(points=basis.coords(spec.cloud.points),
                             weights=spec.cloud.weights)
    if basis.d != 3 or basis.k != 2:
        raise MeasureError("line families assign only to 2-dimensional subspaces of R^3")
    b1, b2 = basis.vectors
    normal = np.cross(b1, b2)
    denom = spec.directions @ normal
    bad = np.nonzero(np.abs(denom) <= EPS_PARALLEL)[0]
    if bad.size:
        raise MeasureError(f"line {int(bad[0])} is parallel to the subspace")
    s = -(spec.bases @ normal) / denom
    hits = spec.bases + s[:, None] * spec.directions
    return WeightedCloud(points=basis.coords(hits),
                         weights=np.ones(hits.shape[0]))


def _projections(cloud_: WeightedCloud, direction: np.ndarray) -> np.ndarray:
    return cloud_.points @ np.asarray(direction, dtype=float)


def smoothed_above(t: np.ndarray, weights: np.ndarray, c: float, h: float) -> float:
    """Smoothed mass of {projection >= c}; closed counting when h = 0."""
    if h > 0:
        return float(weights @ ndtr((t - c) / h))
    return float(np.sum(weights[t >= c]))


def smoothed_below(t: np.ndarray, weights: np.ndarray, c: float, h: float) -> float:
    """Smoothed mass of {projection <= c}; closed counting when h = 0."""
    if h > 0:
        return float(weights @ ndtr((c - t) / h))
    return float(np.sum(weights[t <= c]))


def halfspace_measure(cloud_: WeightedCloud, normal, offset: float, h: float) -> float:
    """Mass of the closed half-space {<p, normal> >= offset}."""
    normal = np.asarray(normal, dtype=float)
    if abs(np.dot(normal, normal) - 1.0) > 1e-8:
        raise MeasureError("half-space normal must be a unit vector")
    return smoothed_above(_projections(cloud_, normal), cloud_.weights, offset, h)


def _median_interval(t: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """Endpoints of the weighted-median interval of the projections.

    These are the extreme offsets c with mass({< c}) <= W/2 and
    mass({> c}) <= W/2; the interval is never empty.
    """
    order = np.argsort(t, kind="stable")
    ts = t[order]
    ws = weights[order]
    total = float(np.sum(ws))
    half = 0.5 * total
    fwd = np.cumsum(ws)
    lo = float(ts[int(np.searchsorted(fwd, half))]) if fwd[-1] >= half else float(ts[-1])
    # mirrored pass over the reversed data gives the upper endpoint with the
    # same summation order, so negating a cloud exactly negates the interval
    rev = np.cumsum(ws[::-1])
    hi_idx = int(np.searchsorted(rev, half))
    hi = float(ts[::-1][hi_idx]) if rev[-1] >= half else float(ts[0])
    return lo, hi


def _smoothed_balance_root(t: np.ndarray, weights: np.ndarray, h: float,
                           tol: float) -> float:
    """Root of D(c) = mass{>= c} - mass{<= c} for h > 0.

    D is strictly decreasing; a Newton iteration safeguarded by bisection on a
    sign-changing bracket converges to |D| <= tol.  Every quantity mirrors
    exactly under negation of the projections, so the root is exactly odd.
    """
    lo = float(np.min(t)) - 8.0 * h
    hi = float(np.max(t)) + 8.0 * h
    c = 0.5 * (lo + hi)
    for _ in range(BISECT_MAX_ITER):
        u = (t - c) / h
        d_val = float(weights @ ndtr(u)) - float(weights @ ndtr(-u))
        if abs(d_val) <= tol:
            break
        if d_val > 0:
            lo = c
        else:
            hi = c
        slope = 2.0 / h * float(weights @ np.exp(-0.5 * u * u)) * 0.3989422804014327
        if slope > 0.0 and abs(d_val) < slope * 1e100:
            nxt = c + d_val / slope
        else:
            nxt = 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        c = nxt
    return c


def bisecting_offset(cloud_: WeightedCloud, direction, h: float) -> float:
    """Offset c of the translate of {<p, direction> = c} splitting the cloud
    into closed sides of equal smoothed mass.

    For h = 0 the midpoint of the weighted-median interval resolves ties
    deterministically."""
    t = _projections(cloud_, direction)
    if h > 0:
        return _smoothed_balance_root(t, cloud_.weights, h,
                                      EPS_BIS_REL * cloud_.total_weight)
    lo, hi = _median_interval(t, cloud_.weights)
    return 0.5 * (lo + hi)


def lift_cloud(cloud_: WeightedCloud, lifter) -> WeightedCloud:
    """Pushforward of the cloud through a pointwise lifting map."""
    return WeightedCloud(points=lifter(cloud_.points), weights=cloud_.weights)
