"""Independent residual oracles for claimed partitions.

Everything here evaluates measures of the claimed region directly in
subspace coordinates: no lifting, no test-map code.  Smoothing follows the
package convention (Gaussian CDF along the signed distance to the region
boundary; closed counting at h = 0) so a verified residual is a statement
about the same smoothed measures the solvers target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .geometry import SpherePartition, SlabPartition, SubspaceBasis
from .measures import AssignmentSpec, WeightedCloud, assign
from .wedges import DownWedge, WedgeFrame


class VerifyError(ValueError):
    """A verification input is malformed or infeasible."""


def _region_mass_from_signed(signed: np.ndarray, weights: np.ndarray,
                             h: float) -> float:
    if h > 0:
        return float(weights @ ndtr(signed / h))
    return float(np.sum(weights[signed >= 0]))


def sphere_region_measure(cloud: WeightedCloud, part: SpherePartition,
                          h: float) -> float:
    """Mass of the closed ball (or closed half-space) in L-coordinates."""
    signed = part.signed_boundary_distance(cloud.points)
    return _region_mass_from_signed(signed, cloud.weights, h)


def verify_sphere(assignments, solution: SpherePartition, h: float) -> np.ndarray:
    """|mass(region) - W_j / 2| for every assignment, evaluated directly in
    the solution's subspace coordinates."""
    residuals = []
    for spec in assignments:
        c = assign(spec, solution.basis)
        m = sphere_region_measure(c, solution, h)
        residuals.append(abs(m - 0.5 * c.total_weight))
    return np.array(residuals)


def slab_region_measure(cloud: WeightedCloud, part: SlabPartition,
                        h: float) -> float:
    """Mass of the region between the two parallel hyperplanes (or of the
    degenerate closed half-space), smoothed along the slab axis."""
    a = cloud.points[:, -1]
    w = cloud.weights
    if part.kind == "slab":
        if h > 0:
            return float(w @ (ndtr((part.r2 - a) / h) - ndtr((part.r1 - a) / h)))
        return float(np.sum(w[(a >= part.r1) & (a <= part.r2)]))
    signed = part.side * (a - part.offset)
    return _region_mass_from_signed(signed, w, h)


def verify_slab(assignments, solution: SlabPartition, h: float) -> np.ndarray:
    residuals = []
    for spec in assignments:
        c = assign(spec, solution.basis)
        m = slab_region_measure(c, solution, h)
        residuals.append(abs(m - 0.5 * c.total_weight))
    return np.array(residuals)


def wedge_region_measure(cloud: WeightedCloud, wedge: DownWedge,
                         h: float) -> float:
    """Mass of the convex closed side A of a down-wedge, product-form
    smoothing over the two plane coordinates."""
    x, y = cloud.points[:, 0], cloud.points[:, 1]
    w = cloud.weights
    if wedge.kind == "vertical_line":
        signed = wedge.t - x
    elif wedge.kind == "horizontal_line":
        signed = wedge.y - y
    else:
        sign = 1.0 if wedge.orientation == "left" else -1.0
        if h > 0:
            return float(w @ (ndtr(sign * (wedge.t - x) / h) * ndtr((wedge.y - y) / h)))
        return float(np.sum(w[(sign * (wedge.t - x) >= 0) & (y <= wedge.y)]))
    return _region_mass_from_signed(signed, w, h)


def verify_wedge(assignments, wedge: DownWedge, frame: WedgeFrame,
                 h: float) -> np.ndarray:
    basis = frame.basis()
    residuals = []
    for spec in assignments:
        c = assign(spec, basis)
        m = wedge_region_measure(c, wedge, h)
        residuals.append(abs(m - 0.5 * c.total_weight))
    return np.array(residuals)


def relative_residuals(assignments, residuals: np.ndarray) -> np.ndarray:
    weights = np.array([a.total_weight for a in assignments])
    return np.asarray(residuals) / weights


def passes(assignments, residuals: np.ndarray, tol: float) -> bool:
    """True when every residual is below tol times its assignment weight."""
    return bool(np.all(relative_residuals(assignments, residuals) <= tol))


# ---------------------------------------------------------------------------
# line counting

def count_lines_through_disc(family: AssignmentSpec, basis: SubspaceBasis,
                             center, radius: float,
                             boundary_tol: float = 1e-9) -> tuple[int, int]:
    """(through, not_through) counts of a line family against the closed disc
    in the given 2-dimensional subspace of R^3.

    A line meets the closed disc iff its intersection point with the plane
    falls inside; points on the boundary count on both sides."""
    if family.kind != "line_family":
        raise VerifyError("count_lines_through_disc needs a line family")
    if basis.d != 3 or basis.k != 2:
        raise VerifyError("the disc must live in a 2-dimensional subspace of R^3")
    b1, b2 = basis.vectors
    normal = np.cross(b1, b2)
    denom = family.directions @ normal
    bad = np.nonzero(np.abs(denom) <= 1e-12)[0]
    if bad.size:
        raise VerifyError(f"line {int(bad[0])} is parallel to the plane")
    s = -(family.bases @ normal) / denom
    hits = basis.coords(family.bases + s[:, None] * family.directions)
    dist = np.linalg.norm(hits - np.asarray(center, dtype=float), axis=1)
    slack = boundary_tol * max(radius, 1.0)
    through = int(np.sum(dist <= radius + slack))
    not_through = int(np.sum(dist >= radius - slack))
    return through, not_through


# ---------------------------------------------------------------------------
# optimality scan

@dataclass
class ScanGrid:
    """Grid specification for the optimality scan.

    Refinement rounds re-grid locally around the best cells; refining can
    only lower the reported deficiency."""

    centers_per_axis: int = 41
    n_radii: int = 40
    n_halfspace_dirs: int = 64
    n_offsets: int = 41
    pad: float = 0.75           # lattice margin beyond the bounding box, in spans
    refine_rounds: int = 5
    refine_keep: int = 8
    refine_points: int = 9
    n_subspaces: int = 32
    seed: int = 0


@dataclass
class ScanResult:
    delta: float                      # min over the grid of the max deficiency
    relative_delta: float             # delta / max assignment weight
    best: dict = field(default_factory=dict)


def _ball_deficiencies(clouds, centers: np.ndarray,
                       radii: np.ndarray) -> np.ndarray:
    """max_j |mass_j(ball) - W_j/2| over a centers x radii grid, closed balls."""
    out = np.zeros((centers.shape[0], radii.shape[0]))
    r_sq = radii * radii
    for c in clouds:
        half = 0.5 * c.total_weight
        chunk = max(1, int(4e6 // max(c.n, 1)))
        for lo in range(0, centers.shape[0], chunk):
            hi = min(lo + chunk, centers.shape[0])
            diff = centers[lo:hi, None, :] - c.points[None, :, :]
            dist_sq = np.sum(diff * diff, axis=2)
            masses = np.array([
                (c.weights * (dist_sq <= r2)).sum(axis=1) for r2 in r_sq
            ]).T
            out[lo:hi] = np.maximum(out[lo:hi], np.abs(masses - half))
    return out


def _halfspace_deficiencies(clouds, dirs: np.ndarray, offsets_grid: np.ndarray) -> np.ndarray:
    """max_j deficiency for closed half-spaces over dirs x offsets."""
    out = np.zeros((dirs.shape[0], offsets_grid.shape[1]))
    for c in clouds:
        half = 0.5 * c.total_weight
        proj = c.points @ dirs.T  # (n, n_dirs)
        for i in range(dirs.shape[0]):
            order = np.argsort(proj[:, i], kind="stable")
            t = proj[order, i]
            cum = np.cumsum(c.weights[order])
            idx = np.searchsorted(t, offsets_grid[i], side="left")
            below_strict = np.where(idx > 0, np.concatenate([[0.0], cum])[idx], 0.0)
            masses = c.total_weight - below_strict  # closed {proj >= offset}
            out[i] = np.maximum(out[i], np.abs(masses - half))
    return out


def _scan_fixed_subspace(clouds, grid: ScanGrid) -> tuple[float, dict]:
    pts = np.vstack([c.points for c in clouds])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(np.max(hi - lo))
    k = pts.shape[1]
    # bisecting circles can sit well outside the data, so pad the lattice
    axes = [np.linspace(lo[i] - grid.pad * span, hi[i] + grid.pad * span,
                        grid.centers_per_axis) for i in range(k)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    radii = np.geomspace(0.01 * span, (1.5 + grid.pad) * span, grid.n_radii)
    best = {"delta": np.inf}

    def record(defs, centers_, radii_):
        i, j = np.unravel_index(np.argmin(defs), defs.shape)
        if defs[i, j] < best["delta"]:
            best.update(delta=float(defs[i, j]), kind="ball",
                        center=centers_[i].tolist(), radius=float(radii_[j]))

    defs = _ball_deficiencies(clouds, centers, radii)
    record(defs, centers, radii)
    spacing = np.array([ax[1] - ax[0] if len(ax) > 1 else span for ax in axes])
    r_spacing = np.diff(radii, prepend=radii[0]).max()
    for _ in range(grid.refine_rounds):
        flat = np.argsort(defs, axis=None)[:grid.refine_keep]
        new_centers = []
        new_radii = []
        for f in flat:
            i, j = np.unravel_index(f, defs.shape)
            c0 = centers[i]
            r0 = radii[j]
            local_axes = [np.linspace(c0[a] - 1.5 * spacing[a],
                                      c0[a] + 1.5 * spacing[a],
                                      grid.refine_points) for a in range(k)]
            new_centers.append(np.stack(np.meshgrid(*local_axes, indexing="ij"),
                                        axis=-1).reshape(-1, k))
            new_radii.append(np.linspace(max(r0 - 1.5 * r_spacing, 1e-9 * span),
                                         r0 + 1.5 * r_spacing, grid.refine_points))
        centers = np.unique(np.vstack(new_centers), axis=0)
        radii = np.unique(np.concatenate(new_radii))
        defs = _ball_deficiencies(clouds, centers, radii)
        record(defs, centers, radii)
        spacing = spacing * (3.0 / max(grid.refine_points - 1, 1))
        r_spacing = r_spacing * (3.0 / max(grid.refine_points - 1, 1))

    # half-space limits
    if k == 2:
        angles = np.linspace(0.0, np.pi, grid.n_halfspace_dirs, endpoint=False)
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        rng = np.random.default_rng(grid.seed)
        dirs = rng.standard_normal((grid.n_halfspace_dirs, k))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    proj_all = pts @ dirs.T
    offsets = np.linspace(proj_all.min(axis=0), proj_all.max(axis=0),
                          grid.n_offsets).T  # (n_dirs, n_offsets)
    hdefs = _halfspace_deficiencies(clouds, dirs, offsets)
    i, j = np.unravel_index(np.argmin(hdefs), hdefs.shape)
    if hdefs[i, j] < best["delta"]:
        best.update(delta=float(hdefs[i, j]), kind="halfspace",
                    direction=dirs[i].tolist(), offset=float(offsets[i, j]))
    return best["delta"], best


def optimality_scan(assignments, k: int, grid: ScanGrid | None = None) -> ScanResult:
    """Minimum over a grid of balls and half-spaces (and, for k < d, over a
    sample of k-dimensional subspaces) of the worst bisection deficiency
    max_j |mass_j - W_j/2|, using closed discrete counting.

    A large value certifies that no near-bisecting sphere exists on the
    scanned grid; refining the grid never increases the result."""
    grid = grid or ScanGrid()
    assignments = list(assignments)
    d = assignments[0].ambient_dim
    if not 1 <= k <= d:
        raise VerifyError("need 1 <= k <= d")
    weights = np.array([a.total_weight for a in assignments])
    if k == d:
        bases = [SubspaceBasis(d=d, vectors=np.eye(d))]
    else:
        rng = np.random.default_rng(grid.seed)
        bases = []
        for _ in range(grid.n_subspaces):
            raw = rng.standard_normal((k, d))
            q, _ = np.linalg.qr(raw.T)
            bases.append(SubspaceBasis(d=d, vectors=q[:, :k].T))
    best_delta = np.inf
    best_info: dict = {}
    for bi, basis in enumerate(bases):
        clouds = [assign(a, basis) for a in assignments]
        delta, info = _scan_fixed_subspace(clouds, grid)
        if delta < best_delta:
            best_delta = delta
            best_info = dict(info, subspace=bi)
    return ScanResult(delta=float(best_delta),
                      relative_delta=float(best_delta / np.max(weights)),
                      best=best_info)
