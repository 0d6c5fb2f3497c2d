"""Instance generators: the optimality counterexample built from balls on a
regular simplex, line families in R^3, and Gaussian-mixture clouds.

All generators are deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import (
    AssignmentSpec,
    WeightedCloud,
    cloud,
    line_family_assignment,
    projection_assignment,
)


def regular_simplex(d: int) -> np.ndarray:
    """Vertices of a regular d-simplex in R^d with unit circumradius and
    barycenter at the origin, rows as vertices."""
    # start from the canonical basis in R^{d+1}, recenter, rotate down to R^d
    verts = np.eye(d + 1) - 1.0 / (d + 1)
    # orthonormal basis of the sum-zero subspace
    basis, _ = np.linalg.qr(verts.T)
    coords = verts @ basis[:, :d]
    coords /= np.linalg.norm(coords[0])
    return coords


def sample_ball(center: np.ndarray, radius: float, n: int,
                rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from a closed ball via rejection from the cube."""
    center = np.asarray(center, dtype=float)
    d = center.shape[0]
    out = np.empty((n, d))
    filled = 0
    while filled < n:
        draw = rng.uniform(-1.0, 1.0, size=(2 * (n - filled) + 16, d))
        keep = draw[np.sum(draw * draw, axis=1) <= 1.0]
        take = min(keep.shape[0], n - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return center + radius * out


@dataclass(frozen=True)
class CounterexampleInstance:
    """d + 2 ball clouds: one per vertex of a regular simplex plus one at the
    barycenter, with the ball radius half the barycenter-to-facet distance so
    the central ball sits strictly inside the simplex.

    No sphere in any k-dimensional subspace can bisect all the projected
    measures at once; see ``verify.optimality_scan``."""

    d: int
    k: int
    centers: np.ndarray  # (d + 2, d), row 0 the barycenter
    radius: float
    n_points: int
    seed: int
    clouds: tuple[WeightedCloud, ...]

    @property
    def assignments(self) -> list[AssignmentSpec]:
        return [AssignmentSpec(kind="projection", cloud=c) for c in self.clouds]


def gen_counterexample(d: int, k: int, n_points: int = 2000,
                       seed: int = 0) -> CounterexampleInstance:
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    verts = regular_simplex(d)
    centers = np.vstack([np.zeros(d), verts])
    inradius = 1.0 / d  # barycenter-to-facet distance at unit circumradius
    radius = 0.5 * inradius
    rng = np.random.default_rng(seed)
    clouds = tuple(cloud(sample_ball(c, radius, n_points, rng))
                   for c in centers)
    return CounterexampleInstance(d=d, k=k, centers=centers, radius=radius,
                                  n_points=n_points, seed=seed, clouds=clouds)


@dataclass(frozen=True)
class LineFamilyInstance:
    """Families of lines in R^3, none vertical, no two parallel anywhere."""

    families: tuple[AssignmentSpec, ...]
    seed: int

    @property
    def n_families(self) -> int:
        return len(self.families)


def gen_line_families(n_per_family: int = 10, n_families: int = 4,
                      seed: int = 0,
                      angular_tol: float = 1e-3) -> LineFamilyInstance:
    """Random line families with directions rejected when within
    ``angular_tol`` radians of vertical or of any previously drawn line."""
    if n_per_family < 1:
        raise ValueError("need at least one line per family")
    rng = np.random.default_rng(seed)
    cos_tol = np.cos(angular_tol)
    directions: list[np.ndarray] = []
    total = n_per_family * n_families
    attempts = 0
    while len(directions) < total:
        attempts += 1
        if attempts > 1000 * total:
            # practically unreachable for sane tolerances
            rng = np.random.default_rng(seed + attempts)
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        if abs(u[2]) >= cos_tol:
            continue  # too close to vertical
        if any(abs(float(u @ v)) >= cos_tol for v in directions):
            continue  # parallel (or antiparallel) to an existing line
        directions.append(u)
    bases = rng.uniform(-1.0, 1.0, size=(total, 3))
    families = []
    for i in range(n_families):
        sl = slice(i * n_per_family, (i + 1) * n_per_family)
        families.append(line_family_assignment(bases[sl],
                                               np.array(directions[sl])))
    return LineFamilyInstance(families=tuple(families), seed=seed)


def gen_gaussian_mixture(d: int, n_components: int, n_points: int,
                         seed: int = 0, center_scale: float = 1.5,
                         sigma_range: tuple[float, float] = (0.3, 0.8)) -> WeightedCloud:
    """Equal-weight Gaussian mixture sample with unit point weights."""
    rng = np.random.default_rng(seed)
    means = rng.standard_normal((n_components, d)) * center_scale
    sigmas = rng.uniform(*sigma_range, size=n_components)
    labels = rng.integers(0, n_components, size=n_points)
    pts = means[labels] + rng.standard_normal((n_points, d)) * sigmas[labels, None]
    return cloud(pts)


def mixture_mean(d: int, n_components: int, seed: int = 0,
                 center_scale: float = 1.5,
                 sigma_range: tuple[float, float] = (0.3, 0.8)) -> np.ndarray:
    """Population mean of the mixture drawn by ``gen_gaussian_mixture`` with
    the same seed (component means are the first draws of the generator)."""
    rng = np.random.default_rng(seed)
    means = rng.standard_normal((n_components, d)) * center_scale
    return means.mean(axis=0)
