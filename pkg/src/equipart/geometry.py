"""Frames, subspace bases, the two lifting maps, inversion, and recovery of
spheres and slabs from hyperplanes one dimension up.

All operations are pure functions of immutable inputs and safe to call
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_ORTHO = 1e-10  # orthonormality tolerance for frames and bases
EPS_INV = 1e-12    # minimum norm accepted by the inversion map
EPS_GEO = 1e-9     # resubstitution tolerance for recovered partitions

# Relative threshold below which a cutting hyperplane is classified as a
# degenerate (infinite-radius) sphere rather than a proper one.
EPS_DEGENERATE = 1e-9


class GeometryError(ValueError):
    """A geometric precondition failed or a recovery is infeasible."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FramePoint:
    """A point (w; v_1..v_m) of S^d x V_m(R^d).

    ``w`` is a unit vector in R^{d+1}; ``v`` holds m orthonormal rows in R^d.
    m = d - k for sphere searches and m = d for slab searches.
    """

    w: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _readonly(self.w))
        object.__setattr__(self, "v", _readonly(np.atleast_2d(self.v)))
        if self.v.shape[1] != self.d and self.v.shape[0] > 0:
            raise GeometryError(
                f"frame vectors live in R^{self.v.shape[1]}, expected R^{self.d}"
            )

    @property
    def d(self) -> int:
        return self.w.shape[0] - 1

    @property
    def m(self) -> int:
        return self.v.shape[0]

    def validate(self, eps: float = EPS_ORTHO) -> None:
        if abs(np.dot(self.w, self.w) - 1.0) > 2 * eps:
            raise GeometryError("w is not a unit vector")
        if self.m:
            gram = self.v @ self.v.T
            if np.max(np.abs(gram - np.eye(self.m))) > eps:
                raise GeometryError("frame vectors are not orthonormal")


def frame_point(w, v=None) -> FramePoint:
    """Build a FramePoint, accepting an empty frame for m = 0."""
    w = np.asarray(w, dtype=float)
    if v is None:
        v = np.zeros((0, w.shape[0] - 1))
    return FramePoint(w=w, v=np.asarray(v, dtype=float))


@dataclass(frozen=True)
class SubspaceBasis:
    """Ordered orthonormal basis of a k-dimensional subspace L of R^d."""

    d: int
    vectors: np.ndarray  # (k, d) orthonormal rows

    def __post_init__(self):
        object.__setattr__(self, "vectors", _readonly(np.atleast_2d(self.vectors)))
        if self.vectors.shape[1] != self.d:
            raise GeometryError("basis vectors have wrong ambient dimension")

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    def coords(self, points: np.ndarray) -> np.ndarray:
        """Coordinates of ambient points with respect to this basis."""
        return np.atleast_2d(points) @ self.vectors.T

    def embed(self, coords: np.ndarray) -> np.ndarray:
        """Ambient points from basis coordinates."""
        return np.atleast_2d(coords) @ self.vectors


@dataclass(frozen=True)
class Hyperplane:
    """Affine hyperplane {y in R^{d+1} : <y, w> = c} with unit normal w.

    The closed sides are H+ = {<y,w> >= c} and H- = {<y,w> <= c}.
    """

    w: np.ndarray
    c: float

    def __post_init__(self):
        object.__setattr__(self, "w", _readonly(self.w))
        object.__setattr__(self, "c", float(self.c))


@dataclass(frozen=True)
class SpherePartition:
    """A sphere or degenerate sphere (halfspace) inside a subspace L.

    kind == "sphere": boundary {\\|a - center\\| = radius} in L-coordinates and
    the associated closed region is the ball.
    kind == "halfspace": region {<a, normal> >= offset}, the infinite-radius
    degeneration.
    """

    basis: SubspaceBasis
    kind: str
    center: np.ndarray | None = None
    radius: float | None = None
    normal: np.ndarray | None = None
    offset: float | None = None

    def __post_init__(self):
        if self.kind not in ("sphere", "halfspace"):
            raise GeometryError(f"unknown sphere partition kind {self.kind!r}")
        if self.kind == "sphere":
            if self.radius is None or not np.isfinite(self.radius) or self.radius <= 0:
                raise GeometryError("sphere radius must be finite and positive")
            object.__setattr__(self, "center", _readonly(self.center))
        else:
            object.__setattr__(self, "normal", _readonly(self.normal))
            object.__setattr__(self, "offset", float(self.offset))

    def signed_boundary_distance(self, coords: np.ndarray) -> np.ndarray:
        """Signed distance to the region boundary, positive inside the region."""
        coords = np.atleast_2d(coords)
        if self.kind == "sphere":
            return self.radius - np.linalg.norm(coords - self.center, axis=1)
        return coords @ self.normal - self.offset


@dataclass(frozen=True)
class SlabPartition:
    """Region between two parallel hyperplanes of L orthogonal to its last
    basis direction, or a halfspace degeneration.

    kind == "slab": region {r1 <= a_k <= r2} (a_k the last basis coordinate).
    kind == "halfspace": region {side * (a_k - offset) >= 0}.
    """

    basis: SubspaceBasis
    kind: str
    r1: float | None = None
    r2: float | None = None
    offset: float | None = None
    side: int = 1

    def __post_init__(self):
        if self.kind not in ("slab", "halfspace"):
            raise GeometryError(f"unknown slab partition kind {self.kind!r}")
        if self.kind == "slab":
            if not (np.isfinite(self.r1) and np.isfinite(self.r2)):
                raise GeometryError("slab bounds must be finite")
            if self.r1 > self.r2:
                raise GeometryError("slab bounds must satisfy r1 <= r2")
            object.__setattr__(self, "r1", float(self.r1))
            object.__setattr__(self, "r2", float(self.r2))
        else:
            object.__setattr__(self, "offset", float(self.offset))

    def contains(self, coords: np.ndarray) -> np.ndarray:
        """Closed-region membership for points given in L-coordinates."""
        a = np.atleast_2d(coords)[:, -1]
        if self.kind == "slab":
            return (a >= self.r1) & (a <= self.r2)
        return self.side * (a - self.offset) >= 0


def orthonormalize_rows(v: np.ndarray) -> np.ndarray:
    """Nearest-by-QR orthonormal row set, deterministic sign convention."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if v.shape[0] == 0:
        return v
    q, r = np.linalg.qr(v.T)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return (q * signs).T


def complement_rows(v: np.ndarray, d: int, count: int, skip_tol: float = 1e-6) -> np.ndarray:
    """Deterministic orthonormal rows spanning the orthogonal complement of
    the row space of ``v`` in R^d.

    Canonical axes are projected onto the complement in order and
    orthonormalized; near-zero projections are skipped so the construction is
    well defined away from a measure-zero set of frames.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if count == 0:
        return np.zeros((0, d))
    rows: list[np.ndarray] = []
    for j in range(d):
        q = np.zeros(d)
        q[j] = 1.0
        for _ in range(2):  # twice-is-enough reorthogonalization
            if v.shape[0]:
                q = q - v.T @ (v @ q)
            for b in rows:
                q = q - np.dot(b, q) * b
        norm = np.linalg.norm(q)
        if norm < skip_tol:
            continue
        rows.append(q / norm)
        if len(rows) == count:
            break
    if len(rows) < count:
        raise GeometryError("could not construct a complement basis; frame degenerate")
    return np.array(rows)


def complement_basis(frame: FramePoint, k: int) -> SubspaceBasis:
    """Canonical orthonormal basis of L, the orthogonal complement of the
    span of the frame vectors.

    The same frame (up to signs of its vectors) always yields the same basis.
    """
    d = frame.d
    if frame.m != d - k:
        raise GeometryError(f"frame has {frame.m} vectors, expected {d - k}")
    frame.validate()
    return SubspaceBasis(d=d, vectors=complement_rows(frame.v, d, k))


def inversion(x: np.ndarray) -> np.ndarray:
    """Unit-sphere inversion x -> x / ||x||^2; an involution away from 0."""
    x = np.asarray(x, dtype=float)
    sq = np.sum(x * x, axis=-1, keepdims=True)
    if np.any(sq <= EPS_INV * EPS_INV):
        raise GeometryError("inversion undefined near the origin")
    return x / sq


def embed_affine(x: np.ndarray) -> np.ndarray:
    """Append a final coordinate 1, embedding R^d as the plane {y_{d+1} = 1}."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    ones = np.ones((x.shape[0], 1))
    return np.hstack([x, ones])


def sphere_lift(coords: np.ndarray, basis: SubspaceBasis) -> np.ndarray:
    """Lift L-coordinates onto the sphere of radius 1/2 centered at
    (0,...,0,1/2) in R^{d+1}: invert the affine embedding of the subspace point.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    x = coords @ basis.vectors
    y = embed_affine(x)
    return y / np.sum(y * y, axis=1, keepdims=True)


def parabolic_lift(coords: np.ndarray, frame: FramePoint, k: int) -> np.ndarray:
    """Lift L-coordinates into R^{d+1} along the last k frame directions,
    bending the last coordinate upward quadratically.

    Requires a full frame (m = d); L is spanned by the last k frame vectors
    and the last coordinate of ``coords`` multiplies the final direction.
    """
    if frame.m != frame.d:
        raise GeometryError("parabolic lift needs a full frame (m = d)")
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[1] != k:
        raise GeometryError(f"coords have {coords.shape[1]} columns, expected {k}")
    x = coords @ frame.v[frame.d - k:, :]
    last = coords[:, -1:] ** 2
    return np.hstack([x, last])


def dist_to_span(w: np.ndarray, frame: FramePoint, m_span: int) -> float:
    """Distance from the unit vector w in R^{d+1} to the span of the first
    ``m_span`` lifted frame vectors (v_i, 0).  Zero iff w lies in that span.
    """
    w = np.asarray(w, dtype=float)
    if m_span == 0:
        return 1.0
    proj = frame.v[:m_span, :] @ w[:-1]
    return float(np.sqrt(max(1.0 - float(np.dot(proj, proj)), 0.0)))


def sphere_from_hyperplane(h: Hyperplane, basis: SubspaceBasis,
                           check: bool = True) -> SpherePartition:
    """Pull a cutting hyperplane back through the sphere lift into L.

    The boundary {a : <lift(a), w> = c} satisfies, in L-coordinates,
    c*|a|^2 - <a, w_L> + (c - w_{d+1}) = 0 with w_L the basis-projected
    normal, i.e. a sphere when c is away from 0 and a hyperplane otherwise.
    """
    d = basis.d
    w_l = basis.vectors @ h.w[:d]
    w_last = float(h.w[d])
    c = h.c
    norm_wl = float(np.linalg.norm(w_l))
    if abs(c) > EPS_DEGENERATE * max(norm_wl, abs(c)):
        center = w_l / (2.0 * c)
        r_sq = float(np.dot(w_l, w_l)) / (4.0 * c * c) - (c - w_last) / c
        scale = max(float(np.dot(center, center)), 1.0)
        if r_sq <= EPS_GEO * scale:
            raise GeometryError("hyperplane misses the lifted subspace")
        part = SpherePartition(basis=basis, kind="sphere",
                               center=center, radius=float(np.sqrt(r_sq)))
    else:
        if norm_wl < EPS_INV:
            raise GeometryError("hyperplane misses the lifted subspace")
        part = SpherePartition(basis=basis, kind="halfspace",
                               normal=w_l / norm_wl,
                               offset=(c - w_last) / norm_wl)
    if check:
        _check_sphere_resubstitution(part, h)
    return part


def _check_sphere_resubstitution(part: SpherePartition, h: Hyperplane) -> None:
    basis = part.basis
    k = basis.k
    rng = np.random.default_rng(0)
    dirs = rng.standard_normal((8, k))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if part.kind == "sphere":
        pts = part.center + part.radius * dirs
        scale = max(1.0, float(np.linalg.norm(part.center)) + part.radius)
    else:
        tangents = dirs - np.outer(dirs @ part.normal, part.normal)
        pts = part.offset * part.normal + tangents
        scale = max(1.0, abs(part.offset))
    lifted = sphere_lift(pts, basis)
    err = np.max(np.abs(lifted @ h.w - h.c))
    if err > EPS_GEO * scale:
        raise GeometryError(f"recovered boundary leaves the hyperplane (err={err:.3e})")


def _stable_quadratic_roots(a2: float, a1: float, a0: float) -> tuple[float, float]:
    """Real roots of a2*t^2 + a1*t + a0, a2 != 0, computed without cancellation."""
    disc = a1 * a1 - 4.0 * a2 * a0
    if disc < 0.0:
        raise GeometryError("hyperplane misses the lifted subspace")
    s = np.sqrt(disc)
    q = -(a1 + np.copysign(s, a1)) / 2.0
    if q == 0.0:
        r1 = r2 = 0.0
    else:
        r1, r2 = q / a2, a0 / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


def slab_from_hyperplane(h: Hyperplane, frame: FramePoint, k: int,
                         zero_tol: float = 1e-7,
                         check: bool = True) -> SlabPartition:
    """Pull a cutting hyperplane back through the parabolic lift into L.

    Requires <w, (v_i, 0)> = 0 for i < d (the configuration reached at a test
    map zero), leaving the quadratic w_{d+1} t^2 + <w,(v_d,0)> t - c = 0 in
    the last coordinate.
    """
    d = frame.d
    if frame.m != d:
        raise GeometryError("slab recovery needs a full frame")
    dots = frame.v @ h.w[:d]
    if d > 1 and np.max(np.abs(dots[:-1])) > zero_tol:
        raise GeometryError("hyperplane normal is not orthogonal to the leading frame directions")
    beta = float(dots[-1])
    lead = float(h.w[d])
    basis = SubspaceBasis(d=d, vectors=frame.v[d - k:, :])
    if abs(lead) <= 1e-13 * max(abs(beta), abs(h.c), 1e-300):
        if abs(beta) < EPS_INV:
            raise GeometryError("hyperplane misses the lifted subspace")
        part = SlabPartition(basis=basis, kind="halfspace",
                             offset=h.c / beta, side=int(np.sign(beta)))
    else:
        r1, r2 = _stable_quadratic_roots(lead, beta, -h.c)
        part = SlabPartition(basis=basis, kind="slab", r1=r1, r2=r2)
    if check:
        _check_slab_resubstitution(part, h, frame, k, zero_tol)
    return part


def _check_slab_resubstitution(part: SlabPartition, h: Hyperplane,
                               frame: FramePoint, k: int,
                               zero_tol: float) -> None:
    rng = np.random.default_rng(0)
    coords = rng.standard_normal((4, k))
    if part.kind == "slab":
        roots = [part.r1, part.r2]
    else:
        roots = [part.offset]
    pts = []
    for r in roots:
        c = coords.copy()
        c[:, -1] = r
        pts.append(c)
    stacked = np.vstack(pts)
    lifted = parabolic_lift(stacked, frame, k)
    scale = max(1.0, max(abs(r) for r in roots)) ** 2
    # residual frame-normal dot products within zero_tol leak into the
    # resubstitution through the transverse coordinates
    leak = zero_tol * float(np.sum(np.max(np.abs(stacked[:, :-1]), axis=0))) if k > 1 else 0.0
    err = np.max(np.abs(lifted @ h.w - h.c))
    if err > EPS_GEO * scale + leak:
        raise GeometryError(f"recovered slab leaves the hyperplane (err={err:.3e})")
