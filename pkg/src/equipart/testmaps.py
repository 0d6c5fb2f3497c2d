"""Sign-flip group actions, the explicitly solvable pilot map used to seed
continuation, and the sphere/slab test maps whose zeros are bisecting
partitions.

Every map here is equivariant: flipping the sign of the sphere variable w or
of any frame vector v_i flips the corresponding output coordinates according
to ``act_range``.  The measure-difference block is scaled by the distance
from w to the lifted frame span so the maps stay continuous through the
degenerate configurations.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.special import ndtr

from .geometry import (
    FramePoint,
    Hyperplane,
    SpherePartition,
    SlabPartition,
    SubspaceBasis,
    complement_basis,
    dist_to_span,
    frame_point,
    parabolic_lift,
    sphere_from_hyperplane,
    slab_from_hyperplane,
    sphere_lift,
)
from .measures import (
    AssignmentSpec,
    MeasureError,
    WeightedCloud,
    assign,
    bisecting_offset,
    lift_cloud,
    _median_interval,
    _smoothed_balance_root,
)

TOL_MASS_REL = 1e-6   # zero-acceptance tolerance for measure entries, relative
TOL_GEOMETRIC = 1e-8  # zero-acceptance tolerance for geometric entries, absolute
EPS_BALANCE_REL = 1e-10


@dataclass(frozen=True)
class GroupElement:
    """Element (s_0, s_1, ..., s_m) of the sign-flip group acting on
    S^d x V_m(R^d): s_0 flips w and each s_i flips v_i."""

    signs: tuple[int, ...]

    def __post_init__(self):
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError("group element signs must be +1 or -1")

    @property
    def m(self) -> int:
        return len(self.signs) - 1

    def compose(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(tuple(a * b for a, b in zip(self.signs, other.signs)))

    @staticmethod
    def identity(m: int) -> "GroupElement":
        return GroupElement((1,) * (m + 1))

    @staticmethod
    def generator(m: int, i: int) -> "GroupElement":
        signs = [1] * (m + 1)
        signs[i] = -1
        return GroupElement(tuple(signs))

    @staticmethod
    def enumerate(m: int):
        for signs in product((1, -1), repeat=m + 1):
            yield GroupElement(signs)

    @staticmethod
    def random(m: int, rng: np.random.Generator) -> "GroupElement":
        return GroupElement(tuple(int(s) for s in rng.choice([-1, 1], size=m + 1)))


@dataclass(frozen=True)
class TestMapValue:
    """Block vector (x_0, ..., x_m) with x_0 in R^d and x_i in R^{d-i}."""

    __test__ = False  # keep pytest from collecting the domain type

    blocks: tuple[np.ndarray, ...]

    @property
    def flat(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0)
        return np.concatenate([np.asarray(b, dtype=float).ravel() for b in self.blocks])

    @property
    def sup_norm(self) -> float:
        f = self.flat
        return float(np.max(np.abs(f))) if f.size else 0.0

    def block_dims(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)


def expected_block_dims(d: int, m: int) -> tuple[int, ...]:
    return tuple(d - i for i in range(m + 1))


def act_domain(gel: GroupElement, p: FramePoint) -> FramePoint:
    if gel.m != p.m:
        raise ValueError("group element length does not match the frame")
    w = gel.signs[0] * p.w
    v = p.v.copy()
    for i in range(p.m):
        v[i] *= gel.signs[i + 1]
    return FramePoint(w=w, v=v)


def act_range(gel: GroupElement, val: TestMapValue) -> TestMapValue:
    blocks = [np.array(b, dtype=float) for b in val.blocks]
    if gel.m != len(blocks) - 1:
        raise ValueError("group element length does not match the value")
    s0 = gel.signs[0]
    blocks[0] = s0 * blocks[0]
    for i in range(1, len(blocks)):
        blocks[i] = gel.signs[i] * blocks[i]
        if s0 == -1 and blocks[i].size:
            blocks[i][0] = -blocks[i][0]
    return TestMapValue(blocks=tuple(blocks))


def canonical_g(p: FramePoint) -> TestMapValue:
    """The explicit equivariant map with a single zero orbit.

    x_0 collects the first d coordinates of w; block i starts with
    w_{d+1} * v_{i,1} followed by v_{i,2}, ..., v_{i,d-i}.  Solving for zeros
    forces w = +-e_{d+1} and then v_i = +-e_{d+1-i} inductively.
    """
    d, m = p.d, p.m
    blocks = [np.array(p.w[:d])]
    for i in range(1, m + 1):
        row = p.v[i - 1]
        block = np.empty(d - i)
        if block.size:
            block[0] = p.w[d] * row[0]
            block[1:] = row[1:d - i]
        blocks.append(block)
    return TestMapValue(blocks=tuple(blocks))


def canonical_zero(d: int, m: int) -> FramePoint:
    """The positive-sign member of the zero orbit of ``canonical_g``."""
    w = np.zeros(d + 1)
    w[d] = 1.0
    v = np.zeros((m, d))
    for i in range(1, m + 1):
        v[i - 1, d - i] = 1.0
    return FramePoint(w=w, v=v)


def zero_orbit(d: int, m: int) -> list[FramePoint]:
    """All 2^{m+1} signed-axis zeros of ``canonical_g``."""
    base = canonical_zero(d, m)
    return [act_domain(gel, base) for gel in GroupElement.enumerate(m)]


class CanonicalMap:
    """Callable wrapper for ``canonical_g`` with solver metadata."""

    def __init__(self, d: int, m: int):
        if not 0 <= m <= d:
            raise ValueError("need 0 <= m <= d")
        self.d = d
        self.m = m
        self.block_dims = expected_block_dims(d, m)
        n = sum(self.block_dims)
        self.weight_scales = np.ones(n)
        self.accept_tol = np.full(n, TOL_GEOMETRIC)

    def __call__(self, p: FramePoint) -> TestMapValue:
        return canonical_g(p)


def _halfspace_diffs(t: np.ndarray, weights: np.ndarray, c: float,
                     h: float) -> float:
    """nu(H+) - nu(H-) for 1-D projections t against the offset c.

    Computed as a sum of paired CDF evaluations so negating (t, c) negates
    the result exactly in floating point."""
    if h > 0:
        u = (t - c) / h
        return float(weights @ ndtr(u)) - float(weights @ ndtr(-u))
    return float(np.sum(weights[t >= c])) - float(np.sum(weights[t <= c]))


def _offset_for(t: np.ndarray, weights: np.ndarray, h: float) -> float:
    if h > 0:
        return _smoothed_balance_root(t, weights, h,
                                      EPS_BALANCE_REL * float(np.sum(weights)))
    lo, hi = _median_interval(t, weights)
    return 0.5 * (lo + hi)


def _decreasing_root(f, lo: float, hi: float, ftol: float,
                     max_iter: int = 200) -> float:
    """Root of a decreasing function with f(lo) >= 0 >= f(hi).

    Bisection with a secant acceleration; all arithmetic mirrors exactly
    under simultaneous negation of the bracket and the function."""
    f_lo = f(lo)
    f_hi = f(hi)
    if f_lo < 0 or f_hi > 0:
        # expand until bracketed (growth bounded by caller's bracket quality)
        span = hi - lo
        for _ in range(64):
            if f_lo >= 0 and f_hi <= 0:
                break
            span *= 2.0
            if f_lo < 0:
                lo -= span
                f_lo = f(lo)
            if f_hi > 0:
                hi += span
                f_hi = f(hi)
    x_prev: float | None = None
    f_prev = 0.0
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x)
        if abs(fx) <= ftol:
            return x
        if fx > 0:
            lo = x
        else:
            hi = x
        nxt = 0.5 * (lo + hi)
        if x_prev is not None:
            df = fx - f_prev
            if df != 0.0:
                secant = x - fx * (x - x_prev) / df
                if lo < secant < hi:
                    nxt = secant
        x_prev, f_prev = x, fx
        x = nxt
    return x


class _MeasureMapBase:
    """Shared plumbing for the sphere and slab test maps."""

    def __init__(self, assignments, k: int, h: float, prescribed, mode: str, m: int):
        self.assignments = list(assignments)
        d = self.assignments[0].ambient_dim
        if any(a.ambient_dim != d for a in self.assignments):
            raise MeasureError("assignments live in different ambient dimensions")
        if len(self.assignments) < d + 1:
            raise MeasureError(f"need at least {d + 1} assignments, got {len(self.assignments)}")
        if not 1 <= k <= d:
            raise ValueError("need 1 <= k <= d")
        if mode not in ("lifted", "direct"):
            raise ValueError(f"unknown measure evaluation mode {mode!r}")
        if mode == "direct" and not h > 0:
            raise ValueError("direct measure evaluation needs a smoothing bandwidth h > 0")
        self.d = d
        self.k = k
        self.h = float(h)
        self.mode = mode
        self.m = m
        # extra assignments widen the measure block; the map is then
        # overdetermined and can only be attacked by the multistart solver
        n_extra = len(self.assignments) - (d + 1)
        self.overdetermined = n_extra > 0
        if prescribed is None:
            prescribed = np.eye(d)[: k - 1]
        prescribed = np.atleast_2d(np.asarray(prescribed, dtype=float))
        if k == 1:
            prescribed = np.zeros((0, d))
        if prescribed.shape != (k - 1, d):
            raise ValueError(f"expected {k - 1} prescribed directions in R^{d}")
        norms = np.linalg.norm(prescribed, axis=1)
        if prescribed.shape[0]:
            if np.min(norms) < 1e-12:
                raise ValueError("prescribed directions must be nonzero")
            if np.max(np.abs(norms - 1.0)) > 1e-8:
                prescribed = prescribed / norms[:, None]
        self.prescribed = prescribed
        dims = list(expected_block_dims(d, m))
        dims[0] += n_extra
        self.block_dims = tuple(dims)
        self.weights = np.array([a.total_weight for a in self.assignments])
        n_mass = d + n_extra
        scales = np.ones(sum(self.block_dims))
        scales[:n_mass] = self.weights[1:]
        self.weight_scales = scales
        tol = np.full(sum(self.block_dims), TOL_GEOMETRIC)
        tol[:n_mass] = TOL_MASS_REL * self.weights[1:]
        self.accept_tol = tol

    def _geometric_block(self, p: FramePoint, i: int, first: float) -> np.ndarray:
        """Block x_i: lifted-normal coordinate, prescribed-direction
        coordinates (for i <= d - k), zero padding."""
        d, k = self.d, self.k
        block = np.zeros(d - i)
        block[0] = first
        if i <= d - k:
            row = p.v[i - 1]
            for l in range(k - 1):
                block[1 + l] = float(self.prescribed[l] @ row)
        return block


class SphereTestMap(_MeasureMapBase):
    """Equivariant map on S^d x V_{d-k}(R^d) whose zeros give a subspace L
    (containing the prescribed directions) and a sphere in L bisecting every
    assigned measure.

    mode == "lifted": measures are pushed onto the inversion sphere in
    R^{d+1} and cut by the hyperplane orthogonal to w that bisects the first
    measure; smoothing acts on the 1-D projections onto w.
    mode == "direct": the same cut is evaluated in L-coordinates through the
    signed distance to the pulled-back ball, matching the independent
    verification semantics exactly at a zero.
    """

    def __init__(self, assignments, k: int, h: float, prescribed=None,
                 mode: str = "lifted"):
        d = list(assignments)[0].ambient_dim
        super().__init__(assignments, k, h, prescribed, mode, m=d - k)

    def basis_for(self, p: FramePoint) -> SubspaceBasis:
        return complement_basis(p, self.k)

    # -- lifted evaluation -------------------------------------------------
    def _lifted_diffs(self, p: FramePoint, clouds) -> tuple[np.ndarray, float]:
        basis = clouds[0][1]
        proj = [lift_cloud(c, lambda a: sphere_lift(a, basis)).points @ p.w
                for c, _ in clouds]
        c_off = _offset_for(proj[0], clouds[0][0].weights, self.h)
        diffs = np.array([
            _halfspace_diffs(proj[j], clouds[j][0].weights, c_off, self.h)
            for j in range(1, len(clouds))
        ])
        return diffs, c_off

    # -- direct evaluation -------------------------------------------------
    def _signed_distances(self, coords: np.ndarray, w_l: np.ndarray,
                          w_last: float, c: float) -> np.ndarray:
        """Signed L-distance to the pulled-back cut, positive on the side
        corresponding to H+."""
        quad = c * np.sum(coords * coords, axis=1) - coords @ w_l + (c - w_last)
        norm_wl = float(np.linalg.norm(w_l))
        if abs(c) > 1e-100 * max(norm_wl, 1.0):
            r_sq = (norm_wl * norm_wl) / (4.0 * c * c) - (c - w_last) / c
            if r_sq <= 0.0:
                return np.full(coords.shape[0], -np.sign(c) * np.inf)
            radius = np.sqrt(r_sq)
            center = w_l / (2.0 * c)
            dist = np.linalg.norm(coords - center, axis=1)
            denom = np.maximum(abs(c) * (radius + dist), 1e-300)
            return -quad / denom
        if norm_wl < 1e-300:
            return np.full(coords.shape[0], np.inf if c - w_last < 0 else -np.inf)
        return -quad / norm_wl

    def _direct_diffs(self, p: FramePoint, clouds) -> tuple[np.ndarray, float]:
        basis = clouds[0][1]
        w_l = basis.vectors @ p.w[:self.d]
        w_last = float(p.w[self.d])
        pts0, wts0 = clouds[0][0].points, clouds[0][0].weights
        w0 = float(np.sum(wts0))
        crit = (pts0 @ w_l + w_last) / (np.sum(pts0 * pts0, axis=1) + 1.0)

        def balance(c: float) -> float:
            u = self._signed_distances(pts0, w_l, w_last, c) / self.h
            return float(wts0 @ ndtr(u)) - float(wts0 @ ndtr(-u))

        span = max(float(np.max(crit)) - float(np.min(crit)), self.h, 1e-12)
        c_off = _decreasing_root(balance,
                                 float(np.min(crit)) - span,
                                 float(np.max(crit)) + span,
                                 EPS_BALANCE_REL * w0)
        diffs = []
        for cl, _ in clouds[1:]:
            u = self._signed_distances(cl.points, w_l, w_last, c_off) / self.h
            diffs.append(float(cl.weights @ ndtr(u)) - float(cl.weights @ ndtr(-u)))
        return np.array(diffs), c_off

    def _clouds(self, p: FramePoint):
        basis = self.basis_for(p)
        return [(assign(spec, basis), basis) for spec in self.assignments]

    def __call__(self, p: FramePoint) -> TestMapValue:
        d, m = self.d, self.m
        clouds = self._clouds(p)
        if self.mode == "lifted":
            diffs, _ = self._lifted_diffs(p, clouds)
        else:
            diffs, _ = self._direct_diffs(p, clouds)
        dist = dist_to_span(p.w, p, m)
        blocks = [dist * diffs]
        for i in range(1, m + 1):
            first = float(p.v[i - 1] @ p.w[:d])
            blocks.append(self._geometric_block(p, i, first))
        return TestMapValue(blocks=tuple(blocks))

    def extract(self, p: FramePoint) -> dict:
        """Recover the partition encoded by a (near-)zero of the map."""
        clouds = self._clouds(p)
        if self.mode == "lifted":
            _, c_off = self._lifted_diffs(p, clouds)
        else:
            _, c_off = self._direct_diffs(p, clouds)
        basis = clouds[0][1]
        hyper = Hyperplane(w=p.w, c=c_off)
        partition = sphere_from_hyperplane(hyper, basis)
        return {"basis": basis, "hyperplane": hyper, "partition": partition,
                "offset": c_off}


class SlabTestMap(_MeasureMapBase):
    """Equivariant map on S^d x V_d(R^d) whose zeros give a subspace L
    (the span of the last k frame vectors, containing the prescribed
    directions) and a parallel slab in L bisecting every assigned measure.

    The lift bends L quadratically in its last coordinate, so cutting with a
    hyperplane recovers the region between two parallel hyperplanes of L.
    """

    def __init__(self, assignments, k: int, h: float, prescribed=None,
                 mode: str = "lifted"):
        d = list(assignments)[0].ambient_dim
        super().__init__(assignments, k, h, prescribed, mode, m=d)

    def basis_for(self, p: FramePoint) -> SubspaceBasis:
        return SubspaceBasis(d=self.d, vectors=p.v[self.d - self.k:, :])

    def _clouds(self, p: FramePoint):
        basis = self.basis_for(p)
        return [(assign(spec, basis), basis) for spec in self.assignments]

    def _lifted_diffs(self, p: FramePoint, clouds) -> tuple[np.ndarray, float]:
        proj = [lift_cloud(c, lambda a: parabolic_lift(a, p, self.k)).points @ p.w
                for c, _ in clouds]
        c_off = _offset_for(proj[0], clouds[0][0].weights, self.h)
        diffs = np.array([
            _halfspace_diffs(proj[j], clouds[j][0].weights, c_off, self.h)
            for j in range(1, len(clouds))
        ])
        return diffs, c_off

    def _plus_minus(self, a: np.ndarray, weights: np.ndarray, lead: float,
                    beta: float, c: float) -> float:
        """nu(H+) - nu(H-) for the quadratic cut lead*t^2 + beta*t = c along
        the last subspace coordinate, smoothed in that coordinate."""
        h = self.h
        if abs(lead) > 1e-13 * max(abs(beta), abs(c), 1e-300):
            disc = beta * beta + 4.0 * lead * c
            if disc < 0.0:
                total = float(np.sum(weights))
                return total if lead > 0 else -total
            s = np.sqrt(disc)
            q = -(beta + np.copysign(s, beta)) / 2.0
            if q == 0.0:
                r1 = r2 = 0.0
            else:
                r1, r2 = q / lead, -c / q
            if r1 > r2:
                r1, r2 = r2, r1
            inside = float(weights @ (ndtr((r2 - a) / h) - ndtr((r1 - a) / h)))
            outside = float(weights @ (ndtr((r1 - a) / h) + ndtr((a - r2) / h)))
            return (outside - inside) if lead > 0 else (inside - outside)
        if abs(beta) < 1e-300:
            total = float(np.sum(weights))
            return total if c < 0 else (-total if c > 0 else 0.0)
        t0 = c / beta
        u = np.sign(beta) * (a - t0) / h
        return float(weights @ ndtr(u)) - float(weights @ ndtr(-u))

    def _direct_diffs(self, p: FramePoint, clouds) -> tuple[np.ndarray, float]:
        d = self.d
        beta = float(p.v[d - 1] @ p.w[:d])
        lead = float(p.w[d])
        a0 = clouds[0][0].points[:, -1]
        wts0 = clouds[0][0].weights
        crit = lead * a0 * a0 + beta * a0
        span = max(float(np.max(crit)) - float(np.min(crit)), self.h, 1e-12)

        def balance(c: float) -> float:
            return self._plus_minus(a0, wts0, lead, beta, c)

        c_off = _decreasing_root(balance,
                                 float(np.min(crit)) - span,
                                 float(np.max(crit)) + span,
                                 EPS_BALANCE_REL * float(np.sum(wts0)))
        diffs = np.array([
            self._plus_minus(cl.points[:, -1], cl.weights, lead, beta, c_off)
            for cl, _ in clouds[1:]
        ])
        return diffs, c_off

    def __call__(self, p: FramePoint) -> TestMapValue:
        d, k = self.d, self.k
        clouds = self._clouds(p)
        if self.mode == "lifted":
            diffs, _ = self._lifted_diffs(p, clouds)
        else:
            diffs, _ = self._direct_diffs(p, clouds)
        dist = dist_to_span(p.w, p, d - 1)
        blocks = [dist * diffs]
        for i in range(1, d):
            first = float(p.v[i - 1] @ p.w[:d])
            blocks.append(self._geometric_block(p, i, first))
        blocks.append(np.zeros(0))
        return TestMapValue(blocks=tuple(blocks))

    def extract(self, p: FramePoint) -> dict:
        clouds = self._clouds(p)
        if self.mode == "lifted":
            _, c_off = self._lifted_diffs(p, clouds)
        else:
            _, c_off = self._direct_diffs(p, clouds)
        basis = clouds[0][1]
        hyper = Hyperplane(w=p.w, c=c_off)
        partition = slab_from_hyperplane(hyper, p, self.k)
        return {"basis": basis, "hyperplane": hyper, "partition": partition,
                "offset": c_off}


def sphere_test_map(p: FramePoint, assignments, prescribed=None, h: float = 0.0,
                    mode: str = "lifted") -> TestMapValue:
    """One-shot evaluation of the sphere test map at p."""
    d = list(assignments)[0].ambient_dim
    k = d - p.m
    return SphereTestMap(assignments, k=k, h=h, prescribed=prescribed, mode=mode)(p)


def slab_test_map(p: FramePoint, assignments, k: int, prescribed=None,
                  h: float = 0.0, mode: str = "lifted") -> TestMapValue:
    """One-shot evaluation of the slab test map at p."""
    return SlabTestMap(assignments, k=k, h=h, prescribed=prescribed, mode=mode)(p)
