"""Down-wedges on vertical planes: the unique bisecting down-wedge at a given
vertical-ray position, the associated two-sided test map on S^{d-2} x [0,1],
a planar exact solver, and the brute-force planar oracle.

A down-wedge's vertical ray points down; its convex closed side A is a
quadrant (or a half-plane in the degenerate vertical/horizontal-line cases)
and B is the closed complement.  Smoothed quadrant masses take the product
form G((t - x)/h) * G((y0 - y)/h), so A and B masses add up to the total
weight exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .geometry import SubspaceBasis
from .measures import AssignmentSpec, WeightedCloud, assign, bisecting_offset
from .testmaps import _decreasing_root, _halfspace_diffs

EPS_BIS_REL = 1e-10


class WedgeError(RuntimeError):
    """A wedge search failed in a way the theory says cannot happen."""


@dataclass(frozen=True)
class WedgeFrame:
    """A vertical plane in R^d: span of a horizontal unit vector and e_d,
    with the ordered basis (v, e_d)."""

    v: np.ndarray  # unit vector in R^{d-1} x {0}, stored with d entries

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).copy()
        if abs(v[-1]) > 1e-12:
            raise ValueError("the horizontal direction must be orthogonal to e_d")
        if abs(np.linalg.norm(v) - 1.0) > 1e-8:
            raise ValueError("the horizontal direction must be a unit vector")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def d(self) -> int:
        return self.v.shape[0]

    def basis(self) -> SubspaceBasis:
        e_last = np.zeros(self.d)
        e_last[-1] = 1.0
        return SubspaceBasis(d=self.d, vectors=np.vstack([self.v, e_last]))


@dataclass(frozen=True)
class DownWedge:
    """An axis-parallel wedge with downward vertical ray, or one of its
    degenerate line cases.

    kind == "wedge": convex side A is {x <= t, y <= y0} (orientation "left")
    or {x >= t, y <= y0} (orientation "right").
    kind == "vertical_line": A is the left closed half-plane {x <= t}.
    kind == "horizontal_line": A is the bottom closed half-plane {y <= y0}.
    """

    kind: str
    t: float | None = None
    y: float | None = None
    orientation: str | None = None

    def __post_init__(self):
        if self.kind == "wedge":
            if self.orientation not in ("left", "right"):
                raise ValueError("wedge orientation must be 'left' or 'right'")
            if self.t is None or self.y is None:
                raise ValueError("wedge needs a vertex (t, y)")
        elif self.kind == "vertical_line":
            if self.t is None:
                raise ValueError("vertical line needs t")
        elif self.kind == "horizontal_line":
            if self.y is None:
                raise ValueError("horizontal line needs y")
        else:
            raise ValueError(f"unknown down-wedge kind {self.kind!r}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Closed membership in the convex side A."""
        pts = np.atleast_2d(points)
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "vertical_line":
            return x <= self.t
        if self.kind == "horizontal_line":
            return y <= self.y
        if self.orientation == "left":
            return (x <= self.t) & (y <= self.y)
        return (x >= self.t) & (y <= self.y)

    def strictly_inside(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "vertical_line":
            return x < self.t
        if self.kind == "horizontal_line":
            return y < self.y
        if self.orientation == "left":
            return (x < self.t) & (y < self.y)
        return (x > self.t) & (y < self.y)

    def mirrored_x(self) -> "DownWedge":
        """The same region described in x-mirrored coordinates."""
        if self.kind == "vertical_line":
            return DownWedge(kind="vertical_line", t=-self.t)
        if self.kind == "horizontal_line":
            return self
        flip = {"left": "right", "right": "left"}
        return DownWedge(kind="wedge", t=-self.t, y=self.y,
                         orientation=flip[self.orientation])


def quadrant_measure(cloud: WeightedCloud, t: float, y: float,
                     orientation: str, h: float) -> float:
    """Mass of the closed quadrant with corner (t, y): x on the orientation
    side of t and below y."""
    x, yy = cloud.points[:, 0], cloud.points[:, 1]
    sign = 1.0 if orientation == "left" else -1.0
    if h > 0:
        return float(cloud.weights @ (ndtr(sign * (t - x) / h) * ndtr((y - yy) / h)))
    if orientation == "left":
        mask = (x <= t) & (yy <= y)
    else:
        mask = (x >= t) & (yy <= y)
    return float(np.sum(cloud.weights[mask]))


def region_measures(cloud: WeightedCloud, wedge: DownWedge, h: float) -> tuple[float, float]:
    """(mass of A, mass of B) with B the closed complement; for h > 0 the
    two always add up to the total weight."""
    x, yy = cloud.points[:, 0], cloud.points[:, 1]
    w = cloud.weights
    if h > 0:
        if wedge.kind == "vertical_line":
            return (float(w @ ndtr((wedge.t - x) / h)),
                    float(w @ ndtr((x - wedge.t) / h)))
        if wedge.kind == "horizontal_line":
            return (float(w @ ndtr((wedge.y - yy) / h)),
                    float(w @ ndtr((yy - wedge.y) / h)))
        sign = 1.0 if wedge.orientation == "left" else -1.0
        ga = ndtr(sign * (wedge.t - x) / h)
        gb = ndtr((wedge.y - yy) / h)
        ga_c = ndtr(-sign * (wedge.t - x) / h)
        gb_c = ndtr(-(wedge.y - yy) / h)
        a = float(w @ (ga * gb))
        b = float(w @ (ga_c + gb_c - ga_c * gb_c))
        return a, b
    in_a = wedge.contains(cloud.points)
    strict = wedge.strictly_inside(cloud.points)
    return float(np.sum(w[in_a])), float(np.sum(w[~strict]))


def down_wedge(cloud: WeightedCloud, t: float, h: float) -> DownWedge:
    """The unique down-wedge with vertical ray on the line x = t that bisects
    the cloud (h > 0 makes the bisecting height unique).

    t = +inf gives the bottom half-plane at the bisecting height; when the
    line x = t itself bisects, the left half-plane at t is returned.
    """
    if not h > 0:
        raise ValueError("down_wedge needs a smoothing bandwidth h > 0")
    total = cloud.total_weight
    x, yy = cloud.points[:, 0], cloud.points[:, 1]
    if np.isinf(t):
        y0 = bisecting_offset(WeightedCloud(points=yy[:, None], weights=cloud.weights),
                              np.array([1.0]), h)
        return DownWedge(kind="horizontal_line", y=y0)
    imbalance = _halfspace_diffs(x, cloud.weights, t, h)
    if abs(imbalance) <= EPS_BIS_REL * total:
        return DownWedge(kind="vertical_line", t=float(t))
    orientation = "right" if imbalance > 0 else "left"
    lo = float(np.min(yy)) - 8.0 * h
    hi = float(np.max(yy)) + 8.0 * h

    def balance(y0: float) -> float:
        # decreasing in y0 by construction
        return 0.5 * total - quadrant_measure(cloud, t, y0, orientation, h)

    y_star = _decreasing_root(balance, lo, hi, EPS_BIS_REL * total)
    return DownWedge(kind="wedge", t=float(t), y=float(y_star),
                     orientation=orientation)


class WedgeMap:
    """The two-sided test map on S^{d-2} x [0,1] for d measures assigned to
    vertical planes; the last assignment pins the bisecting down-wedge and
    the output lists the A-minus-B mass differences of the others.

    The reparametrization lambda_v - 1 + 1/t sweeps the vertical-ray position
    from the bisecting vertical line (t = 1) out to the bottom half-plane
    (t = 0).

    ``background_eps`` blends that fraction of the pooled remaining measures
    into the pivot before its down-wedge is computed.  Without it the pivot's
    smoothed mass effectively vanishes a few bandwidths above its support, so
    wedges whose horizontal ray passes above the pivot (but through other
    measures) collapse into an unresolvable parameter sliver at t = 1; the
    blend keeps the pivot positive on every open set at working precision and
    perturbs its bisection by at most ``background_eps`` of its weight."""

    def __init__(self, assignments, h: float, background_eps: float = 0.0):
        self.assignments = list(assignments)
        d = self.assignments[0].ambient_dim
        if any(a.ambient_dim != d for a in self.assignments):
            raise ValueError("assignments live in different ambient dimensions")
        if len(self.assignments) != d:
            raise ValueError(f"need {d} assignments for vertical planes in R^{d}")
        if d < 2:
            raise ValueError("need ambient dimension at least 2")
        if not h > 0:
            raise ValueError("the wedge map needs a smoothing bandwidth h > 0")
        self.d = d
        self.h = float(h)
        self.background_eps = float(background_eps)
        self.weights = np.array([a.total_weight for a in self.assignments])

    def frame(self, v_horizontal: np.ndarray) -> WedgeFrame:
        v = np.zeros(self.d)
        v[:-1] = v_horizontal
        return WedgeFrame(v=v)

    def plane_clouds(self, frame: WedgeFrame) -> list[WeightedCloud]:
        basis = frame.basis()
        return [assign(spec, basis) for spec in self.assignments]

    def _blended_pivot(self, clouds: list[WeightedCloud]) -> WeightedCloud:
        pivot = clouds[-1]
        eps = self.background_eps
        if eps <= 0.0 or self.d < 2 or len(clouds) == 1:
            return pivot
        rest_pts = np.vstack([c.points for c in clouds[:-1]])
        rest_w = np.concatenate([c.weights for c in clouds[:-1]])
        scale = eps * pivot.total_weight / float(np.sum(rest_w))
        return WeightedCloud(points=np.vstack([pivot.points, rest_pts]),
                             weights=np.concatenate([pivot.weights,
                                                     scale * rest_w]))

    def wedge_at(self, v_horizontal: np.ndarray, t: float,
                 clouds: list[WeightedCloud] | None = None) -> DownWedge:
        clouds = clouds or self.plane_clouds(self.frame(v_horizontal))
        pivot = self._blended_pivot(clouds)
        if t <= 0.0:
            return down_wedge(pivot, np.inf, self.h)
        lam = bisecting_offset(
            WeightedCloud(points=pivot.points[:, :1], weights=pivot.weights),
            np.array([1.0]), self.h)
        return down_wedge(pivot, lam - 1.0 + 1.0 / t, self.h)

    def __call__(self, v_horizontal: np.ndarray, t: float) -> np.ndarray:
        clouds = self.plane_clouds(self.frame(v_horizontal))
        wedge = self.wedge_at(v_horizontal, t, clouds)
        out = np.empty(self.d - 1)
        for j in range(self.d - 1):
            a, b = region_measures(clouds[j], wedge, self.h)
            out[j] = a - b
        return out


def wedge_test_map(v_horizontal, t: float, assignments, h: float) -> np.ndarray:
    """One-shot evaluation of the wedge test map."""
    return WedgeMap(assignments, h)(np.asarray(v_horizontal, dtype=float), t)


# ---------------------------------------------------------------------------
# planar (d = 2) solver and oracle

def _planar_branch_solve(map2: WedgeMap, h: float, tol: float,
                         n_grid: int = 65):
    """Scan both points of S^0 for a sign change of the scalar map over the
    t-grid and refine by bisection."""
    for v in (np.array([1.0]), np.array([-1.0])):
        ts = np.linspace(0.0, 1.0, n_grid)
        vals = np.array([map2(v, t)[0] for t in ts])
        hit = None
        for i in range(n_grid - 1):
            if vals[i] == 0.0:
                hit = (ts[i], ts[i])
                break
            if vals[i] * vals[i + 1] < 0:
                hit = (ts[i], ts[i + 1])
                break
        else:
            if vals[-1] == 0.0:
                hit = (ts[-1], ts[-1])
        if hit is None:
            continue
        lo, hi = hit
        f_lo = map2(v, lo)[0]
        for _ in range(100):
            if hi - lo < 1e-15:
                break
            mid = 0.5 * (lo + hi)
            f_mid = map2(v, mid)[0]
            if abs(f_mid) <= tol:
                lo = hi = mid
                break
            if f_mid * f_lo > 0:
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        t_star = 0.5 * (lo + hi)
        return v, t_star
    raise WedgeError("no sign change on either branch; tolerances are misconfigured")


def planar_wedge_solve(mu1: WeightedCloud, mu2: WeightedCloud, h: float,
                       background_eps: float = 1e-6) -> DownWedge:
    """An axis-parallel down-wedge bisecting both planar clouds.

    The wedge bisects ``mu2`` by construction at every candidate and the
    vertical-ray position is tuned until ``mu1`` splits as well.  With h = 0
    the smoothed problem is re-solved along a bandwidth sequence h, h/2, ...
    and the limiting wedge is snapped to nearby data coordinates so both
    CLOSED sides hold at least half of each cloud exactly.
    """
    specs = [AssignmentSpec(kind="projection", cloud=mu1),
             AssignmentSpec(kind="projection", cloud=mu2)]
    if h > 0:
        map2 = WedgeMap(specs, h, background_eps=background_eps)
        v, t_star = _planar_branch_solve(map2, h, 1e-9 * mu1.total_weight)
        wedge = map2.wedge_at(v, t_star)
        return wedge if v[0] > 0 else wedge.mirrored_x()
    spread = max(mu1.spread(), mu2.spread(), 1e-9)
    h_run = 0.2 * spread
    prev = None
    wedge = None
    for _ in range(40):
        map2 = WedgeMap(specs, h_run, background_eps=background_eps)
        v, t_star = _planar_branch_solve(map2, h_run, 1e-9 * mu1.total_weight)
        wedge = map2.wedge_at(v, t_star)
        if v[0] < 0:
            wedge = wedge.mirrored_x()
        key = _wedge_key(wedge)
        if prev is not None and np.max(np.abs(key - prev)) <= 1e-7 * spread:
            break
        prev = key
        h_run *= 0.5
        if h_run < 1e-10 * spread:
            break
    snapped = _snap_planar_wedge(wedge, (mu1, mu2))
    if snapped is None:
        raise WedgeError("could not snap the limiting wedge onto the data")
    return snapped


def _wedge_key(w: DownWedge) -> np.ndarray:
    if w.kind == "wedge":
        return np.array([w.t, w.y])
    if w.kind == "vertical_line":
        return np.array([w.t, np.inf])
    return np.array([np.inf, w.y])


def split_ok(points: np.ndarray, wedge: DownWedge) -> bool:
    """True when both closed sides hold at least half the points."""
    pts = np.atleast_2d(points)
    n = pts.shape[0]
    closed_a = int(np.sum(wedge.contains(pts)))
    closed_b = n - int(np.sum(wedge.strictly_inside(pts)))
    return 2 * closed_a >= n and 2 * closed_b >= n


def _snap_planar_wedge(wedge: DownWedge, clouds) -> DownWedge | None:
    """Replace the limiting wedge by one with vertex on data coordinates so
    the exact closed-count condition holds for every cloud."""
    pts = [c.points for c in clouds]
    all_x = np.unique(np.concatenate([p[:, 0] for p in pts]))
    all_y = np.unique(np.concatenate([p[:, 1] for p in pts]))
    key = _wedge_key(wedge)
    tx = key[0] if np.isfinite(key[0]) else 0.0
    ty = key[1] if np.isfinite(key[1]) else 0.0
    xs = all_x[np.argsort(np.abs(all_x - tx))]
    ys = all_y[np.argsort(np.abs(all_y - ty))]

    def feasible(w: DownWedge) -> bool:
        return all(split_ok(p, w) for p in pts)

    if feasible(wedge):
        return wedge
    orientations = ["left", "right"]
    if wedge.kind == "wedge":
        orientations = [wedge.orientation,
                        "right" if wedge.orientation == "left" else "left"]
    for radius in (8, 32, len(all_x)):
        cand_x = xs[:radius]
        cand_y = ys[:radius]
        best = None
        best_dist = np.inf
        for orient in orientations:
            for cx in cand_x:
                for cy in cand_y:
                    w = DownWedge(kind="wedge", t=float(cx), y=float(cy),
                                  orientation=orient)
                    if feasible(w):
                        dist = (cx - tx) ** 2 + (cy - ty) ** 2
                        if dist < best_dist:
                            best, best_dist = w, dist
        for cx in cand_x:
            w = DownWedge(kind="vertical_line", t=float(cx))
            if feasible(w) and (cx - tx) ** 2 < best_dist:
                best, best_dist = w, (cx - tx) ** 2
        for cy in cand_y:
            w = DownWedge(kind="horizontal_line", y=float(cy))
            if feasible(w) and (cy - ty) ** 2 < best_dist:
                best, best_dist = w, (cy - ty) ** 2
        if best is not None:
            return best
    return None


def planar_wedge_oracle(points1: np.ndarray, points2: np.ndarray):
    """Brute force over candidate vertices on data coordinates.

    Returns (feasible, wedge): whether some down-wedge splits both point sets
    with at least half on each closed side, and a witness if so.
    """
    pts = [np.atleast_2d(points1), np.atleast_2d(points2)]
    cand_x = np.unique(np.concatenate([p[:, 0] for p in pts]))
    cand_y = np.unique(np.concatenate([p[:, 1] for p in pts]))
    for cx in cand_x:
        w = DownWedge(kind="vertical_line", t=float(cx))
        if all(split_ok(p, w) for p in pts):
            return True, w
    for cy in cand_y:
        w = DownWedge(kind="horizontal_line", y=float(cy))
        if all(split_ok(p, w) for p in pts):
            return True, w
    for orient in ("left", "right"):
        for cx in cand_x:
            masks = [p[:, 0] <= cx if orient == "left" else p[:, 0] >= cx
                     for p in pts]
            strict_masks = [p[:, 0] < cx if orient == "left" else p[:, 0] > cx
                            for p in pts]
            sorted_in = [np.sort(p[m][:, 1]) for p, m in zip(pts, masks)]
            sorted_strict = [np.sort(p[m][:, 1]) for p, m in zip(pts, strict_masks)]
            for cy in cand_y:
                ok = True
                for si, ss, p in zip(sorted_in, sorted_strict, pts):
                    n = p.shape[0]
                    closed_a = int(np.searchsorted(si, cy, side="right"))
                    strict_a = int(np.searchsorted(ss, cy, side="left"))
                    if 2 * closed_a < n or 2 * (n - strict_a) < n:
                        ok = False
                        break
                if ok:
                    return True, DownWedge(kind="wedge", t=float(cx),
                                           y=float(cy), orientation=orient)
    return False, None


# ---------------------------------------------------------------------------
# solver on S^{d-2} x [0,1] for d >= 3

def _pattern_minimize(fn, x0: np.ndarray, step: float, tol: float,
                      max_iter: int = 400, t_index: int | None = None):
    """Tiny coordinate pattern search; the coordinate at ``t_index`` is
    clipped to [0, 1]."""
    x = np.array(x0, dtype=float)
    best = fn(x)
    for _ in range(max_iter):
        if best <= tol or step < 1e-12:
            break
        improved = False
        for j in range(x.size):
            for s in (step, -step):
                cand = np.array(x)
                cand[j] += s
                if t_index is not None:
                    cand[t_index] = min(max(cand[t_index], 0.0), 1.0)
                val = fn(cand)
                if val < best * (1.0 - 1e-12):
                    x, best = cand, val
                    improved = True
                    break
            if improved:
                break
        if not improved:
            step *= 0.5
    return x, best


def _gn_refine(fvec, x0: np.ndarray, tol: float, t_index: int,
               max_iter: int = 60, fd_step: float = 1e-6):
    """Damped Gauss-Newton on a small vector map with one clipped coordinate."""
    def clipped(x):
        out = np.array(x)
        out[t_index] = min(max(out[t_index], 0.0), 1.0)
        return out

    x = clipped(x0)
    f = fvec(x)
    for _ in range(max_iter):
        if np.max(np.abs(f)) <= tol:
            break
        cols = []
        for j in range(x.size):
            eps = fd_step
            if j == t_index and x[j] > 1.0 - fd_step:
                eps = -fd_step
            step = np.zeros(x.size)
            step[j] = eps
            cols.append((fvec(clipped(x + step)) - f) / eps)
        jac = np.array(cols).T
        try:
            delta = np.linalg.lstsq(jac, -f, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        norm_f = np.linalg.norm(f)
        moved = False
        for alpha in (1.0, 0.5, 0.25, 0.1, 0.03):
            xn = clipped(x + alpha * delta)
            fn = fvec(xn)
            if np.linalg.norm(fn) < norm_f * (1.0 - 1e-4 * alpha):
                x, f = xn, fn
                moved = True
                break
        if not moved:
            break
    return x, float(np.max(np.abs(f)))


def wedge_solve(assignments, h: float, seed: int = 0, tol_rel: float = 1e-6,
                n_theta: int = 48, n_t: int = 25,
                background_eps: float = 1e-4):
    """Find a zero of the wedge map for d >= 3 by coarse grid evaluation over
    S^{d-2} x [0,1] followed by Gauss-Newton refinement from the best cells
    (pattern search finishes off if the least-squares step stalls); for d > 3
    the grid over directions is a seeded random sample.

    The search runs with a small background blend in the pivot and then
    re-polishes along a shrinking blend sequence, so wedges reaching above
    the pivot's support remain reachable while the reported wedge bisects the
    unblended pivot to working accuracy."""
    wmap = WedgeMap(assignments, h, background_eps=background_eps)
    d = wmap.d
    scales = wmap.weights[:-1]

    def objective_vt(v: np.ndarray, t: float) -> float:
        return float(np.max(np.abs(wmap(v, t)) / scales))

    def embed_v(x: np.ndarray) -> np.ndarray:
        if d == 3:
            return np.array([np.cos(x[0]), np.sin(x[0])])
        v = x[:-1]
        return v / np.linalg.norm(v)

    def fvec(x: np.ndarray) -> np.ndarray:
        return wmap(embed_v(x), float(x[-1])) / scales

    def param_obj(x: np.ndarray) -> float:
        return float(np.max(np.abs(fvec(x))))

    candidates: list[np.ndarray] = []
    if d == 3:
        # zeros live where the zero curves of the two components cross, so
        # rank cells by sign changes of both components over their corners
        thetas = np.linspace(0.0, 2.0 * np.pi, n_theta + 1)
        ts = np.linspace(0.0, 1.0, n_t)
        vals = np.empty((n_theta + 1, n_t, d - 1))
        for i, th in enumerate(thetas):
            v = np.array([np.cos(th), np.sin(th)])
            for j, t in enumerate(ts):
                vals[i, j] = wmap(v, t) / scales
        scored = []
        for i in range(n_theta):
            for j in range(n_t - 1):
                corners = vals[i:i + 2, j:j + 2].reshape(4, d - 1)
                flips = [(corners[:, c].min() < 0 < corners[:, c].max())
                         for c in range(d - 1)]
                score = float(np.max(np.abs(corners), axis=0).min())
                center = np.array([0.5 * (thetas[i] + thetas[i + 1]),
                                   0.5 * (ts[j] + ts[j + 1])])
                scored.append((-int(sum(flips)), score, tuple(center)))
        scored.sort()
        candidates = [np.array(c) for _, _, c in scored[:12]]
    else:
        rng = np.random.default_rng(seed)
        vs = rng.standard_normal((max(n_theta, 16 * d), d - 1))
        vs /= np.linalg.norm(vs, axis=1, keepdims=True)
        ts = np.linspace(0.0, 1.0, n_t)
        cells = [(objective_vt(v, t), np.append(v, t)) for v in vs for t in ts]
        cells.sort(key=lambda c: c[0])
        candidates = [x for _, x in cells[:12]]

    best_val = np.inf
    best_x = None
    for x0 in candidates:
        x, val = _gn_refine(fvec, x0, tol_rel, t_index=x0.size - 1)
        if val > tol_rel:
            x, val = _pattern_minimize(param_obj, x, step=0.02, tol=tol_rel,
                                       t_index=x0.size - 1)
        if val < best_val:
            best_val, best_x = val, x
        if best_val <= tol_rel:
            break

    # shrink the background blend and re-polish so the unblended pivot is
    # bisected to working accuracy as well; keep the last consistent pair
    for eps in (1e-6, 1e-8):
        if eps >= background_eps:
            continue
        trial_map = WedgeMap(assignments, h, background_eps=eps)
        saved = wmap
        wmap = trial_map
        x, val = _gn_refine(fvec, best_x, tol_rel, t_index=best_x.size - 1)
        if val <= max(best_val, tol_rel):
            best_x, best_val = x, val
        else:
            wmap = saved
            break

    v = embed_v(best_x)
    t = float(min(max(best_x[-1], 0.0), 1.0))
    frame = wmap.frame(v)
    wedge = wmap.wedge_at(v, t)
    clouds = wmap.plane_clouds(frame)
    residuals = np.array([abs(region_measures(c, wedge, h)[0] - 0.5 * c.total_weight)
                          for c in clouds])
    rel = residuals / wmap.weights
    return {
        "frame": frame,
        "wedge": wedge,
        "t": t,
        "residuals": residuals,
        "objective": best_val,
        "success": bool(best_val <= tol_rel and np.max(rel) <= 1e-5 + tol_rel),
    }
