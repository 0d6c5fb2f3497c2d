"""Zero finding over S^d x V_m(R^d).

Two strategies are provided: multistart local descent (coordinate pattern
steps in tangent directions with a Gauss-Newton accelerator, both followed by
projection retraction back onto the manifold), and a pseudo-arclength
predictor-corrector that follows the straight-line homotopy from the pilot
map's known zero orbit to the target map.

A returned point is accepted as a zero when every output entry is below its
per-entry tolerance: relative (in total assigned weight) for measure
entries, absolute for geometric entries.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import FramePoint, complement_rows, orthonormalize_rows
from .measures import MeasureError
from .testmaps import CanonicalMap, canonical_zero


@dataclass
class HomotopyConfig:
    enabled: bool = True
    ds0: float = 0.15
    ds_min: float = 1e-5
    ds_max: float = 0.6
    max_steps: int = 600
    max_arc: float = 80.0
    corrector_tol: float = 1e-9
    corrector_iters: int = 12


@dataclass
class SolverConfig:
    seed: int = 0
    n_starts: int | None = None       # default 64 * 2^m
    max_iter: int = 5000              # per-start evaluation budget
    step0: float = 0.4
    step_min: float = 1e-10
    fd_step: float = 1e-5
    gn_rounds: int = 25
    threads: int | None = None        # default: EQUIPART_THREADS or 1
    homotopy: HomotopyConfig = field(default_factory=HomotopyConfig)

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        env = os.environ.get("EQUIPART_THREADS", "")
        try:
            return max(1, int(env)) if env else 1
        except ValueError:
            return 1


@dataclass
class StartTrace:
    index: int
    residual: float
    evals: int
    converged: bool


@dataclass
class SolveReport:
    point: FramePoint | None
    value_sup: float
    residual: float           # max |entry| / tolerance; <= 1 means success
    success: bool
    strategy: str
    iterations: int
    n_evals: int
    wall_time: float
    message: str = ""
    t_reached: float | None = None
    starts: list[StartTrace] = field(default_factory=list)
    nodes: list[tuple[float, float]] = field(default_factory=list)  # (t, |H|)


def manifold_dim(d: int, m: int) -> int:
    return d + m * d - m * (m + 1) // 2


def sample_frame(d: int, m: int, rng: np.random.Generator) -> FramePoint:
    """Uniform random point of S^d x V_m(R^d): normalized Gaussian sphere
    vector and QR-orthonormalized Gaussian frame, redrawn on degeneracy."""
    if not 0 <= m <= d:
        raise ValueError("need 0 <= m <= d")
    while True:
        w = rng.standard_normal(d + 1)
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            w = w / norm
            break
    while True:
        raw = rng.standard_normal((m, d))
        if m == 0:
            v = np.zeros((0, d))
            break
        _, r = np.linalg.qr(raw.T)
        if np.min(np.abs(np.diag(r))) > 1e-6:
            v = orthonormalize_rows(raw)
            break
    return FramePoint(w=w, v=v)


def canonicalize(p: FramePoint) -> FramePoint:
    """Representative of the sign orbit with the first nonzero coordinate of
    w and of each v_i positive.  Coordinates below 1e-6 of the largest one
    count as zero so that near-axis points canonicalize like their limits.
    Never changes the sup-norm of an equivariant map."""
    def flip(vec: np.ndarray) -> np.ndarray:
        mags = np.abs(vec)
        idx = np.argmax(mags > 1e-6 * np.max(mags))
        return -vec if vec[idx] < 0 else vec

    w = flip(np.array(p.w))
    v = np.array(p.v)
    for i in range(p.m):
        v[i] = flip(v[i])
    return FramePoint(w=w, v=v)


# ---------------------------------------------------------------------------
# tangent space and retraction

def _householder_complement(w: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the orthogonal complement of the unit
    vector w, chosen deterministically."""
    n = w.shape[0]
    sign = 1.0 if w[0] >= 0 else -1.0
    u = np.array(w)
    u[0] += sign
    u /= np.linalg.norm(u)
    h = np.eye(n) - 2.0 * np.outer(u, u)
    return h[:, 1:]


def tangent_directions(p: FramePoint) -> list[tuple[np.ndarray | None, np.ndarray | None]]:
    """Orthonormal-ish basis of the tangent space at p as (dw, dv) pairs."""
    d, m = p.d, p.m
    dirs: list[tuple[np.ndarray | None, np.ndarray | None]] = []
    wperp = _householder_complement(p.w)
    for j in range(d):
        dirs.append((wperp[:, j], None))
    if m:
        vperp = complement_rows(p.v, d, d - m)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for i in range(m):
            for j in range(i + 1, m):
                dv = np.zeros((m, d))
                dv[i] = p.v[j] * inv_sqrt2
                dv[j] = -p.v[i] * inv_sqrt2
                dirs.append((None, dv))
            for q in vperp:
                dv = np.zeros((m, d))
                dv[i] = q
                dirs.append((None, dv))
    return dirs


def retract(p: FramePoint, dw: np.ndarray | None, dv: np.ndarray | None,
            s: float) -> FramePoint:
    """Step s along a tangent pair and project back onto the manifold."""
    w = p.w + s * dw if dw is not None else np.array(p.w)
    v = p.v + s * dv if dv is not None else np.array(p.v)
    return FramePoint(w=w / np.linalg.norm(w), v=orthonormalize_rows(v))


def move(p: FramePoint, dirs, z: np.ndarray) -> FramePoint:
    """Retracted step along a combination of tangent directions."""
    dw = np.zeros_like(p.w)
    dv = np.zeros_like(p.v)
    for coeff, (dwj, dvj) in zip(z, dirs):
        if dwj is not None:
            dw += coeff * dwj
        if dvj is not None:
            dv += coeff * dvj
    w = p.w + dw
    v = p.v + dv
    return FramePoint(w=w / np.linalg.norm(w), v=orthonormalize_rows(v))


# ---------------------------------------------------------------------------
# objective plumbing

class _Objective:
    """Caches tolerance vectors and counts evaluations of a test map."""

    def __init__(self, map_):
        self.map = map_
        self.wscale = np.asarray(map_.weight_scales, dtype=float)
        self.tol = np.asarray(map_.accept_tol, dtype=float)
        self.tol_scaled = self.tol / self.wscale
        self.n_evals = 0

    def raw(self, p: FramePoint) -> np.ndarray | None:
        self.n_evals += 1
        try:
            return self.map(p).flat
        except MeasureError:
            return None

    def scaled(self, p: FramePoint) -> np.ndarray | None:
        f = self.raw(p)
        return None if f is None else f / self.wscale

    def residual_of(self, f_scaled: np.ndarray | None) -> float:
        if f_scaled is None:
            return np.inf
        if f_scaled.size == 0:
            return 0.0
        return float(np.max(np.abs(f_scaled) / self.tol_scaled))

    def residual(self, p: FramePoint) -> float:
        return self.residual_of(self.scaled(p))


def _fd_jacobian(obj: _Objective, p: FramePoint, dirs, f0: np.ndarray,
                 eps: float, evaluate=None) -> np.ndarray | None:
    """Forward-difference Jacobian of the scaled map in tangent coordinates."""
    evaluate = evaluate or obj.scaled
    cols = []
    for dw, dv in dirs:
        f1 = evaluate(retract(p, dw, dv, eps))
        if f1 is None:
            return None
        cols.append((f1 - f0) / eps)
    return np.array(cols).T


def _gauss_newton(obj: _Objective, p: FramePoint, cfg: SolverConfig,
                  max_rounds: int, budget: int) -> tuple[FramePoint, float]:
    """Damped Gauss-Newton on the weight-scaled map, retracted steps."""
    f = obj.scaled(p)
    if f is None:
        return p, np.inf
    best_p, best_res = p, obj.residual_of(f)
    for _ in range(max_rounds):
        if best_res <= 1.0 or obj.n_evals > budget:
            break
        dirs = tangent_directions(p)
        jac = _fd_jacobian(obj, p, dirs, f, cfg.fd_step)
        if jac is None:
            break
        try:
            delta = np.linalg.lstsq(jac, -f, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        norm_f = np.linalg.norm(f)
        moved = False
        for alpha in (1.0, 0.5, 0.25, 0.1, 0.03):
            q = move(p, dirs, alpha * delta)
            fq = obj.scaled(q)
            if fq is None:
                continue
            if np.linalg.norm(fq) < norm_f * (1.0 - 1e-4 * alpha):
                p, f = q, fq
                res = obj.residual_of(fq)
                if res < best_res:
                    best_p, best_res = q, res
                moved = True
                break
        if not moved:
            break
    return best_p, best_res


def _pattern_sweeps(obj: _Objective, p: FramePoint, res: float,
                    cfg: SolverConfig, step: float, n_sweeps: int,
                    budget: int) -> tuple[FramePoint, float, float]:
    """Coordinate perturbation steps in tangent directions, retracted."""
    for _ in range(n_sweeps):
        if res <= 1.0 or step < cfg.step_min or obj.n_evals > budget:
            break
        improved = False
        for dw, dv in tangent_directions(p):
            for s in (step, -step):
                q = retract(p, dw, dv, s)
                rq = obj.residual(q)
                if rq < res * (1.0 - 1e-12):
                    p, res = q, rq
                    improved = True
                    break
            if improved:
                break
        if improved:
            step = min(step * 1.4, cfg.step0)
        else:
            step *= 0.5
    return p, res, step


def _local_solve(obj: _Objective, p0: FramePoint, cfg: SolverConfig) -> tuple[FramePoint, float, int]:
    """Descent from one start: Gauss-Newton rounds interleaved with pattern
    sweeps until acceptance or the evaluation budget runs out."""
    start_evals = obj.n_evals
    budget_abs = start_evals + cfg.max_iter
    p = canonicalize(p0)
    res = obj.residual(p)
    step = cfg.step0
    best_p, best_res = p, res
    while obj.n_evals < budget_abs:
        p, res = _gauss_newton(obj, p, cfg, cfg.gn_rounds, budget_abs)
        if res < best_res:
            best_p, best_res = p, res
        if best_res <= 1.0:
            break
        p, res, step = _pattern_sweeps(obj, p, res, cfg, step, 8, budget_abs)
        if res < best_res:
            best_p, best_res = p, res
        if best_res <= 1.0 or step < cfg.step_min:
            break
    return best_p, best_res, obj.n_evals - start_evals


def minimize_norm(map_, cfg: SolverConfig | None = None) -> SolveReport:
    """Multistart local descent of the per-entry-scaled sup norm.

    Starts are drawn uniformly on the manifold and canonicalized to one
    representative per sign orbit; results merge deterministically by
    (residual, start index) and the search stops at the first accepted zero.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    d, m = map_.d, map_.m
    n_starts = cfg.n_starts if cfg.n_starts is not None else 64 * (2 ** m)
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_starts)
    threads = cfg.resolved_threads()

    def run_start(idx: int) -> tuple[StartTrace, FramePoint]:
        obj = _Objective(map_)
        p0 = sample_frame(d, m, np.random.default_rng(seeds[idx]))
        p, res, evals = _local_solve(obj, p0, cfg)
        return StartTrace(index=idx, residual=res, evals=evals,
                          converged=res <= 1.0), p

    traces: list[tuple[StartTrace, FramePoint]] = []
    done = False
    if threads == 1:
        for idx in range(n_starts):
            traces.append(run_start(idx))
            if traces[-1][0].converged:
                done = True
                break
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for base in range(0, n_starts, threads):
                chunk = list(range(base, min(base + threads, n_starts)))
                for out in pool.map(run_start, chunk):
                    traces.append(out)
                if any(t.converged for t, _ in traces):
                    done = True
                    break
    traces.sort(key=lambda pair: (pair[0].residual, pair[0].index))
    best_trace, best_p = traces[0]
    obj = _Objective(map_)
    value = obj.raw(best_p)
    sup = float(np.max(np.abs(value))) if value is not None and value.size else np.inf
    success = best_trace.converged
    msg = "" if success else "no zero found at the requested tolerance"
    return SolveReport(point=best_p, value_sup=sup, residual=best_trace.residual,
                       success=success, strategy="multistart",
                       iterations=len(traces), n_evals=sum(t.evals for t, _ in traces),
                       wall_time=time.perf_counter() - t0, message=msg,
                       starts=[t for t, _ in traces])


# ---------------------------------------------------------------------------
# homotopy tracking

def _embed_tangent(dirs, z: np.ndarray, p: FramePoint) -> tuple[np.ndarray, np.ndarray]:
    dw = np.zeros_like(p.w)
    dv = np.zeros_like(p.v)
    for coeff, (dwj, dvj) in zip(z, dirs):
        if dwj is not None:
            dw += coeff * dwj
        if dvj is not None:
            dv += coeff * dvj
    return dw, dv


def homotopy_track(map_, cfg: SolverConfig | None = None) -> SolveReport:
    """Pseudo-arclength predictor-corrector on t*F + (1-t)*g from the pilot
    map's canonical zero at t = 0 toward a zero of F at t = 1.

    Jacobians are forward differences in local tangent coordinates; the
    corrector is damped Gauss-Newton orthogonal to the path tangent.  Path
    loss is reported (never raised) so callers can fall back to multistart.
    """
    cfg = cfg or SolverConfig()
    hcfg = cfg.homotopy
    t0_wall = time.perf_counter()
    d, m = map_.d, map_.m
    if getattr(map_, "overdetermined", False):
        return SolveReport(point=None, value_sup=np.inf, residual=np.inf,
                           success=False, strategy="homotopy", iterations=0,
                           n_evals=0, wall_time=0.0, t_reached=0.0,
                           message="homotopy needs a square map; use multistart")
    pilot = CanonicalMap(d, m)
    obj = _Objective(map_)

    def f_target(p: FramePoint) -> np.ndarray | None:
        return obj.scaled(p)

    def f_pilot(p: FramePoint) -> np.ndarray:
        return pilot(p).flat

    def blend(ft, fg, t):
        return t * ft + (1.0 - t) * fg

    p = canonical_zero(d, m)
    t = 0.0
    ds = hcfg.ds0
    arc = 0.0
    tau_embed = None
    steps = 0
    ctol = hcfg.corrector_tol
    nodes: list[tuple[float, float]] = []

    def eval_pair(q: FramePoint):
        ft = f_target(q)
        if ft is None:
            return None, None
        return ft, f_pilot(q)

    def finish(success: bool, point: FramePoint, message: str) -> SolveReport:
        value = obj.raw(point)
        sup = float(np.max(np.abs(value))) if value is not None and value.size else np.inf
        res = obj.residual_of(None if value is None else value / obj.wscale)
        return SolveReport(point=point, value_sup=sup, residual=res,
                           success=success and res <= 1.0, strategy="homotopy",
                           iterations=steps, n_evals=obj.n_evals,
                           wall_time=time.perf_counter() - t0_wall,
                           message=message, t_reached=t, nodes=nodes)

    def pin_at_one(q: FramePoint) -> SolveReport:
        best, res = _gauss_newton(obj, q, cfg, cfg.gn_rounds, obj.n_evals + cfg.max_iter)
        report = finish(res <= 1.0, best,
                        "" if res <= 1.0 else "endpoint refinement did not converge")
        report.t_reached = 1.0
        return report

    while steps < hcfg.max_steps and arc < hcfg.max_arc:
        steps += 1
        dirs = tangent_directions(p)
        n = len(dirs)
        ft, fg = eval_pair(p)
        if ft is None:
            return finish(False, p, "map undefined on the path")
        f0 = blend(ft, fg, t)

        def h_at(q: FramePoint, tq: float) -> np.ndarray | None:
            ftq, fgq = eval_pair(q)
            if ftq is None:
                return None
            return blend(ftq, fgq, tq)

        jz = _fd_jacobian(obj, p, dirs, f0, cfg.fd_step,
                          evaluate=lambda q: h_at(q, t))
        if jz is None:
            return finish(False, p, "map undefined near the path")
        jt = (ft - fg).reshape(-1, 1)
        jac = np.hstack([jz, jt])
        _, _, vt = np.linalg.svd(jac)
        tau = vt[-1]
        dw, dv = _embed_tangent(dirs, tau[:n], p)
        if tau_embed is None:
            if tau[n] < 0:
                tau, dw, dv = -tau, -dw, -dv
        else:
            dot = (np.dot(dw, tau_embed[0]) + np.sum(dv * tau_embed[1])
                   + tau[n] * tau_embed[2])
            if dot < 0:
                tau, dw, dv = -tau, -dw, -dv
        tau_embed = (dw, dv, tau[n])

        accepted = False
        while ds >= hcfg.ds_min:
            t_pred = t + ds * tau[n]
            clipped = False
            if t_pred > 1.0:
                # land exactly on the target slice
                scale = (1.0 - t) / max(ds * tau[n], 1e-300)
                z_pred = ds * tau[:n] * scale
                t_pred = 1.0
                clipped = True
            else:
                z_pred = ds * tau[:n]
            q = move(p, dirs, z_pred)
            tq = t_pred
            ok = False
            corr_dist = 0.0
            for _ in range(hcfg.corrector_iters):
                fq = h_at(q, tq)
                if fq is None:
                    break
                if np.max(np.abs(fq)) <= ctol:
                    ok = True
                    break
                dirs_q = tangent_directions(q)
                jzq = _fd_jacobian(obj, q, dirs_q, fq, cfg.fd_step,
                                   evaluate=lambda r: h_at(r, tq))
                if jzq is None:
                    break
                ftq, fgq = eval_pair(q)
                jtq = (ftq - fgq).reshape(-1, 1)
                jacq = np.hstack([jzq, jtq])
                if clipped:
                    # stay on the t = 1 slice
                    delta = np.linalg.lstsq(jzq, -fq, rcond=None)[0]
                    dz, dt = delta, 0.0
                else:
                    # component of the stored path tangent in the new chart,
                    # used as the pseudo-arclength constraint row
                    comps = []
                    for dwj, dvj in dirs_q:
                        val = 0.0
                        if dwj is not None:
                            val += float(np.dot(dwj, tau_embed[0]))
                        if dvj is not None:
                            val += float(np.sum(dvj * tau_embed[1]))
                        comps.append(val)
                    tau_q = np.append(np.array(comps), tau_embed[2])
                    norm_tq = np.linalg.norm(tau_q)
                    if norm_tq > 1e-12:
                        tau_q = tau_q / norm_tq
                    system = np.vstack([jacq, tau_q])
                    rhs = np.append(-fq, 0.0)
                    delta = np.linalg.lstsq(system, rhs, rcond=None)[0]
                    dz, dt = delta[:-1], float(delta[-1])
                corr_dist += float(np.sqrt(np.dot(dz, dz) + dt * dt))
                if corr_dist > max(0.75 * ds, 1e-4):
                    # the corrector is wandering off the predicted node;
                    # treat the step as failed rather than risk a branch jump
                    break
                q = move(q, dirs_q, dz)
                tq = tq + dt
            if ok:
                arc += ds
                p, t = q, tq
                nodes.append((float(t), float(np.max(np.abs(fq)))))
                if t >= 1.0 - 1e-12:
                    return pin_at_one(p)
                ds = min(ds * 1.4, hcfg.ds_max)
                accepted = True
                break
            ds *= 0.4
        if not accepted:
            return finish(False, p, "path lost: corrector diverged")
        if t < -0.2:
            return finish(False, p, "path returned to the pilot slice")
    return finish(False, p, "arc budget exhausted")


def polish(map_, p: FramePoint, cfg: SolverConfig | None = None) -> SolveReport:
    """Gauss-Newton refinement of an existing point, no restarts."""
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    obj = _Objective(map_)
    best, res = _gauss_newton(obj, p, cfg, cfg.gn_rounds, cfg.max_iter)
    value = obj.raw(best)
    sup = float(np.max(np.abs(value))) if value is not None and value.size else np.inf
    return SolveReport(point=best, value_sup=sup, residual=res,
                       success=res <= 1.0, strategy="polish", iterations=1,
                       n_evals=obj.n_evals, wall_time=time.perf_counter() - t0,
                       message="" if res <= 1.0 else "refinement did not converge")


def solve_map(map_, cfg: SolverConfig | None = None,
              strategy: str = "auto") -> SolveReport:
    """Dispatch between strategies; ``auto`` tries the homotopy first and
    falls back to multistart on path loss."""
    cfg = cfg or SolverConfig()
    if strategy == "multistart":
        return minimize_norm(map_, cfg)
    if strategy == "homotopy":
        return homotopy_track(map_, cfg)
    if strategy != "auto":
        raise ValueError(f"unknown strategy {strategy!r}")
    if cfg.homotopy.enabled and not getattr(map_, "overdetermined", False):
        report = homotopy_track(map_, cfg)
        if report.success:
            return report
        fallback = minimize_norm(map_, cfg)
        if fallback.success or fallback.residual <= report.residual:
            fallback.message = (fallback.message + "; homotopy fell back: "
                                + report.message).strip("; ")
            return fallback
        return report
    return minimize_norm(map_, cfg)
