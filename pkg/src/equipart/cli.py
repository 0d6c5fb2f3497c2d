"""Command-line interface: scenario generation, solving, verification,
self-tests, and plot-data emission.

Exit codes: 0 success; 1 verification failure; 2 no zero found; 3 bad input.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import verify as verify_mod
from .estimators import (
    NoZeroFoundError,
    SlabBisector,
    SphereBisector,
    VerificationError,
    WedgeBisector,
    find_vertical_circle,
)
from .measures import MeasureError
from .scenario_io import (
    Scenario,
    boundary_svg_for,
    dump_result,
    dump_scenario,
    load_result,
    load_scenario,
    partition_from_solution,
    result_to_dict,
    solution_to_dict,
    write_plot_csv,
    write_plot_svg,
)
from .scenarios import gen_counterexample, gen_gaussian_mixture, gen_line_families
from .validation import InputError

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_NO_ZERO = 2
EXIT_INPUT = 3


def _diag(message: str) -> None:
    print(message, file=sys.stderr)


def _solver_overrides(scenario: Scenario, args) -> dict:
    opts = dict(scenario.solver)
    if args.seed is not None:
        opts["seed"] = args.seed
    if args.strategy is not None:
        opts["strategy"] = args.strategy
    if args.tol is not None:
        opts["verify_tol"] = args.tol
    h = scenario.smoothing_h
    if args.h is not None:
        h = args.h
    opts["h"] = h
    opts.setdefault("seed", scenario.seed)
    return opts


def _report_dict(fitted, walltime: float) -> dict:
    report = getattr(fitted, "report_", None)
    if report is None:
        return {"walltime_s": walltime}
    if isinstance(report, dict):
        out = dict(report)
        out.pop("frame", None)
        out.pop("wedge", None)
        out["walltime_s"] = walltime
        for key, val in list(out.items()):
            if isinstance(val, np.ndarray):
                out[key] = val.tolist()
            elif isinstance(val, (np.floating, np.integer, np.bool_)):
                out[key] = val.item()
        return out
    return {
        "strategy": report.strategy,
        "iterations": report.iterations,
        "n_evals": report.n_evals,
        "residual": report.residual,
        "value_sup": report.value_sup,
        "walltime_s": walltime,
        "message": report.message,
        "t_reached": report.t_reached,
    }


def _emit_plots(prefix: str, scenario: Scenario, fitted) -> None:
    if scenario.problem in ("sphere", "slab", "lines"):
        basis = fitted.partition_.basis
        if basis.k != 2:
            return
    from .measures import assign

    if scenario.problem == "wedge":
        basis = fitted.plane_.basis()
    clouds = [assign(a, basis) for a in scenario.assignments]
    coords_list = [c.points for c in clouds]
    if scenario.problem in ("sphere", "lines"):
        inside = [fitted.partition_.signed_boundary_distance(c) >= 0
                  for c in coords_list]
    elif scenario.problem == "slab":
        inside = [fitted.partition_.contains(c) for c in coords_list]
    else:
        inside = [fitted.wedge_.contains(c) for c in coords_list]
    allpts = np.vstack(coords_list)
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    write_plot_csv(prefix + ".csv", coords_list, inside)
    write_plot_svg(prefix + ".svg", coords_list,
                   boundary_svg_for(scenario.problem, fitted, lo, hi), lo, hi)


class _LinesFit:
    """Adapter so lines results reuse the sphere plotting/serialization."""

    def __init__(self, out):
        self.partition_ = out["partition"]
        self.report_ = {"strategy": "lines", "h_final": out["h_final"],
                        "counts": [list(c) for c in out["counts"]],
                        "solver": _report_dict_from_report(out["report"])}
        self.counts_ = out["counts"]


def _report_dict_from_report(report) -> dict:
    return {
        "strategy": report.strategy,
        "iterations": report.iterations,
        "n_evals": report.n_evals,
        "residual": report.residual,
        "message": report.message,
    }


def cmd_solve(args, problem: str) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.problem != problem:
        raise InputError(
            f"scenario is a {scenario.problem!r} problem, not {problem!r}")
    opts = _solver_overrides(scenario, args)
    verify_tol = opts.pop("verify_tol", 1e-3)
    t0 = time.perf_counter()
    prescribed = (np.asarray(scenario.prescribed, dtype=float)
                  if scenario.prescribed is not None else None)
    try:
        if problem == "sphere":
            est = SphereBisector(k=scenario.k, h=opts.get("h"),
                                 prescribed=prescribed,
                                 strategy=opts.get("strategy", "auto"),
                                 seed=opts.get("seed", 0),
                                 n_starts=opts.get("n_starts"),
                                 verify_tol=verify_tol)
            est.fit(scenario.assignments)
            residuals = est.residuals_
        elif problem == "slab":
            est = SlabBisector(k=scenario.k, h=opts.get("h"),
                               prescribed=prescribed,
                               strategy=opts.get("strategy", "auto"),
                               seed=opts.get("seed", 0),
                               n_starts=opts.get("n_starts"),
                               verify_tol=verify_tol)
            est.fit(scenario.assignments)
            residuals = est.residuals_
        elif problem == "wedge":
            est = WedgeBisector(h=opts.get("h"), seed=opts.get("seed", 0),
                                verify_tol=verify_tol)
            est.fit(scenario.assignments)
            residuals = est.residuals_
        else:  # lines
            out = find_vertical_circle(scenario.assignments,
                                       seed=opts.get("seed", 0))
            est = _LinesFit(out)
            counts = out["counts"]
            n_lines = [a.total_weight for a in scenario.assignments]
            residuals = [abs(c[0] - 0.5 * n) for c, n in zip(counts, n_lines)]
            bad = [i for i, (c, n) in enumerate(zip(counts, n_lines))
                   if 2 * c[0] < n or 2 * c[1] < n]
            if bad:
                raise VerificationError(
                    f"family {bad[0]} is not split by the circle", residuals)
    except NoZeroFoundError as exc:
        extra = {}
        if problem in ("sphere", "slab") and scenario.k == scenario.d \
                and len(scenario.assignments) > scenario.d + 1:
            scan = verify_mod.optimality_scan(scenario.assignments, scenario.k)
            extra["optimality"] = {"delta": scan.delta,
                                   "relative_delta": scan.relative_delta,
                                   "best": scan.best}
        report = getattr(exc, "report", None)
        result = result_to_dict(
            scenario, None, None,
            {"message": str(exc),
             "residual": getattr(report, "residual", None),
             "walltime_s": time.perf_counter() - t0},
            extra)
        if args.out:
            dump_result(result, args.out)
        _diag(f"no zero found: {exc}")
        return EXIT_NO_ZERO
    except VerificationError as exc:
        _diag(f"verification failed: {exc}")
        return EXIT_VERIFY_FAILED
    walltime = time.perf_counter() - t0
    # record the bandwidth actually used so the result re-verifies standalone
    if problem == "lines":
        scenario.smoothing_h = float(est.report_["h_final"])
    else:
        scenario.smoothing_h = float(est.h_)
    solution = solution_to_dict(problem, est)
    result = result_to_dict(scenario, solution, residuals,
                            _report_dict(est, walltime))
    if args.out:
        dump_result(result, args.out)
    if args.plot:
        _emit_plots(args.plot, scenario, est)
    rel = (np.max(residuals) / max(a.total_weight for a in scenario.assignments)
           if len(residuals) else 0.0)
    _diag(f"solved {problem}: max relative residual {rel:.3e}"
          + (f", result in {args.out}" if args.out else ""))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .scenario_io import scenario_from_dict

    data = load_result(args.result)
    scenario = scenario_from_dict(data["scenario"])
    if data.get("solution") is None:
        raise InputError("result file has no solution to verify")
    stored = np.asarray(data.get("residuals", []), dtype=float)
    h = scenario.smoothing_h if args.h is None else args.h
    if h is None:
        raise InputError("no smoothing bandwidth available for verification")
    part, frame = partition_from_solution(scenario.problem, data["solution"])
    if scenario.problem == "lines":
        counts = [verify_mod.count_lines_through_disc(a, part.basis,
                                                      part.center, part.radius)
                  for a in scenario.assignments]
        residuals = np.array([abs(c[0] - 0.5 * a.total_weight)
                              for c, a in zip(counts, scenario.assignments)])
        bad = [i for i, (c, a) in enumerate(zip(counts, scenario.assignments))
               if 2 * c[0] < a.total_weight or 2 * c[1] < a.total_weight]
        if bad:
            _diag(f"family {bad[0]} is not split by the circle: counts={counts}")
            return EXIT_VERIFY_FAILED
        if stored.size and np.max(np.abs(residuals - stored)) > 1e-12:
            _diag(f"stored residuals do not reproduce: {residuals} vs {stored}")
            return EXIT_VERIFY_FAILED
        _diag(f"verified: counts {counts}")
        return EXIT_OK
    if scenario.problem == "sphere":
        residuals = verify_mod.verify_sphere(scenario.assignments, part, h)
    elif scenario.problem == "slab":
        residuals = verify_mod.verify_slab(scenario.assignments, part, h)
    else:
        residuals = verify_mod.verify_wedge(scenario.assignments, part, frame, h)
    if stored.size and np.max(np.abs(residuals - stored)) > 1e-12 * max(
            1.0, float(np.max(np.abs(stored)))):
        _diag(f"stored residuals do not reproduce: {residuals} vs {stored}")
        return EXIT_VERIFY_FAILED
    tol = args.tol if args.tol is not None else 1e-3
    if not verify_mod.passes(scenario.assignments, residuals, tol):
        _diag(f"residuals exceed tolerance {tol}: {residuals}")
        return EXIT_VERIFY_FAILED
    _diag(f"verified: max relative residual "
          f"{np.max(verify_mod.relative_residuals(scenario.assignments, residuals)):.3e}")
    return EXIT_OK


def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.kind == "counterexample":
        inst = gen_counterexample(args.d, args.k, n_points=args.n, seed=seed)
        scenario = Scenario(problem="sphere", d=args.d, k=args.k,
                            assignments=inst.assignments,
                            smoothing_h=args.h, seed=seed)
    elif args.kind == "lines":
        inst = gen_line_families(n_per_family=args.n, seed=seed)
        scenario = Scenario(problem="lines", d=3, k=2,
                            assignments=list(inst.families),
                            smoothing_h=args.h, seed=seed)
    elif args.kind == "gauss":
        from .measures import projection_assignment

        problem = args.problem
        d, k = args.d, args.k
        count = {"sphere": d + 1, "slab": d + 1, "wedge": d}[problem]
        assignments = [  # one independent mixture per measure
            projection_assignment(
                gen_gaussian_mixture(d, 3, args.n, seed=seed + 17 * j).points)
            for j in range(count)
        ]
        scenario = Scenario(problem=problem, d=d, k=k,
                            assignments=assignments, smoothing_h=args.h,
                            seed=seed)
    else:
        raise InputError(f"unknown generator {args.kind!r}")
    if not args.out:
        raise InputError("gen needs --out")
    dump_scenario(scenario, args.out)
    _diag(f"wrote {scenario.problem} scenario with {len(scenario.assignments)} "
          f"measures to {args.out}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    failures = run_selftest(verbose=True)
    return EXIT_OK if failures == 0 else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equipart",
        description="Bisecting spheres, parallel slabs and axis-parallel "
                    "wedges inside chosen subspaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", help="result JSON file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--h", type=float, default=None,
                       help="smoothing bandwidth override")
        p.add_argument("--tol", type=float, default=None,
                       help="relative verification tolerance")
        p.add_argument("--strategy", choices=["multistart", "homotopy", "auto"],
                       default=None)
        p.add_argument("--plot", default=None,
                       help="prefix for plot CSV/SVG emission (k = 2 only)")

    for name in ("solve-sphere", "solve-slab", "solve-wedge", "solve-lines"):
        p = sub.add_parser(name, help=f"solve a {name.split('-')[1]} scenario")
        add_common(p)

    p = sub.add_parser("verify", help="re-verify a result file")
    p.add_argument("--result", required=True, help="result JSON file")
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("gen", help="generate a scenario")
    p.add_argument("kind", choices=["counterexample", "lines", "gauss"])
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n", type=int, default=2000,
                   help="points per measure (or lines per family)")
    p.add_argument("--problem", choices=["sphere", "slab", "wedge"],
                   default="sphere", help="target problem for gauss scenarios")
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)

    sub.add_parser("selftest", help="run the built-in invariant suite")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve-sphere":
            return cmd_solve(args, "sphere")
        if args.command == "solve-slab":
            return cmd_solve(args, "slab")
        if args.command == "solve-wedge":
            return cmd_solve(args, "wedge")
        if args.command == "solve-lines":
            return cmd_solve(args, "lines")
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "selftest":
            return cmd_selftest(args)
        raise InputError(f"unknown command {args.command!r}")
    except (InputError, MeasureError) as exc:
        _diag(f"input error: {exc}")
        return EXIT_INPUT
    except NoZeroFoundError as exc:
        _diag(f"no zero found: {exc}")
        return EXIT_NO_ZERO
    except VerificationError as exc:
        _diag(f"verification failed: {exc}")
        return EXIT_VERIFY_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
