"""Scenario and result files.

Scenarios are single JSON documents with canonical formatting (sorted keys,
two-space indent, trailing newline) so parse -> serialize round-trips are
byte-identical.  Result files embed the scenario, making them self-contained
for re-verification.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .measures import AssignmentSpec, line_family_assignment, projection_assignment
from .validation import InputError

SCENARIO_VERSION = 1
PROBLEMS = ("sphere", "slab", "wedge", "lines")


@dataclass
class Scenario:
    problem: str
    d: int
    k: int
    assignments: list[AssignmentSpec]
    smoothing_h: float | None = None
    prescribed: list[list[float]] | None = None
    solver: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise InputError(f"unknown problem {self.problem!r}")
        if not self.assignments:
            raise InputError("scenario has no assignments")
        dims = {a.ambient_dim for a in self.assignments}
        if dims != {self.d}:
            raise InputError(f"assignments live in R^{sorted(dims)}, scenario says d={self.d}")


def _assignment_to_dict(a: AssignmentSpec) -> dict:
    if a.kind == "projection":
        return {
            "kind": "projection",
            "points": a.cloud.points.tolist(),
            "weights": a.cloud.weights.tolist(),
        }
    return {
        "kind": "line_family",
        "bases": a.bases.tolist(),
        "directions": a.directions.tolist(),
    }


def _assignment_from_dict(data: dict) -> AssignmentSpec:
    kind = data.get("kind")
    if kind == "projection":
        return projection_assignment(np.asarray(data["points"], dtype=float),
                                     np.asarray(data["weights"], dtype=float))
    if kind == "line_family":
        return line_family_assignment(np.asarray(data["bases"], dtype=float),
                                      np.asarray(data["directions"], dtype=float))
    raise InputError(f"unknown assignment kind {kind!r}")


def scenario_to_dict(s: Scenario) -> dict:
    out = {
        "version": SCENARIO_VERSION,
        "problem": s.problem,
        "d": s.d,
        "k": s.k,
        "smoothing_h": s.smoothing_h,
        "assignments": [_assignment_to_dict(a) for a in s.assignments],
        "solver": s.solver,
        "seed": s.seed,
    }
    if s.prescribed is not None:
        out["prescribed"] = s.prescribed
    return out


def scenario_from_dict(data: dict) -> Scenario:
    try:
        version = data["version"]
        if version != SCENARIO_VERSION:
            raise InputError(f"unsupported scenario version {version}")
        return Scenario(
            problem=data["problem"],
            d=int(data["d"]),
            k=int(data["k"]),
            smoothing_h=data.get("smoothing_h"),
            prescribed=data.get("prescribed"),
            assignments=[_assignment_from_dict(a) for a in data["assignments"]],
            solver=data.get("solver", {}),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed scenario: {exc}") from exc


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def dump_scenario(s: Scenario, path) -> None:
    Path(path).write_text(canonical_json(scenario_to_dict(s)), encoding="utf-8")


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"could not read scenario {path}: {exc}") from exc
    return scenario_from_dict(data)


# ---------------------------------------------------------------------------
# results

def solution_to_dict(problem: str, fitted) -> dict:
    """Serializable description of a fitted estimator's partition."""
    if problem in ("sphere", "lines"):
        part = fitted.partition_
        params = ({"center": part.center.tolist(), "radius": part.radius}
                  if part.kind == "sphere" else
                  {"normal": part.normal.tolist(), "offset": part.offset})
        return {"type": part.kind, "basis": part.basis.vectors.tolist(),
                "parameters": params}
    if problem == "slab":
        part = fitted.partition_
        params = ({"r1": part.r1, "r2": part.r2} if part.kind == "slab"
                  else {"offset": part.offset, "side": part.side})
        return {"type": part.kind, "basis": part.basis.vectors.tolist(),
                "parameters": params}
    if problem == "wedge":
        wedge = fitted.wedge_
        params = {"kind": wedge.kind}
        if wedge.t is not None:
            params["t"] = wedge.t
        if wedge.y is not None:
            params["y"] = wedge.y
        if wedge.orientation is not None:
            params["orientation"] = wedge.orientation
        return {"type": "down_wedge",
                "basis": fitted.plane_.basis().vectors.tolist(),
                "parameters": params}
    raise InputError(f"unknown problem {problem!r}")


def partition_from_solution(problem: str, solution: dict):
    from .geometry import SlabPartition, SpherePartition, SubspaceBasis
    from .wedges import DownWedge, WedgeFrame

    basis = SubspaceBasis(d=len(solution["basis"][0]),
                          vectors=np.asarray(solution["basis"], dtype=float))
    params = solution["parameters"]
    if problem in ("sphere", "lines"):
        if solution["type"] == "sphere":
            return SpherePartition(basis=basis, kind="sphere",
                                   center=np.asarray(params["center"], dtype=float),
                                   radius=float(params["radius"])), basis
        return SpherePartition(basis=basis, kind="halfspace",
                               normal=np.asarray(params["normal"], dtype=float),
                               offset=float(params["offset"])), basis
    if problem == "slab":
        if solution["type"] == "slab":
            return SlabPartition(basis=basis, kind="slab",
                                 r1=float(params["r1"]), r2=float(params["r2"])), basis
        return SlabPartition(basis=basis, kind="halfspace",
                             offset=float(params["offset"]),
                             side=int(params.get("side", 1))), basis
    if problem == "wedge":
        wedge = DownWedge(kind=params["kind"], t=params.get("t"),
                          y=params.get("y"),
                          orientation=params.get("orientation"))
        frame = WedgeFrame(v=np.asarray(solution["basis"][0], dtype=float))
        return wedge, frame
    raise InputError(f"unknown problem {problem!r}")


def result_to_dict(scenario: Scenario, solution: dict | None, residuals,
                   report: dict, extra: dict | None = None) -> dict:
    out = {
        "version": SCENARIO_VERSION,
        "problem": scenario.problem,
        "scenario": scenario_to_dict(scenario),
        "solution": solution,
        "residuals": None if residuals is None else list(map(float, residuals)),
        "report": report,
    }
    if extra:
        out.update(extra)
    return out


def dump_result(result: dict, path) -> None:
    Path(path).write_text(canonical_json(result), encoding="utf-8")


def load_result(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"could not read result {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# plot data

def write_plot_csv(path, coords_list, inside_list) -> None:
    """Cloud points in subspace coordinates tagged by region membership."""
    lines = ["measure,x,y,inside"]
    for j, (coords, inside) in enumerate(zip(coords_list, inside_list)):
        for (x, y), flag in zip(coords, inside):
            lines.append(f"{j},{x!r},{y!r},{int(flag)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _svg_header(lo, hi, size=640):
    span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-9)
    pad = 0.05 * span
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
            f'viewBox="{lo[0] - pad} {-(hi[1] + pad)} {span + 2 * pad} {span + 2 * pad}">')


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def write_plot_svg(path, coords_list, boundary_svg: str, lo, hi) -> None:
    """Simple SVG: points per measure plus the partition boundary.

    y-coordinates are negated so the picture is in the usual orientation."""
    parts = [_svg_header(lo, hi)]
    span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-9)
    r = 0.004 * span
    for j, coords in enumerate(coords_list):
        color = _COLORS[j % len(_COLORS)]
        for x, y in coords:
            parts.append(f'<circle cx="{x}" cy="{-y}" r="{r}" fill="{color}" '
                         f'fill-opacity="0.5"/>')
    parts.append(boundary_svg)
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def boundary_svg_for(problem: str, fitted, lo, hi) -> str:
    span = max(hi[0] - lo[0], hi[1] - lo[1], 1e-9)
    stroke = f'stroke="black" stroke-width="{0.004 * span}" fill="none"'
    if problem in ("sphere", "lines"):
        part = fitted.partition_
        if part.kind == "sphere":
            return (f'<circle cx="{part.center[0]}" cy="{-part.center[1]}" '
                    f'r="{part.radius}" {stroke}/>')
        n = part.normal
        p0 = part.offset * n
        t = np.array([-n[1], n[0]]) * 2 * span
        return (f'<line x1="{p0[0] - t[0]}" y1="{-(p0[1] - t[1])}" '
                f'x2="{p0[0] + t[0]}" y2="{-(p0[1] + t[1])}" {stroke}/>')
    if problem == "slab":
        part = fitted.partition_
        xs = (lo[0] - span, hi[0] + span)
        if part.kind == "slab":
            lines = []
            for r in (part.r1, part.r2):
                lines.append(f'<line x1="{xs[0]}" y1="{-r}" x2="{xs[1]}" y2="{-r}" {stroke}/>')
            return "\n".join(lines)
        return (f'<line x1="{xs[0]}" y1="{-part.offset}" x2="{xs[1]}" '
                f'y2="{-part.offset}" {stroke}/>')
    if problem == "wedge":
        w = fitted.wedge_
        big = 2 * span
        if w.kind == "vertical_line":
            return f'<line x1="{w.t}" y1="{-(lo[1] - big)}" x2="{w.t}" y2="{-(hi[1] + big)}" {stroke}/>'
        if w.kind == "horizontal_line":
            return f'<line x1="{lo[0] - big}" y1="{-w.y}" x2="{hi[0] + big}" y2="{-w.y}" {stroke}/>'
        dx = -big if w.orientation == "left" else big
        return (f'<polyline points="{w.t},{-(w.y - big)} {w.t},{-w.y} '
                f'{w.t + dx},{-w.y}" {stroke}/>')
    return ""
