"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

from .measures import AssignmentSpec, WeightedCloud, projection_assignment


class InputError(ValueError):
    """User-facing input is malformed."""


def as_points_array(X, d: int | None = None, name: str = "X") -> np.ndarray:
    pts = np.asarray(X, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2:
        raise InputError(f"{name} must be a 2-D array of points")
    if not np.all(np.isfinite(pts)):
        raise InputError(f"{name} contains non-finite values")
    if d is not None and pts.shape[1] != d:
        raise InputError(f"{name} has {pts.shape[1]} columns, expected {d}")
    return pts


def as_assignments(X, weights=None) -> list[AssignmentSpec]:
    """Coerce a list of clouds / (points, weights) pairs / assignment specs
    into assignment specs with a common ambient dimension."""
    if isinstance(X, (AssignmentSpec, WeightedCloud, np.ndarray)):
        raise InputError("expected a sequence of measures, got a single one")
    specs: list[AssignmentSpec] = []
    weights = list(weights) if weights is not None else None
    for i, item in enumerate(X):
        if isinstance(item, AssignmentSpec):
            specs.append(item)
        elif isinstance(item, WeightedCloud):
            specs.append(AssignmentSpec(kind="projection", cloud=item))
        elif isinstance(item, tuple) and len(item) == 2:
            specs.append(projection_assignment(as_points_array(item[0]), item[1]))
        else:
            w = weights[i] if weights is not None else None
            specs.append(projection_assignment(as_points_array(item), w))
    dims = {s.ambient_dim for s in specs}
    if len(dims) != 1:
        raise InputError(f"measures live in different ambient dimensions: {sorted(dims)}")
    return specs


def unit_vector(v, d: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if d is not None and v.shape[0] != d:
        raise InputError(f"{name} has length {v.shape[0]}, expected {d}")
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise InputError(f"{name} is numerically zero")
    return v / norm
