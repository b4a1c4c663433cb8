"""Planar multilateration by linearized least squares.

With anchors q_1..q_n and ranges d_1..d_n, each circle equation
|x - q_i|^2 = d_i^2 is subtracted from the first one, leaving the linear
system A x = b with

    row j of A = 2 * [(x_1 - x_{j+1}), (y_1 - y_{j+1})]
    b_j = x_1^2 - x_{j+1}^2 + y_1^2 - y_{j+1}^2 + d_{j+1}^2 - d_1^2

solved in the least-squares sense. The first anchor should be the most
trusted one since it appears in every equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGeometryError, InsufficientAnchorsError

MIN_ANCHORS = 4
DEFAULT_CONDITION_CAP = 1e8


@dataclass(frozen=True)
class Anchor:
    """A transmitter's assigned coordinate in the relative frame."""

    band_id: int
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("anchor coordinates must be finite")


@dataclass(frozen=True)
class PositionFix:
    """A raw least-squares solution with its quality metadata."""

    x: float
    y: float
    residual_norm: float
    condition_estimate: float
    anchor_count: int
    timestamp: float

    def __post_init__(self):
        if self.anchor_count < MIN_ANCHORS:
            raise ValueError(f"anchor_count must be at least {MIN_ANCHORS}")
        if self.residual_norm < 0:
            raise ValueError("residual_norm must be non-negative")
        if self.condition_estimate < 1:
            raise ValueError("condition_estimate must be at least 1")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


def build_linear_system(
    anchors: Sequence[Anchor], distances: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    """Linearize the circle-intersection system against the first anchor."""
    n = len(anchors)
    if n < MIN_ANCHORS:
        raise InsufficientAnchorsError(f"need at least {MIN_ANCHORS} anchors, have {n}")
    if len(distances) != n:
        raise ValueError(f"{n} anchors but {len(distances)} distances")
    if any(d < 0 for d in distances):
        raise ValueError("distances must be non-negative")
    ids = [a.band_id for a in anchors]
    if len(set(ids)) != n:
        raise ValueError("anchor ids must be unique")

    x1, y1, d1 = anchors[0].x, anchors[0].y, distances[0]
    a_rows = np.empty((n - 1, 2), dtype=float)
    b = np.empty(n - 1, dtype=float)
    for j in range(1, n):
        xj, yj, dj = anchors[j].x, anchors[j].y, distances[j]
        a_rows[j - 1, 0] = 2.0 * (x1 - xj)
        a_rows[j - 1, 1] = 2.0 * (y1 - yj)
        b[j - 1] = x1 * x1 - xj * xj + y1 * y1 - yj * yj + dj * dj - d1 * d1
    return a_rows, b


def solve_lsq(
    a: np.ndarray, b: np.ndarray, condition_cap: float = DEFAULT_CONDITION_CAP
) -> tuple[np.ndarray, float, float]:
    """Least-squares solution of A x = b with quality estimates.

    Returns (position, residual_norm, condition_estimate). Raises
    DegenerateGeometryError when A is rank deficient or its condition
    number exceeds ``condition_cap``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2 or a.shape[0] < 2:
        raise ValueError("A must have shape (m, 2) with m >= 2")
    if b.shape != (a.shape[0],):
        raise ValueError("b length must match the rows of A")

    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[-1] <= 0.0:
        raise DegenerateGeometryError("anchor geometry is rank deficient")
    condition = float(s[0] / s[-1])
    if condition > condition_cap:
        raise DegenerateGeometryError(
            f"condition estimate {condition:.3g} exceeds cap {condition_cap:.3g}"
        )
    position = vt.T @ ((u.T @ b) / s)
    residual_norm = float(np.linalg.norm(a @ position - b))
    return position, residual_norm, condition


def fix_position(
    anchors: Sequence[Anchor],
    distances: Sequence[float],
    timestamp: float,
    condition_cap: float = DEFAULT_CONDITION_CAP,
) -> PositionFix:
    """Range-based position fix from at least four anchors."""
    a, b = build_linear_system(anchors, distances)
    position, residual_norm, condition = solve_lsq(a, b, condition_cap)
    return PositionFix(
        x=float(position[0]),
        y=float(position[1]),
        residual_norm=residual_norm,
        condition_estimate=condition,
        anchor_count=len(anchors),
        timestamp=timestamp,
    )
