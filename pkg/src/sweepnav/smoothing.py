"""Moving-average smoothing of position fixes."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError

Point = tuple[float, float]


@dataclass(frozen=True)
class SmootherConfig:
    """Window, weights, and kind ("wma" or "sma") for the fix smoother.

    Default weights ramp 1..window so the newest fix weighs most.
    """

    kind: str = "wma"
    window: int = 3
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("wma", "sma"):
            raise ConfigError(f"unknown smoother kind {self.kind!r}")
        if self.window < 1:
            raise ConfigError("smoother window must be at least 1")
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
            if len(self.weights) != self.window:
                raise ConfigError("weights length must equal the window")
            if any(w <= 0 for w in self.weights):
                raise ConfigError("weights must be positive")
            if self.kind == "sma" and len(set(self.weights)) > 1:
                raise ConfigError("sma requires equal weights")

    def effective_weights(self) -> tuple[float, ...]:
        if self.kind == "sma":
            return (1.0,) * self.window
        if self.weights is not None:
            return self.weights
        return tuple(float(i) for i in range(1, self.window + 1))


def wma(points: Sequence[Point], weights: Sequence[float]) -> Point:
    """Weighted mean of positions; weights align with points, oldest first.

    The result is clamped to the per-axis range of the window, which also
    guards against rounding spilling a hair outside it.
    """
    if len(points) == 0:
        raise ValueError("window must be non-empty")
    if len(points) != len(weights):
        raise ValueError(f"{len(points)} points but {len(weights)} weights")
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (x, y) pairs")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be positive and finite")
    # Normalizing by the first weight makes any equal-weight call take the
    # exact same float path as sma().
    w = w / w[0]
    out = (w @ pts) / w.sum()
    out = np.clip(out, pts.min(axis=0), pts.max(axis=0))
    return float(out[0]), float(out[1])


def sma(points: Sequence[Point]) -> Point:
    """Unweighted mean of positions."""
    return wma(points, np.ones(len(points)))


class Smoother:
    """Streaming trailing-window smoother over incoming fixes.

    While the window is still filling, the trailing weights apply to the
    fixes available so far (renormalized by the weighted mean itself).
    """

    def __init__(self, config: SmootherConfig):
        self._config = config
        self._weights = config.effective_weights()
        self._points: deque[Point] = deque(maxlen=config.window)

    def push(self, point: Point) -> Point:
        self._points.append((float(point[0]), float(point[1])))
        pts = list(self._points)
        if self._config.kind == "sma":
            return sma(pts)
        return wma(pts, self._weights[-len(pts):])

    def __len__(self) -> int:
        return len(self._points)
