"""Extended Kalman filter over a planar position with velocity input.

The state is the 2D position alone; velocity enters the motion model as an
exogenous input, so the transition Jacobian is the identity:

    predict:  x <- x + Ts * u,          P <- P + Q
    update:   K = P H' / (H P H' + R),  x <- x + K (z - d_pred)
              P <- (I - K H) P

Measurements are ranges to landmarks (recent smoothed fixes re-used as
reference points), with the 1x2 Jacobian H = [(x - xl)/d, (y - yl)/d].
Multiple landmarks are folded in as sequential scalar updates, oldest
landmark first. P is re-symmetrized after every step to keep float drift
from accumulating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import SingularGeometryError

SYMMETRY_TOL = 1e-9
PSD_TOL = -1e-9
DEFAULT_MIN_RANGE = 1e-6


class Landmark(NamedTuple):
    x: float
    y: float
    source_index: int = -1


@dataclass(frozen=True)
class TrackState:
    """Filter state: planar position, covariance, and step length."""

    position: np.ndarray
    covariance: np.ndarray
    timestep: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(2))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float).reshape(2, 2))


@dataclass(frozen=True)
class NoiseConfig:
    """Process covariance Q (2x2) and scalar range variance R."""

    q: np.ndarray = None
    r: float = 0.01

    def __post_init__(self):
        q = np.eye(2) * 0.1 if self.q is None else np.asarray(self.q, dtype=float).reshape(2, 2)
        object.__setattr__(self, "q", q)
        if not np.allclose(q, q.T, atol=SYMMETRY_TOL):
            raise ValueError("Q must be symmetric")
        if min_eig_2x2(q) < PSD_TOL:
            raise ValueError("Q must be positive semi-definite")
        if self.r <= 0:
            raise ValueError("R must be positive")


@dataclass(frozen=True)
class TrackStep:
    """One filter step: resulting state plus the innovation log."""

    position: tuple[float, float]
    covariance: np.ndarray
    innovations: tuple[tuple[int, float], ...]
    flags: tuple[str, ...]
    timestamp: float = 0.0


Monitor = Callable[[str, np.ndarray], None]


def min_eig_2x2(matrix: np.ndarray) -> float:
    """Closed-form smallest eigenvalue of a symmetric 2x2 matrix."""
    a = matrix[0, 0]
    b = (matrix[0, 1] + matrix[1, 0]) / 2.0
    c = matrix[1, 1]
    return (a + c) / 2.0 - math.hypot((a - c) / 2.0, b)


def _require_valid_covariance(p: np.ndarray) -> None:
    if abs(p[0, 1] - p[1, 0]) > SYMMETRY_TOL:
        raise ValueError("covariance must be symmetric")
    if min_eig_2x2(p) < PSD_TOL:
        raise ValueError("covariance must be positive semi-definite")


def predict(state: TrackState, u: Sequence[float], noise: NoiseConfig) -> TrackState:
    """Constant-velocity prediction over one timestep."""
    if state.timestep <= 0:
        raise ValueError("timestep must be positive")
    _require_valid_covariance(state.covariance)
    velocity = np.asarray(u, dtype=float).reshape(2)
    position = state.position + state.timestep * velocity
    covariance = state.covariance + noise.q
    covariance = (covariance + covariance.T) / 2.0
    return TrackState(position=position, covariance=covariance, timestep=state.timestep)


def range_measurement(state: TrackState, landmark: Landmark) -> float:
    """Euclidean distance from the state position to the landmark."""
    return math.hypot(state.position[0] - landmark.x, state.position[1] - landmark.y)


def range_jacobian(
    state: TrackState, landmark: Landmark, min_range: float = DEFAULT_MIN_RANGE
) -> np.ndarray:
    """Gradient of the range with respect to the position, as a length-2 row."""
    dx = state.position[0] - landmark.x
    dy = state.position[1] - landmark.y
    distance = math.hypot(dx, dy)
    if distance <= min_range:
        raise SingularGeometryError(
            f"state within {min_range} m of landmark, range direction undefined"
        )
    return np.array([dx / distance, dy / distance])


def update(
    state: TrackState,
    z: float,
    landmark: Landmark,
    noise: NoiseConfig,
    min_range: float = DEFAULT_MIN_RANGE,
) -> TrackState:
    """Fold one range measurement into the state."""
    _require_valid_covariance(state.covariance)
    if z < 0:
        raise ValueError("range measurement must be non-negative")
    h = range_jacobian(state, landmark, min_range)
    p = state.covariance
    innovation_var = float(h @ p @ h) + noise.r
    gain = (p @ h) / innovation_var
    predicted = range_measurement(state, landmark)
    position = state.position + gain * (z - predicted)
    covariance = (np.eye(2) - np.outer(gain, h)) @ p
    covariance = (covariance + covariance.T) / 2.0
    return TrackState(position=position, covariance=covariance, timestep=state.timestep)


class EkfTracker:
    """Stateful wrapper evolving one track step by step.

    ``monitor`` (if given) is called with ("init" | "predict" | "update",
    covariance copy) after each covariance change; the test harness uses it
    to audit symmetry, positive semi-definiteness, and trace behavior.
    """

    def __init__(
        self,
        x0: Sequence[float],
        p0: np.ndarray,
        noise: NoiseConfig,
        monitor: Monitor | None = None,
        min_range: float = DEFAULT_MIN_RANGE,
    ):
        self._state = TrackState(position=np.asarray(x0, dtype=float), covariance=np.asarray(p0, dtype=float))
        _require_valid_covariance(self._state.covariance)
        self._noise = noise
        self._monitor = monitor
        self._min_range = min_range
        if monitor is not None:
            monitor("init", self._state.covariance.copy())

    @property
    def state(self) -> TrackState:
        return self._state

    def step(
        self,
        dt: float,
        u: Sequence[float],
        measurements: Sequence[tuple[Landmark, float]],
        timestamp: float = 0.0,
    ) -> TrackStep:
        """Predict with velocity ``u`` over ``dt``, then apply each range.

        A landmark coincident with the state is skipped; a step where no
        measurement could be applied (but some were offered) is flagged and
        keeps the prediction.
        """
        state = TrackState(
            position=self._state.position, covariance=self._state.covariance, timestep=dt
        )
        state = predict(state, u, self._noise)
        if self._monitor is not None:
            self._monitor("predict", state.covariance.copy())

        innovations: list[tuple[int, float]] = []
        flags: list[str] = []
        for landmark, z in measurements:
            try:
                predicted = range_measurement(state, landmark)
                state = update(state, z, landmark, self._noise, self._min_range)
            except SingularGeometryError:
                flags.append("skipped_landmark")
                continue
            innovations.append((landmark.source_index, z - predicted))
            if self._monitor is not None:
                self._monitor("update", state.covariance.copy())
        if measurements and not innovations:
            flags.append("no_update")

        self._state = state
        return TrackStep(
            position=(float(state.position[0]), float(state.position[1])),
            covariance=state.covariance.copy(),
            innovations=tuple(innovations),
            flags=tuple(flags),
            timestamp=timestamp,
        )


def track(
    fixes: Sequence[tuple[float, float]],
    timestamps: Sequence[float],
    noise: NoiseConfig,
    *,
    landmark_window: int = 3,
    measured: Sequence[tuple[float, float]] | None = None,
    p0_var: float = 10.0,
    monitor: Monitor | None = None,
    min_range: float = DEFAULT_MIN_RANGE,
) -> list[TrackStep]:
    """Batch-filter a fix sequence against its own recent trail.

    At step k the landmarks are the previous ``landmark_window`` fixes and
    the measured ranges are distances from ``measured[k]`` (defaults to
    ``fixes`` itself) to those landmarks. Velocity input is the finite
    difference of consecutive fixes. Output length equals the input fix
    count.
    """
    if len(fixes) < 2:
        raise ValueError("need at least two fixes to track")
    if len(timestamps) != len(fixes):
        raise ValueError("timestamps length must match fixes")
    if measured is None:
        measured = fixes
    if len(measured) != len(fixes):
        raise ValueError("measured length must match fixes")

    tracker = EkfTracker(
        x0=fixes[0], p0=np.eye(2) * p0_var, noise=noise, monitor=monitor, min_range=min_range
    )
    steps = [
        TrackStep(
            position=(float(fixes[0][0]), float(fixes[0][1])),
            covariance=tracker.state.covariance.copy(),
            innovations=(),
            flags=(),
            timestamp=float(timestamps[0]),
        )
    ]
    for k in range(1, len(fixes)):
        dt = float(timestamps[k]) - float(timestamps[k - 1])
        if dt <= 0:
            raise ValueError("timestamps must be strictly increasing")
        u = ((fixes[k][0] - fixes[k - 1][0]) / dt, (fixes[k][1] - fixes[k - 1][1]) / dt)
        start = max(0, k - landmark_window)
        landmarks = [Landmark(fixes[i][0], fixes[i][1], i) for i in range(start, k)]
        measurements = [
            (lm, math.hypot(measured[k][0] - lm.x, measured[k][1] - lm.y)) for lm in landmarks
        ]
        steps.append(tracker.step(dt, u, measurements, timestamp=float(timestamps[k])))
    return steps
