"""Online pipeline: sweeps to a relative trajectory.

Per sweep: update the rolling window, compute per-band mean power, convert
to ranges, solve the multilateration least squares, smooth with a moving
average, then refine with the EKF. The filter predicts with the velocity
derived from the smoothed fixes and corrects against the same per-band
range estimates the least squares consumed, treating the assigned anchors
as its landmarks. The first accepted fix defines the origin of the
relative frame; every output position is reported relative to it.

Transmitter bands are selected once, at the first sweep where enough
persistent bands exist, and the anchor frame stays fixed for the whole run
so the relative frame is consistent.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .ekf import EkfTracker, Landmark, NoiseConfig
from .errors import DegenerateGeometryError, InsufficientAnchorsError, MissingBandError
from .multilateration import DEFAULT_CONDITION_CAP, Anchor, fix_position
from .pathloss import PathLossParams, rss_to_distance
from .placement import Bbox, place_in_box, validate_bbox
from .smoothing import Smoother, SmootherConfig
from .sweeps import BandPlan, SweepRecord, SweepWindow, band_mean, select_transmit_bands

log = logging.getLogger(__name__)

DEFAULT_ANCHOR_BBOX: Bbox = (-500.0, -500.0, 500.0, 500.0)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs; immutable once the pipeline starts.

    ``sweep_window`` of None (or 0 in config files) keeps a growing window.
    ``ekf_monitor`` is a test hook receiving covariance snapshots.
    """

    plan: BandPlan = field(default_factory=BandPlan.uniform)
    pathloss: PathLossParams = field(default_factory=PathLossParams)
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    sweep_window: int | None = 10
    anchor_seed: int = 1
    anchor_bbox: Bbox = DEFAULT_ANCHOR_BBOX
    anchor_override: tuple[Anchor, ...] | None = None
    ekf_enabled: bool = True
    p0_var: float = 10.0
    condition_cap: float = DEFAULT_CONDITION_CAP
    min_range: float = 1e-6
    ekf_monitor: Callable | None = None

    def __post_init__(self):
        validate_bbox(self.anchor_bbox)
        if self.sweep_window is not None and self.sweep_window < 1:
            raise ValueError("sweep_window must be positive or None")
        if self.p0_var <= 0:
            raise ValueError("p0_var must be positive")
        if self.condition_cap < 1:
            raise ValueError("condition_cap must be at least 1")


@dataclass(frozen=True)
class TrajectoryStep:
    """One output row of the pipeline."""

    index: int
    timestamp: float
    x_raw: float
    y_raw: float
    x_wma: float
    y_wma: float
    x_ekf: float
    y_ekf: float
    residual_norm: float
    flags: tuple[str, ...] = ()

    @property
    def raw(self) -> tuple[float, float]:
        return (self.x_raw, self.y_raw)

    @property
    def wma(self) -> tuple[float, float]:
        return (self.x_wma, self.y_wma)

    @property
    def ekf(self) -> tuple[float, float]:
        return (self.x_ekf, self.y_ekf)


@dataclass(frozen=True)
class Trajectory:
    """Relative trajectory plus run diagnostics."""

    steps: tuple[TrajectoryStep, ...]
    selected_bands: tuple[int, ...] = ()
    anchors: tuple[Anchor, ...] = ()
    skipped_sweeps: int = 0
    held_steps: int = 0

    def __len__(self) -> int:
        return len(self.steps)

    def positions(self, estimator: str = "raw") -> np.ndarray:
        if estimator not in ("raw", "wma", "ekf"):
            raise ValueError(f"unknown estimator {estimator!r}")
        return np.array(
            [getattr(s, estimator) for s in self.steps], dtype=float
        ).reshape(len(self.steps), 2)

    def timestamps(self) -> np.ndarray:
        return np.array([s.timestamp for s in self.steps], dtype=float)


@dataclass(frozen=True)
class SegmentError:
    """Estimated vs true length of one inter-waypoint segment."""

    estimated_m: float
    truth_m: float
    percent_diff: float


def assign_anchor_frame(band_ids: Sequence[int], seed: int, bbox: Bbox) -> list[Anchor]:
    """Seeded uniform anchor placement, one anchor per band.

    Positions are keyed by band id (drawn in ascending id order), so the
    constellation depends only on (seed, bbox, band set), not on the power
    ordering of ``band_ids``. The returned list preserves the input order.
    """
    if len(band_ids) < 4:
        raise InsufficientAnchorsError(f"need at least 4 bands, have {len(band_ids)}")
    if len(set(band_ids)) != len(band_ids):
        raise ValueError("band ids must be unique")
    placed = place_in_box(band_ids, seed, bbox)
    return [Anchor(band_id=bid, x=placed[bid][0], y=placed[bid][1]) for bid in band_ids]


def derive_velocity(
    fixes: Sequence[tuple[float, tuple[float, float]]],
) -> tuple[float, float]:
    """Finite-difference velocity from the last two (timestamp, fix) pairs.

    Returns (0, 0) until two fixes exist.
    """
    if len(fixes) < 2:
        return (0.0, 0.0)
    (t0, p0), (t1, p1) = fixes[-2], fixes[-1]
    dt = t1 - t0
    if dt <= 0:
        raise ValueError("fix timestamps must strictly increase")
    return ((p1[0] - p0[0]) / dt, (p1[1] - p0[1]) / dt)


class TrackingPipeline:
    """Sequential per-sweep state machine producing the relative trajectory.

    Feed sweeps through :meth:`process`; call :meth:`finish` for the
    result. Processing is strictly online, so streaming and batch runs over
    the same sweeps produce identical trajectories.
    """

    def __init__(self, config: PipelineConfig):
        self._cfg = config
        self._window = SweepWindow(config.sweep_window)
        self._selected: list[int] | None = None
        self._anchors: list[Anchor] | None = None
        self._landmarks: list[Landmark] = []
        self._centers: list[float] = []
        self._origin: np.ndarray | None = None
        self._smoother = Smoother(config.smoother)
        self._smoothed: list[tuple[float, tuple[float, float]]] = []
        self._tracker: EkfTracker | None = None
        self._steps: list[TrajectoryStep] = []
        self._prev_raw_abs: tuple[float, float] | None = None
        self._prev_sweep_ts: float | None = None
        self._skipped = 0
        self._held = 0

    def process(self, sweep: SweepRecord) -> TrajectoryStep | None:
        if self._prev_sweep_ts is not None and sweep.timestamp <= self._prev_sweep_ts:
            raise ValueError("sweep timestamps must strictly increase")
        self._prev_sweep_ts = sweep.timestamp
        self._window.push(sweep)

        if self._selected is None and not self._select_bands():
            self._skipped += 1
            return None

        raw_abs, residual, distances, fail_reason = self._solve_fix(sweep.timestamp)
        flags: tuple[str, ...] = ()
        if raw_abs is None:
            if self._prev_raw_abs is None:
                self._skipped += 1
                return None
            raw_abs = self._prev_raw_abs
            residual = math.nan
            flags = ("held", fail_reason)
            self._held += 1
        self._prev_raw_abs = raw_abs

        if self._origin is None:
            self._origin = np.asarray(raw_abs, dtype=float)
            self._landmarks = [
                Landmark(a.x - self._origin[0], a.y - self._origin[1], i)
                for i, a in enumerate(self._anchors)
            ]
        raw_rel = (raw_abs[0] - self._origin[0], raw_abs[1] - self._origin[1])

        smoothed = self._smoother.push(raw_rel)
        self._smoothed.append((sweep.timestamp, smoothed))

        ekf_pos, ekf_flags = self._ekf_step(sweep.timestamp, smoothed, distances)
        step = TrajectoryStep(
            index=len(self._steps),
            timestamp=sweep.timestamp,
            x_raw=raw_rel[0],
            y_raw=raw_rel[1],
            x_wma=smoothed[0],
            y_wma=smoothed[1],
            x_ekf=ekf_pos[0],
            y_ekf=ekf_pos[1],
            residual_norm=residual,
            flags=flags + ekf_flags,
        )
        self._steps.append(step)
        return step

    def finish(self) -> Trajectory:
        return Trajectory(
            steps=tuple(self._steps),
            selected_bands=tuple(self._selected or ()),
            anchors=tuple(self._anchors or ()),
            skipped_sweeps=self._skipped,
            held_steps=self._held,
        )

    def _select_bands(self) -> bool:
        cfg = self._cfg
        candidates = self._window.persistent_band_ids()
        stats = [self._window.stats(bid) for bid in candidates]
        try:
            selected = select_transmit_bands(stats, cfg.plan.selection_count)
        except InsufficientAnchorsError:
            return False
        self._selected = selected
        if cfg.anchor_override is not None:
            by_band = {a.band_id: a for a in cfg.anchor_override}
            missing = [bid for bid in selected if bid not in by_band]
            if missing:
                raise ValueError(f"anchor_override lacks positions for bands {missing}")
            self._anchors = [by_band[bid] for bid in selected]
        else:
            self._anchors = assign_anchor_frame(selected, cfg.anchor_seed, cfg.anchor_bbox)
        self._centers = [cfg.plan.center_mhz(bid) for bid in selected]
        log.debug("selected bands %s with anchors %s", selected, self._anchors)
        return True

    def _solve_fix(self, timestamp: float):
        cfg = self._cfg
        records = self._window.records
        distances = []
        try:
            for band_id, center in zip(self._selected, self._centers):
                stats = band_mean(records, band_id)
                distances.append(rss_to_distance(stats.mean_dbm, center, cfg.pathloss))
            fix = fix_position(self._anchors, distances, timestamp, cfg.condition_cap)
        except MissingBandError:
            return None, math.nan, None, "missing_band"
        except DegenerateGeometryError:
            return None, math.nan, None, "degenerate"
        return (fix.x, fix.y), fix.residual_norm, distances, ""

    def _ekf_step(
        self,
        timestamp: float,
        smoothed: tuple[float, float],
        distances: list[float] | None,
    ) -> tuple[tuple[float, float], tuple[str, ...]]:
        """One filter step: velocity prediction, then one range update per anchor.

        Held steps (no fresh ranges) run the prediction alone, so a flagged
        sample never moves the track by more than the motion model does.
        """
        cfg = self._cfg
        if not cfg.ekf_enabled:
            return smoothed, ()
        if self._tracker is None:
            self._tracker = EkfTracker(
                x0=smoothed,
                p0=np.eye(2) * cfg.p0_var,
                noise=cfg.noise,
                monitor=cfg.ekf_monitor,
                min_range=cfg.min_range,
            )
            return smoothed, ()

        prev_ts = self._smoothed[-2][0]
        dt = timestamp - prev_ts
        u = derive_velocity(self._smoothed)
        if distances is None:
            measurements = []
        else:
            measurements = list(zip(self._landmarks, distances))
        step = self._tracker.step(dt, u, measurements, timestamp=timestamp)
        return step.position, step.flags


def run_pipeline(sweeps: Iterable[SweepRecord], config: PipelineConfig) -> Trajectory:
    """Run the full pipeline over a sweep stream (any iterable)."""
    pipeline = TrackingPipeline(config)
    for sweep in sweeps:
        pipeline.process(sweep)
    return pipeline.finish()


def segment_error_report(
    positions: Sequence[tuple[float, float]] | np.ndarray,
    waypoint_indices: Sequence[int],
    truth_lengths_m: Sequence[float],
) -> list[SegmentError]:
    """Per-segment length error against known true lengths.

    ``waypoint_indices`` mark the trajectory samples at which the receiver
    passed each waypoint; consecutive pairs bound one segment. The percent
    difference is |est - truth| / truth * 100.
    """
    pts = np.asarray(positions, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("positions must be (x, y) pairs")
    if len(waypoint_indices) != len(truth_lengths_m) + 1:
        raise ValueError("need one more waypoint index than truth lengths")
    if any(t <= 0 for t in truth_lengths_m):
        raise ValueError("truth lengths must be positive")
    indices = list(waypoint_indices)
    if indices != sorted(indices):
        raise ValueError("waypoint indices must be ordered")
    if indices[0] < 0 or indices[-1] >= len(pts):
        raise ValueError("waypoint index out of range")

    report = []
    for seg, truth in enumerate(truth_lengths_m):
        a = pts[indices[seg]]
        b = pts[indices[seg + 1]]
        estimated = float(np.hypot(b[0] - a[0], b[1] - a[1]))
        percent = abs(estimated - truth) / truth * 100.0
        report.append(SegmentError(estimated_m=estimated, truth_m=float(truth), percent_diff=percent))
    return report
