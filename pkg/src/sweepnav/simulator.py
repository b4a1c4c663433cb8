"""Synthetic worlds: transmitters, a driven route, and forward-modeled sweeps.

The simulator is the oracle for the pipeline: it knows true transmitter
positions and the true vehicle track, generates RSS sweeps through the
forward path-loss model with seeded log-normal shadowing, and scores a
recovered trajectory against the truth with frame-insensitive segment
metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError
from .pathloss import PathLossParams, rss_at_distance
from .pipeline import PipelineConfig, SegmentError, Trajectory, segment_error_report
from .placement import Bbox, place_in_box
from .sweeps import BandPlan, BandSample, SweepRecord

# Four-leg benchmark route: 270, 490, 260 and 840 m with right-angle turns.
ROUTE_WAYPOINTS: tuple[tuple[float, float], ...] = (
    (0.0, 0.0),
    (270.0, 0.0),
    (270.0, 490.0),
    (10.0, 490.0),
    (10.0, -350.0),
)

# Cellular-like carriers centered on 1 MHz plan bins.
DEFAULT_TX_FREQS_MHZ = (700.5, 800.5, 900.5, 1800.5, 2100.5, 2600.5)
EXTENDED_TX_FREQS_MHZ = DEFAULT_TX_FREQS_MHZ + (
    600.5, 750.5, 850.5, 950.5, 1500.5, 1900.5, 2300.5,
)
HIGH_BAND_TX_FREQS_MHZ = (3600.5, 3700.5, 3800.5, 3900.5, 4000.5, 4100.5)

# Route bounding box inflated by 150 m on each side.
DEFAULT_TX_BBOX: Bbox = (-150.0, -500.0, 420.0, 640.0)
STATIC_TX_BBOX: Bbox = (-400.0, -400.0, 400.0, 400.0)


class Transmitter(NamedTuple):
    x: float
    y: float
    power_dbm: float
    freq_mhz: float


class TruthSample(NamedTuple):
    timestamp: float
    x: float
    y: float
    vx: float
    vy: float


@dataclass(frozen=True)
class Scenario:
    """World description for one simulated run.

    ``hold_s`` keeps the receiver at the final waypoint for that long after
    the drive; a zero-length route is valid only with a positive hold, which
    is how static scenes are expressed. ``lead_in_m`` starts the drive that
    far before the first waypoint along the first leg's direction, so the
    sweep window is already full (and carries its steady-state lag) when
    the first scored waypoint is reached.
    """

    transmitters: tuple[Transmitter, ...]
    waypoints: tuple[tuple[float, float], ...]
    speed_mps: float = 10.0
    cadence_s: float = 1.0
    pathloss: PathLossParams = field(default_factory=PathLossParams)
    seed: int = 0
    hold_s: float = 0.0
    lead_in_m: float = 0.0
    start_time: float = 0.0
    tx_bbox: Bbox | None = None  # placement box metadata, None for explicit layouts

    def __post_init__(self):
        object.__setattr__(self, "transmitters", tuple(self.transmitters))
        object.__setattr__(
            self, "waypoints", tuple((float(x), float(y)) for x, y in self.waypoints)
        )
        if len(self.transmitters) < 4:
            raise ConfigError("need at least 4 transmitters")
        if len(self.waypoints) < 2:
            raise ConfigError("need at least 2 waypoints")
        if self.speed_mps <= 0:
            raise ConfigError("speed must be positive")
        if self.cadence_s <= 0:
            raise ConfigError("sweep cadence must be positive")
        if self.hold_s < 0:
            raise ConfigError("hold time must be non-negative")
        if self.lead_in_m < 0:
            raise ConfigError("lead-in length must be non-negative")
        if self.lead_in_m > 0:
            dx = self.waypoints[1][0] - self.waypoints[0][0]
            dy = self.waypoints[1][1] - self.waypoints[0][1]
            if math.hypot(dx, dy) == 0:
                raise ConfigError("lead-in needs a non-degenerate first leg")
        freqs = [t.freq_mhz for t in self.transmitters]
        if len(set(freqs)) != len(freqs):
            raise ConfigError("transmitter frequencies must be distinct")


@dataclass(frozen=True)
class GroundTruth:
    """True per-sweep receiver states plus waypoint sample indices."""

    samples: tuple[TruthSample, ...]
    waypoint_indices: tuple[int, ...]

    def positions(self) -> np.ndarray:
        return np.array([(s.x, s.y) for s in self.samples], dtype=float)

    def timestamps(self) -> np.ndarray:
        return np.array([s.timestamp for s in self.samples], dtype=float)

    def segment_lengths(self) -> np.ndarray:
        pts = self.positions()[list(self.waypoint_indices)]
        return np.hypot(*(np.diff(pts, axis=0).T))


@dataclass(frozen=True)
class SimulatedRun:
    truth: GroundTruth
    sweeps: tuple[SweepRecord, ...]
    clamped_ranges: int = 0


def synth_route(scenario: Scenario) -> GroundTruth:
    """Sample the waypoint polyline at constant speed every cadence.

    The final point (end of drive plus hold) is always included even when
    it falls off the cadence grid. ``waypoint_indices`` mark the scenario's
    waypoints only, never the lead-in start.
    """
    waypoints = np.asarray(scenario.waypoints, dtype=float)
    if scenario.lead_in_m > 0:
        first_leg = waypoints[1] - waypoints[0]
        direction = first_leg / np.hypot(first_leg[0], first_leg[1])
        start = waypoints[0] - scenario.lead_in_m * direction
        waypoints = np.vstack([start, waypoints])
    legs = np.diff(waypoints, axis=0)
    leg_lengths = np.hypot(legs[:, 0], legs[:, 1])
    cumulative = np.concatenate([[0.0], np.cumsum(leg_lengths)])
    total_length = float(cumulative[-1])
    travel_s = total_length / scenario.speed_mps
    duration = travel_s + scenario.hold_s
    if duration <= 0:
        raise ValueError("route has zero length and no hold time")

    n_grid = int(math.floor(duration / scenario.cadence_s + 1e-9))
    offsets = [k * scenario.cadence_s for k in range(n_grid + 1)]
    if offsets[-1] < duration - 1e-9:
        offsets.append(duration)

    samples = []
    for offset in offsets:
        distance = min(offset * scenario.speed_mps, total_length)
        x, y, vx, vy = _point_on_polyline(waypoints, legs, leg_lengths, cumulative, distance)
        if offset * scenario.speed_mps >= total_length and scenario.hold_s > 0:
            vx = vy = 0.0
        samples.append(TruthSample(scenario.start_time + offset, x, y, vx, vy))

    times = np.array(offsets)
    scored = cumulative[1:] if scenario.lead_in_m > 0 else cumulative
    waypoint_indices = []
    for leg_end in scored:
        arrival = leg_end / scenario.speed_mps
        waypoint_indices.append(int(np.argmin(np.abs(times - arrival))))
    return GroundTruth(samples=tuple(samples), waypoint_indices=tuple(waypoint_indices))


def _point_on_polyline(waypoints, legs, leg_lengths, cumulative, distance):
    if cumulative[-1] == 0.0:
        return float(waypoints[0, 0]), float(waypoints[0, 1]), 0.0, 0.0
    idx = int(np.searchsorted(cumulative, distance, side="right")) - 1
    idx = min(max(idx, 0), len(legs) - 1)
    while leg_lengths[idx] == 0.0 and idx < len(legs) - 1:
        idx += 1
    direction = legs[idx] / leg_lengths[idx]
    along = distance - cumulative[idx]
    x = waypoints[idx, 0] + direction[0] * along
    y = waypoints[idx, 1] + direction[1] * along
    return float(x), float(y), float(direction[0]), float(direction[1])


def synth_sweep(
    sample: TruthSample,
    scenario: Scenario,
    plan: BandPlan,
    rng: np.random.Generator,
) -> tuple[SweepRecord, int]:
    """Forward-model one sweep at the given truth sample.

    Returns the record and the number of ranges clamped to the reference
    distance (receiver closer than d0 to a transmitter).
    """
    params = scenario.pathloss
    clamped = 0
    bands = []
    for tx in sorted(scenario.transmitters, key=lambda t: t.freq_mhz):
        band = plan.band_for(tx.freq_mhz)
        if band is None:
            raise ConfigError(f"transmitter at {tx.freq_mhz} MHz is outside the band plan")
        distance = math.hypot(sample.x - tx.x, sample.y - tx.y)
        if distance < params.ref_distance_m:
            distance = params.ref_distance_m
            clamped += 1
        shadow = float(rng.normal(0.0, params.shadowing_sigma_db)) if params.shadowing_sigma_db > 0 else 0.0
        rss = rss_at_distance(
            distance, tx.freq_mhz, params, tx_power_dbm=tx.power_dbm, shadow_db=shadow
        )
        bands.append(BandSample(band[0], (band[1] + band[2]) / 2.0, rss))
    bands.sort(key=lambda b: b.band_id)
    return SweepRecord(timestamp=sample.timestamp, bands=tuple(bands)), clamped


def simulate_run(scenario: Scenario, plan: BandPlan | None = None) -> SimulatedRun:
    """Deterministic ground truth plus synthetic sweep stream."""
    if plan is None:
        plan = BandPlan.uniform()
    band_ids = set()
    for tx in scenario.transmitters:
        band = plan.band_for(tx.freq_mhz)
        if band is None:
            raise ConfigError(f"transmitter at {tx.freq_mhz} MHz is outside the band plan")
        if band[0] in band_ids:
            raise ConfigError(f"two transmitters share band {band[0]}")
        band_ids.add(band[0])

    truth = synth_route(scenario)
    rng = np.random.default_rng(scenario.seed)
    sweeps = []
    clamped_total = 0
    for sample in truth.samples:
        record, clamped = synth_sweep(sample, scenario, plan, rng)
        sweeps.append(record)
        clamped_total += clamped
    return SimulatedRun(truth=truth, sweeps=tuple(sweeps), clamped_ranges=clamped_total)


@dataclass(frozen=True)
class RunScore:
    """Frame-insensitive quality metrics of one recovered trajectory."""

    segments: dict[str, list[SegmentError]]
    rmse_m: dict[str, float]
    spread_series: np.ndarray


def score_run(
    truth: GroundTruth,
    trajectory: Trajectory,
    waypoint_indices: Sequence[int] | None = None,
    spread_window: int = 10,
) -> RunScore:
    """Segment errors, aligned RMSE, and the raw-fix spread series."""
    if len(trajectory.steps) != len(truth.samples):
        raise ValueError(
            f"trajectory has {len(trajectory.steps)} steps but truth has {len(truth.samples)}"
        )
    indices = list(waypoint_indices if waypoint_indices is not None else truth.waypoint_indices)
    truth_xy = truth.positions()
    truth_pts = truth_xy[indices]
    truth_lengths = np.hypot(*(np.diff(truth_pts, axis=0).T))

    segments = {}
    rmse = {}
    for estimator in ("raw", "wma", "ekf"):
        est_xy = trajectory.positions(estimator)
        segments[estimator] = segment_error_report(est_xy, indices, truth_lengths)
        rmse[estimator] = aligned_rmse(est_xy, truth_xy)
    return RunScore(
        segments=segments,
        rmse_m=rmse,
        spread_series=rolling_spread(trajectory.positions("raw"), spread_window),
    )


def aligned_rmse(estimated: np.ndarray, truth: np.ndarray) -> float:
    """RMSE after the best orthogonal alignment (rotation or reflection).

    The relative frame carries no absolute orientation or handedness, so
    both are factored out before comparing.
    """
    est = np.asarray(estimated, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise ValueError("estimated and truth must have the same shape")
    est_c = est - est.mean(axis=0)
    tru_c = tru - tru.mean(axis=0)
    u, _, vt = np.linalg.svd(est_c.T @ tru_c)
    rotation = u @ vt
    aligned = est_c @ rotation
    return float(np.sqrt(np.mean(np.sum((aligned - tru_c) ** 2, axis=1))))


def spread(points: np.ndarray) -> float:
    """Scalar scatter of a point cloud: sqrt(var_x + var_y)."""
    pts = np.asarray(points, dtype=float)
    return float(np.sqrt(pts[:, 0].var() + pts[:, 1].var()))


def rolling_spread(points: np.ndarray, window: int = 10) -> np.ndarray:
    """Trailing-window spread at every sample."""
    pts = np.asarray(points, dtype=float)
    return np.array(
        [spread(pts[max(0, k - window + 1): k + 1]) for k in range(len(pts))]
    )


def auto_transmitters(
    freqs_mhz: Sequence[float],
    seed: int,
    bbox: Bbox,
    power_dbm: float = 43.0,
    plan: BandPlan | None = None,
) -> tuple[Transmitter, ...]:
    """Seeded random transmitter layout, one per carrier frequency.

    Placement is keyed by the plan band id of each carrier, the same
    convention the pipeline uses for its anchor frame: equal seeds and
    boxes yield the identical constellation on both sides.
    """
    if plan is None:
        plan = BandPlan.uniform()
    by_band = {}
    for freq in freqs_mhz:
        band = plan.band_for(freq)
        if band is None:
            raise ConfigError(f"carrier {freq} MHz is outside the band plan")
        if band[0] in by_band:
            raise ConfigError(f"two carriers share band {band[0]}")
        by_band[band[0]] = freq
    placed = place_in_box(by_band.keys(), seed, bbox)
    return tuple(
        Transmitter(x=placed[bid][0], y=placed[bid][1], power_dbm=power_dbm, freq_mhz=freq)
        for bid, freq in sorted(by_band.items())
    )


def route_scenario(
    seed: int,
    *,
    tx_count: int = 6,
    shadowing_sigma_db: float = 4.0,
    exponent: float = 2.8,
    speed_mps: float = 10.0,
    cadence_s: float = 1.0,
    tx_bbox: Bbox = DEFAULT_TX_BBOX,
    tx_power_dbm: float = 43.0,
    lead_in_m: float = 200.0,
    high_band: bool = False,
) -> Scenario:
    """Benchmark drive scenario over the four-leg route."""
    pool = HIGH_BAND_TX_FREQS_MHZ if high_band else EXTENDED_TX_FREQS_MHZ
    if tx_count > len(pool):
        raise ConfigError(f"at most {len(pool)} transmitters available, asked for {tx_count}")
    freqs = pool[:tx_count]
    plan = BandPlan.uniform(high_mhz=4200.0) if high_band else None
    params = PathLossParams(
        exponent=exponent, tx_power_dbm=tx_power_dbm, shadowing_sigma_db=shadowing_sigma_db
    )
    return Scenario(
        transmitters=auto_transmitters(freqs, seed, tx_bbox, tx_power_dbm, plan),
        waypoints=ROUTE_WAYPOINTS,
        speed_mps=speed_mps,
        cadence_s=cadence_s,
        pathloss=params,
        seed=seed,
        lead_in_m=lead_in_m,
        tx_bbox=tx_bbox,
    )


def static_scenario(
    seed: int,
    *,
    duration_s: float = 60.0,
    position: tuple[float, float] = (0.0, 0.0),
    tx_count: int = 6,
    shadowing_sigma_db: float = 4.0,
    exponent: float = 2.8,
    cadence_s: float = 1.0,
    tx_bbox: Bbox = STATIC_TX_BBOX,
    tx_power_dbm: float = 43.0,
) -> Scenario:
    """Stationary receiver accumulating sweeps at one spot."""
    if duration_s <= 0:
        raise ConfigError("duration must be positive")
    freqs = EXTENDED_TX_FREQS_MHZ[:tx_count]
    params = PathLossParams(
        exponent=exponent, tx_power_dbm=tx_power_dbm, shadowing_sigma_db=shadowing_sigma_db
    )
    return Scenario(
        transmitters=auto_transmitters(freqs, seed, tx_bbox, tx_power_dbm),
        waypoints=(position, position),
        speed_mps=1.0,
        cadence_s=cadence_s,
        pathloss=params,
        seed=seed,
        hold_s=duration_s,
        tx_bbox=tx_bbox,
    )


def matched_config(scenario: Scenario, **overrides) -> PipelineConfig:
    """Pipeline configuration whose anchor frame mirrors the scenario layout.

    With the anchor seed and box equal to the transmitter placement's, the
    assigned anchors are congruent with the true constellation, which is
    the calibration convention for desk-scale benchmark runs. Requires a
    scenario built by one of the auto-placement helpers (tx_bbox set).
    """
    if scenario.tx_bbox is None and "anchor_bbox" not in overrides:
        raise ConfigError("scenario has no placement box; pass anchor_bbox explicitly")
    defaults = dict(
        pathloss=replace(scenario.pathloss),
        anchor_seed=scenario.seed,
        anchor_bbox=scenario.tx_bbox,
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)
