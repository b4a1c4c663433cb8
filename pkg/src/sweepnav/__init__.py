"""Relative trajectory recovery from RF spectrum sweeps.

A receiver drives through an area with unknown ambient transmitters,
repeatedly sweeping the spectrum. Per-band received power is smoothed,
converted to ranges through a log-distance path-loss model, multilaterated
against a seeded anchor frame, and refined with a moving average plus an
extended Kalman filter, yielding a trajectory whose shape and segment
lengths mirror the true drive.
"""

from .ekf import EkfTracker, Landmark, NoiseConfig, TrackState, predict, range_jacobian, range_measurement, track, update
from .errors import (
    ConfigError,
    DegenerateGeometryError,
    InsufficientAnchorsError,
    MissingBandError,
    PlacementError,
    SingularGeometryError,
    SweepNavError,
    SweepParseError,
)
from .multilateration import Anchor, PositionFix, build_linear_system, fix_position, solve_lsq
from .pathloss import PathLossParams, free_space_pl0, invert_distance, path_loss, rss_at_distance, rss_to_distance
from .pipeline import (
    PipelineConfig,
    TrackingPipeline,
    Trajectory,
    TrajectoryStep,
    assign_anchor_frame,
    derive_velocity,
    run_pipeline,
    segment_error_report,
)
from .simulator import (
    GroundTruth,
    Scenario,
    SimulatedRun,
    Transmitter,
    matched_config,
    route_scenario,
    score_run,
    simulate_run,
    static_scenario,
    synth_route,
    synth_sweep,
)
from .smoothing import Smoother, SmootherConfig, sma, wma
from .sweeps import (
    BandPlan,
    BandSample,
    BandStats,
    SweepRecord,
    SweepWindow,
    band_mean,
    parse_sweep_file,
    parse_sweep_lines,
    select_transmit_bands,
    write_sweep_csv,
)

__version__ = "0.1.0"
