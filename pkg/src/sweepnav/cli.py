"""Command-line interface: run, simulate, eval, convergence.

Exit codes: 0 success, 2 unreadable or malformed input, 3 configuration
error, 4 mismatched data shapes. The RPS_LOG environment variable sets the
log level (DEBUG, INFO, WARNING, ...).
"""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import artifacts
from .config import default_config, load_config, load_scenario, scenario_with_seed
from .errors import ConfigError, SweepNavError, SweepParseError
from .pipeline import PipelineConfig, run_pipeline, segment_error_report
from .simulator import rolling_spread, simulate_run, spread
from .sweeps import BandPlan, parse_sweep_file, write_sweep_csv

EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_SHAPE = 4

log = logging.getLogger(__name__)


@click.group()
def main():
    """Relative positioning from RF spectrum sweeps."""
    level = os.environ.get("RPS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _load_config_or_exit(config_path: str | None) -> PipelineConfig:
    try:
        if config_path is None:
            return default_config()
        return load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def _read_sweeps_or_exit(path: str, plan: BandPlan):
    try:
        return list(parse_sweep_file(path, plan))
    except (OSError, SweepParseError) as exc:
        click.echo(f"input error: {path}: {exc}", err=True)
        sys.exit(EXIT_INPUT)


@main.command()
@click.argument("sweeps", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(), default=None, help="Pipeline config file.")
@click.option("--seed", type=int, default=None, help="Anchor placement seed override.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def run(sweeps, config_path, seed, out_dir):
    """Process a sweep CSV into a relative trajectory."""
    config = _load_config_or_exit(config_path)
    if seed is not None:
        config = replace(config, anchor_seed=seed)
    records = _read_sweeps_or_exit(sweeps, config.plan)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        trajectory = run_pipeline(records, config)
    except ValueError as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    except SweepNavError as exc:
        click.echo(f"run failed: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    artifacts.write_trajectory_csv(trajectory, out / "trajectory.csv")
    summary = artifacts.summary_text(trajectory)
    (out / "summary.txt").write_text(summary, encoding="ascii")
    click.echo(summary, nl=False)


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Scenario seed override.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def simulate(scenario, seed, out_dir):
    """Generate sweeps and ground truth for a scenario file."""
    try:
        scene = load_scenario(scenario)
        if seed is not None:
            scene = scenario_with_seed(scene, seed)
        result = simulate_run(scene)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(result.sweeps, out / "sweeps.csv", BandPlan.uniform())
    artifacts.write_truth_csv(result.truth, out / "truth.csv")
    artifacts.write_waypoints_csv(result.truth, out / "waypoints.csv")
    click.echo(
        f"wrote {len(result.sweeps)} sweeps, route length "
        f"{float(np.sum(result.truth.segment_lengths())):.1f} m"
    )


def _segment_table(truth_xy, trajectory, indices):
    rows = {}
    truth_pts = truth_xy[indices]
    truth_lengths = np.hypot(*(np.diff(truth_pts, axis=0).T))
    for estimator in ("raw", "wma", "ekf"):
        rows[estimator] = segment_error_report(
            trajectory.positions(estimator), indices, truth_lengths
        )
    return truth_lengths, rows


@main.command("eval")
@click.argument("truth", type=click.Path(exists=True, dir_okay=False))
@click.argument("trajectory", type=click.Path(exists=True, dir_okay=False))
@click.option("--waypoints", "waypoints_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None, help="Config for grid re-runs.")
@click.option("--sweeps", "sweeps_path", type=click.Path(), default=None, help="Sweep CSV for grid re-runs.")
@click.option("--npl-list", default=None, help="Comma-separated path-loss exponents for the grid.")
@click.option("--txcount-list", default=None, help="Comma-separated transmitter counts for the grid.")
@click.option("--window-list", default=None, help="Comma-separated smoother windows for the grid.")
def eval_cmd(truth, trajectory, waypoints_path, out_dir, config_path, sweeps_path,
             npl_list, txcount_list, window_list):
    """Score a trajectory against ground truth at waypoints."""
    try:
        _, truth_xy = artifacts.read_truth_csv(truth)
        track = artifacts.read_trajectory_csv(trajectory)
        indices = artifacts.read_waypoints_csv(waypoints_path)
    except (OSError, ValueError) as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_INPUT)

    if len(track.steps) != len(truth_xy):
        click.echo(
            f"shape error: trajectory has {len(track.steps)} rows, truth has {len(truth_xy)}",
            err=True,
        )
        sys.exit(EXIT_SHAPE)
    if not indices or indices[-1] >= len(truth_xy) or indices != sorted(indices):
        click.echo("shape error: waypoint indices out of range or unordered", err=True)
        sys.exit(EXIT_SHAPE)

    truth_lengths, rows = _segment_table(truth_xy, track, indices)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_rows = []
    for estimator, segments in rows.items():
        for i, seg in enumerate(segments):
            report_rows.append((estimator, i + 1, seg.estimated_m, seg.truth_m, seg.percent_diff))
    with open(out / "report.csv", "w", encoding="ascii", newline="\n") as handle:
        handle.write("estimator,segment,est_m,truth_m,percent_diff\n")
        for estimator, seg_no, est, tru, pct in report_rows:
            handle.write(f"{estimator},{seg_no},{est:.6f},{tru:.6f},{pct:.6f}\n")

    names = [f"S{i + 1}" for i in range(len(truth_lengths))]
    click.echo("estimator  " + "  ".join(f"{n:>12}" for n in names))
    click.echo("truth      " + "  ".join(f"{t:>9.0f}/0.00" for t in truth_lengths))
    for estimator in ("wma", "ekf", "raw"):
        cells = [f"{s.estimated_m:.0f}/{s.percent_diff:.2f}" for s in rows[estimator]]
        click.echo(f"{estimator:<9}  " + "  ".join(f"{c:>12}" for c in cells))

    if npl_list or txcount_list or window_list:
        _eval_grid(
            truth_xy, indices, truth_lengths, out, config_path, sweeps_path,
            npl_list, txcount_list, window_list,
        )


def _parse_list(text, cast, default):
    if not text:
        return default
    try:
        return [cast(part) for part in text.split(",")]
    except ValueError:
        click.echo(f"config error: bad list {text!r}", err=True)
        sys.exit(EXIT_CONFIG)


def _eval_grid(truth_xy, indices, truth_lengths, out, config_path, sweeps_path,
               npl_list, txcount_list, window_list):
    if sweeps_path is None:
        click.echo("config error: grid evaluation needs --sweeps", err=True)
        sys.exit(EXIT_CONFIG)
    base = _load_config_or_exit(config_path)
    npls = _parse_list(npl_list, float, [base.pathloss.exponent])
    counts = _parse_list(txcount_list, int, [base.plan.selection_count])
    windows = _parse_list(window_list, int, [base.smoother.window])
    records = _read_sweeps_or_exit(sweeps_path, base.plan)

    grid_rows = []
    for npl in npls:
        for window in windows:
            for count in counts:
                try:
                    config = replace(
                        base,
                        pathloss=replace(base.pathloss, exponent=npl),
                        smoother=replace(base.smoother, window=window, weights=None),
                        plan=replace(base.plan, selection_count=count),
                    )
                except ConfigError as exc:
                    click.echo(f"config error: {exc}", err=True)
                    sys.exit(EXIT_CONFIG)
                trajectory = run_pipeline(records, config)
                if len(trajectory.steps) != len(truth_xy):
                    click.echo("shape error: grid run length mismatch", err=True)
                    sys.exit(EXIT_SHAPE)
                for estimator in ("wma", "ekf"):
                    segments = segment_error_report(
                        trajectory.positions(estimator), indices, truth_lengths
                    )
                    for i, seg in enumerate(segments):
                        grid_rows.append(
                            (npl, window, count, estimator, i + 1,
                             seg.estimated_m, seg.percent_diff)
                        )
    with open(out / "grid_report.csv", "w", encoding="ascii", newline="\n") as handle:
        handle.write("n_pl,window,tx_count,estimator,segment,est_m,percent_diff\n")
        for npl, window, count, estimator, seg_no, est, pct in grid_rows:
            handle.write(
                f"{npl},{window},{count},{estimator},{seg_no},{est:.6f},{pct:.6f}\n"
            )
    click.echo(f"grid: wrote {len(grid_rows)} rows")


def _looks_like_kv_file(path: str) -> bool:
    # Sweep CSV rows never contain '='; scenario files are key = value.
    with open(path, "r", encoding="utf-8", errors="replace") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            return "=" in line
    return False


@main.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None, help="Scenario seed override.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def convergence(source, config_path, seed, out_dir):
    """Coordinate-spread series over elapsed sweeps and over spectrum share.

    SOURCE is a scenario file (simulated on the fly) or a sweep CSV.
    """
    config = _load_config_or_exit(config_path)
    if _looks_like_kv_file(source):
        try:
            scene = load_scenario(source)
            if seed is not None:
                scene = scenario_with_seed(scene, seed)
            records = list(simulate_run(scene, config.plan).sweeps)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
    else:
        records = _read_sweeps_or_exit(source, config.plan)
    if not records:
        click.echo("input error: no sweeps in source", err=True)
        sys.exit(EXIT_INPUT)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    # Spread over elapsed sweeps, with an unbounded mean window so the
    # estimate keeps absorbing data as time passes.
    growing = replace(config, sweep_window=None)
    trajectory = run_pipeline(records, growing)
    series = rolling_spread(trajectory.positions("raw"), 10)
    artifacts.write_series_csv(
        out / "convergence_time.csv",
        ["k", "timestamp", "spread"],
        [
            (step.index, step.timestamp, series[i])
            for i, step in enumerate(trajectory.steps)
        ],
    )

    # Spread over cumulative low-to-high frequency subsets of the bands
    # seen in the first sweep.
    bands = sorted(records[0].band_ids, key=config.plan.center_mhz)
    spectrum_rows = []
    for m in range(4, len(bands) + 1):
        subset = bands[:m]
        sub_config = replace(
            config,
            sweep_window=None,
            plan=replace(config.plan, selection_count=m),
        )
        sub_records = [_filter_bands(r, set(subset)) for r in records]
        sub_trajectory = run_pipeline(sub_records, sub_config)
        if len(sub_trajectory.steps) == 0:
            continue
        tail = sub_trajectory.positions("raw")[-10:]
        spectrum_rows.append((config.plan.center_mhz(bands[m - 1]), m, spread(tail)))
    artifacts.write_series_csv(
        out / "convergence_spectrum.csv",
        ["cutoff_mhz", "band_count", "spread"],
        spectrum_rows,
    )
    click.echo(
        f"wrote convergence series ({len(trajectory.steps)} sweeps, "
        f"{len(spectrum_rows)} spectrum points)"
    )


def _filter_bands(record, keep: set):
    from .sweeps import SweepRecord

    return SweepRecord(
        timestamp=record.timestamp,
        bands=tuple(b for b in record.bands if b.band_id in keep),
    )


if __name__ == "__main__":
    main()
