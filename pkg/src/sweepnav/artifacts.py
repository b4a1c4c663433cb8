"""CSV artifacts exchanged between commands.

All writers use six fractional digits and LF endings so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import math

import numpy as np

from .pipeline import Trajectory, TrajectoryStep
from .simulator import GroundTruth

TRAJECTORY_HEADER = [
    "k", "timestamp", "x_raw", "y_raw", "x_wma", "y_wma", "x_ekf", "y_ekf", "residual", "flags",
]


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def write_trajectory_csv(trajectory: Trajectory, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write(",".join(TRAJECTORY_HEADER) + "\n")
        for step in trajectory.steps:
            row = [
                str(step.index),
                _fmt(step.timestamp),
                _fmt(step.x_raw),
                _fmt(step.y_raw),
                _fmt(step.x_wma),
                _fmt(step.y_wma),
                _fmt(step.x_ekf),
                _fmt(step.y_ekf),
                _fmt(step.residual_norm),
                ";".join(step.flags),
            ]
            handle.write(",".join(row) + "\n")


def read_trajectory_csv(path) -> Trajectory:
    steps = []
    with open(path, "r", encoding="ascii", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"{path}: unexpected trajectory header {header}")
        for row in reader:
            if len(row) != len(TRAJECTORY_HEADER):
                raise ValueError(f"{path}: malformed trajectory row {row}")
            steps.append(
                TrajectoryStep(
                    index=int(row[0]),
                    timestamp=float(row[1]),
                    x_raw=float(row[2]),
                    y_raw=float(row[3]),
                    x_wma=float(row[4]),
                    y_wma=float(row[5]),
                    x_ekf=float(row[6]),
                    y_ekf=float(row[7]),
                    residual_norm=float(row[8]),
                    flags=tuple(f for f in row[9].split(";") if f),
                )
            )
    return Trajectory(steps=tuple(steps))


def write_truth_csv(truth: GroundTruth, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write("k,timestamp,x,y\n")
        for k, sample in enumerate(truth.samples):
            handle.write(
                f"{k},{_fmt(sample.timestamp)},{_fmt(sample.x)},{_fmt(sample.y)}\n"
            )


def read_truth_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Returns (timestamps, positions) from a truth CSV."""
    timestamps = []
    positions = []
    with open(path, "r", encoding="ascii", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["k", "timestamp", "x", "y"]:
            raise ValueError(f"{path}: unexpected truth header {header}")
        for row in reader:
            timestamps.append(float(row[1]))
            positions.append((float(row[2]), float(row[3])))
    return np.asarray(timestamps), np.asarray(positions).reshape(len(positions), 2)


def write_waypoints_csv(truth: GroundTruth, path) -> None:
    """Waypoint sample indices and true positions for later evaluation."""
    positions = truth.positions()
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write("k,x,y\n")
        for index in truth.waypoint_indices:
            handle.write(f"{index},{_fmt(positions[index, 0])},{_fmt(positions[index, 1])}\n")


def read_waypoints_csv(path) -> list[int]:
    indices = []
    with open(path, "r", encoding="ascii", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["k", "x", "y"]:
            raise ValueError(f"{path}: unexpected waypoints header {header}")
        for row in reader:
            indices.append(int(row[0]))
    return indices


def write_series_csv(path, header: list[str], rows) -> None:
    """Generic numeric series writer (ints stay ints, floats get 6 digits)."""
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            cells = [
                str(v) if isinstance(v, (int, np.integer)) else _fmt(float(v)) for v in row
            ]
            handle.write(",".join(cells) + "\n")


def summary_text(trajectory: Trajectory) -> str:
    residuals = [
        s.residual_norm for s in trajectory.steps if math.isfinite(s.residual_norm)
    ]
    lines = [
        f"fixes: {len(trajectory.steps)}",
        f"held_steps: {trajectory.held_steps}",
        f"skipped_sweeps: {trajectory.skipped_sweeps}",
        f"selected_bands: {' '.join(str(b) for b in trajectory.selected_bands)}",
    ]
    if residuals:
        lines.append(f"residual_mean: {np.mean(residuals):.6f}")
        lines.append(f"residual_max: {np.max(residuals):.6f}")
    else:
        lines.append("residual_mean: nan")
        lines.append("residual_max: nan")
    return "\n".join(lines) + "\n"
