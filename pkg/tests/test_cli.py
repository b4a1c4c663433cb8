import csv
import math

import pytest
from click.testing import CliRunner

from sweepnav.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def read_rows(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))


BENCHMARK_SCENARIO = """\
seed = 42
speed_mps = 10
cadence_s = 1
shadowing_sigma_db = 4
n_pl = 2.8
lead_in_m = 200
waypoints = 0,0; 270,0; 270,490; 10,490; 10,-350
tx.bbox = -150,-500,420,640
tx.freqs_mhz = 700.5,800.5,900.5,1800.5,2100.5,2600.5
tx.power_dbm = 43
"""


class TestSimulate:
    def test_writes_artifacts(self, runner, route_scenario_file, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, ["simulate", str(route_scenario_file), "--out", str(out)])
        assert result.exit_code == 0, result.output
        sweeps = (out / "sweeps.csv").read_text().splitlines()
        assert len(sweeps) == 21 * 6  # one row per band per sweep
        truth = read_rows(out / "truth.csv")
        assert truth[0] == ["k", "timestamp", "x", "y"]
        assert len(truth) == 22
        waypoints = read_rows(out / "waypoints.csv")
        assert [row[0] for row in waypoints[1:]] == ["0", "10", "20"]

    def test_missing_scenario_is_input_error(self, runner, tmp_path):
        result = runner.invoke(main, ["simulate", str(tmp_path / "nope.txt"), "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_invalid_scenario_is_config_error(self, runner, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("waypoints = 0,0; 10,0\ntransmitters = 1,1,43,700.5\n", encoding="ascii")
        result = runner.invoke(main, ["simulate", str(bad), "--out", str(tmp_path / "out")])
        assert result.exit_code == 3
        assert "config error" in result.output

    def test_seed_override_changes_nothing_for_explicit_layout(self, runner, route_scenario_file, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        r1 = runner.invoke(main, ["simulate", str(route_scenario_file), "--out", str(a), "--seed", "5"])
        r2 = runner.invoke(main, ["simulate", str(route_scenario_file), "--out", str(b), "--seed", "5"])
        assert r1.exit_code == 0 and r2.exit_code == 0
        assert (a / "sweeps.csv").read_bytes() == (b / "sweeps.csv").read_bytes()

    def test_benchmark_route_length_in_truth_csv(self, runner, tmp_path):
        scenario = tmp_path / "bench.txt"
        scenario.write_text(BENCHMARK_SCENARIO, encoding="ascii")
        out = tmp_path / "out"
        result = runner.invoke(main, ["simulate", str(scenario), "--out", str(out)])
        assert result.exit_code == 0, result.output
        truth = read_rows(out / "truth.csv")[1:]
        waypoint_ks = [int(row[0]) for row in read_rows(out / "waypoints.csv")[1:]]
        points = [(float(truth[k][2]), float(truth[k][3])) for k in waypoint_ks]
        total = sum(
            math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(points, points[1:])
        )
        assert total == pytest.approx(1860.0, abs=1e-3)


class TestRun:
    @pytest.fixture
    def sweeps_csv(self, runner, route_scenario_file, tmp_path):
        out = tmp_path / "sim"
        result = runner.invoke(main, ["simulate", str(route_scenario_file), "--out", str(out)])
        assert result.exit_code == 0
        return out / "sweeps.csv"

    def test_produces_trajectory_and_summary(self, runner, sweeps_csv, tmp_path):
        out = tmp_path / "run"
        result = runner.invoke(main, ["run", str(sweeps_csv), "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = read_rows(out / "trajectory.csv")
        assert rows[0] == ["k", "timestamp", "x_raw", "y_raw", "x_wma", "y_wma", "x_ekf", "y_ekf", "residual", "flags"]
        assert len(rows) == 22
        assert "fixes: 21" in (out / "summary.txt").read_text()

    def test_byte_identical_reruns(self, runner, sweeps_csv, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        r1 = runner.invoke(main, ["run", str(sweeps_csv), "--out", str(a), "--seed", "7"])
        r2 = runner.invoke(main, ["run", str(sweeps_csv), "--out", str(b), "--seed", "7"])
        assert r1.exit_code == 0 and r2.exit_code == 0
        assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()

    def test_missing_input_is_exit_2(self, runner, tmp_path):
        result = runner.invoke(main, ["run", str(tmp_path / "absent.csv"), "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_bad_config_is_exit_3(self, runner, sweeps_csv, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text("mystery.key = 1\n", encoding="ascii")
        result = runner.invoke(
            main, ["run", str(sweeps_csv), "--config", str(config), "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 3
        assert "config error" in result.output

    def test_malformed_sweeps_is_exit_2(self, runner, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("2023-01-01, 12:00:00.000000, 0, 1000000, 1000000, 1, abc\n", encoding="ascii")
        result = runner.invoke(main, ["run", str(bad), "--out", str(tmp_path / "o")])
        assert result.exit_code == 2
        assert "line 1" in result.output


class TestEval:
    @pytest.fixture
    def artifacts(self, runner, route_scenario_file, tmp_path):
        sim = tmp_path / "sim"
        assert runner.invoke(main, ["simulate", str(route_scenario_file), "--out", str(sim)]).exit_code == 0
        run_dir = tmp_path / "run"
        assert runner.invoke(main, ["run", str(sim / "sweeps.csv"), "--out", str(run_dir)]).exit_code == 0
        return sim, run_dir

    def test_report_and_table(self, runner, artifacts, tmp_path):
        sim, run_dir = artifacts
        out = tmp_path / "eval"
        result = runner.invoke(
            main,
            [
                "eval", str(sim / "truth.csv"), str(run_dir / "trajectory.csv"),
                "--waypoints", str(sim / "waypoints.csv"), "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "wma" in result.output and "/" in result.output
        rows = read_rows(out / "report.csv")
        assert rows[0] == ["estimator", "segment", "est_m", "truth_m", "percent_diff"]
        assert len(rows) == 1 + 3 * 2  # three estimators, two segments

    def test_grid_report(self, runner, artifacts, tmp_path):
        sim, run_dir = artifacts
        out = tmp_path / "grid"
        result = runner.invoke(
            main,
            [
                "eval", str(sim / "truth.csv"), str(run_dir / "trajectory.csv"),
                "--waypoints", str(sim / "waypoints.csv"), "--out", str(out),
                "--sweeps", str(sim / "sweeps.csv"),
                "--npl-list", "2.8,2.9", "--txcount-list", "4,6", "--window-list", "3",
            ],
        )
        assert result.exit_code == 0, result.output
        rows = read_rows(out / "grid_report.csv")
        assert rows[0] == ["n_pl", "window", "tx_count", "estimator", "segment", "est_m", "percent_diff"]
        assert len(rows) == 1 + 2 * 2 * 1 * 2 * 2

    def test_grid_without_sweeps_is_config_error(self, runner, artifacts, tmp_path):
        sim, run_dir = artifacts
        result = runner.invoke(
            main,
            [
                "eval", str(sim / "truth.csv"), str(run_dir / "trajectory.csv"),
                "--waypoints", str(sim / "waypoints.csv"), "--out", str(tmp_path / "g"),
                "--npl-list", "2.8",
            ],
        )
        assert result.exit_code == 3

    def test_misaligned_lengths_exit_4(self, runner, artifacts, tmp_path):
        sim, run_dir = artifacts
        truncated = tmp_path / "short.csv"
        lines = (run_dir / "trajectory.csv").read_text().splitlines()
        truncated.write_text("\n".join(lines[:-1]) + "\n", encoding="ascii")
        result = runner.invoke(
            main,
            [
                "eval", str(sim / "truth.csv"), str(truncated),
                "--waypoints", str(sim / "waypoints.csv"), "--out", str(tmp_path / "e"),
            ],
        )
        assert result.exit_code == 4

    def test_bad_waypoint_index_exit_4(self, runner, artifacts, tmp_path):
        sim, run_dir = artifacts
        bad = tmp_path / "wp.csv"
        bad.write_text("k,x,y\n0,0.0,0.0\n999,1.0,1.0\n", encoding="ascii")
        result = runner.invoke(
            main,
            [
                "eval", str(sim / "truth.csv"), str(run_dir / "trajectory.csv"),
                "--waypoints", str(bad), "--out", str(tmp_path / "e"),
            ],
        )
        assert result.exit_code == 4

    def test_garbled_truth_exit_2(self, runner, artifacts, tmp_path):
        sim, run_dir = artifacts
        bad = tmp_path / "truth.csv"
        bad.write_text("not,a,truth,file\n", encoding="ascii")
        result = runner.invoke(
            main,
            [
                "eval", str(bad), str(run_dir / "trajectory.csv"),
                "--waypoints", str(sim / "waypoints.csv"), "--out", str(tmp_path / "e"),
            ],
        )
        assert result.exit_code == 2

    def test_perfect_trajectory_scores_all_zero(self, runner, artifacts, tmp_path):
        from sweepnav.artifacts import read_truth_csv, write_trajectory_csv
        from sweepnav.pipeline import Trajectory, TrajectoryStep

        sim, _ = artifacts
        timestamps, truth_xy = read_truth_csv(sim / "truth.csv")
        steps = tuple(
            TrajectoryStep(
                index=i, timestamp=float(t),
                x_raw=float(p[0]), y_raw=float(p[1]),
                x_wma=float(p[0]), y_wma=float(p[1]),
                x_ekf=float(p[0]), y_ekf=float(p[1]),
                residual_norm=0.0,
            )
            for i, (t, p) in enumerate(zip(timestamps, truth_xy))
        )
        perfect = tmp_path / "perfect.csv"
        write_trajectory_csv(Trajectory(steps=steps), perfect)

        out = tmp_path / "eval"
        result = runner.invoke(
            main,
            [
                "eval", str(sim / "truth.csv"), str(perfect),
                "--waypoints", str(sim / "waypoints.csv"), "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        rows = read_rows(out / "report.csv")[1:]
        assert all(float(row[4]) == 0.0 for row in rows)


class TestConvergence:
    def test_static_zero_noise_spread_is_zero(self, runner, static_scenario_file, tmp_path):
        out = tmp_path / "conv"
        result = runner.invoke(main, ["convergence", str(static_scenario_file), "--out", str(out)])
        assert result.exit_code == 0, result.output
        time_rows = read_rows(out / "convergence_time.csv")
        assert time_rows[0] == ["k", "timestamp", "spread"]
        assert all(float(r[2]) == 0.0 for r in time_rows[1:])
        spectrum_rows = read_rows(out / "convergence_spectrum.csv")
        assert spectrum_rows[0] == ["cutoff_mhz", "band_count", "spread"]
        assert len(spectrum_rows) == 1 + 3  # subsets of 4, 5, 6 bands
        assert all(float(r[2]) == 0.0 for r in spectrum_rows[1:])

    def test_accepts_recorded_sweeps(self, runner, route_scenario_file, tmp_path):
        sim = tmp_path / "sim"
        assert runner.invoke(main, ["simulate", str(route_scenario_file), "--out", str(sim)]).exit_code == 0
        out = tmp_path / "conv"
        result = runner.invoke(main, ["convergence", str(sim / "sweeps.csv"), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "convergence_time.csv").exists()

    def test_debug_logging_env(self, runner, static_scenario_file, tmp_path):
        result = runner.invoke(
            main,
            ["convergence", str(static_scenario_file), "--out", str(tmp_path / "o")],
            env={"RPS_LOG": "DEBUG"},
        )
        assert result.exit_code == 0
