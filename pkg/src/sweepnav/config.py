"""Flat key-value configuration and scenario files.

Both file kinds use ``key = value`` lines, ``#`` comments, and blank lines.
Pipeline config keys are documented in the README; scenario files describe
a simulated world (waypoints, transmitters or an auto-placement recipe,
propagation parameters).
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .ekf import NoiseConfig
from .errors import ConfigError
from .pathloss import PathLossParams
from .pipeline import PipelineConfig
from .simulator import Scenario, Transmitter, auto_transmitters
from .smoothing import SmootherConfig
from .sweeps import BandPlan

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def parse_kv_file(path) -> dict[str, str]:
    """Read ``key = value`` pairs; duplicate keys are an error."""
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{line_no}: empty key")
        if key in values:
            raise ConfigError(f"{path}:{line_no}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def _get_float(values: dict, key: str, default: float) -> float:
    if key not in values:
        return default
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {values[key]!r}") from None


def _get_int(values: dict, key: str, default: int) -> int:
    if key not in values:
        return default
    try:
        return int(values[key])
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {values[key]!r}") from None


def _get_bool(values: dict, key: str, default: bool) -> bool:
    if key not in values:
        return default
    text = values[key].lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ConfigError(f"{key}: expected a boolean, got {values[key]!r}")


def _get_floats(values: dict, key: str) -> list[float] | None:
    if key not in values or not values[key]:
        return None
    try:
        return [float(part) for part in values[key].split(",")]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers") from None


_CONFIG_KEYS = {
    "band.low_mhz", "band.high_mhz", "band.width_mhz", "band.count",
    "sweep.window",
    "n_pl", "d0_m", "tx_power_dbm", "shadowing_sigma_db",
    "smoother.kind", "smoother.window", "smoother.weights",
    "ekf.enabled", "ekf.q_diag", "ekf.r", "ekf.p0",
    "anchor.seed", "anchor.bbox",
    "lsq.condition_cap",
}


def config_from_values(values: dict[str, str]) -> PipelineConfig:
    unknown = set(values) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    plan = BandPlan.uniform(
        low_mhz=_get_float(values, "band.low_mhz", 0.0),
        high_mhz=_get_float(values, "band.high_mhz", 3500.0),
        width_mhz=_get_float(values, "band.width_mhz", 1.0),
        selection_count=_get_int(values, "band.count", 6),
    )
    pathloss = PathLossParams(
        exponent=_get_float(values, "n_pl", 2.8),
        ref_distance_m=_get_float(values, "d0_m", 1.0),
        tx_power_dbm=_get_float(values, "tx_power_dbm", 43.0),
        shadowing_sigma_db=_get_float(values, "shadowing_sigma_db", 4.0),
    )
    weights = _get_floats(values, "smoother.weights")
    smoother = SmootherConfig(
        kind=values.get("smoother.kind", "wma"),
        window=_get_int(values, "smoother.window", 3),
        weights=tuple(weights) if weights else None,
    )
    q_diag = _get_floats(values, "ekf.q_diag") or [0.1, 0.1]
    if len(q_diag) != 2:
        raise ConfigError("ekf.q_diag: expected two numbers")
    noise = NoiseConfig(q=np.diag(q_diag), r=_get_float(values, "ekf.r", 0.01))

    window = _get_int(values, "sweep.window", 10)
    bbox_values = _get_floats(values, "anchor.bbox") or [-500.0, -500.0, 500.0, 500.0]
    if len(bbox_values) != 4:
        raise ConfigError("anchor.bbox: expected xmin,ymin,xmax,ymax")

    try:
        return PipelineConfig(
            plan=plan,
            pathloss=pathloss,
            smoother=smoother,
            noise=noise,
            sweep_window=None if window == 0 else window,
            anchor_seed=_get_int(values, "anchor.seed", 1),
            anchor_bbox=tuple(bbox_values),
            ekf_enabled=_get_bool(values, "ekf.enabled", True),
            p0_var=_get_float(values, "ekf.p0", 10.0),
            condition_cap=_get_float(values, "lsq.condition_cap", 1e8),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> PipelineConfig:
    return config_from_values(parse_kv_file(path))


def default_config() -> PipelineConfig:
    return config_from_values({})


_SCENARIO_KEYS = {
    "seed", "speed_mps", "cadence_s", "hold_s", "lead_in_m", "start_time",
    "n_pl", "d0_m", "shadowing_sigma_db",
    "waypoints", "transmitters",
    "tx.bbox", "tx.freqs_mhz", "tx.power_dbm",
}


def scenario_from_values(values: dict[str, str]) -> Scenario:
    unknown = set(values) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    if "waypoints" not in values:
        raise ConfigError("scenario needs a 'waypoints' entry")

    waypoints = []
    for chunk in values["waypoints"].split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(f"waypoints: bad point {chunk.strip()!r}")
        try:
            waypoints.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ConfigError(f"waypoints: bad point {chunk.strip()!r}") from None

    pathloss = PathLossParams(
        exponent=_get_float(values, "n_pl", 2.8),
        ref_distance_m=_get_float(values, "d0_m", 1.0),
        shadowing_sigma_db=_get_float(values, "shadowing_sigma_db", 4.0),
    )
    seed = _get_int(values, "seed", 0)
    tx_bbox = None

    if "transmitters" in values:
        transmitters = []
        for chunk in values["transmitters"].split(";"):
            parts = [p.strip() for p in chunk.split(",")]
            if len(parts) != 4:
                raise ConfigError(f"transmitters: bad entry {chunk.strip()!r}")
            try:
                transmitters.append(
                    Transmitter(float(parts[0]), float(parts[1]), float(parts[2]), float(parts[3]))
                )
            except ValueError:
                raise ConfigError(f"transmitters: bad entry {chunk.strip()!r}") from None
        transmitters = tuple(transmitters)
    else:
        freqs = _get_floats(values, "tx.freqs_mhz")
        if not freqs:
            raise ConfigError("scenario needs 'transmitters' or 'tx.freqs_mhz'")
        bbox_values = _get_floats(values, "tx.bbox")
        if not bbox_values or len(bbox_values) != 4:
            raise ConfigError("tx.bbox: expected xmin,ymin,xmax,ymax")
        tx_bbox = tuple(bbox_values)
        transmitters = auto_transmitters(
            freqs, seed, tx_bbox, _get_float(values, "tx.power_dbm", 43.0)
        )

    try:
        return Scenario(
            transmitters=transmitters,
            waypoints=tuple(waypoints),
            speed_mps=_get_float(values, "speed_mps", 10.0),
            cadence_s=_get_float(values, "cadence_s", 1.0),
            pathloss=pathloss,
            seed=seed,
            hold_s=_get_float(values, "hold_s", 0.0),
            lead_in_m=_get_float(values, "lead_in_m", 0.0),
            start_time=_get_float(values, "start_time", 0.0),
            tx_bbox=tx_bbox,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    return scenario_from_values(parse_kv_file(path))


def scenario_with_seed(scenario: Scenario, seed: int) -> Scenario:
    """Re-seed a scenario, re-placing auto-laid transmitters if any."""
    if scenario.tx_bbox is not None:
        freqs = [t.freq_mhz for t in scenario.transmitters]
        power = scenario.transmitters[0].power_dbm
        transmitters = auto_transmitters(freqs, seed, scenario.tx_bbox, power)
        return replace(scenario, seed=seed, transmitters=transmitters)
    return replace(scenario, seed=seed)
