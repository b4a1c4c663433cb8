"""Log-distance path-loss ranging.

Received power is mapped to a transmitter distance through the standard
log-distance model with a free-space reference at one meter. The forward
direction (distance to expected RSS) lives here too so the simulator and
the inverter share one set of constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

_EXPONENT_RANGE = (1.5, 6.0)


@dataclass(frozen=True)
class PathLossParams:
    """Propagation model parameters.

    ``tx_power_dbm`` is the assumed nominal transmit power; opportunistic
    transmitters never advertise theirs, so a wrong value scales every
    range by a common factor that the relative frame absorbs.
    ``shadowing_sigma_db`` is only used by the forward model.
    """

    exponent: float = 2.8
    ref_distance_m: float = 1.0
    tx_power_dbm: float = 43.0
    shadowing_sigma_db: float = 4.0

    def __post_init__(self):
        lo, hi = _EXPONENT_RANGE
        if not lo <= self.exponent <= hi:
            raise ConfigError(f"path-loss exponent {self.exponent} outside [{lo}, {hi}]")
        if self.ref_distance_m <= 0:
            raise ConfigError("reference distance must be positive")
        if self.shadowing_sigma_db < 0:
            raise ConfigError("shadowing sigma must be non-negative")


def free_space_pl0(fc_mhz: float, ref_distance_m: float = 1.0) -> float:
    """Free-space loss at the reference distance, in dB.

    20*log10(d0) + 20*log10(fc_mhz) - 27.55; the first term vanishes for
    the default one-meter reference.
    """
    if fc_mhz <= 0:
        raise ValueError("center frequency must be positive")
    if ref_distance_m <= 0:
        raise ValueError("reference distance must be positive")
    return 20.0 * math.log10(ref_distance_m) + 20.0 * math.log10(fc_mhz) - 27.55


def path_loss(prx_dbm: float, params: PathLossParams) -> float:
    """Total path loss as transmit power minus received power."""
    if not math.isfinite(prx_dbm):
        raise ValueError("received power must be finite")
    return params.tx_power_dbm - prx_dbm


def invert_distance(pl_db: float, pl0_db: float, params: PathLossParams) -> float:
    """Distance whose modeled loss equals ``pl_db``.

    d = d0 * 10^((PL - PL0) / (10 * exponent)), strictly increasing in the
    loss so that weaker signals always map to larger distances.
    """
    return params.ref_distance_m * 10.0 ** ((pl_db - pl0_db) / (10.0 * params.exponent))


def rss_to_distance(rss_dbm: float, fc_mhz: float, params: PathLossParams) -> float:
    """Estimated transmitter distance for a mean received power."""
    pl0 = free_space_pl0(fc_mhz, params.ref_distance_m)
    return invert_distance(path_loss(rss_dbm, params), pl0, params)


def rss_at_distance(
    distance_m: float,
    fc_mhz: float,
    params: PathLossParams,
    *,
    tx_power_dbm: float | None = None,
    shadow_db: float = 0.0,
) -> float:
    """Forward model: received power at a given distance.

    ``tx_power_dbm`` overrides the nominal power (the simulator passes each
    transmitter's true power); ``shadow_db`` is an additive shadowing draw.
    """
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    power = params.tx_power_dbm if tx_power_dbm is None else tx_power_dbm
    pl0 = free_space_pl0(fc_mhz, params.ref_distance_m)
    loss = pl0 + 10.0 * params.exponent * math.log10(distance_m / params.ref_distance_m)
    return power - loss + shadow_db
