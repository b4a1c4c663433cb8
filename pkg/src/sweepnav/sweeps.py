"""Spectrum sweep ingestion.

Reads sweep CSV files in the hackrf_sweep layout (one row per frequency
slice, rows sharing a timestamp form one sweep), bins the slices onto a
band plan, and maintains a rolling window of sweeps from which per-band
mean power and the transmitter band set are derived.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import ConfigError, InsufficientAnchorsError, MissingBandError, SweepParseError

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

# Row layout: date, time, hz_low, hz_high, hz_bin_width, num_samples, dB, dB, ...
_MIN_FIELDS = 7


class BandSample(NamedTuple):
    band_id: int
    center_mhz: float
    rss_dbm: float


@dataclass(frozen=True)
class SweepRecord:
    """One full pass over the monitored spectrum.

    ``timestamp`` is UTC epoch seconds at microsecond granularity; ``bands``
    holds per-band received power sorted by band id.
    """

    timestamp: float
    bands: tuple[BandSample, ...]
    _rss_by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bands", tuple(self.bands))
        if not math.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")
        prev_id = None
        for band in self.bands:
            if prev_id is not None and band.band_id <= prev_id:
                raise ValueError("band ids must be strictly increasing")
            prev_id = band.band_id
            if band.center_mhz <= 0:
                raise ValueError(f"band {band.band_id}: center frequency must be positive")
            if not math.isfinite(band.rss_dbm):
                raise ValueError(f"band {band.band_id}: rss must be finite")
        object.__setattr__(self, "_rss_by_id", {b.band_id: b.rss_dbm for b in self.bands})

    def rss(self, band_id: int) -> float | None:
        return self._rss_by_id.get(band_id)

    @property
    def band_ids(self) -> tuple[int, ...]:
        return tuple(b.band_id for b in self.bands)


@dataclass(frozen=True)
class BandStats:
    """Windowed statistics of one band's received power."""

    band_id: int
    mean_dbm: float
    sample_count: int
    min_dbm: float
    max_dbm: float

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be at least 1")
        if not self.min_dbm <= self.mean_dbm <= self.max_dbm:
            raise ValueError("mean must lie between min and max")


@dataclass(frozen=True)
class BandPlan:
    """Partition of the monitored spectrum into non-overlapping bands.

    ``selection_count`` is the number of transmitter bands picked for
    multilateration; at least four are required.
    """

    bands: tuple[tuple[int, float, float], ...]
    selection_count: int = 6
    _lows: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bands", tuple(tuple(b) for b in self.bands))
        if self.selection_count < 4:
            raise ConfigError("selection_count must be at least 4")
        if len(self.bands) < self.selection_count:
            raise ConfigError(
                f"plan has {len(self.bands)} bands, fewer than selection_count {self.selection_count}"
            )
        ordered = sorted(self.bands, key=lambda b: b[1])
        prev_high = None
        seen = set()
        for band_id, low, high in ordered:
            if band_id in seen:
                raise ConfigError(f"duplicate band id {band_id}")
            seen.add(band_id)
            if high <= low:
                raise ConfigError(f"band {band_id}: empty frequency range")
            if prev_high is not None and low < prev_high:
                raise ConfigError(f"band {band_id}: overlapping frequency range")
            prev_high = high
        object.__setattr__(self, "bands", tuple(ordered))
        object.__setattr__(self, "_lows", tuple(b[1] for b in ordered))
        object.__setattr__(self, "_by_id", {b[0]: b for b in ordered})

    @classmethod
    def uniform(
        cls,
        low_mhz: float = 0.0,
        high_mhz: float = 3500.0,
        width_mhz: float = 1.0,
        selection_count: int = 6,
    ) -> "BandPlan":
        if width_mhz <= 0 or high_mhz <= low_mhz:
            raise ConfigError("invalid uniform plan bounds")
        count = int(round((high_mhz - low_mhz) / width_mhz))
        bands = tuple(
            (i, low_mhz + i * width_mhz, low_mhz + (i + 1) * width_mhz) for i in range(count)
        )
        return cls(bands=bands, selection_count=selection_count)

    def band_for(self, freq_mhz: float) -> tuple[int, float, float] | None:
        """Band containing ``freq_mhz``, or None if outside the plan."""
        idx = bisect_right(self._lows, freq_mhz) - 1
        if idx < 0:
            return None
        band = self.bands[idx]
        if band[1] <= freq_mhz < band[2]:
            return band
        return None

    def center_mhz(self, band_id: int) -> float:
        band = self._by_id.get(band_id)
        if band is None:
            raise KeyError(f"unknown band id {band_id}")
        return (band[1] + band[2]) / 2.0

    def edges_mhz(self, band_id: int) -> tuple[float, float]:
        band = self._by_id.get(band_id)
        if band is None:
            raise KeyError(f"unknown band id {band_id}")
        return band[1], band[2]


def parse_timestamp(date_text: str, time_text: str) -> float:
    """Epoch seconds (UTC) from the two leading CSV fields."""
    text = f"{date_text} {time_text}"
    for fmt in ("%Y-%m-%d %H:%M:%S.%f", "%Y-%m-%d %H:%M:%S"):
        try:
            stamp = datetime.strptime(text, fmt)
            break
        except ValueError:
            continue
    else:
        raise ValueError(f"unrecognised timestamp {text!r}")
    return (stamp.replace(tzinfo=timezone.utc) - _EPOCH).total_seconds()


def format_timestamp(timestamp: float) -> tuple[str, str]:
    """Inverse of :func:`parse_timestamp` at microsecond granularity."""
    micros = round(timestamp * 1e6)
    stamp = _EPOCH + timedelta(microseconds=micros)
    return stamp.strftime("%Y-%m-%d"), stamp.strftime("%H:%M:%S.%f")


def parse_sweep_lines(lines: Iterable[str], plan: BandPlan) -> Iterator[SweepRecord]:
    """Yield one SweepRecord per group of rows sharing a timestamp.

    Raises SweepParseError (with the offending line number) on malformed
    rows or a decreasing timestamp. An empty input yields nothing.
    """
    pending_key: tuple[str, str] | None = None
    pending_ts = 0.0
    pending_bins: dict[int, list[float]] = {}
    last_emitted_ts: float | None = None

    def finish() -> SweepRecord:
        bands = tuple(
            BandSample(band_id, plan.center_mhz(band_id), sum(values) / len(values))
            for band_id, values in sorted(pending_bins.items())
        )
        return SweepRecord(timestamp=pending_ts, bands=bands)

    for line_no, raw_line in enumerate(lines, start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if parts and parts[-1] == "":
            parts.pop()
        if len(parts) < _MIN_FIELDS:
            raise SweepParseError(line_no, f"expected at least {_MIN_FIELDS} fields, got {len(parts)}")
        try:
            hz_low = float(parts[2])
            hz_high = float(parts[3])
            hz_width = float(parts[4])
            float(parts[5])  # num_samples, unused
            rss_values = [float(p) for p in parts[6:]]
        except ValueError:
            raise SweepParseError(line_no, f"bad numeric field in {line!r}") from None
        if hz_width <= 0 or hz_high <= hz_low:
            raise SweepParseError(line_no, "invalid frequency slice bounds")
        if any(not math.isfinite(v) for v in rss_values):
            raise SweepParseError(line_no, "non-finite dB value")
        try:
            timestamp = parse_timestamp(parts[0], parts[1])
        except ValueError as exc:
            raise SweepParseError(line_no, str(exc)) from None

        key = (parts[0], parts[1])
        if pending_key is not None and key != pending_key:
            record = finish()
            if last_emitted_ts is not None and record.timestamp < last_emitted_ts:
                raise SweepParseError(line_no, "timestamp decreased across sweeps")
            last_emitted_ts = record.timestamp
            if timestamp < last_emitted_ts:
                raise SweepParseError(line_no, "timestamp decreased across sweeps")
            yield record
            pending_bins = {}
        pending_key = key
        pending_ts = timestamp

        for i, rss in enumerate(rss_values):
            center_mhz = (hz_low + hz_width * i + hz_width / 2.0) / 1e6
            band = plan.band_for(center_mhz)
            if band is None:
                continue
            pending_bins.setdefault(band[0], []).append(rss)

    if pending_key is not None:
        record = finish()
        if last_emitted_ts is not None and record.timestamp < last_emitted_ts:
            raise SweepParseError(0, "timestamp decreased across sweeps")
        yield record


def parse_sweep_file(path, plan: BandPlan) -> Iterator[SweepRecord]:
    """Stream SweepRecords from a sweep CSV file."""
    with open(path, "r", encoding="ascii") as handle:
        yield from parse_sweep_lines(handle, plan)


def format_sweep_lines(records: Iterable[SweepRecord], plan: BandPlan) -> Iterator[str]:
    """Serialize records back to sweep CSV rows (one row per band).

    Float dB values use shortest round-trip formatting so that
    parse(format(records)) reproduces the records exactly.
    """
    for record in records:
        date_text, time_text = format_timestamp(record.timestamp)
        for band in record.bands:
            low_mhz, high_mhz = plan.edges_mhz(band.band_id)
            yield (
                f"{date_text}, {time_text}, {_hz(low_mhz)}, {_hz(high_mhz)}, "
                f"{_hz(high_mhz - low_mhz)}, 1, {band.rss_dbm!r}"
            )


def write_sweep_csv(records: Iterable[SweepRecord], path, plan: BandPlan) -> int:
    """Write records as sweep CSV; returns the number of rows written."""
    rows = 0
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        for line in format_sweep_lines(records, plan):
            handle.write(line + "\n")
            rows += 1
    return rows


def _hz(mhz: float) -> str:
    hz = mhz * 1e6
    if hz == int(hz):
        return str(int(hz))
    return repr(hz)


def band_mean(window: Sequence[SweepRecord], band_id: int) -> BandStats:
    """Arithmetic mean (dB domain) of one band's power over a sweep window."""
    if not window:
        raise ValueError("window must be non-empty")
    values = [rss for record in window if (rss := record.rss(band_id)) is not None]
    if not values:
        raise MissingBandError(f"band {band_id} absent from all {len(window)} sweeps in window")
    low, high = min(values), max(values)
    # summation rounding can spill the mean an ulp outside the sample range
    mean = min(max(sum(values) / len(values), low), high)
    return BandStats(
        band_id=band_id,
        mean_dbm=mean,
        sample_count=len(values),
        min_dbm=low,
        max_dbm=high,
    )


def select_transmit_bands(stats: Iterable[BandStats], count: int) -> list[int]:
    """Pick the ``count`` strongest bands by mean power.

    Ties break toward the lower band id; output order is strongest first
    and is a deterministic function of the input.
    """
    usable = [s for s in stats if s.sample_count >= 1]
    if len(usable) < count:
        raise InsufficientAnchorsError(
            f"need {count} usable bands, have {len(usable)}"
        )
    ranked = sorted(usable, key=lambda s: (-s.mean_dbm, s.band_id))
    return [s.band_id for s in ranked[:count]]


class SweepWindow:
    """Rolling window over the most recent sweeps.

    ``length`` of None keeps every sweep (growing window).
    """

    def __init__(self, length: int | None = 10):
        if length is not None and length < 1:
            raise ValueError("window length must be positive or None")
        self._records: deque[SweepRecord] = deque(maxlen=length)

    def push(self, record: SweepRecord) -> None:
        self._records.append(record)

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> tuple[SweepRecord, ...]:
        return tuple(self._records)

    def stats(self, band_id: int) -> BandStats:
        return band_mean(self._records, band_id)

    def persistent_band_ids(self) -> list[int]:
        """Bands present in every sweep of the window."""
        if not self._records:
            return []
        common = set(self._records[0].band_ids)
        for record in list(self._records)[1:]:
            common &= set(record.band_ids)
        return sorted(common)
