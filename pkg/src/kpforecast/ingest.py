"""Readers and writers for the three canonical measurement formats.

All three formats share the same shape: UTF-8 text, comma-separated, no
header, ``#``-prefixed comment lines ignored, one record per line, an empty
field meaning "gap".  Timestamps are ISO-8601 UTC at minute resolution with
a trailing ``Z`` (``2021-01-01T00:05Z``).  Trailing whitespace on a line is
tolerated; any other deviation raises a :class:`~kpforecast.errors.DataError`
subtype carrying the offending line number.

Formats:

* solar wind — ``t,fma,bx,by,bz,speed,density,temperature`` at 5-minute
  cadence (field magnitude average and components in nT, speed in km/s,
  density in 1/cm^3, temperature in K)
* Dst — ``t,dst`` hourly (nT, typically negative during storms)
* Kp — ``t,kp`` every 3 hours on 00/03/06/... UTC boundaries, value in [0, 9]

``to_series`` regularises a record sequence onto its cadence grid with gaps
marked explicitly, which is the form the fusion stage consumes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import (
    BadTimestamp,
    CadenceMismatch,
    EmptyDataset,
    MalformedLine,
    NonMonotonicTime,
    ValueOutOfRange,
)

__all__ = [
    "SOLAR_WIND_FIELDS",
    "SolarWindRecord",
    "DstRecord",
    "KpRecord",
    "MeasurementSeries",
    "parse_timestamp",
    "format_timestamp",
    "parse_solar_wind",
    "parse_dst",
    "parse_kp",
    "format_solar_wind",
    "format_dst",
    "format_kp",
    "to_series",
    "solar_wind_series",
]

#: Canonical order of the seven solar-wind quantities everywhere in the package.
SOLAR_WIND_FIELDS = ("fma", "bx", "by", "bz", "speed", "density", "temperature")

_TIMESTAMP_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2})(?::00)?Z$"
)


def parse_timestamp(text: str) -> datetime:
    """Parse a canonical minute-resolution UTC timestamp.

    Accepts ``YYYY-MM-DDTHH:MMZ`` (canonical) and ``YYYY-MM-DDTHH:MM:00Z``;
    anything else — offsets, sub-minute precision, missing ``Z`` — raises
    ``ValueError``.
    """
    m = _TIMESTAMP_RE.match(text)
    if m is None:
        raise ValueError(f"not a minute-resolution UTC timestamp: {text!r}")
    year, month, day, hour, minute = (int(g) for g in m.groups())
    try:
        return datetime(year, month, day, hour, minute, tzinfo=timezone.utc)
    except ValueError as exc:
        raise ValueError(f"invalid calendar instant {text!r}: {exc}") from None


def format_timestamp(t: datetime) -> str:
    """Inverse of :func:`parse_timestamp` (requires an aligned UTC instant)."""
    if t.tzinfo is None or t.utcoffset() != timedelta(0):
        raise ValueError("timestamp must be UTC-aware")
    if t.second or t.microsecond:
        raise ValueError("timestamp must have minute resolution")
    return t.strftime("%Y-%m-%dT%H:%MZ")


@dataclass(frozen=True)
class SolarWindRecord:
    """One 5-minute solar-wind sample; ``None`` marks a gap in a field."""

    t: datetime
    fma: float | None
    bx: float | None
    by: float | None
    bz: float | None
    speed: float | None
    density: float | None
    temperature: float | None


@dataclass(frozen=True)
class DstRecord:
    t: datetime
    dst: float | None


@dataclass(frozen=True)
class KpRecord:
    t: datetime
    kp: float | None  # in [0, 9] when present


@dataclass(frozen=True)
class MeasurementSeries:
    """One quantity regularised onto its cadence grid.

    ``values[i]`` is the sample at ``start + i * cadence_minutes``.  A slot
    is data only where ``present[i]`` is True; the mask is the authoritative
    gap marker (missing slots hold NaN purely as poison, never read as
    data).  Arrays are frozen read-only so a series can be shared across
    threads safely.
    """

    name: str
    cadence_minutes: int
    start: datetime
    values: np.ndarray
    present: np.ndarray

    def __post_init__(self) -> None:
        if self.cadence_minutes not in (5, 60, 180):
            raise ValueError(f"unsupported cadence: {self.cadence_minutes}")
        values = np.asarray(self.values, dtype=np.float64)
        present = np.asarray(self.present, dtype=bool)
        if values.shape != present.shape or values.ndim != 1:
            raise ValueError("values and present must be 1-D and equal length")
        values.setflags(write=False)
        present.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "present", present)

    def __len__(self) -> int:
        return len(self.values)

    def time_at(self, index: int) -> datetime:
        return self.start + timedelta(minutes=self.cadence_minutes * index)

    def value_at(self, t: datetime) -> float | None:
        """Sample at instant ``t``, or ``None`` for a gap / off-series instant."""
        offset = (t - self.start) // timedelta(minutes=1)
        if offset % self.cadence_minutes:
            return None
        index = offset // self.cadence_minutes
        if not 0 <= index < len(self.values) or not self.present[index]:
            return None
        return float(self.values[index])


# --------------------------------------------------------------------------
# parsing


def _parse_float(field: str, line_no: int) -> float | None:
    if field == "":
        return None
    try:
        value = float(field)
    except ValueError:
        raise MalformedLine(line_no, f"unparsable number {field!r}") from None
    if not np.isfinite(value):
        raise MalformedLine(line_no, f"non-finite number {field!r}")
    return value


def _iter_records(content: str, n_fields: int):
    """Yield ``(line_no, timestamp, value_fields)`` for each data line."""
    prev_t: datetime | None = None
    for line_no, raw in enumerate(content.splitlines(), start=1):
        line = raw.rstrip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != n_fields:
            raise MalformedLine(
                line_no, f"expected {n_fields} fields, got {len(fields)}"
            )
        try:
            t = parse_timestamp(fields[0])
        except ValueError as exc:
            raise BadTimestamp(line_no, str(exc)) from None
        if prev_t is not None and t <= prev_t:
            raise NonMonotonicTime(
                line_no, f"{format_timestamp(t)} does not advance past previous record"
            )
        prev_t = t
        yield line_no, t, fields[1:]


def parse_solar_wind(content: str) -> list[SolarWindRecord]:
    """Parse the 8-column solar-wind format; empty file gives an empty list."""
    records = []
    for line_no, t, fields in _iter_records(content, 8):
        values = [_parse_float(f, line_no) for f in fields]
        for name in ("fma", "speed", "density", "temperature"):
            v = values[SOLAR_WIND_FIELDS.index(name)]
            if v is not None and v < 0:
                raise ValueOutOfRange(line_no, f"{name} must be non-negative, got {v}")
        records.append(SolarWindRecord(t, *values))
    return records


def parse_dst(content: str) -> list[DstRecord]:
    """Parse the hourly Dst format (timestamps must sit on hour boundaries)."""
    records = []
    for line_no, t, fields in _iter_records(content, 2):
        if t.minute:
            raise BadTimestamp(line_no, "dst timestamps must be hour-aligned")
        records.append(DstRecord(t, _parse_float(fields[0], line_no)))
    return records


def parse_kp(content: str) -> list[KpRecord]:
    """Parse the 3-hourly Kp format; values must lie in [0, 9]."""
    records = []
    for line_no, t, fields in _iter_records(content, 2):
        if t.minute or t.hour % 3:
            raise BadTimestamp(line_no, "kp timestamps must be 3-hour-aligned")
        kp = _parse_float(fields[0], line_no)
        if kp is not None and not 0.0 <= kp <= 9.0:
            raise ValueOutOfRange(line_no, f"kp must lie in [0, 9], got {kp}")
        records.append(KpRecord(t, kp))
    return records


# --------------------------------------------------------------------------
# serialisation (inverse of the parsers; floats via repr for exact round-trip)


def _format_value(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def format_solar_wind(records: list[SolarWindRecord]) -> str:
    lines = [
        ",".join(
            [format_timestamp(r.t)]
            + [_format_value(getattr(r, f)) for f in SOLAR_WIND_FIELDS]
        )
        for r in records
    ]
    return "".join(line + "\n" for line in lines)


def format_dst(records: list[DstRecord]) -> str:
    return "".join(
        f"{format_timestamp(r.t)},{_format_value(r.dst)}\n" for r in records
    )


def format_kp(records: list[KpRecord]) -> str:
    return "".join(
        f"{format_timestamp(r.t)},{_format_value(r.kp)}\n" for r in records
    )


# --------------------------------------------------------------------------
# grid regularisation


def to_series(records, field: str, cadence_minutes: int) -> MeasurementSeries:
    """Place time-ordered records onto the cadence grid anchored at the first.

    Grid slots with no record, and records whose ``field`` is a gap, come out
    with ``present == False``.  A record whose timestamp is off the grid
    raises :class:`CadenceMismatch`; an empty record list raises
    :class:`EmptyDataset`.
    """
    if not records:
        raise EmptyDataset(f"no records to build series {field!r}")
    start = records[0].t
    step = timedelta(minutes=cadence_minutes)
    span_steps, rem = divmod(records[-1].t - start, step)
    if rem:
        raise CadenceMismatch(
            f"{field}: record at {format_timestamp(records[-1].t)} is off the "
            f"{cadence_minutes}-minute grid anchored at {format_timestamp(start)}"
        )
    length = span_steps + 1
    values = np.full(length, np.nan)
    present = np.zeros(length, dtype=bool)
    for r in records:
        index, rem = divmod(r.t - start, step)
        if rem:
            raise CadenceMismatch(
                f"{field}: record at {format_timestamp(r.t)} is off the "
                f"{cadence_minutes}-minute grid anchored at {format_timestamp(start)}"
            )
        v = getattr(r, field)
        if v is not None:
            values[index] = v
            present[index] = True
    return MeasurementSeries(field, cadence_minutes, start, values, present)


def solar_wind_series(records: list[SolarWindRecord]) -> tuple[MeasurementSeries, ...]:
    """All seven solar-wind series in canonical order."""
    return tuple(to_series(records, f, 5) for f in SOLAR_WIND_FIELDS)
