"""Fusing multi-cadence series into lagged feature rows on the Kp grid.

A prediction instant is a 3-hour Kp boundary ``t``.  Its feature row is the
concatenation of lagged values, most recent first, for each solar-wind
quantity (5-minute lags), then Dst (hourly lags), then Kp itself (3-hourly
lags); the target is Kp at ``t + horizon``.  Lags for a source with step
``s`` and lookback ``L`` are ``0, s, 2s, ..., L - s`` minutes — offset 0
(the prediction instant itself) is included.  An instant joins the dataset
only if *every* lagged input and the target are present; gaps anywhere in
the window drop the instant, no imputation.

With the default spec this yields 7*108 + 3 + 8 = 767 features named
``fma_m0 ... fma_m535, ..., dst_m0, dst_m60, dst_m120, kp_m0, ..., kp_m1260``
(``_m<minutes>`` is the lag).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .errors import (
    CadenceMismatch,
    EmptyIntersection,
    IndexOutOfRange,
    NonFiniteValue,
    ValueOutOfRange,
)
from .ingest import (
    SOLAR_WIND_FIELDS,
    MeasurementSeries,
    format_timestamp,
    parse_timestamp,
)
from .rng import PortableRng

__all__ = [
    "LagSpec",
    "FusedDataset",
    "FeatureSubset",
    "fuse",
    "downsample_low_kp",
    "select_features",
    "split_by_time",
]

_KP_CADENCE = 180


@dataclass(frozen=True)
class LagSpec:
    """How far back to look into each source and how far ahead to predict."""

    solar_wind_lookback_minutes: int = 540
    solar_wind_step_minutes: int = 5
    dst_lookback_hours: int = 3
    kp_lookback_hours: int = 24
    horizon_hours: int = 3

    def __post_init__(self) -> None:
        if self.solar_wind_step_minutes <= 0 or self.solar_wind_lookback_minutes <= 0:
            raise ValueError("solar-wind step and lookback must be positive")
        if self.solar_wind_lookback_minutes % self.solar_wind_step_minutes:
            raise ValueError("solar-wind lookback must be a multiple of its step")
        if self.dst_lookback_hours <= 0:
            raise ValueError("dst lookback must be positive")
        if self.kp_lookback_hours <= 0 or self.kp_lookback_hours % 3:
            raise ValueError("kp lookback must be a positive multiple of 3 hours")
        if self.horizon_hours <= 0 or self.horizon_hours % 3:
            raise ValueError("horizon must be a positive multiple of 3 hours")

    def solar_wind_lags_minutes(self) -> range:
        return range(0, self.solar_wind_lookback_minutes, self.solar_wind_step_minutes)

    def dst_lags_minutes(self) -> range:
        return range(0, self.dst_lookback_hours * 60, 60)

    def kp_lags_minutes(self) -> range:
        return range(0, self.kp_lookback_hours * 60, _KP_CADENCE)

    @property
    def feature_count(self) -> int:
        return (
            7 * len(self.solar_wind_lags_minutes())
            + len(self.dst_lags_minutes())
            + len(self.kp_lags_minutes())
        )

    def feature_names(self) -> tuple[str, ...]:
        names = [
            f"{q}_m{lag}"
            for q in SOLAR_WIND_FIELDS
            for lag in self.solar_wind_lags_minutes()
        ]
        names += [f"dst_m{lag}" for lag in self.dst_lags_minutes()]
        names += [f"kp_m{lag}" for lag in self.kp_lags_minutes()]
        return tuple(names)


@dataclass(frozen=True)
class FusedDataset:
    """Feature matrix plus aligned targets and prediction instants.

    Every cell is finite (gapped windows never become rows) and targets lie
    in [0, 9].  Arrays are frozen read-only; all transformations return new
    datasets.
    """

    feature_names: tuple[str, ...]
    rows: np.ndarray
    targets: np.ndarray
    row_times: tuple[datetime, ...]

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != len(self.feature_names):
            raise ValueError("rows must be 2-D with one column per feature name")
        if targets.shape != (rows.shape[0],) or len(self.row_times) != rows.shape[0]:
            raise ValueError("targets and row_times must match the row count")
        if not np.isfinite(rows).all() or not np.isfinite(targets).all():
            raise NonFiniteValue("fused dataset must be entirely finite")
        if len(targets) and (targets.min() < 0.0 or targets.max() > 9.0):
            raise ValueOutOfRange(0, "targets must lie in [0, 9]")
        rows.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "row_times", tuple(self.row_times))

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def to_csv(self) -> str:
        """Header plus one line per row; floats via repr (exact round-trip)."""
        header = ",".join([*self.feature_names, "target", "row_time"])
        lines = [header]
        for i in range(self.n_rows):
            cells = [repr(float(v)) for v in self.rows[i]]
            cells.append(repr(float(self.targets[i])))
            cells.append(format_timestamp(self.row_times[i]))
            lines.append(",".join(cells))
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_csv(cls, content: str) -> "FusedDataset":
        lines = [ln.rstrip() for ln in content.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines:
            raise ValueError("dataset CSV needs at least a header line")
        header = lines[0].split(",")
        if len(header) < 3 or header[-2:] != ["target", "row_time"]:
            raise ValueError("dataset CSV header must end with target,row_time")
        names = tuple(header[:-2])
        rows, targets, times = [], [], []
        for ln in lines[1:]:
            cells = ln.split(",")
            if len(cells) != len(header):
                raise ValueError(f"dataset CSV row has {len(cells)} cells, "
                                 f"expected {len(header)}")
            rows.append([float(c) for c in cells[:-2]])
            targets.append(float(cells[-2]))
            times.append(parse_timestamp(cells[-1]))
        return cls(
            names,
            np.asarray(rows, dtype=np.float64).reshape(len(rows), len(names)),
            np.asarray(targets, dtype=np.float64),
            tuple(times),
        )


@dataclass(frozen=True)
class FeatureSubset:
    """Column indices (and their names) picked out of a wider dataset.

    Order is meaningful — ``top_k`` produces subsets in ranking order.
    """

    indices: tuple[int, ...]
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.names):
            raise ValueError("indices and names must pair up")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("subset indices must be unique")


def _minutes_between(later: datetime, earlier: datetime) -> int:
    return (later - earlier) // timedelta(minutes=1)


def _check_source(series: MeasurementSeries, expected_name: str,
                  expected_cadence: int, kp_start: datetime) -> None:
    if series.name != expected_name:
        raise ValueError(f"expected series {expected_name!r}, got {series.name!r}")
    if series.cadence_minutes != expected_cadence:
        raise CadenceMismatch(
            f"{series.name}: cadence {series.cadence_minutes} min, "
            f"expected {expected_cadence}"
        )
    if _minutes_between(kp_start, series.start) % expected_cadence:
        raise CadenceMismatch(
            f"{series.name}: grid anchored at {format_timestamp(series.start)} "
            "never lines up with the 3-hour prediction instants"
        )


def fuse(
    solar: tuple[MeasurementSeries, ...],
    dst: MeasurementSeries,
    kp: MeasurementSeries,
    spec: LagSpec = LagSpec(),
) -> FusedDataset:
    """Build the lagged feature matrix over all fully-covered instants.

    ``solar`` must hold the seven quantities in canonical order at 5-minute
    cadence; ``dst`` hourly; ``kp`` 3-hourly.  Raises
    :class:`EmptyIntersection` if no instant has full coverage and
    :class:`CadenceMismatch` if a source cannot line up with the prediction
    grid.
    """
    if len(solar) != 7:
        raise ValueError(f"expected 7 solar-wind series, got {len(solar)}")
    if spec.solar_wind_step_minutes % 5:
        raise CadenceMismatch(
            "solar-wind lag step must be a multiple of the 5-minute cadence"
        )
    for series, name in zip(solar, SOLAR_WIND_FIELDS):
        _check_source(series, name, 5, kp.start)
    _check_source(dst, "dst", 60, kp.start)
    _check_source(kp, "kp", _KP_CADENCE, kp.start)

    n_instants = len(kp)
    instant_idx = np.arange(n_instants)
    horizon_steps = spec.horizon_hours * 60 // _KP_CADENCE
    target_idx = instant_idx + horizon_steps
    in_range = target_idx < n_instants
    valid = in_range & kp.present[np.minimum(target_idx, n_instants - 1)]

    sources = [(s, spec.solar_wind_lags_minutes()) for s in solar]
    sources.append((dst, spec.dst_lags_minutes()))
    sources.append((kp, spec.kp_lags_minutes()))

    columns = []
    for series, lags in sources:
        base = _minutes_between(kp.start, series.start)
        for lag in lags:
            idx = (base + instant_idx * _KP_CADENCE - lag) // series.cadence_minutes
            ok = (idx >= 0) & (idx < len(series))
            safe = np.clip(idx, 0, len(series) - 1)
            ok &= series.present[safe]
            valid &= ok
            columns.append(series.values[safe])

    keep = np.flatnonzero(valid)
    if keep.size == 0:
        raise EmptyIntersection(
            "no prediction instant has full lag coverage across all sources"
        )
    rows = np.stack(columns, axis=1)[keep]
    targets = kp.values[target_idx[keep]]
    times = tuple(kp.time_at(int(i)) for i in keep)
    return FusedDataset(spec.feature_names(), rows, targets, times)


def downsample_low_kp(
    data: FusedDataset, downsample: int, threshold: float = 4.0, seed: int = 0
) -> FusedDataset:
    """Thin quiet-time rows: keep 1/``downsample`` of rows with target <= threshold.

    Every row with target > threshold survives.  Of the ``c`` low rows,
    ``ceil(c / downsample)`` are chosen without replacement by the seeded
    generator; surviving rows keep their original order.  ``downsample=1``
    is the identity.
    """
    if downsample < 1:
        raise ValueError("downsample factor must be >= 1")
    if downsample == 1:
        return data
    low = np.flatnonzero(data.targets <= threshold)
    keep_count = math.ceil(len(low) / downsample)
    chosen = PortableRng(seed).subset(len(low), keep_count)
    keep = np.ones(data.n_rows, dtype=bool)
    keep[low] = False
    keep[low[chosen]] = True
    idx = np.flatnonzero(keep)
    return FusedDataset(
        data.feature_names,
        data.rows[idx],
        data.targets[idx],
        tuple(data.row_times[i] for i in idx),
    )


def select_features(data: FusedDataset, subset: FeatureSubset) -> FusedDataset:
    """Narrow the dataset to the subset's columns, in subset order."""
    for i, name in zip(subset.indices, subset.names):
        if not 0 <= i < data.n_features:
            raise IndexOutOfRange(
                f"feature index {i} outside dataset width {data.n_features}"
            )
        if data.feature_names[i] != name:
            raise ValueError(
                f"subset expects column {i} to be {name!r}, "
                f"dataset has {data.feature_names[i]!r}"
            )
    idx = np.asarray(subset.indices, dtype=np.intp)
    return FusedDataset(
        subset.names, data.rows[:, idx], data.targets, data.row_times
    )


def split_by_time(
    data: FusedDataset, cutoff: datetime
) -> tuple[FusedDataset, FusedDataset]:
    """Chronological split: rows before ``cutoff`` train, the rest test."""
    mask = np.array([t < cutoff for t in data.row_times], dtype=bool)

    def _take(sel: np.ndarray) -> FusedDataset:
        idx = np.flatnonzero(sel)
        return FusedDataset(
            data.feature_names,
            data.rows[idx],
            data.targets[idx],
            tuple(data.row_times[i] for i in idx),
        )

    return _take(mask), _take(~mask)
