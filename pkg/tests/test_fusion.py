"""Lagged fusion arithmetic, downsampling, selection, splitting, CSV I/O."""

from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from kpforecast import ingest
from kpforecast.errors import CadenceMismatch, EmptyIntersection, IndexOutOfRange
from kpforecast.fusion import (
    FeatureSubset,
    FusedDataset,
    LagSpec,
    downsample_low_kp,
    fuse,
    select_features,
    split_by_time,
)
from kpforecast.rng import PortableRng

from conftest import EPOCH, make_dataset

UTC = timezone.utc
TOY_SPEC = LagSpec(
    solar_wind_lookback_minutes=10,
    solar_wind_step_minutes=5,
    dst_lookback_hours=1,
    kp_lookback_hours=3,
    horizon_hours=3,
)


def _series(name, cadence, start, values):
    values = np.asarray(values, dtype=np.float64)
    return ingest.MeasurementSeries(
        name, cadence, start, values, np.ones(len(values), dtype=bool)
    )


def _toy_sources(n_kp=5, start=EPOCH):
    """Sources with value == grid index (offset per quantity) for hand checks."""
    n5 = (n_kp - 1) * 36 + 1
    solar = tuple(
        _series(name, 5, start, 1000.0 * q + np.arange(n5))
        for q, name in enumerate(ingest.SOLAR_WIND_FIELDS)
    )
    dst = _series("dst", 60, start, 10.0 + np.arange((n_kp - 1) * 3 + 1))
    kp = _series("kp", 180, start, 1.0 + np.arange(n_kp))
    return solar, dst, kp


# -- feature naming and counts ----------------------------------------------


def test_default_spec_yields_767_features():
    spec = LagSpec()
    assert spec.feature_count == 7 * 108 + 3 + 8 == 767
    names = spec.feature_names()
    assert len(names) == 767
    assert names[0] == "fma_m0"
    assert names[107] == "fma_m535"
    assert names[108] == "bx_m0"
    assert names[756] == "dst_m0"
    assert names[758] == "dst_m120"
    assert names[759] == "kp_m0"
    assert names[766] == "kp_m1260"
    assert len(set(names)) == 767


def test_toy_spec_yields_16_features():
    assert TOY_SPEC.feature_count == 16
    names = TOY_SPEC.feature_names()
    assert names[:4] == ("fma_m0", "fma_m5", "bx_m0", "bx_m5")
    assert names[-2:] == ("dst_m0", "kp_m0")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(solar_wind_lookback_minutes=0),
        dict(solar_wind_lookback_minutes=7, solar_wind_step_minutes=5),
        dict(dst_lookback_hours=0),
        dict(kp_lookback_hours=4),
        dict(horizon_hours=0),
        dict(horizon_hours=2),
    ],
)
def test_lag_spec_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        LagSpec(**kwargs)


# -- fuse worked example -------------------------------------------------------


def test_fuse_toy_worked_example():
    solar, dst, kp = _toy_sources()
    data = fuse(solar, dst, kp, TOY_SPEC)
    # t=00:00 lacks the 5-minute solar lag; the last instant lacks a target.
    assert data.n_rows == 3
    assert data.n_features == 16
    assert data.row_times == tuple(EPOCH + timedelta(hours=h) for h in (3, 6, 9))
    row = data.rows[0]
    names = data.feature_names
    # at t=03:00 the solar index is 36: value = 1000*q + 36, lag 5 -> 35
    assert row[names.index("fma_m0")] == 36.0
    assert row[names.index("fma_m5")] == 35.0
    assert row[names.index("speed_m0")] == 4036.0
    assert row[names.index("temperature_m5")] == 6035.0
    assert row[names.index("dst_m0")] == 13.0  # hourly index 3
    assert row[names.index("kp_m0")] == 2.0
    assert data.targets.tolist() == [3.0, 4.0, 5.0]  # kp at t + 3h


def test_fuse_multi_lag_kp_and_dst_history():
    spec = LagSpec(
        solar_wind_lookback_minutes=5,
        solar_wind_step_minutes=5,
        dst_lookback_hours=3,
        kp_lookback_hours=6,
        horizon_hours=3,
    )
    solar, dst, kp = _toy_sources(n_kp=6)
    data = fuse(solar, dst, kp, spec)
    names = data.feature_names
    # first instant needs kp lag 180: t=03:00 works, dst lags 0,60,120 exist
    assert data.row_times[0] == EPOCH + timedelta(hours=3)
    row = data.rows[0]
    assert row[names.index("kp_m0")] == 2.0
    assert row[names.index("kp_m180")] == 1.0
    assert row[names.index("dst_m0")] == 13.0
    assert row[names.index("dst_m60")] == 12.0
    assert row[names.index("dst_m120")] == 11.0


def test_fuse_gap_in_window_drops_exactly_that_instant():
    solar, dst, kp = _toy_sources()
    # knock out the solar sample at 02:55 (index 35): only t=03:00 needs it
    speed = solar[4]
    present = speed.present.copy()
    present[35] = False
    solar = (
        *solar[:4],
        ingest.MeasurementSeries("speed", 5, speed.start, speed.values, present),
        *solar[5:],
    )
    data = fuse(solar, dst, kp, TOY_SPEC)
    assert data.row_times == tuple(EPOCH + timedelta(hours=h) for h in (6, 9))


def test_fuse_missing_target_drops_instant():
    solar, dst, kp = _toy_sources()
    present = kp.present.copy()
    present[2] = False  # kp at 06:00 gone: kills t=03:00 (target) and t=06:00 (lag 0)
    kp = ingest.MeasurementSeries("kp", 180, kp.start, kp.values, present)
    data = fuse(solar, dst, kp, TOY_SPEC)
    assert data.row_times == (EPOCH + timedelta(hours=9),)


def test_fuse_no_coverage_raises_empty_intersection():
    solar, dst, kp = _toy_sources(n_kp=2)  # no instant can reach a target
    with pytest.raises(EmptyIntersection):
        fuse(solar, dst, kp, TOY_SPEC)


def test_fuse_misaligned_solar_grid_raises():
    solar, dst, kp = _toy_sources()
    shifted = ingest.MeasurementSeries(
        "fma", 5, EPOCH + timedelta(minutes=2), solar[0].values, solar[0].present
    )
    with pytest.raises(CadenceMismatch):
        fuse((shifted, *solar[1:]), dst, kp, TOY_SPEC)


def test_fuse_wrong_cadence_raises():
    solar, dst, kp = _toy_sources()
    bad_dst = ingest.MeasurementSeries("dst", 180, dst.start, kp.values, kp.present)
    with pytest.raises(CadenceMismatch):
        fuse(solar, bad_dst, kp, TOY_SPEC)


def test_fuse_sources_offset_from_each_other_still_align():
    # solar/dst series that start 3 h before the kp series
    solar, dst, kp = _toy_sources()
    late_kp = ingest.MeasurementSeries(
        "kp", 180, EPOCH + timedelta(hours=3), kp.values[:-1], kp.present[:-1]
    )
    data = fuse(solar, dst, late_kp, TOY_SPEC)
    names = data.feature_names
    # first prediction instant on the new grid with full coverage: 03:00
    assert data.row_times[0] == EPOCH + timedelta(hours=3)
    assert data.rows[0][names.index("fma_m0")] == 36.0
    assert data.rows[0][names.index("kp_m0")] == 1.0


def test_row_times_strictly_increasing_and_rows_finite():
    solar, dst, kp = _toy_sources(n_kp=9)
    data = fuse(solar, dst, kp, TOY_SPEC)
    assert all(a < b for a, b in zip(data.row_times, data.row_times[1:]))
    assert np.isfinite(data.rows).all()


# -- downsampling ---------------------------------------------------------------


def _graded_dataset(n=40, seed=0):
    rng = PortableRng(seed)
    targets = np.array([9.0 * rng.random() for _ in range(n)])
    return make_dataset(np.arange(n, dtype=float), targets)


def test_downsample_keeps_every_high_row_and_thins_low():
    data = _graded_dataset()
    out = downsample_low_kp(data, 2, threshold=4.0, seed=5)
    high_before = {t for t, y in zip(data.row_times, data.targets) if y > 4.0}
    high_after = {t for t, y in zip(out.row_times, out.targets) if y > 4.0}
    assert high_before == high_after
    low_before = int((data.targets <= 4.0).sum())
    low_after = int((out.targets <= 4.0).sum())
    assert low_after == math.ceil(low_before / 2)


def test_downsample_preserves_row_order_and_content():
    data = _graded_dataset()
    out = downsample_low_kp(data, 3, seed=9)
    kept = [data.row_times.index(t) for t in out.row_times]
    assert kept == sorted(kept)
    for j, i in enumerate(kept):
        assert np.array_equal(out.rows[j], data.rows[i])
        assert out.targets[j] == data.targets[i]


def test_downsample_identity_when_factor_one():
    data = _graded_dataset()
    out = downsample_low_kp(data, 1, seed=3)
    assert out is data


def test_downsample_deterministic_per_seed():
    data = _graded_dataset()
    a = downsample_low_kp(data, 2, seed=7)
    b = downsample_low_kp(data, 2, seed=7)
    c = downsample_low_kp(data, 2, seed=8)
    assert a.row_times == b.row_times
    assert a.row_times != c.row_times  # overwhelmingly likely for this data


def test_downsample_rejects_bad_factor():
    with pytest.raises(ValueError):
        downsample_low_kp(_graded_dataset(), 0)


# -- selection and splitting ---------------------------------------------------


def test_select_features_projects_in_subset_order():
    data = make_dataset(np.arange(12.0).reshape(3, 4), [1.0, 2.0, 3.0])
    subset = FeatureSubset(indices=(2, 0), names=("x2", "x0"))
    out = select_features(data, subset)
    assert out.feature_names == ("x2", "x0")
    assert out.rows.tolist() == [[2.0, 0.0], [6.0, 4.0], [10.0, 8.0]]
    assert out.targets.tolist() == data.targets.tolist()


def test_select_features_rejects_bad_indices_and_names():
    data = make_dataset(np.arange(12.0).reshape(3, 4), [1.0, 2.0, 3.0])
    with pytest.raises(IndexOutOfRange):
        select_features(data, FeatureSubset(indices=(4,), names=("x4",)))
    with pytest.raises(ValueError):
        select_features(data, FeatureSubset(indices=(0,), names=("x1",)))
    with pytest.raises(ValueError):
        FeatureSubset(indices=(0, 0), names=("a", "b"))


def test_split_by_time_partitions_chronologically():
    data = make_dataset(np.arange(10.0), np.linspace(0, 9, 10))
    cutoff = EPOCH + timedelta(hours=3 * 6)
    train, test = split_by_time(data, cutoff)
    assert train.n_rows == 6 and test.n_rows == 4
    assert all(t < cutoff for t in train.row_times)
    assert all(t >= cutoff for t in test.row_times)
    # boundary row (== cutoff) lands in test
    assert test.row_times[0] == cutoff


# -- CSV round-trip --------------------------------------------------------------


def test_dataset_csv_round_trip_is_bit_exact():
    solar, dst, kp = _toy_sources(n_kp=7)
    # make values awkward: thirds and tiny offsets stress the formatting
    solar = tuple(
        ingest.MeasurementSeries(
            s.name, 5, s.start, s.values / 3.0 + 1e-9, s.present
        )
        for s in solar
    )
    data = fuse(solar, dst, kp, TOY_SPEC)
    back = FusedDataset.from_csv(data.to_csv())
    assert back.feature_names == data.feature_names
    assert back.row_times == data.row_times
    assert np.array_equal(back.rows, data.rows)  # bit-exact
    assert np.array_equal(back.targets, data.targets)
    assert FusedDataset.from_csv(back.to_csv()).to_csv() == data.to_csv()


def test_dataset_csv_rejects_malformed_content():
    with pytest.raises(ValueError):
        FusedDataset.from_csv("")
    with pytest.raises(ValueError):
        FusedDataset.from_csv("a,b\n1,2\n")  # header lacks target,row_time
    good = make_dataset([[1.0]], [2.0]).to_csv()
    with pytest.raises(ValueError):
        FusedDataset.from_csv(good + "1.0\n")  # short row
