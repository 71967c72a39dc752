"""Shared helpers for building small datasets and series in tests."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from kpforecast.fusion import FusedDataset

EPOCH = datetime(2021, 1, 1, tzinfo=timezone.utc)


def make_dataset(rows, targets, names=None) -> FusedDataset:
    """Wrap plain arrays in a FusedDataset with synthetic 3-hourly row times."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows.reshape(-1, 1)
    targets = np.asarray(targets, dtype=np.float64)
    if names is None:
        names = tuple(f"x{i}" for i in range(rows.shape[1]))
    times = tuple(EPOCH + timedelta(hours=3 * i) for i in range(rows.shape[0]))
    return FusedDataset(tuple(names), rows, targets, times)


@pytest.fixture
def tmp_cwd(tmp_path, monkeypatch):
    """Run a test from inside a scratch directory."""
    monkeypatch.chdir(tmp_path)
    return tmp_path


#: One line per acceptance criterion, echoed after the test summary so the
#: verdicts stay visible under pytest's output capture.
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.line(line)
