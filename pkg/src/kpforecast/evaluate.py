"""Experiment orchestration and the within-±1 accuracy metric.

``run_experiment`` wires the stages in a fixed, leakage-free order:

1. fuse the sources,
2. split chronologically at the cutoff,
3. if a forest with feature selection is asked for: fit a ranking forest on
   the *training* rows only, take the top-k features, and project both
   splits onto them,
4. downsample low-Kp rows (training split only),
5. fit the final model on the training split,
6. predict the test split and score.

Nothing derived from test rows ever reaches a fit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from . import baseline, forest
from .errors import EmptyDataset, EmptyInput, EmptyTestSet, LengthMismatch, NonFiniteValue
from .fusion import (
    FusedDataset,
    LagSpec,
    downsample_low_kp,
    fuse,
    split_by_time,
    select_features,
)
from .ingest import MeasurementSeries, format_timestamp
from .rng import derive_seed

__all__ = [
    "EvalReport",
    "ExperimentPlan",
    "PlanResult",
    "accuracy_within_1",
    "run_plan",
    "run_experiment",
    "comparison_table",
]

_DOWNSAMPLE_STREAM = 0x646F776E  # "down": namespaces the downsampling seed
_STORM_KP = 4.0


def accuracy_within_1(predicted, actual) -> float:
    """Fraction of predictions within 1 Kp of the truth (boundary counts)."""
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise LengthMismatch(
            f"{predicted.shape[0] if predicted.ndim else 0} predictions vs "
            f"{actual.shape[0] if actual.ndim else 0} actuals"
        )
    if predicted.ndim != 1 or predicted.size == 0:
        raise EmptyInput("need at least one (predicted, actual) pair")
    if not np.isfinite(predicted).all() or not np.isfinite(actual).all():
        raise NonFiniteValue("metric inputs must be finite")
    return float(np.mean(np.abs(predicted - actual) <= 1.0))


@dataclass(frozen=True)
class EvalReport:
    """Test-split scores plus an echo of the configuration that made them."""

    n: int
    accuracy_within_1: float
    mean_abs_error: float
    per_bin_hits: tuple[int, int, int]  # |error| in [0,1], (1,2], >2
    storm_n: int  # test rows with actual Kp > 4
    storm_accuracy_within_1: float | None
    config_echo: dict

    def to_json(self) -> str:
        obj = {
            "n": self.n,
            "accuracy_within_1": self.accuracy_within_1,
            "mean_abs_error": self.mean_abs_error,
            "per_bin_hits": list(self.per_bin_hits),
            "storm_n": self.storm_n,
            "storm_accuracy_within_1": self.storm_accuracy_within_1,
            "config": self.config_echo,
        }
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [
            f"test rows            {self.n}",
            f"accuracy within +/-1 {self.accuracy_within_1:.4f}",
            f"mean absolute error  {self.mean_abs_error:.4f}",
            "error bins           "
            f"[0,1]: {self.per_bin_hits[0]}  (1,2]: {self.per_bin_hits[1]}  "
            f">2: {self.per_bin_hits[2]}",
        ]
        if self.storm_n:
            lines.append(
                f"storm rows (Kp > 4)  {self.storm_n}, "
                f"within +/-1 {self.storm_accuracy_within_1:.4f}"
            )
        else:
            lines.append("storm rows (Kp > 4)  none in test split")
        return "".join(line + "\n" for line in lines)


def _report(predicted: np.ndarray, actual: np.ndarray, config_echo: dict) -> EvalReport:
    err = np.abs(predicted - actual)
    storms = actual > _STORM_KP
    return EvalReport(
        n=int(actual.size),
        accuracy_within_1=accuracy_within_1(predicted, actual),
        mean_abs_error=float(err.mean()),
        per_bin_hits=(
            int((err <= 1.0).sum()),
            int(((err > 1.0) & (err <= 2.0)).sum()),
            int((err > 2.0).sum()),
        ),
        storm_n=int(storms.sum()),
        storm_accuracy_within_1=(
            accuracy_within_1(predicted[storms], actual[storms])
            if storms.any()
            else None
        ),
        config_echo=config_echo,
    )


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything one experiment needs besides the measurement series."""

    cutoff: datetime
    lag_spec: LagSpec = LagSpec()
    forest_config: forest.ForestConfig = forest.ForestConfig()
    model_kind: str = "forest"  # "forest" | "linear"
    k_features: int | None = None  # None = keep all features
    downsample: int = 1  # keep 1/downsample of low-Kp training rows
    downsample_threshold: float = _STORM_KP
    downsample_seed: int | None = None  # None: derived from the forest seed

    def __post_init__(self) -> None:
        if self.model_kind not in ("forest", "linear"):
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.downsample < 1:
            raise ValueError("downsample factor must be >= 1")
        if self.k_features is not None and self.k_features < 1:
            raise ValueError("k_features must be >= 1 when given")

    def label(self) -> str:
        if self.model_kind == "linear":
            return "Linear"
        parts = ["RF"]
        if self.k_features is not None:
            parts.append(f"top-{self.k_features}")
        if self.downsample > 1:
            parts.append(f"L={self.downsample}")
        return " ".join(parts)

    def resolved_downsample_seed(self) -> int:
        if self.downsample_seed is not None:
            return self.downsample_seed
        return derive_seed(self.forest_config.seed, _DOWNSAMPLE_STREAM)

    def echo(self) -> dict:
        cfg = self.forest_config
        return {
            "label": self.label(),
            "model_kind": self.model_kind,
            "cutoff": format_timestamp(self.cutoff),
            "lag_spec": {
                "solar_wind_lookback_minutes": self.lag_spec.solar_wind_lookback_minutes,
                "solar_wind_step_minutes": self.lag_spec.solar_wind_step_minutes,
                "dst_lookback_hours": self.lag_spec.dst_lookback_hours,
                "kp_lookback_hours": self.lag_spec.kp_lookback_hours,
                "horizon_hours": self.lag_spec.horizon_hours,
            },
            "forest": {
                "n_trees": cfg.n_trees,
                "mtry": cfg.mtry,
                "min_leaf": cfg.min_leaf,
                "seed": cfg.seed,
                "bootstrap": cfg.bootstrap,
            },
            "k_features": self.k_features,
            "downsample": self.downsample,
            "downsample_threshold": self.downsample_threshold,
        }


@dataclass(frozen=True)
class PlanResult:
    model: object  # ForestModel | LinearModel
    report: EvalReport


def run_plan(
    data: FusedDataset,
    plan: ExperimentPlan,
    threads: int = 1,
    _ranking_memo: dict | None = None,
) -> PlanResult:
    """Execute a plan on an already-fused dataset (stages 2-6)."""
    train, test = split_by_time(data, plan.cutoff)
    if test.n_rows == 0:
        raise EmptyTestSet(f"no rows at or after {format_timestamp(plan.cutoff)}")
    if train.n_rows == 0:
        raise EmptyDataset(f"no rows before {format_timestamp(plan.cutoff)}")

    if plan.model_kind == "forest" and plan.k_features is not None:
        memo_key = (plan.lag_spec, plan.forest_config, plan.cutoff)
        report = None if _ranking_memo is None else _ranking_memo.get(memo_key)
        if report is None:
            # Deterministic fit: safe to reuse across plans with equal inputs.
            report = forest.importance(forest.fit(train, plan.forest_config, threads))
            if _ranking_memo is not None:
                _ranking_memo[memo_key] = report
        subset = forest.top_k(report, plan.k_features)
        train = select_features(train, subset)
        test = select_features(test, subset)

    if plan.downsample > 1:
        train = downsample_low_kp(
            train,
            plan.downsample,
            plan.downsample_threshold,
            plan.resolved_downsample_seed(),
        )

    if plan.model_kind == "forest":
        model = forest.fit(train, plan.forest_config, threads)
        predicted = forest.predict_batch(model, test.rows)
    else:
        model = baseline.fit_linear(train)
        predicted = baseline.predict_linear_batch(model, test.rows)
    return PlanResult(model, _report(predicted, test.targets, plan.echo()))


def run_experiment(
    plan: ExperimentPlan,
    solar: tuple[MeasurementSeries, ...],
    dst: MeasurementSeries,
    kp: MeasurementSeries,
    threads: int = 1,
) -> EvalReport:
    """Fuse the sources and execute the plan."""
    data = fuse(solar, dst, kp, plan.lag_spec)
    return run_plan(data, plan, threads).report


def comparison_table(
    plans,
    solar: tuple[MeasurementSeries, ...],
    dst: MeasurementSeries,
    kp: MeasurementSeries,
    threads: int = 1,
) -> list[tuple[str, float]]:
    """``(label, accuracy_within_1)`` per plan, in input order.

    Sources are fused once per distinct lag spec and ranking forests are
    shared between plans with identical (lag spec, forest config, cutoff) —
    both pure caches that cannot change any result.
    """
    fused: dict[LagSpec, FusedDataset] = {}
    ranking_memo: dict = {}
    table = []
    for plan in plans:
        data = fused.get(plan.lag_spec)
        if data is None:
            data = fused[plan.lag_spec] = fuse(solar, dst, kp, plan.lag_spec)
        result = run_plan(data, plan, threads, _ranking_memo=ranking_memo)
        table.append((plan.label(), result.report.accuracy_within_1))
    return table
