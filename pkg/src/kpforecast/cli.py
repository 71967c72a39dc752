"""Command-line interface.

Subcommands: ``synth``, ``fuse``, ``train``, ``predict``, ``importance``,
``evaluate``, ``compare``, ``pca``.  Every option can also live in a flat
``key = value`` config file (``#`` comments allowed) passed via ``--config``;
a flag given on the command line wins over the file.  Exit codes: 0 success,
1 usage error, 2 data error.  Diagnostics go to stderr; data goes to files
or stdout.  Reruns with identical inputs and seeds produce byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from types import SimpleNamespace

from . import baseline, datagen, evaluate, forest, ingest, modelio, pca
from .errors import DataError
from .fusion import FusedDataset, LagSpec, fuse
from .ingest import parse_timestamp

__all__ = ["main", "entry_point"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise _UsageError(message)


# --------------------------------------------------------------------------
# option plumbing

_REQUIRED = object()


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {text!r}")


def _mtry(text: str) -> int | None:
    return None if text.strip() == "default" else int(text)


def _k_features(text: str) -> int | None:
    return None if text.strip() == "all" else int(text)


def _int_list(text: str) -> tuple[int, ...]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("expected a comma-separated list of integers")
    return tuple(int(t) for t in items)


def _timestamp(text: str):
    return parse_timestamp(text.strip())


def _load_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise _UsageError(f"{path}:{line_no}: expected 'key = value'")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args: argparse.Namespace, spec: dict) -> SimpleNamespace:
    """Merge flag values over config-file values over defaults."""
    file_values = _load_config(args.config) if args.config else {}
    unknown = set(file_values) - set(spec)
    if unknown:
        raise _UsageError("unknown config key(s): " + ", ".join(sorted(unknown)))
    resolved = {}
    for name, (convert, default, _help) in spec.items():
        raw = getattr(args, name, None)
        if raw is None:
            raw = file_values.get(name)
        if raw is None:
            if default is _REQUIRED:
                raise _UsageError(f"missing required option --{_flag(name)}")
            resolved[name] = default
        else:
            try:
                resolved[name] = convert(raw)
            except ValueError as exc:
                raise _UsageError(f"bad value for --{_flag(name)}: {exc}") from None
    return SimpleNamespace(**resolved)


def _flag(name: str) -> str:
    return name.replace("_", "-")


def _add_options(sub: argparse.ArgumentParser, spec: dict) -> None:
    sub.add_argument("--config", help="flat key = value file mirroring the flags")
    for name, (_convert, default, help_text) in spec.items():
        suffix = "" if default in (_REQUIRED, None) else f" (default {default})"
        sub.add_argument(f"--{_flag(name)}", dest=name, help=help_text + suffix)


# shared option blocks ------------------------------------------------------

_SOURCE_SPEC = {
    "solar_wind": (str, _REQUIRED, "solar-wind CSV path"),
    "dst": (str, _REQUIRED, "dst CSV path"),
    "kp": (str, _REQUIRED, "kp CSV path"),
}

_LAG_SPEC = {
    "solar_lookback_minutes": (int, 540, "solar-wind lookback window"),
    "solar_step_minutes": (int, 5, "solar-wind lag step"),
    "dst_lookback_hours": (int, 3, "dst lookback window"),
    "kp_lookback_hours": (int, 24, "kp lookback window"),
    "horizon_hours": (int, 3, "how far ahead to predict"),
}

_FOREST_SPEC = {
    "trees": (int, 100, "number of trees"),
    "mtry": (_mtry, None, "features tried per split; 'default' = p//3"),
    "min_leaf": (int, 5, "stop splitting nodes at this size"),
    "bootstrap": (_bool, True, "draw a bootstrap sample per tree"),
}


def _read_sources(opts):
    solar = ingest.solar_wind_series(
        ingest.parse_solar_wind(Path(opts.solar_wind).read_text(encoding="utf-8"))
    )
    dst = ingest.to_series(
        ingest.parse_dst(Path(opts.dst).read_text(encoding="utf-8")), "dst", 60
    )
    kp = ingest.to_series(
        ingest.parse_kp(Path(opts.kp).read_text(encoding="utf-8")), "kp", 180
    )
    return solar, dst, kp


def _lag_spec(opts) -> LagSpec:
    return LagSpec(
        solar_wind_lookback_minutes=opts.solar_lookback_minutes,
        solar_wind_step_minutes=opts.solar_step_minutes,
        dst_lookback_hours=opts.dst_lookback_hours,
        kp_lookback_hours=opts.kp_lookback_hours,
        horizon_hours=opts.horizon_hours,
    )


def _forest_config(opts) -> forest.ForestConfig:
    return forest.ForestConfig(
        n_trees=opts.trees,
        mtry=opts.mtry,
        min_leaf=opts.min_leaf,
        seed=opts.seed,
        bootstrap=opts.bootstrap,
    )


def _write(path_text: str, content: str) -> None:
    path = Path(path_text)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content, encoding="utf-8")


def _load_dataset(path: str) -> FusedDataset:
    try:
        return FusedDataset.from_csv(Path(path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------
# subcommands

_SYNTH_SPEC = {
    "seed": (int, 0, "generator seed"),
    "days": (int, 120, "days of data"),
    "storm_rate": (float, 0.5, "mean storm events per day"),
    "noise_scale": (float, 1.0, "noise multiplier"),
    "out": (str, _REQUIRED, "output directory"),
}


def _cmd_synth(args) -> int:
    opts = _resolve(args, _SYNTH_SPEC)
    config = datagen.SynthConfig(
        seed=opts.seed,
        n_days=opts.days,
        storm_rate_per_day=opts.storm_rate,
        noise_scale=opts.noise_scale,
    )
    datagen.write_csv(config, opts.out)
    return 0


_FUSE_SPEC = {**_SOURCE_SPEC, **_LAG_SPEC,
              "out": (str, _REQUIRED, "output dataset CSV")}


def _cmd_fuse(args) -> int:
    opts = _resolve(args, _FUSE_SPEC)
    solar, dst, kp = _read_sources(opts)
    data = fuse(solar, dst, kp, _lag_spec(opts))
    _write(opts.out, data.to_csv())
    return 0


_TRAIN_SPEC = {
    "data": (str, _REQUIRED, "fused dataset CSV"),
    "model_kind": (str, "forest", "forest or linear"),
    **_FOREST_SPEC,
    "seed": (int, 0, "random seed"),
    "threads": (int, None, "worker threads (default: all cores)"),
    "out": (str, _REQUIRED, "output model JSON"),
}


def _cmd_train(args) -> int:
    opts = _resolve(args, _TRAIN_SPEC)
    if opts.model_kind not in ("forest", "linear"):
        raise _UsageError(f"bad value for --model-kind: {opts.model_kind!r}")
    threads = _threads(opts)  # validate before touching the filesystem
    config = _forest_config(opts)
    data = _load_dataset(opts.data)
    if opts.model_kind == "linear":
        model = baseline.fit_linear(data)
    else:
        model = forest.fit(data, config, threads=threads)
    _write(opts.out, modelio.model_to_json(model))
    return 0


_PREDICT_SPEC = {
    "model": (str, _REQUIRED, "model JSON path"),
    "data": (str, _REQUIRED, "fused dataset CSV"),
    "out": (str, _REQUIRED, "output predictions CSV"),
}


def _cmd_predict(args) -> int:
    opts = _resolve(args, _PREDICT_SPEC)
    model = modelio.load_model(opts.model)
    data = _load_dataset(opts.data)
    if isinstance(model, forest.ForestModel):
        predicted = forest.predict_batch(model, data.rows)
    else:
        predicted = baseline.predict_linear_batch(model, data.rows)
    lines = ["row_time,predicted"]
    lines += [
        f"{ingest.format_timestamp(t)},{float(v)!r}"
        for t, v in zip(data.row_times, predicted)
    ]
    _write(opts.out, "".join(line + "\n" for line in lines))
    return 0


_IMPORTANCE_SPEC = {
    "model": (str, _REQUIRED, "forest model JSON path"),
    "out": (str, _REQUIRED, "output ranking CSV"),
}


def _cmd_importance(args) -> int:
    opts = _resolve(args, _IMPORTANCE_SPEC)
    model = modelio.load_model(opts.model)
    if not isinstance(model, forest.ForestModel):
        raise DataError("importance needs a forest model, got a linear one")
    _write(opts.out, forest.importance(model).to_csv())
    return 0


_EXPERIMENT_SPEC = {
    **_SOURCE_SPEC,
    **_LAG_SPEC,
    **_FOREST_SPEC,
    "cutoff": (_timestamp, _REQUIRED, "train/test boundary (UTC timestamp)"),
    "seed": (int, 0, "random seed"),
    "threads": (int, None, "worker threads (default: all cores)"),
}

_EVALUATE_SPEC = {
    **_EXPERIMENT_SPEC,
    "model_kind": (str, "forest", "forest or linear"),
    "k_features": (_k_features, None, "train on the top-k features; 'all'"),
    "downsample": (int, 1, "keep 1/N of low-Kp training rows"),
    "downsample_threshold": (float, 4.0, "Kp at or below this is 'low'"),
    "out": (str, None, "optional report JSON path"),
}


def _plan(opts, **overrides) -> evaluate.ExperimentPlan:
    fields = dict(
        cutoff=opts.cutoff,
        lag_spec=_lag_spec(opts),
        forest_config=_forest_config(opts),
    )
    fields.update(overrides)
    return evaluate.ExperimentPlan(**fields)


def _cmd_evaluate(args) -> int:
    opts = _resolve(args, _EVALUATE_SPEC)
    if opts.model_kind not in ("forest", "linear"):
        raise _UsageError(f"bad value for --model-kind: {opts.model_kind!r}")
    threads = _threads(opts)  # validate before touching the filesystem
    plan = _plan(
        opts,
        model_kind=opts.model_kind,
        k_features=opts.k_features,
        downsample=opts.downsample,
        downsample_threshold=opts.downsample_threshold,
    )
    solar, dst, kp = _read_sources(opts)
    report = evaluate.run_experiment(plan, solar, dst, kp, threads=threads)
    sys.stdout.write(report.to_text())
    if opts.out is not None:
        _write(opts.out, report.to_json())
    return 0


_COMPARE_SPEC = {
    **_EXPERIMENT_SPEC,
    "ks": (_int_list, (100, 50), "top-k feature counts to compare"),
    "downsample": (int, 2, "low-Kp factor for the downsampled variant"),
    "downsample_threshold": (float, 4.0, "Kp at or below this is 'low'"),
    "out": (str, None, "optional table CSV path"),
}


def _cmd_compare(args) -> int:
    opts = _resolve(args, _COMPARE_SPEC)
    threads = _threads(opts)  # validate before touching the filesystem
    plans = [_plan(opts)]
    plans += [_plan(opts, k_features=k) for k in opts.ks]
    if opts.downsample > 1 and opts.ks:
        plans.append(
            _plan(
                opts,
                k_features=opts.ks[-1],
                downsample=opts.downsample,
                downsample_threshold=opts.downsample_threshold,
            )
        )
    plans.append(_plan(opts, model_kind="linear"))
    solar, dst, kp = _read_sources(opts)
    table = evaluate.comparison_table(plans, solar, dst, kp, threads=threads)
    content = "label,accuracy\n" + "".join(
        f"{label},{acc!r}\n" for label, acc in table
    )
    sys.stdout.write(content)
    if opts.out is not None:
        _write(opts.out, content)
    return 0


_PCA_SPEC = {
    "data": (str, _REQUIRED, "fused dataset CSV"),
    "out": (str, _REQUIRED, "output projection CSV (pc1,pc2,kp_label)"),
}


def _cmd_pca(args) -> int:
    opts = _resolve(args, _PCA_SPEC)
    data = _load_dataset(opts.data)
    model = pca.fit_pca(data, 2)
    coords = pca.project(model, data)
    lines = ["pc1,pc2,kp_label"]
    lines += [
        f"{float(coords[i, 0])!r},{float(coords[i, 1])!r},"
        f"{int(math.floor(data.targets[i] + 0.5))}"
        for i in range(data.n_rows)
    ]
    _write(opts.out, "".join(line + "\n" for line in lines))
    return 0


def _threads(opts) -> int:
    if opts.threads is not None:
        if opts.threads < 1:
            raise _UsageError("bad value for --threads: must be >= 1")
        return opts.threads
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# entry

_COMMANDS = {
    "synth": (_cmd_synth, _SYNTH_SPEC, "generate synthetic measurement CSVs"),
    "fuse": (_cmd_fuse, _FUSE_SPEC, "fuse measurement CSVs into a dataset"),
    "train": (_cmd_train, _TRAIN_SPEC, "fit a model on a fused dataset"),
    "predict": (_cmd_predict, _PREDICT_SPEC, "predict with a saved model"),
    "importance": (_cmd_importance, _IMPORTANCE_SPEC, "rank a forest's features"),
    "evaluate": (_cmd_evaluate, _EVALUATE_SPEC, "run one train/test experiment"),
    "compare": (_cmd_compare, _COMPARE_SPEC, "accuracy table across model variants"),
    "pca": (_cmd_pca, _PCA_SPEC, "project a dataset onto its top 2 components"),
}


def build_parser() -> _Parser:
    parser = _Parser(prog="kpforecast",
                     description="Kp-index early prediction toolkit")
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (func, spec, help_text) in _COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        _add_options(sub, spec)
        sub.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_usage(sys.stderr)
            sys.stderr.write("error: a subcommand is required\n")
            return 1
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except ValueError as exc:  # semantic option checks (e.g. n_trees >= 1)
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except FileNotFoundError as exc:
        name = exc.filename if exc.filename else str(exc)
        sys.stderr.write(f"error: cannot read {name}: no such file\n")
        return 2
    except DataError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


def entry_point() -> None:
    raise SystemExit(main())
