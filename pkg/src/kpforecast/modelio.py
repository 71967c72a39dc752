"""One JSON container for every trained model.

The top-level ``kind`` tag selects the flavour (``"forest"`` or
``"linear"``).  Trees serialise as nested objects — internal nodes
``{"f": feature, "t": threshold, "l": ..., "r": ...}``, leaves
``{"p": prediction, "n": count}``.  Reals are written with full
shortest-round-trip precision (up to 17 significant digits), so a loaded
model predicts bit-identically to the saved one.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from .baseline import LinearModel
from .errors import DataError
from .forest import ForestConfig, ForestModel, Leaf, Split, TreeNode

__all__ = ["model_to_json", "model_from_json", "save_model", "load_model"]


def _tree_to_obj(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"p": node.prediction, "n": node.n_samples}
    return {
        "f": node.feature,
        "t": node.threshold,
        "l": _tree_to_obj(node.left),
        "r": _tree_to_obj(node.right),
    }


def _tree_from_obj(obj: dict) -> TreeNode:
    if "p" in obj:
        return Leaf(float(obj["p"]), int(obj["n"]))
    return Split(
        int(obj["f"]),
        float(obj["t"]),
        _tree_from_obj(obj["l"]),
        _tree_from_obj(obj["r"]),
    )


def _ensure_recursion_room() -> None:
    if sys.getrecursionlimit() < 22_000:
        sys.setrecursionlimit(22_000)


def model_to_json(model: ForestModel | LinearModel) -> str:
    _ensure_recursion_room()
    if isinstance(model, LinearModel):
        obj = {
            "kind": "linear",
            "feature_names": list(model.feature_names),
            "intercept": model.intercept,
            "coefficients": [float(c) for c in model.coefficients],
        }
    elif isinstance(model, ForestModel):
        cfg = model.config
        obj = {
            "kind": "forest",
            "config": {
                "n_trees": cfg.n_trees,
                "mtry": cfg.mtry,
                "min_leaf": cfg.min_leaf,
                "seed": cfg.seed,
                "bootstrap": cfg.bootstrap,
            },
            "feature_names": list(model.feature_names),
            "importances": [float(v) for v in model.importances],
            "train_target_range": list(model.train_target_range),
            "oob_mse": model.oob_mse,
            "trees": [_tree_to_obj(t) for t in model.trees],
        }
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return json.dumps(obj, indent=None, separators=(",", ":")) + "\n"


def model_from_json(content: str) -> ForestModel | LinearModel:
    _ensure_recursion_room()
    try:
        obj = json.loads(content)
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from None
    kind = obj.get("kind") if isinstance(obj, dict) else None
    try:
        if kind == "linear":
            return LinearModel(
                intercept=float(obj["intercept"]),
                coefficients=obj["coefficients"],
                feature_names=tuple(obj["feature_names"]),
            )
        if kind == "forest":
            cfg = obj["config"]
            return ForestModel(
                trees=tuple(_tree_from_obj(t) for t in obj["trees"]),
                feature_names=tuple(obj["feature_names"]),
                config=ForestConfig(
                    n_trees=int(cfg["n_trees"]),
                    mtry=None if cfg["mtry"] is None else int(cfg["mtry"]),
                    min_leaf=int(cfg["min_leaf"]),
                    seed=int(cfg["seed"]),
                    bootstrap=bool(cfg["bootstrap"]),
                ),
                importances=obj["importances"],
                train_target_range=(
                    float(obj["train_target_range"][0]),
                    float(obj["train_target_range"][1]),
                ),
                oob_mse=None if obj["oob_mse"] is None else float(obj["oob_mse"]),
            )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise DataError(f"model file is missing or corrupt: {exc}") from None
    raise DataError(f"unknown model kind: {kind!r}")


def save_model(model: ForestModel | LinearModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: str | Path) -> ForestModel | LinearModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))
