"""Random-forest regression, built from scratch on numpy.

Each tree is a CART regression tree grown on a bootstrap resample: at every
node an ``mtry``-sized feature subset is drawn, every midpoint between
consecutive distinct sorted values of each candidate is scored, and the
split minimising the weighted sum of child target variances wins (ties: the
lowest feature index, then the lowest threshold).  Growth stops when a node
has at most ``min_leaf`` rows, zero target variance, or no candidate admits
a valid split.  A leaf predicts the mean of its routed targets; the forest
predicts the mean over trees.  A row routes left when ``value <= threshold``.

Determinism: tree ``i`` owns a private stream seeded from
``(config.seed, i)``; the bootstrap is drawn first, then each node consumes
the stream in depth-first order (node, left subtree, right subtree).  Tree
construction is therefore a pure function of (data, config), and the
``threads`` argument changes wall time only, never the model.

Feature importance is impurity-based: every internal node splitting on
feature ``f`` contributes ``node_weight * variance_reduction`` with
``node_weight = node sample count / bootstrap sample size``; contributions
are averaged over trees and normalised to sum to one.
"""

from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    KOutOfRange,
    NonFiniteValue,
)
from .fusion import FeatureSubset, FusedDataset
from .rng import PortableRng, derive_seed

_TREE_STREAM = 0x74726565  # "tree": namespaces per-tree seeds in the fan-out

__all__ = [
    "ForestConfig",
    "Leaf",
    "Split",
    "TreeNode",
    "ForestModel",
    "RankedFeature",
    "ImportanceReport",
    "fit",
    "predict",
    "predict_batch",
    "importance",
    "top_k",
]


@dataclass(frozen=True)
class ForestConfig:
    """Hyper-parameters; ``mtry=None`` means the regression default p // 3."""

    n_trees: int = 100
    mtry: int | None = None
    min_leaf: int = 5
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be >= 1 when given")

    def resolve_mtry(self, n_features: int) -> int:
        mtry = self.mtry if self.mtry is not None else max(1, n_features // 3)
        if mtry > n_features:
            raise ValueError(f"mtry {mtry} exceeds feature count {n_features}")
        return mtry


@dataclass(frozen=True)
class Leaf:
    prediction: float
    n_samples: int


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Leaf | Split


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[TreeNode, ...]
    feature_names: tuple[str, ...]
    config: ForestConfig
    importances: np.ndarray  # normalised, sums to 1 (all zero if no split gained)
    train_target_range: tuple[float, float]
    oob_mse: float | None  # out-of-bag MSE; None when bootstrap is off

    def __post_init__(self) -> None:
        imp = np.asarray(self.importances, dtype=np.float64)
        imp.setflags(write=False)
        object.__setattr__(self, "importances", imp)


@dataclass(frozen=True)
class RankedFeature:
    name: str
    importance: float
    rank: int  # 1-based
    index: int  # column in the training dataset


@dataclass(frozen=True)
class ImportanceReport:
    ranked: tuple[RankedFeature, ...]  # descending importance

    def to_csv(self) -> str:
        lines = ["feature,importance,rank"]
        lines += [f"{r.name},{r.importance!r},{r.rank}" for r in self.ranked]
        return "".join(line + "\n" for line in lines)


# --------------------------------------------------------------------------
# growing


def _best_split(X: np.ndarray, y: np.ndarray, rows: np.ndarray, cand: np.ndarray):
    """Score every (candidate feature, midpoint threshold) pair at one node.

    Returns ``(feature, threshold, left_rows, right_rows, sse_reduction)``
    or ``None`` when no candidate separates the rows.  All candidates are
    scored in one vectorised pass: targets are sorted per candidate column
    and prefix sums give each child's sum of squared errors directly.
    """
    m = rows.size
    sub = X[np.ix_(rows, cand)]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = y[rows][order]

    csum = np.cumsum(ys, axis=0)
    csq = np.cumsum(ys * ys, axis=0)
    left_sum, left_sq = csum[:-1], csq[:-1]
    total_sum, total_sq = csum[-1], csq[-1]
    n_left = np.arange(1, m, dtype=np.float64)[:, None]
    n_right = np.float64(m) - n_left
    score = (left_sq - left_sum * left_sum / n_left) + (
        (total_sq - left_sq) - (total_sum - left_sum) ** 2 / n_right
    )
    score[xs[1:] == xs[:-1]] = np.inf  # threshold must separate distinct values

    best = score.min()
    if not np.isfinite(best):
        return None
    # Tie-break: lowest original feature index, then lowest threshold.
    # ``cand`` is ascending, so the first tied column wins; thresholds grow
    # with row position, so the first tied position wins.
    tied = score == best
    j = int(np.flatnonzero(tied.any(axis=0))[0])
    pos = int(np.flatnonzero(tied[:, j])[0])

    lo, hi = xs[pos, j], xs[pos + 1, j]
    threshold = (lo + hi) / 2.0
    if threshold == hi:  # midpoint rounded up to hi: fall back so right side stays non-empty
        threshold = lo
    feature = int(cand[j])
    go_left = X[rows, feature] <= threshold
    parent_sse = float(total_sq[j] - total_sum[j] * total_sum[j] / m)
    return feature, float(threshold), rows[go_left], rows[~go_left], parent_sse - float(best)


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    config: ForestConfig,
    mtry: int,
    tree_seed: int,
) -> tuple[TreeNode, np.ndarray, np.ndarray]:
    """Grow one tree; returns (root, unnormalised importance, oob row indices)."""
    n, p = X.shape
    rng = PortableRng(tree_seed)
    if config.bootstrap:
        bag = np.asarray(rng.block_below(n, n))
        oob = np.setdiff1d(np.arange(n), bag)
    else:
        bag = np.arange(n)
        oob = np.empty(0, dtype=np.int64)
    all_features = np.arange(p)
    imp = np.zeros(p)

    def grow(rows: np.ndarray) -> TreeNode:
        ysub = y[rows]
        if rows.size <= config.min_leaf or ysub.min() == ysub.max():
            return Leaf(float(ysub.mean()), rows.size)
        cand = all_features if mtry == p else rng.subset(p, mtry)
        found = _best_split(X, y, rows, cand)
        if found is None:
            return Leaf(float(ysub.mean()), rows.size)
        feature, threshold, left_rows, right_rows, sse_reduction = found
        # node_weight * variance_reduction == sse_reduction / bag size
        imp[feature] += sse_reduction / n
        left = grow(left_rows)
        right = grow(right_rows)
        return Split(feature, threshold, left, right)

    return grow(bag), imp, oob


def _route(tree: TreeNode, row: np.ndarray) -> float:
    node = tree
    while isinstance(node, Split):
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.prediction


def _ensure_recursion_room(depth_bound: int) -> None:
    needed = min(depth_bound, 20_000) + 2_000
    if sys.getrecursionlimit() < needed:
        sys.setrecursionlimit(needed)


def fit(data: FusedDataset, config: ForestConfig = ForestConfig(), threads: int = 1) -> ForestModel:
    """Fit a forest on the dataset; ``threads`` never changes the result."""
    if data.n_rows == 0:
        raise EmptyDataset("cannot fit a forest on zero rows")
    X = data.rows
    y = data.targets
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise NonFiniteValue("training data must be finite")
    mtry = config.resolve_mtry(data.n_features)
    _ensure_recursion_room(data.n_rows)

    seeds = [derive_seed(config.seed, _TREE_STREAM, i) for i in range(config.n_trees)]

    def build(tree_seed: int):
        return _grow_tree(X, y, config, mtry, tree_seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            grown = list(pool.map(build, seeds))
    else:
        grown = [build(s) for s in seeds]

    trees = tuple(root for root, _, _ in grown)
    imp = np.zeros(data.n_features)
    for _, tree_imp, _ in grown:  # fixed accumulation order: by tree index
        imp += tree_imp
    imp /= config.n_trees
    total = imp.sum()
    if total > 0.0:
        imp = imp / total

    oob_mse = None
    if config.bootstrap:
        pred_sum = np.zeros(data.n_rows)
        pred_count = np.zeros(data.n_rows, dtype=np.int64)
        for root, _, oob in grown:
            for i in oob:
                pred_sum[i] += _route(root, X[i])
                pred_count[i] += 1
        covered = pred_count > 0
        if covered.any():
            residual = pred_sum[covered] / pred_count[covered] - y[covered]
            oob_mse = float(np.mean(residual * residual))

    return ForestModel(
        trees=trees,
        feature_names=data.feature_names,
        config=config,
        importances=imp,
        train_target_range=(float(y.min()), float(y.max())),
        oob_mse=oob_mse,
    )


# --------------------------------------------------------------------------
# prediction


def _check_width(model: ForestModel, width: int) -> None:
    expected = len(model.feature_names)
    if width != expected:
        raise DimensionMismatch(f"row width {width}, model expects {expected}")


def predict(model: ForestModel, row: np.ndarray) -> float:
    """Mean over trees for a single feature row."""
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1:
        raise DimensionMismatch("predict expects a single 1-D row")
    _check_width(model, row.size)
    if not np.isfinite(row).all():
        raise NonFiniteValue("prediction row must be finite")
    total = 0.0
    for tree in model.trees:
        total += _route(tree, row)
    return total / len(model.trees)


def predict_batch(model: ForestModel, rows: np.ndarray) -> np.ndarray:
    """Vector of predictions for a 2-D row matrix."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise DimensionMismatch("predict_batch expects a 2-D matrix")
    _check_width(model, rows.shape[1])
    if not np.isfinite(rows).all():
        raise NonFiniteValue("prediction rows must be finite")
    out = np.zeros(rows.shape[0])
    for tree in model.trees:
        out += np.fromiter(
            (_route(tree, rows[i]) for i in range(rows.shape[0])),
            dtype=np.float64,
            count=rows.shape[0],
        )
    return out / len(model.trees)


# --------------------------------------------------------------------------
# importance


def importance(model: ForestModel) -> ImportanceReport:
    """Features ranked by normalised importance, ties to the lower index."""
    imp = model.importances
    order = sorted(range(len(imp)), key=lambda i: (-imp[i], i))
    ranked = tuple(
        RankedFeature(model.feature_names[i], float(imp[i]), rank + 1, i)
        for rank, i in enumerate(order)
    )
    return ImportanceReport(ranked)


def top_k(report: ImportanceReport, k: int) -> FeatureSubset:
    """The k best-ranked features as a selectable subset (ranking order)."""
    if not 1 <= k <= len(report.ranked):
        raise KOutOfRange(f"k must lie in [1, {len(report.ranked)}], got {k}")
    picked = report.ranked[:k]
    return FeatureSubset(
        indices=tuple(r.index for r in picked),
        names=tuple(r.name for r in picked),
    )
