"""Brute-force CART oracle, independent of the library implementation.

Enumerates every (feature, threshold) pair outright and scores children with
``np.var`` directly — a deliberately different route from the library's
prefix-sum scan — so agreement between the two is meaningful.  Tie-breaking
matches the documented contract: strictly better scores win, so iteration
order (features ascending, thresholds ascending) keeps the lowest feature
index, then the lowest threshold.
"""

from __future__ import annotations

import numpy as np


def oracle_best_split(X: np.ndarray, y: np.ndarray):
    """(feature, threshold) minimising summed child SSE, or None."""
    n, p = X.shape
    best_score = np.inf
    best = None
    for feature in range(p):
        values = np.unique(X[:, feature])
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2.0
            if threshold == hi:
                threshold = lo
            left = X[:, feature] <= threshold
            right = ~left
            score = float(
                np.var(y[left]) * left.sum() + np.var(y[right]) * right.sum()
            )
            if score < best_score:
                best_score = score
                best = (feature, float(threshold))
    return best


def oracle_tree(X: np.ndarray, y: np.ndarray, min_leaf: int = 1):
    """Greedy CART as nested dicts: {"f","t","l","r"} or {"p","n"}."""
    if len(y) <= min_leaf or y.min() == y.max():
        return {"p": float(np.mean(y)), "n": int(len(y))}
    found = oracle_best_split(X, y)
    if found is None:
        return {"p": float(np.mean(y)), "n": int(len(y))}
    feature, threshold = found
    left = X[:, feature] <= threshold
    return {
        "f": feature,
        "t": threshold,
        "l": oracle_tree(X[left], y[left], min_leaf),
        "r": oracle_tree(X[~left], y[~left], min_leaf),
    }


def oracle_predict(tree: dict, row: np.ndarray) -> float:
    node = tree
    while "f" in node:
        node = node["l"] if row[node["f"]] <= node["t"] else node["r"]
    return node["p"]
