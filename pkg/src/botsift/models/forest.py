"""Random forest of Gini decision trees, trained on bootstrap samples.

Trees are grown to purity unless a depth cap is set. Splits are scanned at
midpoints between consecutive distinct values of a per-node random feature
subset (floor(sqrt(d)) features), choosing the maximal Gini-impurity
decrease; ties keep the lowest feature index and threshold. Zero-decrease
splits are allowed so consistent training sets can always reach purity.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..windows import Dataset
from .base import ModelArtifact


@dataclass
class ForestParams:
    n_trees: int = 100
    max_depth: Optional[int] = None  # None = unbounded
    seed: int = 42

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")


def best_gini_split(x: np.ndarray, y: np.ndarray):
    """Best threshold for one feature: (impurity decrease, threshold).

    Candidates are midpoints between consecutive distinct sorted values.
    Returns None when the feature is constant over the node.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    boundaries = np.nonzero(xs[1:] > xs[:-1])[0]  # split after position i
    if boundaries.size == 0:
        return None

    n = x.shape[0]
    total_pos = int(ys.sum())
    parent = _gini(total_pos, n)

    n_left = boundaries + 1
    left_pos = np.cumsum(ys)[boundaries]
    n_right = n - n_left
    right_pos = total_pos - left_pos

    gini_left = 1.0 - ((left_pos / n_left) ** 2
                       + ((n_left - left_pos) / n_left) ** 2)
    gini_right = 1.0 - ((right_pos / n_right) ** 2
                        + ((n_right - right_pos) / n_right) ** 2)
    weighted = (n_left * gini_left + n_right * gini_right) / n
    decrease = parent - weighted

    best = int(np.argmax(decrease))
    pos = boundaries[best]
    threshold = (xs[pos] + xs[pos + 1]) / 2.0
    return float(decrease[best]), float(threshold)


def _gini(pos: int, n: int) -> float:
    p = pos / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _leaf(y: np.ndarray) -> dict:
    pos = int(y.sum())
    # majority class; ties predict botnet
    return {"leaf": 1 if pos * 2 >= y.shape[0] else 0}


def grow_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator,
              max_depth: Optional[int], n_candidates: int,
              importances: np.ndarray) -> dict:
    """Recursively grow one classification tree; accumulates raw
    impurity-decrease importances weighted by node fraction."""
    n_root = X.shape[0]
    d = X.shape[1]

    def build(idx: np.ndarray, depth: int) -> dict:
        y_node = y[idx]
        if y_node.shape[0] < 2 or len(np.unique(y_node)) == 1:
            return _leaf(y_node)
        if max_depth is not None and depth >= max_depth:
            return _leaf(y_node)

        candidates = rng.choice(d, size=min(n_candidates, d), replace=False)
        candidates.sort()
        best = None  # (decrease, feature, threshold)
        for f in candidates:
            found = best_gini_split(X[idx, f], y_node)
            if found is None:
                continue
            decrease, threshold = found
            if best is None or decrease > best[0]:
                best = (decrease, int(f), threshold)
        if best is None:
            return _leaf(y_node)

        decrease, feature, threshold = best
        importances[feature] += (idx.shape[0] / n_root) * decrease
        left_mask = X[idx, feature] <= threshold
        return {
            "f": feature,
            "t": threshold,
            "l": build(idx[left_mask], depth + 1),
            "r": build(idx[~left_mask], depth + 1),
        }

    return build(np.arange(n_root), 0)


def tree_predict(tree: dict, X: np.ndarray) -> np.ndarray:
    """Class per row, routing index blocks down the tree."""
    out = np.zeros(X.shape[0], dtype=int)

    def walk(node: dict, idx: np.ndarray):
        if "leaf" in node:
            out[idx] = node["leaf"]
            return
        left = X[idx, node["f"]] <= node["t"]
        walk(node["l"], idx[left])
        walk(node["r"], idx[~left])

    walk(tree, np.arange(X.shape[0]))
    return out


def train_random_forest(ds: Dataset, hp: ForestParams,
                        n_threads: int = 1) -> ModelArtifact:
    if ds.n == 0:
        raise ValueError("cannot train a forest on an empty dataset")
    X = ds.rows
    y = ds.labels
    n, d = X.shape
    n_candidates = max(1, int(math.isqrt(d)))

    def one_tree(t: int):
        rng = np.random.default_rng(hp.seed + t)
        sample = rng.integers(0, n, size=n)
        importances = np.zeros(d)
        tree = grow_tree(X[sample], y[sample], rng, hp.max_depth,
                         n_candidates, importances)
        return tree, importances

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(one_tree, range(hp.n_trees)))
    else:
        results = [one_tree(t) for t in range(hp.n_trees)]

    trees = [tree for tree, _ in results]
    importances = np.sum([imp for _, imp in results], axis=0)
    total = importances.sum()
    if total > 0:
        importances = importances / total

    return ModelArtifact(
        family="rf",
        hyperparams={"n_trees": hp.n_trees, "max_depth": hp.max_depth,
                     "seed": hp.seed},
        feature_names=list(ds.feature_names),
        standardization=None,
        parameters={"trees": trees,
                    "feature_importances": importances.tolist()},
        metadata={"n_train": n, "split_candidates": n_candidates},
    )


def score_forest(artifact: ModelArtifact, X: np.ndarray) -> np.ndarray:
    trees = artifact.parameters["trees"]
    votes = np.zeros(X.shape[0])
    for tree in trees:
        votes += tree_predict(tree, X)
    return votes / len(trees)
