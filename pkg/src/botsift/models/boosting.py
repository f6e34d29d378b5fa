"""Gradient boosting with depth-limited regression trees.

Each stage fits a least-squares tree to the negative gradient of the
chosen loss (binomial deviance or exponential), then replaces every
leaf value with that loss's per-leaf line-search step. Stage updates
are scaled by the learning rate. Training loss is recorded after every
stage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..windows import Dataset
from .base import ModelArtifact, check_both_classes, sigmoid


@dataclass
class BoostingParams:
    loss: str = "exponential"  # exponential | deviance
    n_trees: int = 100
    max_depth: int = 4
    learning_rate: float = 0.1
    seed: int = 42

    def __post_init__(self):
        if self.loss not in ("exponential", "deviance"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


def best_sse_split(x: np.ndarray, t: np.ndarray):
    """Best threshold for one feature under sum-of-squared-error
    reduction: (decrease, threshold), or None for a constant feature."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ts = t[order]
    boundaries = np.nonzero(xs[1:] > xs[:-1])[0]
    if boundaries.size == 0:
        return None

    n = x.shape[0]
    s1 = np.cumsum(ts)
    s2 = np.cumsum(ts * ts)
    total1 = s1[-1]
    total2 = s2[-1]
    parent = total2 - total1 * total1 / n

    n_left = boundaries + 1
    l1 = s1[boundaries]
    l2 = s2[boundaries]
    n_right = n - n_left
    sse_left = l2 - l1 * l1 / n_left
    sse_right = (total2 - l2) - (total1 - l1) ** 2 / n_right
    decrease = parent - (sse_left + sse_right)

    best = int(np.argmax(decrease))
    pos = boundaries[best]
    threshold = (xs[pos] + xs[pos + 1]) / 2.0
    return float(decrease[best]), float(threshold)


def grow_regression_tree(X: np.ndarray, targets: np.ndarray,
                         max_depth: int, leaf_value) -> dict:
    """Least-squares tree on `targets`; `leaf_value(idx)` supplies the
    value stored at each leaf."""

    def build(idx: np.ndarray, depth: int) -> dict:
        t_node = targets[idx]
        if (idx.shape[0] < 2 or depth >= max_depth
                or np.all(t_node == t_node[0])):
            return {"leaf": leaf_value(idx)}

        best = None  # (decrease, feature, threshold)
        for f in range(X.shape[1]):
            found = best_sse_split(X[idx, f], t_node)
            if found is None:
                continue
            decrease, threshold = found
            if best is None or decrease > best[0]:
                best = (decrease, f, threshold)
        if best is None:
            return {"leaf": leaf_value(idx)}

        _, feature, threshold = best
        left_mask = X[idx, feature] <= threshold
        return {
            "f": feature,
            "t": threshold,
            "l": build(idx[left_mask], depth + 1),
            "r": build(idx[~left_mask], depth + 1),
        }

    return build(np.arange(X.shape[0]), 0)


def tree_value(tree: dict, X: np.ndarray) -> np.ndarray:
    out = np.zeros(X.shape[0])

    def walk(node: dict, idx: np.ndarray):
        if "leaf" in node:
            out[idx] = node["leaf"]
            return
        left = X[idx, node["f"]] <= node["t"]
        walk(node["l"], idx[left])
        walk(node["r"], idx[~left])

    walk(tree, np.arange(X.shape[0]))
    return out


def train_boosting(ds: Dataset, hp: BoostingParams) -> ModelArtifact:
    check_both_classes(ds.labels, "gboost")
    X = ds.rows
    y = ds.labels.astype(float)
    y_pm = 2.0 * y - 1.0
    n = ds.n
    p0 = float(y.mean())

    if hp.loss == "deviance":
        f0 = float(np.log(p0 / (1.0 - p0)))
    else:
        f0 = 0.5 * float(np.log(p0 / (1.0 - p0)))
    F = np.full(n, f0)

    def training_loss() -> float:
        if hp.loss == "deviance":
            z = F
            softplus = np.where(z > 0, z + np.log1p(np.exp(-z)),
                                np.log1p(np.exp(z)))
            return float(np.mean(softplus - y * z))
        return float(np.mean(np.exp(np.clip(-y_pm * F, -50, 50))))

    stage_losses = [training_loss()]
    trees = []
    for _ in range(hp.n_trees):
        if hp.loss == "deviance":
            p = sigmoid(F)
            residual = y - p

            def leaf_value(idx, p=p, residual=residual):
                denom = float(np.sum(p[idx] * (1.0 - p[idx])))
                return float(np.sum(residual[idx])) / max(denom, 1e-12)
        else:
            w = np.exp(np.clip(-y_pm * F, -50, 50))
            residual = y_pm * w

            def leaf_value(idx, w=w, residual=residual):
                denom = float(np.sum(w[idx]))
                return float(np.sum(residual[idx])) / max(denom, 1e-12)

        tree = grow_regression_tree(X, residual, hp.max_depth, leaf_value)
        trees.append(tree)
        F = F + hp.learning_rate * tree_value(tree, X)
        stage_losses.append(training_loss())

    return ModelArtifact(
        family="gboost",
        hyperparams={"loss": hp.loss, "n_trees": hp.n_trees,
                     "max_depth": hp.max_depth,
                     "learning_rate": hp.learning_rate, "seed": hp.seed},
        feature_names=list(ds.feature_names),
        standardization=None,
        parameters={"f0": f0, "trees": trees},
        metadata={"n_train": n, "stage_losses": stage_losses},
    )


def score_boosting(artifact: ModelArtifact, X: np.ndarray) -> np.ndarray:
    F = np.full(X.shape[0], artifact.parameters["f0"])
    lr = artifact.hyperparams["learning_rate"]
    for tree in artifact.parameters["trees"]:
        F += lr * tree_value(tree, X)
    if artifact.hyperparams["loss"] == "deviance":
        return sigmoid(F)
    return sigmoid(2.0 * F)
