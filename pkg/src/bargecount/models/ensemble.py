"""Bagged forests and AdaBoost.R2 built on `tree.fit_tree`."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tree import RegressionTree, fit_tree

# weight given to an estimator with zero average loss (log((1-eps)/eps), eps=1e-10)
MAX_ESTIMATOR_WEIGHT = math.log((1 - 1e-10) / 1e-10)


def fit_forest(X: np.ndarray, y: np.ndarray, n_trees: int = 100, mtry: int | None = None,
               min_leaf: float = 1.0, max_depth: int | None = None, seed: int = 0,
               bootstrap: bool = True) -> list[RegressionTree]:
    """Tree ``i`` draws everything from ``default_rng(seed + i)``."""
    n, p = X.shape
    if mtry is None:
        mtry = max(1, p // 3)
    trees = []
    for i in range(n_trees):
        rng = np.random.default_rng(seed + i)
        if bootstrap:
            w = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
        else:
            w = np.ones(n)
        trees.append(fit_tree(X, y, w, mtry=mtry, min_leaf=min_leaf, max_depth=max_depth, rng=rng))
    return trees


def forest_predict(trees: list[RegressionTree], X: np.ndarray) -> np.ndarray:
    return np.mean([t.predict(X) for t in trees], axis=0)


@dataclass
class BoostResult:
    trees: list[RegressionTree]
    weights: list[float]
    loss_trace: list[float] = field(default_factory=list)  # average loss of every attempted round
    stop_reason: str = "n_estimators"


def fit_adaboost_r2(X: np.ndarray, y: np.ndarray, n_estimators: int = 50, base_depth: int = 3,
                    seed: int = 0) -> BoostResult:
    """AdaBoost.R2 with the linear loss.

    Every round resamples the training rows in proportion to the current
    sample weights. A round whose average loss reaches 0.5 is discarded and
    ends boosting, except in round one where the tree is kept with weight 1
    so the model is never empty.
    """
    n = len(y)
    rng = np.random.default_rng(seed)
    sw = np.full(n, 1.0 / n)
    out = BoostResult([], [])
    for _ in range(n_estimators):
        counts = np.bincount(rng.choice(n, size=n, p=sw), minlength=n).astype(float)
        tree = fit_tree(X, y, counts, max_depth=base_depth)
        err = np.abs(tree.predict(X) - y)
        max_err = err.max()
        if max_err == 0.0:
            out.loss_trace.append(0.0)
            out.trees.append(tree)
            out.weights.append(MAX_ESTIMATOR_WEIGHT)
            out.stop_reason = "perfect_fit"
            break
        loss = err / max_err
        avg = float(np.sum(sw * loss))
        out.loss_trace.append(avg)
        if avg >= 0.5:
            if not out.trees:
                out.trees.append(tree)
                out.weights.append(1.0)
            out.stop_reason = "average_loss"
            break
        if avg <= 0.0:
            out.trees.append(tree)
            out.weights.append(MAX_ESTIMATOR_WEIGHT)
            out.stop_reason = "perfect_fit"
            break
        beta = avg / (1.0 - avg)
        out.trees.append(tree)
        out.weights.append(min(math.log(1.0 / beta), MAX_ESTIMATOR_WEIGHT))
        sw = sw * np.power(beta, 1.0 - loss)
        sw /= sw.sum()
    return out


def weighted_median(preds: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Column-wise weighted median of ``preds`` (estimators x samples).

    Takes the smallest prediction whose cumulative weight reaches half the total.
    """
    order = np.argsort(preds, axis=0, kind="mergesort")
    sorted_preds = np.take_along_axis(preds, order, axis=0)
    cum = np.cumsum(weights[order], axis=0)
    pick = np.argmax(cum >= 0.5 * cum[-1], axis=0)
    return sorted_preds[pick, np.arange(preds.shape[1])]


def adaboost_predict(trees: list[RegressionTree], weights, X: np.ndarray) -> np.ndarray:
    preds = np.array([t.predict(X) for t in trees])
    return weighted_median(preds, np.asarray(weights, dtype=float))
