"""Uniform fit / predict / importance / persistence contract over four families."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import ContractError, DomainError
from .elasticnet import fit_enet_cd
from .ensemble import (adaboost_predict, fit_adaboost_r2, fit_forest, forest_predict)
from .poisson import ETA_CAP, fit_poisson_irls
from .tree import RegressionTree

SCHEMA_VERSION = 1
FAMILIES = ("poisson", "elasticnet", "random_forest", "adaboost_r2")


@dataclass
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.feature_names = tuple(self.feature_names)
        if self.X.ndim != 2:
            raise ContractError("X must be 2-D")
        if self.X.shape[0] != self.y.shape[0]:
            raise ContractError("X and y row counts differ")
        if self.X.shape[1] != len(self.feature_names):
            raise ContractError("column count does not match feature_names")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ContractError("feature names must be unique")
        if self.X.shape[0] < 2:
            raise DomainError("need at least 2 rows")
        if not np.all(np.isfinite(self.X)):
            raise DomainError("design matrix contains missing or non-finite values")
        if np.any(self.y < 0) or np.any(self.y != np.round(self.y)):
            raise DomainError("targets must be non-negative integers")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def subset(self, rows=None, columns: Sequence[str] | None = None) -> "DesignMatrix":
        X, y, names = self.X, self.y, self.feature_names
        if columns is not None:
            pos = [names.index(c) for c in columns]
            X, names = X[:, pos], tuple(columns)
        if rows is not None:
            X, y = X[rows], y[rows]
        return DesignMatrix(X, y, names)


@dataclass
class Scaler:
    means: np.ndarray
    stds: np.ndarray
    constant: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        constant = stds == 0
        return cls(means, np.where(constant, 1.0, stds), constant)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.means) / self.stds

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist(),
                "constant_flags": self.constant.tolist()}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Scaler":
        return cls(np.array(doc["means"], dtype=float), np.array(doc["stds"], dtype=float),
                   np.array(doc["constant_flags"], dtype=bool))


@dataclass
class TrainedModel:
    family: str
    feature_names: tuple[str, ...]
    scaler: Scaler
    params: dict
    hyperparams: dict
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        params = dict(self.params)
        if "trees" in params:
            params["trees"] = [t.to_dict() for t in params["trees"]]
        doc = {"schema_version": SCHEMA_VERSION, "family": self.family,
               "feature_names": list(self.feature_names), "scaler": self.scaler.to_dict(),
               "params": params, "hyperparams": self.hyperparams, "seed": self.seed}
        if self.meta:
            doc["meta"] = self.meta
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TrainedModel":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ContractError(f"unsupported model schema_version {doc.get('schema_version')}")
        if doc["family"] not in FAMILIES:
            raise ContractError(f"unknown model family {doc['family']!r}")
        params = dict(doc["params"])
        if "trees" in params:
            params["trees"] = [RegressionTree.from_dict(t) for t in params["trees"]]
        return cls(doc["family"], tuple(doc["feature_names"]), Scaler.from_dict(doc["scaler"]),
                   params, dict(doc["hyperparams"]), doc.get("seed"), dict(doc.get("meta", {})))


def save_model(model: TrainedModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=1)
        fh.write("\n")


def load_model(path: str | Path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return TrainedModel.from_dict(json.load(fh))


# -- fitting ------------------------------------------------------------------

def fit_poisson(data: DesignMatrix, l2: float = 1e-6, tol: float = 1e-8, max_iter: int = 100
                ) -> TrainedModel:
    scaler = Scaler.fit(data.X)
    res = fit_poisson_irls(scaler.transform(data.X), data.y, l2, tol, max_iter)
    params = {"intercept": float(res.beta[0]), "coef": res.beta[1:].tolist(),
              "deviance_trace": res.deviance_trace, "n_iter": res.n_iter, "converged": res.converged}
    return TrainedModel("poisson", data.feature_names, scaler, params,
                        {"l2": l2, "tol": tol, "max_iter": max_iter})


def fit_elasticnet(data: DesignMatrix, alpha: float = 1.0, l1_ratio: float = 0.5, tol: float = 1e-7,
                   max_sweeps: int = 1000) -> TrainedModel:
    scaler = Scaler.fit(data.X)
    ymean = float(data.y.mean())
    res = fit_enet_cd(scaler.transform(data.X), data.y - ymean, alpha, l1_ratio, tol, max_sweeps)
    params = {"intercept": ymean, "coef": res.coef.tolist(), "objective_trace": res.objective_trace,
              "n_sweeps": res.n_sweeps, "converged": res.converged}
    return TrainedModel("elasticnet", data.feature_names, scaler, params,
                        {"alpha": alpha, "l1_ratio": l1_ratio, "tol": tol, "max_sweeps": max_sweeps})


def fit_random_forest(data: DesignMatrix, n_trees: int = 100, mtry: int | None = None,
                      min_leaf: int = 1, max_depth: int | None = None, seed: int = 0,
                      bootstrap: bool = True) -> TrainedModel:
    p = data.X.shape[1]
    mtry = max(1, p // 3) if mtry is None else int(mtry)
    scaler = Scaler.fit(data.X)
    trees = fit_forest(scaler.transform(data.X), data.y, n_trees, mtry, min_leaf, max_depth, seed,
                       bootstrap)
    hyper = {"n_trees": n_trees, "mtry": mtry, "min_leaf": min_leaf, "max_depth": max_depth,
             "bootstrap": bootstrap}
    return TrainedModel("random_forest", data.feature_names, scaler, {"trees": trees}, hyper, seed)


def fit_adaboost(data: DesignMatrix, n_estimators: int = 50, base_depth: int = 3, seed: int = 0
                 ) -> TrainedModel:
    scaler = Scaler.fit(data.X)
    res = fit_adaboost_r2(scaler.transform(data.X), data.y, n_estimators, base_depth, seed)
    params = {"trees": res.trees, "weights": res.weights, "loss_trace": res.loss_trace,
              "stop_reason": res.stop_reason}
    return TrainedModel("adaboost_r2", data.feature_names, scaler, params,
                        {"n_estimators": n_estimators, "base_depth": base_depth}, seed)


_FITTERS = {"poisson": fit_poisson, "elasticnet": fit_elasticnet,
            "random_forest": fit_random_forest, "adaboost_r2": fit_adaboost}


def fit(family: str, data: DesignMatrix, **hyperparams: Any) -> TrainedModel:
    """Dispatch to the family's fitter; unknown hyperparameters are rejected."""
    if family not in _FITTERS:
        raise ContractError(f"unknown model family {family!r}; choose from {FAMILIES}")
    if family in ("poisson", "elasticnet"):
        hyperparams = {k: v for k, v in hyperparams.items() if k != "seed"}
    try:
        return _FITTERS[family](data, **hyperparams)
    except TypeError as exc:
        raise ContractError(f"bad hyperparameters for {family}: {exc}") from None


# -- prediction and importance ------------------------------------------------

def align_columns(model: TrainedModel, X: np.ndarray, feature_names: Sequence[str]) -> np.ndarray:
    names = tuple(feature_names)
    if set(names) != set(model.feature_names) or len(names) != len(model.feature_names):
        diff = sorted(set(names) ^ set(model.feature_names))
        raise ContractError(f"feature names do not match the model; symmetric difference: {diff}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(names):
        raise ContractError("X must be 2-D with one column per feature name")
    if names != model.feature_names:
        X = X[:, [names.index(n) for n in model.feature_names]]
    # fixed memory layout keeps BLAS summation order, hence results, identical
    return np.ascontiguousarray(X)


def predict(model: TrainedModel, X: np.ndarray, feature_names: Sequence[str] | None = None,
            round_counts: bool = False) -> np.ndarray:
    """Predicted counts, clamped at zero; ``round_counts`` is for presentation only."""
    names = model.feature_names if feature_names is None else feature_names
    X = align_columns(model, X, names)
    if not np.all(np.isfinite(X)):
        raise DomainError("prediction rows contain missing or non-finite values")
    Z = model.scaler.transform(X)
    params = model.params
    if model.family == "poisson":
        eta = params["intercept"] + Z @ np.asarray(params["coef"], dtype=float)
        out = np.exp(np.minimum(eta, ETA_CAP))
    elif model.family == "elasticnet":
        out = params["intercept"] + Z @ np.asarray(params["coef"], dtype=float)
    elif model.family == "random_forest":
        out = forest_predict(params["trees"], Z)
    elif model.family == "adaboost_r2":
        out = adaboost_predict(params["trees"], params["weights"], Z)
    else:
        raise ContractError(f"unknown model family {model.family!r}")
    out = np.maximum(out, 0.0)
    return np.round(out) if round_counts else out


def _normalized(raw: np.ndarray) -> np.ndarray:
    total = raw.sum()
    if total <= 0:
        return np.full(raw.shape, 1.0 / raw.size)
    return raw / total


def feature_importance(model: TrainedModel) -> dict[str, float]:
    """|standardised coefficient| for linear families, impurity decrease for trees."""
    params = model.params
    if model.family in ("poisson", "elasticnet"):
        scores = np.abs(np.asarray(params["coef"], dtype=float))
    elif model.family == "random_forest":
        scores = _normalized(np.sum([t.importance for t in params["trees"]], axis=0))
    elif model.family == "adaboost_r2":
        per_tree = [w * _normalized(t.importance) for t, w in zip(params["trees"], params["weights"])]
        scores = _normalized(np.sum(per_tree, axis=0))
    else:
        raise ContractError(f"unknown model family {model.family!r}")
    return {name: float(s) for name, s in zip(model.feature_names, scores)}
