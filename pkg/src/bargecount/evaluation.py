"""Stratified k-fold CV, MAE, recursive feature elimination and selection tallies."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import BargeCountError, ContractError, DomainError
from .models import DesignMatrix, feature_importance, fit, predict


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    folds: np.ndarray  # fold index per sample
    seed: int
    strata: tuple[tuple[int, ...], ...] = ()  # count values pooled into each stratum

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.folds == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.folds != fold)


def _merge_strata(targets: np.ndarray, k: int) -> list[list[int]]:
    """Pool sparse count values with their nearest neighbour until each has >= k members.

    Scans in ascending count order; equal distances merge upward.
    """
    values, counts = np.unique(targets, return_counts=True)
    groups = [[int(v)] for v in values]
    sizes = [int(c) for c in counts]
    while len(groups) > 1:
        sparse = next((i for i, s in enumerate(sizes) if s < k), None)
        if sparse is None:
            break
        if sparse == 0:
            other = 1
        elif sparse == len(groups) - 1:
            other = sparse - 1
        else:
            down = groups[sparse][0] - groups[sparse - 1][-1]
            up = groups[sparse + 1][0] - groups[sparse][-1]
            other = sparse + 1 if up <= down else sparse - 1
        lo, hi = sorted((sparse, other))
        groups[lo:hi + 1] = [groups[lo] + groups[hi]]
        sizes[lo:hi + 1] = [sizes[lo] + sizes[hi]]
    return groups


def stratified_kfold(targets: Sequence[int], k: int, seed: int = 0) -> FoldAssignment:
    """Shuffle each stratum with ``seed`` and deal its members round-robin.

    The deal continues from the fold where the previous stratum stopped so
    overall fold sizes also differ by at most one.
    """
    y = np.asarray(targets)
    if k < 2:
        raise DomainError("k must be >= 2")
    if y.size < k:
        raise DomainError(f"{y.size} samples cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    folds = np.full(y.size, -1, dtype=int)
    groups = _merge_strata(y, k)
    cursor = 0
    for group in groups:
        members = np.flatnonzero(np.isin(y, group))
        rng.shuffle(members)
        for m in members:
            folds[m] = cursor % k
            cursor += 1
    return FoldAssignment(k, folds, seed, tuple(tuple(g) for g in groups))


def mae(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean absolute error between true and predicted counts."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1:
        raise ContractError(f"length mismatch: {a.shape} vs {p.shape}")
    if a.size == 0:
        raise ContractError("mae needs at least one value")
    return float(np.mean(np.abs(a - p)))


@dataclass
class FoldResult:
    fold: int
    n: int
    mae: float | None
    error: str | None = None


@dataclass
class CvReport:
    family: str
    k: int
    seed: int
    features: tuple[str, ...]
    per_fold: list[FoldResult]
    mean_mae: float
    warning: str | None = None

    @property
    def fold_maes(self) -> list[float]:
        return [f.mae for f in self.per_fold if f.mae is not None]

    def to_dict(self) -> dict:
        doc = {"family": self.family, "k": self.k, "seed": self.seed,
               "per_fold": [{"fold": f.fold, "n": f.n, "mae": f.mae} | ({"error": f.error} if f.error else {})
                            for f in self.per_fold],
               "mean_mae": self.mean_mae, "selected_features": list(self.features)}
        if self.warning:
            doc["warning"] = self.warning
        return doc


def cross_validate(data: DesignMatrix, family: str, hyperparams: Mapping | None = None,
                   folds: FoldAssignment | None = None, k: int = 2, seed: int = 0) -> CvReport:
    """Fit on k-1 folds, score MAE on the held-out fold, for every fold."""
    hyperparams = dict(hyperparams or {})
    if folds is None:
        folds = stratified_kfold(data.y, k, seed)
    if folds.folds.size != data.n:
        raise ContractError("fold assignment does not match the data")
    results = []
    for f in range(folds.k):
        test, train = folds.test_indices(f), folds.train_indices(f)
        try:
            model = fit(family, data.subset(train), **hyperparams)
            pred = predict(model, data.X[test], data.feature_names)
            results.append(FoldResult(f, test.size, mae(data.y[test], pred)))
        except BargeCountError as exc:
            if isinstance(exc, ContractError):
                raise
            results.append(FoldResult(f, test.size, None, str(exc)))
    ok = [r.mae for r in results if r.mae is not None]
    warning = None
    if len(ok) < len(results):
        warning = f"{len(results) - len(ok)} of {len(results)} folds failed; mean over the rest"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    mean = float(np.mean(ok)) if ok else float("nan")
    return CvReport(family, folds.k, folds.seed, data.feature_names, results, mean, warning)


@dataclass
class RfecvStep:
    n_features: int
    features: tuple[str, ...]
    score: float  # -mean MAE
    eliminated: str | None


@dataclass
class RfecvResult:
    family: str
    k: int
    seed: int
    trace: list[RfecvStep]
    selected: tuple[str, ...]
    elimination_order: list[str] = field(default_factory=list)

    @property
    def n_selected(self) -> int:
        return len(self.selected)

    def to_dict(self) -> dict:
        return {"family": self.family, "k": self.k, "seed": self.seed,
                "selected_features": list(self.selected), "n_selected": self.n_selected,
                "elimination_order": self.elimination_order,
                "score_trace": [{"n_features": s.n_features, "score": s.score,
                                 "features": list(s.features), "eliminated": s.eliminated}
                                for s in self.trace]}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "RfecvResult":
        trace = [RfecvStep(s["n_features"], tuple(s["features"]), s["score"], s["eliminated"])
                 for s in doc["score_trace"]]
        return cls(doc["family"], doc["k"], doc["seed"], trace, tuple(doc["selected_features"]),
                   list(doc.get("elimination_order", [])))


def choose_subset_size(trace: Sequence[RfecvStep]) -> RfecvStep:
    """Highest score wins; ties go to the smaller subset."""
    return max(trace, key=lambda s: (s.score, -s.n_features))


def rfecv(data: DesignMatrix, family: str, hyperparams: Mapping | None = None, k: int = 2,
          seed: int = 0) -> RfecvResult:
    """Drop the least important feature one at a time, scoring each subset by CV.

    Importances come from a fit on all rows with the current subset. On equal
    importance the alphabetically last feature goes first.
    """
    hyperparams = dict(hyperparams or {})
    folds = stratified_kfold(data.y, k, seed)
    current = list(data.feature_names)
    trace, order = [], []
    while True:
        sub = data.subset(columns=current)
        report = cross_validate(sub, family, hyperparams, folds)
        score = -report.mean_mae
        if len(current) == 1:
            trace.append(RfecvStep(1, tuple(current), score, None))
            break
        imp = feature_importance(fit(family, sub, **hyperparams))
        drop = min(current, key=lambda name: (imp[name], _reverse_key(name)))
        trace.append(RfecvStep(len(current), tuple(current), score, drop))
        order.append(drop)
        current.remove(drop)
    best = choose_subset_size(trace)
    return RfecvResult(family, k, seed, trace, best.features, order)


def _reverse_key(name: str):
    # min() over this picks the alphabetically last name
    return tuple(-ord(ch) for ch in name) + (1,)


def selection_frequency(results: Mapping[str, RfecvResult] | Sequence[RfecvResult]
                        ) -> list[tuple[str, int]]:
    """How many families kept each feature; most frequent first, ties alphabetical."""
    items = results.values() if isinstance(results, Mapping) else results
    counts: dict[str, int] = {}
    for res in items:
        for name in res.selected:
            counts[name] = counts.get(name, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def format_table(rows: Sequence[Sequence], headers: Sequence[str]) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
