"""Ridge-stabilised Poisson regression (log link) fitted by IRLS."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, NumericError

ETA_CAP = 700.0


def _design(Z: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(Z.shape[0]), Z])


def penalized_loglik(beta: np.ndarray, Z: np.ndarray, y: np.ndarray, l2: float) -> float:
    """sum(y*eta - exp(eta)) - l2*||slopes||^2 (constant log(y!) dropped)."""
    eta = _design(Z) @ beta
    return float(np.sum(y * eta - np.exp(eta)) - l2 * np.sum(beta[1:] ** 2))


def penalized_gradient(beta: np.ndarray, Z: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    X = _design(Z)
    g = X.T @ (y - np.exp(X @ beta))
    g[1:] -= 2.0 * l2 * beta[1:]
    return g


def penalized_deviance(beta: np.ndarray, Z: np.ndarray, y: np.ndarray, l2: float) -> float:
    mu = np.exp(np.minimum(_design(Z) @ beta, ETA_CAP))
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(y > 0, y * np.log(y / mu), 0.0)
    return float(2.0 * np.sum(term - (y - mu)) + 2.0 * l2 * np.sum(beta[1:] ** 2))


@dataclass
class IrlsResult:
    beta: np.ndarray  # intercept first
    deviance_trace: list[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False


def fit_poisson_irls(Z: np.ndarray, y: np.ndarray, l2: float = 1e-6, tol: float = 1e-8,
                     max_iter: int = 100) -> IrlsResult:
    """Newton/IRLS with step halving on the penalised deviance.

    ``Z`` is expected to be standardised; the intercept is never penalised.
    Starts from the intercept-only MLE, so a zero-column ``Z`` returns
    log(mean(y)) immediately.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    if l2 < 0:
        raise DomainError("l2 must be >= 0")
    if np.any(y < 0):
        raise DomainError("Poisson targets must be non-negative")
    if not np.any(y > 0):
        raise DomainError("all targets are zero: Poisson intercept is unbounded below")
    X = _design(Z)
    p1 = X.shape[1]
    beta = np.zeros(p1)
    beta[0] = np.log(y.mean())
    penalty = np.full(p1, 2.0 * l2)
    penalty[0] = 0.0
    dev = penalized_deviance(beta, Z, y, l2)
    result = IrlsResult(beta, [dev])
    for it in range(1, max_iter + 1):
        mu = np.exp(np.minimum(X @ beta, ETA_CAP))
        grad = X.T @ (y - mu) - penalty * beta
        hess = (X * mu[:, None]).T @ X + np.diag(penalty)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"singular IRLS system: {exc}") from None
        if not np.all(np.isfinite(step)):
            raise NumericError("non-finite IRLS step")
        t = 1.0
        while True:
            cand = beta + t * step
            new_dev = penalized_deviance(cand, Z, y, l2)
            if np.isfinite(new_dev) and new_dev <= dev:
                break
            t *= 0.5
            if t < 1e-10:
                cand, new_dev = beta, dev
                break
        change = dev - new_dev
        beta, dev = cand, new_dev
        result.deviance_trace.append(dev)
        result.n_iter = it
        if change < tol:
            result.converged = True
            break
    result.beta = beta
    return result
