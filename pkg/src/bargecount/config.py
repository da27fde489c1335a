"""Flat ``key = value`` pipeline configuration.

Precedence: command-line flag > config file > built-in default.
"""
from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import Any, Callable, Mapping

from .errors import DomainError
from .features import FeatureConfig
from .fusion import DEFAULT_WINDOW_S
from .synth import SynthConfig
from .trajectory import StopParams


def _opt_int(text: Any) -> int | None:
    if text is None or str(text).strip().lower() in ("", "none", "auto"):
        return None
    return int(text)


def _bool(text: Any) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _from_dataclass(prefix: str, cls) -> dict[str, tuple[Callable, Any]]:
    out = {}
    for f in fields(cls):
        default = f.default
        kind = {"int": int, "float": float, "bool": _bool}.get(str(f.type), float)
        out[f"{prefix}.{f.name}"] = (kind, default)
    return out


# key -> (parser, default)
SCHEMA: dict[str, tuple[Callable, Any]] = {
    **_from_dataclass("stop", StopParams),
    **_from_dataclass("features", FeatureConfig),
    "fusion.window_s": (float, DEFAULT_WINDOW_S),
    "cv.k": (int, 2),
    "cv.seed": (int, 0),
    "model.family": (str, "poisson"),
    "model.poisson.l2": (float, 1e-6),
    "model.poisson.tol": (float, 1e-8),
    "model.poisson.max_iter": (int, 100),
    "model.elasticnet.alpha": (float, 1.0),
    "model.elasticnet.l1_ratio": (float, 0.5),
    "model.elasticnet.tol": (float, 1e-7),
    "model.elasticnet.max_sweeps": (int, 1000),
    "model.random_forest.n_trees": (int, 100),
    "model.random_forest.mtry": (_opt_int, None),
    "model.random_forest.min_leaf": (int, 1),
    "model.random_forest.max_depth": (_opt_int, None),
    "model.adaboost_r2.n_estimators": (int, 50),
    "model.adaboost_r2.base_depth": (int, 3),
    **_from_dataclass("synth", SynthConfig),
}


def parse_config_file(path: str | Path) -> dict[str, Any]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in SCHEMA:
                raise DomainError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = value
    return out


def resolve(cli: Mapping[str, Any], file_values: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Effective configuration; ``None`` CLI values mean 'not given'."""
    out = {}
    for key, (parse, default) in SCHEMA.items():
        if cli.get(key) is not None:
            raw = cli[key]
        elif file_values and key in file_values:
            raw = file_values[key]
        else:
            out[key] = default
            continue
        try:
            out[key] = parse(raw)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"bad value for {key}: {raw!r} ({exc})") from None
    return out


def section(cfg: Mapping[str, Any], prefix: str) -> dict[str, Any]:
    n = len(prefix) + 1
    return {k[n:]: v for k, v in cfg.items() if k.startswith(prefix + ".")}


def stop_params(cfg: Mapping[str, Any]) -> StopParams:
    return StopParams(**section(cfg, "stop"))


def feature_config(cfg: Mapping[str, Any]) -> FeatureConfig:
    return FeatureConfig(**section(cfg, "features"))


def synth_config(cfg: Mapping[str, Any]) -> SynthConfig:
    return SynthConfig(**section(cfg, "synth"))


def model_hyperparams(cfg: Mapping[str, Any], family: str) -> dict[str, Any]:
    hyper = section(cfg, f"model.{family}")
    if family in ("random_forest", "adaboost_r2"):
        hyper["seed"] = cfg["cv.seed"]
    return hyper


def header_lines(cfg: Mapping[str, Any], prefixes: tuple[str, ...]) -> list[str]:
    return [f"{k}={cfg[k]}" for k in sorted(cfg) if k.startswith(prefixes)]
