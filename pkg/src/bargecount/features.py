"""Trip-level kinematic, geometric and interaction features.

A feature vector maps each name in `FEATURE_NAMES` to a float, or to ``None``
when the value cannot be computed for that trip. Nothing is silently zeroed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ais import format_timestamp, parse_timestamp
from .errors import DomainError, SchemaError
from .geo import KM_PER_NMI, GeoPoint, haversine_km, signed_angle_diff_array, unwrap_angles
from .trajectory import Trip

SIZE_FEATURES = ("LEN", "WID", "DFT")
SPEED_FEATURES = ("SOG_MEAN", "SOG_MED", "SOG_STD", "SOG_IQR", "SOG_MAD", "SOG_MAX", "SOG_MIN",
                  "SOG_RANGE", "SOG_CV", "SOG_PCT_LOW", "SOG_PCT_HIGH", "SOG_PCT_OPT", "SOG_ENT")
ACCEL_FEATURES = ("ACC_POS_MEAN", "ACC_NEG_MEAN", "ACC_STD", "ACC_MIN", "ACC_ZC")
COURSE_FEATURES = ("COG_STD", "COG_ENT", "TRN_STD", "COG_TOTAL_CHANGE",
                   "COG_HDG_DIFF_MEAN", "COG_HDG_DIFF_STD")
GEOMETRY_FEATURES = ("DUR_HRS", "DIST_KM", "DIST_HAVERSINE_KM", "SINO_IDX")
INTERACTION_FEATURES = ("AREA", "DLT_RATIO", "DUR_SOGCV", "SOG_LEN", "SOGSTD_DFT",
                        "SOG_WID", "SOG_MEAN_SQ", "DFT_SQ")
FEATURE_NAMES = (SIZE_FEATURES + SPEED_FEATURES + ACCEL_FEATURES + COURSE_FEATURES
                 + GEOMETRY_FEATURES + INTERACTION_FEATURES)

FeatureVector = dict  # name -> float | None, ordered as FEATURE_NAMES


@dataclass(frozen=True)
class FeatureConfig:
    entropy_bins_speed: int = 10
    entropy_bins_course: int = 36
    low_speed_kn: float = 2.0
    high_speed_kn: float = 8.0
    optimal_low_kn: float = 4.0
    optimal_high_kn: float = 8.0
    min_direct_km: float = 0.05

    def __post_init__(self):
        if self.entropy_bins_speed < 2 or self.entropy_bins_course < 2:
            raise DomainError("entropy bin counts must be >= 2")
        if not self.low_speed_kn < self.high_speed_kn:
            raise DomainError("low_speed_kn must be < high_speed_kn")
        if not self.optimal_low_kn < self.optimal_high_kn:
            raise DomainError("optimal speed range is empty")
        if self.min_direct_km < 0:
            raise DomainError("min_direct_km must be >= 0")

    def header_lines(self) -> list[str]:
        return [f"features.{k}={v}" for k, v in asdict(self).items()]

    @classmethod
    def from_mapping(cls, values) -> "FeatureConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        kw = {}
        for k, v in values.items():
            if k in kinds:
                kw[k] = int(v) if kinds[k] in (int, "int") else float(v)
        return cls(**kw)


# -- small statistics helpers -------------------------------------------------

def _sample_std(x: np.ndarray) -> float | None:
    if x.size < 2:
        return None
    return float(np.std(x, ddof=1))


def shannon_entropy(counts: np.ndarray) -> float:
    """Entropy in bits of a histogram; empty bins contribute nothing."""
    total = counts.sum()
    p = counts[counts > 0] / total
    h = float(-(p * np.log2(p)).sum())
    return max(h, 0.0)


BIN_EDGE_TOL = 1e-9


def speed_bin_counts(speeds: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width histogram over the series' own [min, max]; last bin closed."""
    lo, hi = speeds.min(), speeds.max()
    if hi == lo:
        counts = np.zeros(bins)
        counts[0] = speeds.size
        return counts
    # values within BIN_EDGE_TOL of an edge count as on it, so rescaling the
    # series cannot push a boundary value into the lower bin through rounding
    idx = np.floor(bins * (speeds - lo) / (hi - lo) + BIN_EDGE_TOL).astype(int)
    idx = np.clip(idx, 0, bins - 1)
    return np.bincount(idx, minlength=bins).astype(float)


def course_bin_counts(courses: np.ndarray, bins: int) -> np.ndarray:
    """Fixed world bins partitioning [0, 360)."""
    idx = np.floor(np.mod(courses, 360.0) * bins / 360.0).astype(int)
    idx = np.clip(idx, 0, bins - 1)
    return np.bincount(idx, minlength=bins).astype(float)


def _trip_arrays(trip: Trip):
    t0 = trip.records[0].timestamp
    t = np.array([(r.timestamp - t0).total_seconds() for r in trip.records])
    s = np.array([r.sog for r in trip.records])
    c = np.array([r.cog for r in trip.records])
    return t, s, c


def _time_weights(t: np.ndarray) -> np.ndarray:
    gaps = np.diff(t)
    return np.append(gaps, gaps.mean())


# -- feature families ---------------------------------------------------------

def speed_features(trip: Trip, cfg: FeatureConfig = FeatureConfig()) -> dict:
    if len(trip) < 2:
        raise DomainError("speed features need n >= 2")
    t, s, _ = _trip_arrays(trip)
    mean = float(s.mean())
    med = float(np.median(s))
    std = float(np.std(s, ddof=1))
    q1, q3 = np.quantile(s, [0.25, 0.75])
    smax, smin = float(s.max()), float(s.min())
    w = _time_weights(t)
    total = w.sum()

    def pct(mask):
        return float(100.0 * w[mask].sum() / total)

    return {
        "SOG_MEAN": mean,
        "SOG_MED": med,
        "SOG_STD": std,
        "SOG_IQR": float(q3 - q1),
        "SOG_MAD": float(np.median(np.abs(s - med))),
        "SOG_MAX": smax,
        "SOG_MIN": smin,
        "SOG_RANGE": smax - smin,
        "SOG_CV": std / mean if mean != 0 else None,
        "SOG_PCT_LOW": pct(s < cfg.low_speed_kn),
        "SOG_PCT_HIGH": pct(s > cfg.high_speed_kn),
        "SOG_PCT_OPT": pct((s >= cfg.optimal_low_kn) & (s <= cfg.optimal_high_kn)),
        "SOG_ENT": shannon_entropy(speed_bin_counts(s, cfg.entropy_bins_speed)),
    }


def accelerations(trip: Trip) -> np.ndarray:
    """Per-step acceleration in knots per minute."""
    t, s, _ = _trip_arrays(trip)
    dt_min = np.diff(t) / 60.0
    if np.any(dt_min <= 0):
        raise DomainError("non-increasing timestamps inside trip")
    return np.diff(s) / dt_min


def sign_changes(values: np.ndarray) -> int:
    """Positive/negative reversals, ignoring exact zeros."""
    signs = np.sign(values)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def acceleration_features(trip: Trip) -> dict:
    if len(trip) < 2:
        raise DomainError("acceleration features need n >= 2")
    a = accelerations(trip)
    pos, neg = a[a > 0], a[a < 0]
    return {
        "ACC_POS_MEAN": float(pos.mean()) if pos.size else None,
        "ACC_NEG_MEAN": float(neg.mean()) if neg.size else None,
        "ACC_STD": _sample_std(a),
        "ACC_MIN": float(a.min()),
        "ACC_ZC": float(sign_changes(a)) if a.size >= 2 else None,
    }


def course_features(trip: Trip, cfg: FeatureConfig = FeatureConfig()) -> dict:
    if len(trip) < 2:
        raise DomainError("course features need n >= 2")
    t, _, c = _trip_arrays(trip)
    turns = signed_angle_diff_array(c[:-1], c[1:])
    rates = np.abs(turns / (np.diff(t) / 60.0))

    with_heading = [(r.heading, r.cog) for r in trip.records if r.heading is not None]
    if len(with_heading) >= 2:
        h, hc = np.array(with_heading).T
        offsets = signed_angle_diff_array(h, hc)
        hdg_mean, hdg_std = float(offsets.mean()), float(np.std(offsets, ddof=1))
    else:
        hdg_mean = hdg_std = None

    return {
        "COG_STD": float(np.std(unwrap_angles(c), ddof=1)),
        "COG_ENT": shannon_entropy(course_bin_counts(c, cfg.entropy_bins_course)),
        "TRN_STD": _sample_std(rates),
        "COG_TOTAL_CHANGE": float(np.abs(turns).sum()),
        "COG_HDG_DIFF_MEAN": hdg_mean,
        "COG_HDG_DIFF_STD": hdg_std,
    }


def trip_geometry_features(trip: Trip, cfg: FeatureConfig = FeatureConfig()) -> dict:
    if len(trip) < 2:
        raise DomainError("geometry features need n >= 2")
    t, s, _ = _trip_arrays(trip)
    dt_hrs = np.diff(t) / 3600.0
    path_km = float(((s[:-1] + s[1:]) / 2 * dt_hrs).sum() * KM_PER_NMI)
    first, last = trip.records[0], trip.records[-1]
    direct = haversine_km(GeoPoint(first.lat, first.lon), GeoPoint(last.lat, last.lon))
    return {
        "DUR_HRS": float(t[-1] / 3600.0),
        "DIST_KM": path_km,
        "DIST_HAVERSINE_KM": direct,
        "SINO_IDX": path_km / direct if direct >= cfg.min_direct_km else None,
    }


def _mul(*factors):
    if any(f is None for f in factors):
        return None
    out = 1.0
    for f in factors:
        out *= f
    return out


def static_and_interaction_features(trip: Trip, speed: dict, geometry: dict) -> dict:
    length, width, draft = trip.length_m, trip.width_m, trip.draft_m
    if draft is None or length is None or length == 0:
        dl_ratio = None
    else:
        dl_ratio = draft / length
    return {
        "LEN": length,
        "WID": width,
        "DFT": draft,
        "AREA": _mul(length, width),
        "DLT_RATIO": dl_ratio,
        "DUR_SOGCV": _mul(geometry["DUR_HRS"], speed["SOG_CV"]),
        "SOG_LEN": _mul(speed["SOG_MEAN"], length),
        "SOGSTD_DFT": _mul(speed["SOG_STD"], draft),
        "SOG_WID": _mul(speed["SOG_MEAN"], width),
        "SOG_MEAN_SQ": _mul(speed["SOG_MEAN"], speed["SOG_MEAN"]),
        "DFT_SQ": _mul(draft, draft),
    }


def extract_all(trip: Trip, cfg: FeatureConfig = FeatureConfig()) -> FeatureVector:
    """All 39 features for one trip, in `FEATURE_NAMES` order."""
    speed = speed_features(trip, cfg)
    geometry = trip_geometry_features(trip, cfg)
    merged = {**speed, **acceleration_features(trip), **course_features(trip, cfg), **geometry,
              **static_and_interaction_features(trip, speed, geometry)}
    return {name: merged[name] for name in FEATURE_NAMES}


def check_invariants(fv: FeatureVector, cfg: FeatureConfig = FeatureConfig(), tol: float = 1e-9
                     ) -> list[str]:
    """Return human-readable violations of the feature-vector invariants (empty if none)."""
    bad = []

    def get(name):
        return fv.get(name)

    if set(fv) != set(FEATURE_NAMES):
        bad.append("feature names differ from the 39 expected")
        return bad
    if not get("SOG_MIN") <= get("SOG_MED") <= get("SOG_MAX"):
        bad.append("SOG_MIN <= SOG_MED <= SOG_MAX violated")
    if not math.isclose(get("SOG_RANGE"), get("SOG_MAX") - get("SOG_MIN"), rel_tol=tol, abs_tol=tol):
        bad.append("SOG_RANGE != SOG_MAX - SOG_MIN")
    for name in ("SOG_STD", "SOG_IQR", "SOG_MAD", "ACC_STD", "TRN_STD", "COG_STD"):
        if get(name) is not None and get(name) < 0:
            bad.append(f"{name} negative")
    if not 0 <= get("SOG_ENT") <= math.log2(cfg.entropy_bins_speed) + tol:
        bad.append("SOG_ENT out of bounds")
    if not 0 <= get("COG_ENT") <= math.log2(cfg.entropy_bins_course) + tol:
        bad.append("COG_ENT out of bounds")
    for name in ("SOG_PCT_LOW", "SOG_PCT_HIGH", "SOG_PCT_OPT"):
        if not -tol <= get(name) <= 100 + tol:
            bad.append(f"{name} outside [0, 100]")
    if get("SINO_IDX") is not None and get("SINO_IDX") < 1 - 1e-6:
        bad.append("SINO_IDX < 1")
    pairs = [("AREA", _mul(get("LEN"), get("WID"))), ("DFT_SQ", _mul(get("DFT"), get("DFT"))),
             ("SOG_MEAN_SQ", _mul(get("SOG_MEAN"), get("SOG_MEAN")))]
    for name, expected in pairs:
        value = get(name)
        if (value is None) != (expected is None) or (
                value is not None and not math.isclose(value, expected, rel_tol=tol, abs_tol=tol)):
            bad.append(f"{name} inconsistent with its factors")
    return bad


# -- CSV persistence ----------------------------------------------------------

META_COLUMNS = ("vessel_id", "trip_index", "start_time", "end_time")


def format_value(value) -> str:
    return "" if value is None else repr(float(value))


def parse_value(text: str) -> float | None:
    text = text.strip()
    return None if text == "" else float(text)


@dataclass
class FeatureRow:
    vessel_id: str
    trip_index: int
    start_time: object
    end_time: object
    features: FeatureVector
    extra: dict


def feature_row(trip: Trip, fv: FeatureVector) -> FeatureRow:
    return FeatureRow(trip.vessel_id, trip.trip_index, trip.start_time, trip.end_time, fv, {})


def write_feature_csv(path: str | Path, rows: Iterable[FeatureRow], header_lines: Sequence[str] = (),
                      extra_columns: Sequence[str] = ()) -> None:
    """One row per trip: meta columns, the 39 features, then ``extra_columns``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*META_COLUMNS, *FEATURE_NAMES, *extra_columns])
        for row in rows:
            writer.writerow([row.vessel_id, row.trip_index, format_timestamp(row.start_time),
                             format_timestamp(row.end_time),
                             *(format_value(row.features[n]) for n in FEATURE_NAMES),
                             *(row.extra.get(c, "") for c in extra_columns)])


def read_feature_csv(path: str | Path) -> tuple[list[FeatureRow], list[str]]:
    """Read a feature CSV; returns rows and the ``#`` header lines (without the marker)."""
    header: list[str] = []
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                header.append(line[1:].strip())
            else:
                lines.append(line)
    reader = csv.DictReader(lines)
    cols = reader.fieldnames or []
    missing = [c for c in (*META_COLUMNS, *FEATURE_NAMES) if c not in cols]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    extra_cols = [c for c in cols if c not in META_COLUMNS and c not in FEATURE_NAMES]
    for row in reader:
        try:
            fv = {n: parse_value(row[n]) for n in FEATURE_NAMES}
        except ValueError as exc:
            raise SchemaError(f"{path}: non-numeric feature value ({exc})") from None
        rows.append(FeatureRow(row["vessel_id"], int(row["trip_index"]),
                               parse_timestamp(row["start_time"]), parse_timestamp(row["end_time"]),
                               fv, {c: row[c] for c in extra_cols}))
    return rows, header
