"""Matching georeferenced detections to AIS tracks and building the labeled set."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ais import AisRecord, format_timestamp, parse_timestamp
from .errors import DomainError, SchemaError
from .features import FEATURE_NAMES, FeatureRow, FeatureVector, read_feature_csv, write_feature_csv
from .geo import GeoPoint, GeoPolygon, haversine_km, polyline_intersects_polygon
from .models import DesignMatrix
from .trajectory import Trip, trip_containing

DEFAULT_WINDOW_S = 120.0


@dataclass(frozen=True)
class Detection:
    detection_id: str
    scene_time: datetime
    footprint: GeoPolygon
    barge_count: int | None = None

    def __post_init__(self):
        if self.barge_count is not None:
            if isinstance(self.barge_count, bool) or int(self.barge_count) != self.barge_count \
                    or self.barge_count < 0:
                raise DomainError(f"{self.detection_id}: barge_count must be a non-negative integer")
            object.__setattr__(self, "barge_count", int(self.barge_count))


@dataclass(frozen=True)
class Candidate:
    """Per-vessel evidence gathered for one detection."""

    vessel_id: str
    n_window_points: int
    intersects: bool
    time_offset_s: float  # smallest |t - scene_time| among windowed points
    centroid_distance_km: float
    trip_index: int | None


@dataclass(frozen=True)
class MatchResult:
    detection_id: str
    vessel_id: str
    trip: Trip | None
    within_window: bool
    intersects: bool
    candidates: tuple[Candidate, ...] = ()

    @property
    def is_match(self) -> bool:
        return self.within_window and self.intersects and self.trip is not None


def read_detections_geojson(path: str | Path) -> list[Detection]:
    """Load a FeatureCollection of Polygon detections (exterior ring only)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise SchemaError(f"{path}: expected a GeoJSON FeatureCollection")
    out = []
    for i, feat in enumerate(doc.get("features", [])):
        geom = feat.get("geometry") or {}
        props = feat.get("properties") or {}
        if geom.get("type") != "Polygon":
            raise SchemaError(f"{path}: feature {i} geometry must be a Polygon")
        for key in ("detection_id", "scene_time"):
            if key not in props:
                raise SchemaError(f"{path}: feature {i} lacks property {key!r}")
        count = props.get("barge_count")
        out.append(Detection(str(props["detection_id"]), parse_timestamp(props["scene_time"]),
                             GeoPolygon.from_lonlat(geom["coordinates"][0]), count))
    return out


def write_detections_geojson(path: str | Path, detections: Sequence[Detection]) -> None:
    feats = []
    for d in detections:
        props = {"detection_id": d.detection_id, "scene_time": format_timestamp(d.scene_time) + "Z"}
        if d.barge_count is not None:
            props["barge_count"] = d.barge_count
        ring = [[p.lon, p.lat] for p in d.footprint.exterior]
        feats.append({"type": "Feature", "geometry": {"type": "Polygon", "coordinates": [ring]},
                      "properties": props})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"type": "FeatureCollection", "features": feats}, fh, indent=1)
        fh.write("\n")


def windowed(records: Sequence[AisRecord], scene_time: datetime, window_s: float) -> list[AisRecord]:
    return [r for r in records if abs((r.timestamp - scene_time).total_seconds()) <= window_s]


def match_detection(detection: Detection, records_by_vessel: Mapping[str, Sequence[AisRecord]],
                    trips_by_vessel: Mapping[str, Sequence[Trip]],
                    window_s: float = DEFAULT_WINDOW_S) -> MatchResult | None:
    """Find the vessel whose windowed track crosses the detection footprint.

    Returns ``None`` when no vessel passes both the time-window and the
    geometric test. When several do, vessels with a trip covering the scene
    time win, then the smallest time offset, then the smallest distance to
    the footprint centroid, then vessel_id. ``is_match`` is False on the
    result when the winner has no covering trip (stationary vessel).
    """
    centroid = detection.footprint.centroid()
    candidates = []
    for vessel_id in sorted(records_by_vessel):
        pts = windowed(records_by_vessel[vessel_id], detection.scene_time, window_s)
        if not pts:
            continue
        polyline = [GeoPoint(r.lat, r.lon) for r in pts]
        hits = polyline_intersects_polygon(polyline, detection.footprint)
        offsets = [abs((r.timestamp - detection.scene_time).total_seconds()) for r in pts]
        nearest = pts[int(np.argmin(offsets))]
        trip = trip_containing(trips_by_vessel.get(vessel_id, ()), detection.scene_time)
        candidates.append(Candidate(vessel_id, len(pts), hits, min(offsets),
                                    haversine_km(GeoPoint(nearest.lat, nearest.lon), centroid),
                                    None if trip is None else trip.trip_index))
    hits = [c for c in candidates if c.intersects]
    if not hits:
        return None
    best = min(hits, key=lambda c: (c.trip_index is None, c.time_offset_s,
                                    c.centroid_distance_km, c.vessel_id))
    trip = trip_containing(trips_by_vessel.get(best.vessel_id, ()), detection.scene_time)
    return MatchResult(detection.detection_id, best.vessel_id, trip, True, True, tuple(candidates))


def match_all(detections: Sequence[Detection], records_by_vessel, trips_by_vessel,
              window_s: float = DEFAULT_WINDOW_S) -> dict[str, MatchResult | None]:
    """Match every detection; keyed and ordered by detection_id."""
    out = {}
    for det in sorted(detections, key=lambda d: d.detection_id):
        out[det.detection_id] = match_detection(det, records_by_vessel, trips_by_vessel, window_s)
    return out


@dataclass(frozen=True)
class LabeledSample:
    detection_id: str
    vessel_id: str
    trip_index: int
    features: FeatureVector
    barge_count: int | None  # None only for prediction-only rows
    trip_start: datetime | None = None
    trip_end: datetime | None = None


@dataclass
class ImputationReport:
    medians: dict[str, float]
    imputed: list[tuple[str, str]] = field(default_factory=list)  # (detection_id, feature)
    all_missing: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"medians": self.medians,
                "imputed": [list(x) for x in self.imputed],
                "all_missing": self.all_missing}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ImputationReport":
        return cls({k: float(v) for k, v in doc["medians"].items()},
                   [tuple(x) for x in doc.get("imputed", [])], list(doc.get("all_missing", [])))


def imputation_medians(vectors: Sequence[FeatureVector]) -> tuple[dict[str, float], list[str]]:
    """Per-feature median of the non-missing values; features missing everywhere get 0.0."""
    medians, all_missing = {}, []
    for name in FEATURE_NAMES:
        vals = [v[name] for v in vectors if v[name] is not None]
        if vals:
            medians[name] = float(np.median(vals))
        else:
            medians[name] = 0.0
            all_missing.append(name)
    return medians, all_missing


def impute(fv: FeatureVector, medians: Mapping[str, float]) -> tuple[FeatureVector, list[str]]:
    filled, flagged = {}, []
    for name in FEATURE_NAMES:
        value = fv[name]
        if value is None or (isinstance(value, float) and math.isnan(value)):
            filled[name] = medians[name]
            flagged.append(name)
        else:
            filled[name] = value
    return filled, flagged


def build_labeled_dataset(detections: Sequence[Detection], matches: Mapping[str, MatchResult | None],
                          feature_vectors: Mapping[tuple[str, int], FeatureVector]
                          ) -> tuple[list[LabeledSample], list[LabeledSample], ImputationReport]:
    """Labeled samples, unlabeled (prediction-only) samples and the imputation report.

    Medians come from the labeled set only and are reused for the unlabeled
    rows. Unlabeled samples carry ``barge_count = None``.
    """
    labeled_raw, unlabeled_raw = [], []
    for det in sorted(detections, key=lambda d: d.detection_id):
        m = matches.get(det.detection_id)
        if m is None or not m.is_match:
            continue
        key = (m.vessel_id, m.trip.trip_index)
        if key not in feature_vectors:
            raise DomainError(f"no feature vector for matched trip {key}")
        target = labeled_raw if det.barge_count is not None else unlabeled_raw
        target.append((det, m, feature_vectors[key]))
    if not labeled_raw:
        raise DomainError("empty training set: no labeled detection matched a trip")

    medians, all_missing = imputation_medians([fv for _, _, fv in labeled_raw])
    report = ImputationReport(medians, [], all_missing)

    def finish(rows, labeled):
        out = []
        for det, m, fv in rows:
            filled, flagged = impute(fv, medians)
            if labeled:
                report.imputed.extend((det.detection_id, name) for name in flagged)
            out.append(LabeledSample(det.detection_id, m.vessel_id, m.trip.trip_index, filled,
                                     det.barge_count,
                                     m.trip.start_time, m.trip.end_time))
        return out

    return finish(labeled_raw, True), finish(unlabeled_raw, False), report


LABEL_COLUMNS = ("barge_count", "detection_id")


def write_labeled_csv(path: str | Path, samples: Sequence[LabeledSample],
                      header_lines: Sequence[str] = ()) -> None:
    """Feature CSV layout followed by ``barge_count`` and ``detection_id``."""
    rows = [FeatureRow(s.vessel_id, s.trip_index, s.trip_start, s.trip_end, s.features,
                       {"barge_count": "" if s.barge_count is None else str(s.barge_count),
                        "detection_id": s.detection_id})
            for s in samples]
    write_feature_csv(path, rows, header_lines, LABEL_COLUMNS)


def read_labeled_csv(path: str | Path) -> list[LabeledSample]:
    rows, _ = read_feature_csv(path)
    out = []
    for r in rows:
        if "barge_count" not in r.extra:
            raise SchemaError(f"{path}: missing column 'barge_count'")
        raw = r.extra["barge_count"].strip()
        count = None if raw == "" else int(raw)
        out.append(LabeledSample(r.extra.get("detection_id", ""), r.vessel_id, r.trip_index,
                                 r.features, count, r.start_time, r.end_time))
    return out


def samples_to_design(samples: Sequence[LabeledSample], feature_names: Sequence[str] = FEATURE_NAMES):
    """Stack labeled samples into a `DesignMatrix`; missing values are an error."""
    if not samples:
        raise DomainError("empty training set")
    if any(s.barge_count is None for s in samples):
        raise DomainError("training rows must all carry a barge_count")
    X = np.array([[np.nan if s.features[n] is None else s.features[n] for n in feature_names]
                  for s in samples], dtype=float)
    if np.isnan(X).any():
        raise DomainError("labeled data still contains missing feature values; impute first")
    return DesignMatrix(X, np.array([s.barge_count for s in samples], dtype=float), feature_names)
