"""Synthetic tow trajectories in which larger tows steer and pace more smoothly.

The effect sizes are test fixtures: 0.15 kn of speed lost per barge, and
course/speed noise shrinking as 1/(1 + barge_count). They exist so the
pipeline has recoverable signal, not to model real towboats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .ais import AisRecord
from .errors import DomainError
from .features import FeatureConfig, extract_all
from .fusion import Detection, LabeledSample, impute, imputation_medians
from .geo import GeoPoint, GeoPolygon, KM_PER_NMI, destination
from .models import DesignMatrix
from .trajectory import Trip

EPOCH = datetime(2023, 6, 1, tzinfo=timezone.utc)
SPEED_LOSS_PER_BARGE_KN = 0.15
MIN_MOVING_SPEED_KN = 1.5


@dataclass(frozen=True)
class SynthConfig:
    n_samples: int = 200
    barge_count_min: int = 0
    barge_count_max: int = 12
    base_speed_kn: float = 6.0
    course_noise_scale: float = 20.0  # degrees, for an empty tow
    speed_noise_scale: float = 0.15  # coefficient of variation, for an empty tow
    ping_interval_s: float = 60.0
    duration_min_hrs: float = 1.5
    duration_max_hrs: float = 4.0
    meander_amplitude_deg: float = 12.0
    meander_period_min: float = 45.0
    heading_missing_rate: float = 0.05
    skew: bool = True
    seed: int = 0
    origin_lat: float = 38.60
    origin_lon: float = -90.18

    def __post_init__(self):
        if self.n_samples < 1:
            raise DomainError("n_samples must be >= 1")
        if not 0 <= self.barge_count_min <= self.barge_count_max:
            raise DomainError("barge count range is empty or negative")
        if not self.ping_interval_s > 0:
            raise DomainError("ping_interval_s must be > 0")
        if not 0 < self.duration_min_hrs <= self.duration_max_hrs:
            raise DomainError("trip duration range is empty")

    def header_lines(self) -> list[str]:
        return [f"synth.{k}={getattr(self, k)}" for k in self.__dataclass_fields__]


def _vessel_id(index: int) -> str:
    return f"3670{index:05d}"


def _statics(barge_count: int) -> tuple[float, float, float]:
    return 20.0 + 5.0 * barge_count, 8.0 + 0.8 * barge_count, 2.0 + 0.1 * barge_count


def simulate_moving_records(barge_count: int, cfg: SynthConfig, rng: np.random.Generator,
                            n_points: int, start: datetime, origin: GeoPoint,
                            vessel_id: str) -> list[AisRecord]:
    """Integrate a noisy meandering course at the tow's characteristic speed."""
    length, width, draft = _statics(barge_count)
    mean_speed = max(cfg.base_speed_kn - SPEED_LOSS_PER_BARGE_KN * barge_count,
                     MIN_MOVING_SPEED_KN + 0.5)
    course_sd = cfg.course_noise_scale / (1 + barge_count)
    speed_cv = cfg.speed_noise_scale / (1 + barge_count)
    base_course = rng.uniform(0.0, 360.0)
    phase = rng.uniform(0.0, 2 * math.pi)
    dt = cfg.ping_interval_s
    minutes = np.arange(n_points) * dt / 60.0
    courses = (base_course + cfg.meander_amplitude_deg
               * np.sin(2 * math.pi * minutes / cfg.meander_period_min + phase)
               + rng.normal(0.0, course_sd, n_points)) % 360.0
    speeds = np.maximum(mean_speed * (1.0 + speed_cv * rng.normal(size=n_points)),
                        MIN_MOVING_SPEED_KN)
    speeds = np.round(speeds, 3)
    courses = np.round(courses, 3) % 360.0
    crab = rng.normal(0.0, 2.0, n_points)
    missing_heading = rng.random(n_points) < cfg.heading_missing_rate

    records = []
    pos = origin
    for i in range(n_points):
        if i > 0:
            step_km = 0.5 * (speeds[i - 1] + speeds[i]) * dt / 3600.0 * KM_PER_NMI
            pos = destination(pos, courses[i - 1], step_km)
        heading = None if missing_heading[i] else float(round((courses[i] + crab[i]) % 360.0, 1) % 360.0)
        records.append(AisRecord(vessel_id, start + timedelta(seconds=float(i * dt)),
                                 round(pos.lat, 7), round(pos.lon, 7), float(speeds[i]),
                                 float(courses[i]), heading, length, width, draft))
    return records


def generate_trip(barge_count: int, cfg: SynthConfig = SynthConfig(), seed: int = 0,
                  duration_hrs: float | None = None, index: int = 0) -> Trip:
    """One moving trip for a tow of ``barge_count`` barges."""
    if not cfg.barge_count_min <= barge_count <= cfg.barge_count_max:
        raise DomainError(f"barge_count {barge_count} outside the configured range")
    rng = np.random.default_rng(seed)
    if duration_hrs is None:
        duration_hrs = rng.uniform(cfg.duration_min_hrs, cfg.duration_max_hrs)
    n_points = int(round(duration_hrs * 3600.0 / cfg.ping_interval_s)) + 1
    start = EPOCH + timedelta(hours=8 * index)
    origin = GeoPoint(cfg.origin_lat + 0.01 * (index % 50), cfg.origin_lon)
    recs = simulate_moving_records(barge_count, cfg, rng, n_points, start, origin, _vessel_id(index))
    return Trip.from_records(recs)


def _stop_records(vessel_id: str, anchor: AisRecord, rng: np.random.Generator, n: int,
                  start: datetime, dt: float) -> list[AisRecord]:
    out = []
    for i in range(n):
        jitter = destination(GeoPoint(anchor.lat, anchor.lon), rng.uniform(0, 360), rng.uniform(0, 0.03))
        out.append(AisRecord(vessel_id, start + timedelta(seconds=float(i * dt)),
                             round(jitter.lat, 7), round(jitter.lon, 7),
                             float(round(rng.uniform(0.0, 0.5), 3)), float(round(rng.uniform(0, 359), 3)),
                             None, anchor.length_m, anchor.width_m, anchor.draft_m))
    return out


def vessel_track(trip: Trip, rng: np.random.Generator, dwell_min: float = 75.0,
                 dt: float = 60.0) -> list[AisRecord]:
    """The trip bracketed by an origin stop and a destination stop."""
    n_stop = int(dwell_min * 60 / dt) + 1
    first, last = trip.records[0], trip.records[-1]
    before = _stop_records(trip.vessel_id, first, rng, n_stop,
                           first.timestamp - timedelta(seconds=n_stop * dt), dt)
    after = _stop_records(trip.vessel_id, last, rng, n_stop, last.timestamp + timedelta(seconds=dt), dt)
    return before + list(trip.records) + after


def footprint_around(point: GeoPoint, half_size_km: float = 0.15) -> GeoPolygon:
    """Square footprint centred on ``point`` (a stand-in for a georeferenced box)."""
    dlat = half_size_km / 111.0
    dlon = half_size_km / (111.0 * math.cos(math.radians(point.lat)))
    ring = [(point.lat - dlat, point.lon - dlon), (point.lat - dlat, point.lon + dlon),
            (point.lat + dlat, point.lon + dlon), (point.lat + dlat, point.lon - dlon),
            (point.lat - dlat, point.lon - dlon)]
    return GeoPolygon(tuple(GeoPoint(*p) for p in ring))


def draw_counts(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform counts, or with ``skew`` small tows drawn more often (weight exp(-b/5))."""
    values = np.arange(cfg.barge_count_min, cfg.barge_count_max + 1)
    if cfg.skew:
        w = np.exp(-values / 5.0)
        return rng.choice(values, size=cfg.n_samples, p=w / w.sum())
    return rng.choice(values, size=cfg.n_samples)


@dataclass
class SyntheticDataset:
    samples: list[LabeledSample]
    trips: list[Trip]
    tracks: dict[str, list[AisRecord]]
    detections: list[Detection]
    counts: np.ndarray


def generate_labeled_dataset(cfg: SynthConfig = SynthConfig(),
                             feature_cfg: FeatureConfig = FeatureConfig()) -> SyntheticDataset:
    """Trips, full vessel tracks, matching detections and imputed labeled samples."""
    master = np.random.default_rng(cfg.seed)
    counts = draw_counts(cfg, master)
    seeds = master.integers(0, 2**31 - 1, size=cfg.n_samples)
    trips, tracks, detections, vectors = [], {}, [], []
    for i, (b, s) in enumerate(zip(counts, seeds)):
        trip = generate_trip(int(b), cfg, int(s), index=i)
        rng = np.random.default_rng(int(s) + 1)
        tracks[trip.vessel_id] = vessel_track(trip, rng, dt=cfg.ping_interval_s)
        mid = trip.records[len(trip) // 2]
        scene = mid.timestamp + timedelta(seconds=int(rng.integers(-60, 61)))
        detections.append(Detection(f"D{i:05d}", scene, footprint_around(GeoPoint(mid.lat, mid.lon)), int(b)))
        trips.append(trip)
        vectors.append(extract_all(trip, feature_cfg))
    medians, _ = imputation_medians(vectors)
    samples = []
    for det, trip, fv in zip(detections, trips, vectors):
        filled, _ = impute(fv, medians)
        samples.append(LabeledSample(det.detection_id, trip.vessel_id, trip.trip_index, filled,
                                     det.barge_count, trip.start_time, trip.end_time))
    return SyntheticDataset(samples, trips, tracks, detections, counts)


def informative_design(n_samples: int = 200, n_informative: int = 5, n_noise: int = 15,
                       seed: int = 0, effect: float = 0.4):
    """Counts driven by a few standard-normal columns, padded with pure noise columns.

    ``y ~ Poisson(exp(1.2 + effect * sum(inf_j)))``. Informative columns are
    named ``INF_j`` and noise columns ``NOISE_j``; the column order is shuffled
    so position carries no information.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_samples, n_informative + n_noise))
    eta = 1.2 + effect * X[:, :n_informative].sum(axis=1)
    y = rng.poisson(np.exp(eta)).astype(float)
    names = [f"INF_{j}" for j in range(n_informative)] + [f"NOISE_{j:02d}" for j in range(n_noise)]
    order = rng.permutation(len(names))
    return DesignMatrix(X[:, order], y, [names[i] for i in order])
