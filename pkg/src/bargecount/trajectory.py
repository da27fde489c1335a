"""Stop detection and trip segmentation for one vessel's ordered reports."""
from __future__ import annotations

import bisect
import csv
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ais import AisRecord, format_timestamp, parse_timestamp
from .errors import DomainError, SchemaError
from .geo import GeoPoint, haversine_km_array


@dataclass(frozen=True)
class StopParams:
    max_speed_kn: float = 1.0
    min_duration_min: float = 60.0
    radius_m: float = 300.0
    max_gap_min: float = 30.0
    min_trip_points: int = 10

    def __post_init__(self):
        for name in ("max_speed_kn", "min_duration_min", "radius_m", "max_gap_min"):
            if not getattr(self, name) > 0:
                raise DomainError(f"StopParams.{name} must be > 0")
        if self.min_trip_points < 2:
            raise DomainError("StopParams.min_trip_points must be >= 2")


@dataclass(frozen=True)
class Stop:
    vessel_id: str
    start_time: datetime
    end_time: datetime
    centroid: GeoPoint
    point_count: int
    start_index: int
    end_index: int  # inclusive


@dataclass(frozen=True)
class Trip:
    vessel_id: str
    records: tuple[AisRecord, ...]
    trip_index: int = 0
    open_ended: bool = False
    length_m: float | None = None
    width_m: float | None = None
    draft_m: float | None = None
    start_index: int = 0

    def __post_init__(self):
        if len(self.records) < 2:
            raise DomainError("a trip needs at least 2 records")
        times = [r.timestamp for r in self.records]
        if any(b <= a for a, b in zip(times[:-1], times[1:])):
            raise DomainError("trip timestamps must be strictly increasing")

    @classmethod
    def from_records(cls, records: Sequence[AisRecord], trip_index: int = 0,
                     open_ended: bool = False, start_index: int = 0) -> "Trip":
        """Build a trip, taking statics as the modal non-missing value per field."""
        records = tuple(records)
        if not records:
            raise DomainError("a trip needs at least 2 records")
        statics = {name: modal_value(getattr(r, name) for r in records)
                   for name in ("length_m", "width_m", "draft_m")}
        return cls(records[0].vessel_id, records, trip_index, open_ended,
                   start_index=start_index, **statics)

    @property
    def start_time(self) -> datetime:
        return self.records[0].timestamp

    @property
    def end_time(self) -> datetime:
        return self.records[-1].timestamp

    @property
    def end_index(self) -> int:
        return self.start_index + len(self.records) - 1

    def __len__(self) -> int:
        return len(self.records)


def modal_value(values: Iterable[float | None]) -> float | None:
    """Most frequent non-missing value; ties go to the first seen."""
    counts = Counter(v for v in values if v is not None)
    if not counts:
        return None
    return counts.most_common(1)[0][0]


def _check_sorted(records: Sequence[AisRecord]) -> None:
    if len({r.vessel_id for r in records}) > 1:
        raise DomainError("records must belong to a single vessel")
    for a, b in zip(records[:-1], records[1:]):
        if b.timestamp <= a.timestamp:
            raise DomainError("records must be strictly increasing in time")


def _seconds(records: Sequence[AisRecord]) -> np.ndarray:
    t0 = records[0].timestamp
    return np.array([(r.timestamp - t0).total_seconds() for r in records])


def _runs(mask: np.ndarray, t: np.ndarray, max_gap_s: float) -> list[tuple[int, int]]:
    """Maximal [i, j] index runs where mask holds and consecutive gaps <= max_gap_s."""
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is not None and t[i] - t[i - 1] > max_gap_s:
            runs.append((start, i - 1))
            start = i
        elif flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def detect_stops(records: Sequence[AisRecord], params: StopParams = StopParams()) -> list[Stop]:
    """Sweep maximal low-speed runs and keep those long and compact enough."""
    if not records:
        return []
    _check_sorted(records)
    t = _seconds(records)
    sog = np.array([r.sog for r in records])
    lat = np.array([r.lat for r in records])
    lon = np.array([r.lon for r in records])
    stops = []
    for i, j in _runs(sog < params.max_speed_kn, t, params.max_gap_min * 60.0):
        if t[j] - t[i] < params.min_duration_min * 60.0:
            continue
        clat, clon = lat[i:j + 1].mean(), lon[i:j + 1].mean()
        dist_m = 1000.0 * haversine_km_array(lat[i:j + 1], lon[i:j + 1], clat, clon)
        if dist_m.max() > params.radius_m:
            continue
        stops.append(Stop(records[0].vessel_id, records[i].timestamp, records[j].timestamp,
                          GeoPoint(float(clat), float(clon)), j - i + 1, i, j))
    return stops


def segment_trips(records: Sequence[AisRecord], stops: Sequence[Stop],
                  params: StopParams = StopParams()) -> list[Trip]:
    """Cut the records between stops (and at coverage gaps) into trips.

    A trip is flagged ``open_ended`` unless a stop immediately precedes and
    follows it.
    """
    if not records:
        return []
    _check_sorted(records)
    t = _seconds(records)
    in_stop = np.zeros(len(records), dtype=bool)
    for s in stops:
        in_stop[s.start_index:s.end_index + 1] = True
    trips = []
    for i, j in _runs(~in_stop, t, params.max_gap_min * 60.0):
        if j - i + 1 < params.min_trip_points:
            continue
        bounded = i > 0 and in_stop[i - 1] and j < len(records) - 1 and in_stop[j + 1]
        trips.append(Trip.from_records(records[i:j + 1], trip_index=len(trips),
                                       open_ended=not bounded, start_index=i))
    return trips


def reconstruct_trips(groups: Mapping[str, Sequence[AisRecord]], params: StopParams = StopParams()
                      ) -> dict[str, list[Trip]]:
    """Stops and trips for every vessel, in vessel_id order."""
    out = {}
    for vessel_id in sorted(groups):
        recs = groups[vessel_id]
        out[vessel_id] = segment_trips(recs, detect_stops(recs, params), params)
    return out


def trip_containing(trips: Sequence[Trip], instant: datetime) -> Trip | None:
    """The trip whose [start, end] interval contains ``instant`` (bounds inclusive)."""
    starts = [tr.start_time for tr in trips]
    k = bisect.bisect_right(starts, instant) - 1
    if k >= 0 and trips[k].end_time >= instant:
        return trips[k]
    return None


TRIP_COLUMNS = ("vessel_id", "trip_index", "start_time", "end_time", "n_points", "open_ended")


def write_trips_csv(path: str | Path, trips: Iterable[Trip], header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIP_COLUMNS)
        for tr in trips:
            writer.writerow([tr.vessel_id, tr.trip_index, format_timestamp(tr.start_time),
                             format_timestamp(tr.end_time), len(tr), int(tr.open_ended)])


def read_trips_csv(path: str | Path, groups: Mapping[str, Sequence[AisRecord]]
                   ) -> dict[str, list[Trip]]:
    """Rebuild trips from a trips CSV by slicing each vessel's cleaned records."""
    out: dict[str, list[Trip]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        missing = set(TRIP_COLUMNS[:5]) - set(reader.fieldnames or ())
        if missing:
            raise SchemaError(f"{path}: missing trip columns {sorted(missing)}")
        for row in reader:
            vessel_id = row["vessel_id"]
            recs = groups.get(vessel_id)
            if recs is None:
                raise SchemaError(f"{path}: vessel {vessel_id} not present in record store")
            start, end = parse_timestamp(row["start_time"]), parse_timestamp(row["end_time"])
            times = [r.timestamp for r in recs]
            i = bisect.bisect_left(times, start)
            j = bisect.bisect_right(times, end)
            if j - i != int(row["n_points"]):
                raise SchemaError(f"{path}: trip {vessel_id}/{row['trip_index']} does not match store")
            out.setdefault(vessel_id, []).append(
                Trip.from_records(recs[i:j], int(row["trip_index"]),
                                  bool(int(row.get("open_ended") or 0)), start_index=i))
    return {k: out[k] for k in sorted(out)}
