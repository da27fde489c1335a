"""Reading, validating and ordering raw AIS position reports."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import SchemaError

HEADING_UNAVAILABLE = 511
SOG_UNAVAILABLE = 102.3

# logical field -> MarineCadastre column name
DEFAULT_SCHEMA: dict[str, str] = {
    "vessel_id": "MMSI",
    "timestamp": "BaseDateTime",
    "lat": "LAT",
    "lon": "LON",
    "sog": "SOG",
    "cog": "COG",
    "heading": "Heading",
    "length_m": "Length",
    "width_m": "Width",
    "draft_m": "Draft",
}
REQUIRED_FIELDS = ("vessel_id", "timestamp", "lat", "lon", "sog", "cog")
STATIC_FIELDS = ("length_m", "width_m", "draft_m")


@dataclass(frozen=True)
class AisRecord:
    """One position report. ``heading`` and the statics use ``None`` for unavailable."""

    vessel_id: str
    timestamp: datetime
    lat: float
    lon: float
    sog: float
    cog: float
    heading: float | None = None
    length_m: float | None = None
    width_m: float | None = None
    draft_m: float | None = None


@dataclass
class ParseDiagnostics:
    rows_read: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n_skipped(self) -> int:
        return len(self.skipped)

    def summary(self) -> str:
        return f"{self.rows_read} rows read, {self.n_skipped} skipped"


def parse_timestamp(text: str) -> datetime:
    """Parse ISO-8601 (``T`` or space separator); naive values are taken as UTC."""
    s = text.strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    ts = datetime.fromisoformat(s).replace(microsecond=0)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")


def _float(raw: str | None) -> float | None:
    if raw is None:
        return None
    raw = raw.strip()
    if not raw:
        return None
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {raw!r}")
    return value


def _static(raw: str | None) -> float | None:
    value = _float(raw)
    if value is None or value <= 0:
        return None
    return value


def parse_row(row: Mapping[str, str], schema: Mapping[str, str]) -> AisRecord:
    """Convert one CSV row to a record; raises ValueError with a short reason."""
    vessel_id = (row.get(schema["vessel_id"]) or "").strip()
    if not vessel_id:
        raise ValueError("missing vessel_id")
    ts_raw = (row.get(schema["timestamp"]) or "").strip()
    if not ts_raw:
        raise ValueError("missing timestamp")
    try:
        timestamp = parse_timestamp(ts_raw)
    except ValueError:
        raise ValueError(f"bad timestamp {ts_raw!r}") from None

    values = {}
    for name in ("lat", "lon", "sog", "cog"):
        try:
            values[name] = _float(row.get(schema[name]))
        except ValueError:
            raise ValueError(f"{name} not numeric") from None
        if values[name] is None:
            raise ValueError(f"missing {name}")
    lat, lon, sog, cog = values["lat"], values["lon"], values["sog"], values["cog"]
    if not -90.0 <= lat <= 90.0:
        raise ValueError("lat out of range")
    if not -180.0 <= lon <= 180.0:
        raise ValueError("lon out of range")
    if sog < 0 or sog >= SOG_UNAVAILABLE:
        raise ValueError("sog out of range")
    if not 0.0 <= cog < 360.0:
        raise ValueError("cog out of range")

    heading = None
    if "heading" in schema:
        try:
            h = _float(row.get(schema["heading"]))
        except ValueError:
            h = None
        if h is not None and 0.0 <= h < 360.0:
            heading = h

    statics = {}
    for name in STATIC_FIELDS:
        try:
            statics[name] = _static(row.get(schema[name])) if name in schema else None
        except ValueError:
            statics[name] = None
    return AisRecord(vessel_id, timestamp, lat, lon, sog, cog, heading, **statics)


def parse_ais_csv(path: str | Path, schema: Mapping[str, str] | None = None
                  ) -> tuple[list[AisRecord], ParseDiagnostics]:
    """Read an AIS CSV; malformed rows are skipped and reported, not raised.

    ``schema`` overrides individual entries of `DEFAULT_SCHEMA`. Heading and
    static columns are optional; if absent every record has them unavailable.
    """
    mapping = dict(DEFAULT_SCHEMA)
    if schema:
        mapping.update(schema)
    diagnostics = ParseDiagnostics()
    records: list[AisRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = (line for line in fh if not line.startswith("#"))
        reader = csv.DictReader(lines)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: no header row")
        header = set(reader.fieldnames)
        for name in REQUIRED_FIELDS:
            if mapping[name] not in header:
                raise SchemaError(f"missing required column {mapping[name]!r} (field {name})")
        active = {k: v for k, v in mapping.items() if v in header}
        for rownum, row in enumerate(reader, start=2):
            diagnostics.rows_read += 1
            try:
                records.append(parse_row(row, active))
            except ValueError as exc:
                diagnostics.skipped.append((rownum, str(exc)))
    return records, diagnostics


def clean_records(records: Iterable[AisRecord]) -> dict[str, list[AisRecord]]:
    """Group by vessel, order by time and keep the first of duplicate timestamps.

    Vessels are returned in sorted ``vessel_id`` order.
    """
    groups: dict[str, list[AisRecord]] = {}
    for rec in records:
        groups.setdefault(rec.vessel_id, []).append(rec)
    out = {}
    for vessel_id in sorted(groups):
        ordered = sorted(groups[vessel_id], key=lambda r: r.timestamp)
        kept = []
        for rec in ordered:
            if kept and kept[-1].timestamp == rec.timestamp:
                continue
            kept.append(rec)
        out[vessel_id] = kept
    return out


def filter_vessels(groups: Mapping[str, Sequence[AisRecord]], allow: Iterable[str] | None
                   ) -> dict[str, list[AisRecord]]:
    if allow is None:
        return {k: list(v) for k, v in groups.items()}
    allowed = set(allow)
    return {k: list(v) for k, v in groups.items() if k in allowed}


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_records(path: str | Path, records: Iterable[AisRecord],
                  header_lines: Sequence[str] = ()) -> None:
    """Write records in the default column layout (lossless round trip)."""
    cols = [DEFAULT_SCHEMA[k] for k in DEFAULT_SCHEMA]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for r in records:
            heading = HEADING_UNAVAILABLE if r.heading is None else r.heading
            writer.writerow([r.vessel_id, format_timestamp(r.timestamp), repr(r.lat), repr(r.lon),
                             repr(r.sog), repr(r.cog), repr(float(heading)),
                             _fmt(r.length_m), _fmt(r.width_m), _fmt(r.draft_m)])


def read_records(path: str | Path) -> list[AisRecord]:
    records, diagnostics = parse_ais_csv(path)
    if diagnostics.skipped:
        rownum, reason = diagnostics.skipped[0]
        raise SchemaError(f"{path}: corrupt record store (row {rownum}: {reason})")
    return records
