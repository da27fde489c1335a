"""Geodesic distance, angle arithmetic and planar polygon tests.

Intersection tests are planar in (lon, lat); at river-reach extents the
distortion is irrelevant for a yes/no overlap decision.
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError

EARTH_RADIUS_KM = 6371.0088
KM_PER_NMI = 1.852


class GeoPoint(NamedTuple):
    lat: float
    lon: float


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km between two WGS84 points."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def haversine_km_array(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Vectorised `haversine_km` over broadcastable arrays of degrees."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def destination(origin: GeoPoint, bearing_deg: float, distance_km: float) -> GeoPoint:
    """Point reached by travelling `distance_km` along a great circle."""
    delta = distance_km / EARTH_RADIUS_KM
    theta = math.radians(bearing_deg)
    phi1, lam1 = math.radians(origin.lat), math.radians(origin.lon)
    phi2 = math.asin(math.sin(phi1) * math.cos(delta)
                     + math.cos(phi1) * math.sin(delta) * math.cos(theta))
    lam2 = lam1 + math.atan2(math.sin(theta) * math.sin(delta) * math.cos(phi1),
                             math.cos(delta) - math.sin(phi1) * math.sin(phi2))
    lon = (math.degrees(lam2) + 540.0) % 360.0 - 180.0
    return GeoPoint(math.degrees(phi2), lon)


def signed_angle_diff(from_deg: float, to_deg: float) -> float:
    """Smallest signed rotation taking `from_deg` to `to_deg`, in (-180, 180].

    Exactly opposite directions give +180.
    """
    d = (to_deg - from_deg) % 360.0
    if d > 180.0:
        d -= 360.0
    return d


def signed_angle_diff_array(from_deg, to_deg) -> np.ndarray:
    d = np.mod(np.asarray(to_deg, dtype=float) - np.asarray(from_deg, dtype=float), 360.0)
    return np.where(d > 180.0, d - 360.0, d)


def unwrap_angles(series: Sequence[float]) -> np.ndarray:
    """Remove artificial 360-degree jumps from a course series."""
    arr = np.asarray(series, dtype=float)
    if arr.size == 0:
        raise DomainError("cannot unwrap an empty angle series")
    steps = signed_angle_diff_array(arr[:-1], arr[1:])
    out = np.empty_like(arr)
    out[0] = arr[0]
    out[1:] = arr[0] + np.cumsum(steps)
    return out


# -- planar polygon machinery -------------------------------------------------

_ORIENT_ERR = 1e-12


def _orient(ax, ay, bx, by, cx, cy) -> float:
    """Cross product whose sign is exact.

    The float result is trusted only when it clears a rounding-error bound;
    near-degenerate triples are re-evaluated in exact rational arithmetic.
    """
    left = (bx - ax) * (cy - ay)
    right = (by - ay) * (cx - ax)
    det = left - right
    scale = abs(left) + abs(right) + (abs(ax) + abs(bx) + abs(cx) + abs(ay) + abs(by) + abs(cy)) ** 2
    if abs(det) > _ORIENT_ERR * scale:
        return det
    F = Fraction
    exact = (F(bx) - F(ax)) * (F(cy) - F(ay)) - (F(by) - F(ay)) * (F(cx) - F(ax))
    return float(exact) if exact == 0 or float(exact) != 0 else math.copysign(5e-324, exact)


def _on_segment(px, py, ax, ay, bx, by) -> bool:
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection test (touching counts) for (x, y) tuples."""
    d1 = _orient(*q1, *q2, *p1)
    d2 = _orient(*q1, *q2, *p2)
    d3 = _orient(*p1, *p2, *q1)
    d4 = _orient(*p1, *p2, *q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    if d1 == 0 and _on_segment(*p1, *q1, *q2):
        return True
    if d2 == 0 and _on_segment(*p2, *q1, *q2):
        return True
    if d3 == 0 and _on_segment(*q1, *p1, *p2):
        return True
    if d4 == 0 and _on_segment(*q2, *p1, *p2):
        return True
    return False


@dataclass(frozen=True)
class GeoPolygon:
    """Closed exterior ring, validated as simple on construction."""

    exterior: tuple[GeoPoint, ...]

    def __post_init__(self):
        ring = tuple(GeoPoint(float(p[0]), float(p[1])) for p in self.exterior)
        object.__setattr__(self, "exterior", ring)
        if len(ring) < 4:
            raise DomainError(f"polygon ring needs >= 4 vertices, got {len(ring)}")
        if ring[0] != ring[-1]:
            raise DomainError("polygon ring is not closed (first != last)")
        for p in ring:
            if not (-90.0 <= p.lat <= 90.0 and -180.0 <= p.lon <= 180.0):
                raise DomainError(f"polygon vertex out of range: {p}")
        edges = self.edges()
        m = len(edges)
        if len({(p.lon, p.lat) for p in ring[:-1]}) < 3:
            raise DomainError("polygon ring is degenerate")
        for i in range(m):
            for j in range(i + 1, m):
                if j == i + 1 or (i == 0 and j == m - 1):
                    continue
                if segments_intersect(*edges[i], *edges[j]):
                    raise DomainError("polygon ring self-intersects")

    @classmethod
    def from_lonlat(cls, coords: Sequence[Sequence[float]]) -> "GeoPolygon":
        """Build from GeoJSON-ordered [lon, lat] pairs."""
        return cls(tuple(GeoPoint(float(c[1]), float(c[0])) for c in coords))

    def edges(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        xy = [(p.lon, p.lat) for p in self.exterior]
        return [(xy[i], xy[i + 1]) for i in range(len(xy) - 1)]

    def bounds(self) -> tuple[float, float, float, float]:
        lons = [p.lon for p in self.exterior]
        lats = [p.lat for p in self.exterior]
        return min(lons), min(lats), max(lons), max(lats)

    def centroid(self) -> GeoPoint:
        xy = [(p.lon, p.lat) for p in self.exterior]
        a = cx = cy = 0.0
        for (x0, y0), (x1, y1) in zip(xy[:-1], xy[1:]):
            cross = x0 * y1 - x1 * y0
            a += cross
            cx += (x0 + x1) * cross
            cy += (y0 + y1) * cross
        a *= 0.5
        return GeoPoint(cy / (6 * a), cx / (6 * a))

    def contains(self, point: GeoPoint) -> bool:
        """Point-in-polygon by ray casting; boundary points count as inside."""
        x, y = point.lon, point.lat
        inside = False
        for (x0, y0), (x1, y1) in self.edges():
            if _orient(x0, y0, x1, y1, x, y) == 0 and _on_segment(x, y, x0, y0, x1, y1):
                return True
            if (y0 > y) != (y1 > y):
                xcross = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
                if x < xcross:
                    inside = not inside
        return inside


def polyline_intersects_polygon(polyline: Sequence[GeoPoint], polygon: GeoPolygon) -> bool:
    """True iff a polyline vertex lies inside/on the polygon or a segment crosses an edge."""
    if not isinstance(polygon, GeoPolygon):
        raise DomainError("polygon must be a validated GeoPolygon")
    pts = [GeoPoint(float(p[0]), float(p[1])) for p in polyline]
    if not pts:
        raise DomainError("polyline needs at least one point")
    xmin, ymin, xmax, ymax = polygon.bounds()
    lons = [p.lon for p in pts]
    lats = [p.lat for p in pts]
    if max(lons) < xmin or min(lons) > xmax or max(lats) < ymin or min(lats) > ymax:
        return False
    if any(polygon.contains(p) for p in pts):
        return True
    edges = polygon.edges()
    for a, b in zip(pts[:-1], pts[1:]):
        s = ((a.lon, a.lat), (b.lon, b.lat))
        if max(a.lon, b.lon) < xmin or min(a.lon, b.lon) > xmax:
            continue
        if max(a.lat, b.lat) < ymin or min(a.lat, b.lat) > ymax:
            continue
        if any(segments_intersect(*s, *e) for e in edges):
            return True
    return False
