import math

import pytest
from hypothesis import assume, example, given, settings
from hypothesis import strategies as st

from bargecount.errors import DomainError
from bargecount.geo import (EARTH_RADIUS_KM, GeoPoint, GeoPolygon, haversine_km,
                            polyline_intersects_polygon, segments_intersect, signed_angle_diff,
                            unwrap_angles)

lats = st.floats(-90, 90, allow_nan=False)
lons = st.floats(-180, 180, allow_nan=False)
points = st.builds(GeoPoint, lats, lons)


def cosine_law_km(a, b):
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    c = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(math.radians(b.lon - a.lon))
    return EARTH_RADIUS_KM * math.acos(max(-1.0, min(1.0, c)))


def test_haversine_identity():
    p = GeoPoint(38.6, -90.2)
    assert haversine_km(p, p) == 0.0


def test_haversine_one_degree_on_equator():
    a, b = GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0)
    expected = EARTH_RADIUS_KM * math.pi / 180
    assert haversine_km(a, b) == pytest.approx(expected, rel=1e-12)
    assert haversine_km(a, b) == pytest.approx(cosine_law_km(a, b), rel=1e-9)


def test_haversine_antipodal():
    assert haversine_km(GeoPoint(0, 0), GeoPoint(0, 180)) == pytest.approx(math.pi * EARTH_RADIUS_KM, rel=1e-12)


@given(points, points)
def test_haversine_symmetric_and_non_negative(a, b):
    d = haversine_km(a, b)
    assert d >= 0
    assert d == haversine_km(b, a)


@given(points, points, points)
def test_haversine_triangle_inequality(a, b, c):
    ab, bc, ac = haversine_km(a, b), haversine_km(b, c), haversine_km(a, c)
    assert ac <= (ab + bc) * (1 + 1e-9) + 1e-9


@given(points, points)
def test_haversine_matches_cosine_law_away_from_tiny_distances(a, b):
    d = haversine_km(a, b)
    assume(1.0 < d < math.pi * EARTH_RADIUS_KM - 1.0)
    assert d == pytest.approx(cosine_law_km(a, b), rel=1e-6)


@pytest.mark.parametrize("frm,to,expected", [(350, 10, 20), (10, 350, -20), (0, 180, 180),
                                             (180, 0, 180), (90, 90, 0), (-30, 30, 60)])
def test_signed_angle_diff_cases(frm, to, expected):
    assert signed_angle_diff(frm, to) == pytest.approx(expected)


@given(st.floats(-1e4, 1e4), st.floats(-179.999, 180.0))
def test_signed_angle_diff_recovers_rotation(x, d):
    out = signed_angle_diff(x, x + d)
    assert -180 < out <= 180
    assert out == pytest.approx(d, abs=1e-8)


def test_unwrap_cases():
    assert list(unwrap_angles([359, 1, 3])) == [359, 361, 363]
    assert list(unwrap_angles([10, 10, 10])) == [10, 10, 10]
    with pytest.raises(DomainError):
        unwrap_angles([])


@given(st.lists(st.floats(0, 359.999), min_size=1, max_size=60))
def test_unwrap_properties(series):
    out = unwrap_angles(series)
    assert out[0] == series[0]
    deltas = out[1:] - out[:-1]
    assert all(-180 - 1e-9 < d <= 180 + 1e-9 for d in deltas)
    rewrapped = out % 360.0
    for r, s in zip(rewrapped, series):
        assert min(abs(r - s), 360 - abs(r - s)) < 1e-9


SQUARE = GeoPolygon(tuple(GeoPoint(*p) for p in [(0, 0), (0, 1), (1, 1), (1, 0), (0, 0)]))


def test_point_inside():
    assert polyline_intersects_polygon([GeoPoint(0.5, 0.5)], SQUARE)


def test_segment_crossing_with_endpoints_outside():
    line = [GeoPoint(0.5, -1.0), GeoPoint(0.5, 2.0)]
    # independent check: the segment lon in [-1, 2] at lat 0.5 overlaps the square's lon range
    assert segments_intersect((-1.0, 0.5), (2.0, 0.5), (0.0, 0.0), (0.0, 1.0))
    assert polyline_intersects_polygon(line, SQUARE)


def test_far_polyline():
    assert not polyline_intersects_polygon([GeoPoint(5, 5), GeoPoint(6, 6)], SQUARE)


def test_boundary_counts_as_intersection():
    assert polyline_intersects_polygon([GeoPoint(1.0, 0.5)], SQUARE)
    assert polyline_intersects_polygon([GeoPoint(1.0, 1.0)], SQUARE)


def test_near_miss_diagonal():
    # passes close to the corner (1, 1) but outside
    assert not polyline_intersects_polygon([GeoPoint(1.2, 0.9), GeoPoint(0.9, 1.2)], SQUARE)


@pytest.mark.parametrize("ring", [
    [(0, 0), (0, 1), (1, 1), (0, 0)][:3],
    [(0, 0), (0, 1), (1, 1), (1, 0)],
    [(0, 0), (1, 1), (0, 1), (1, 0), (0, 0)],
])
def test_invalid_polygons(ring):
    with pytest.raises(DomainError):
        GeoPolygon(tuple(GeoPoint(*p) for p in ring))


CONCAVE = [(0, 0), (0, 3), (3, 3), (3, 2), (1, 2), (1, 1), (3, 1), (3, 0), (0, 0)]


def _rotated(ring, k):
    body = ring[:-1]
    body = body[k:] + body[:k]
    return GeoPolygon(tuple(GeoPoint(*p) for p in body + [body[0]]))


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(-1, 4), st.floats(-1, 4)), min_size=1, max_size=6),
       st.integers(0, 7))
@example(coords=[(1.0, -1.0), (-1.1754943508222875e-38, 0.0)], k=0)  # endpoint just off a corner
def test_intersection_invariant_to_reversal_and_ring_start(coords, k):
    line = [GeoPoint(*c) for c in coords]
    base = polyline_intersects_polygon(line, _rotated(CONCAVE, 0))
    assert polyline_intersects_polygon(line[::-1], _rotated(CONCAVE, 0)) == base
    assert polyline_intersects_polygon(line, _rotated(CONCAVE, k)) == base


def test_concave_notch_is_outside():
    poly = _rotated(CONCAVE, 0)
    # the notch spans lat (1, 3) x lon (1, 2)
    assert not poly.contains(GeoPoint(2.0, 1.5))
    assert poly.contains(GeoPoint(0.5, 1.5))
    assert poly.contains(GeoPoint(1.5, 2.0))  # on the notch edge
    assert not polyline_intersects_polygon([GeoPoint(2.5, 1.2), GeoPoint(1.5, 1.8)], poly)
