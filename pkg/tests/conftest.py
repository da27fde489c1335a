import math
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bargecount.ais import AisRecord  # noqa: E402
from bargecount.geo import KM_PER_NMI, GeoPoint, destination  # noqa: E402
from bargecount.trajectory import Trip  # noqa: E402

T0 = datetime(2024, 3, 1, 12, 0, 0, tzinfo=timezone.utc)

# filled by tests/test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_records(speeds, courses, dt=60.0, headings=None, vessel_id="367000001", start=T0,
                 origin=GeoPoint(38.6, -90.2), statics=(30.0, 10.0, 2.5), times=None,
                 positions=None):
    """Records whose positions follow the given speeds/courses along great circles."""
    n = len(speeds)
    if times is None:
        times = [start + timedelta(seconds=dt * i) for i in range(n)]
    if headings is None:
        headings = list(courses)
    pos = origin
    out = []
    for i in range(n):
        if positions is not None:
            pos = positions[i]
        elif i > 0:
            hours = (times[i] - times[i - 1]).total_seconds() / 3600.0
            pos = destination(pos, courses[i - 1], 0.5 * (speeds[i - 1] + speeds[i]) * hours * KM_PER_NMI)
        out.append(AisRecord(vessel_id, times[i], pos.lat, pos.lon, float(speeds[i]),
                             float(courses[i]) % 360.0, headings[i], *statics))
    return out


def make_trip(speeds, courses, **kw) -> Trip:
    return Trip.from_records(make_records(speeds, courses, **kw))


def random_trip(rng: np.random.Generator, n=None) -> Trip:
    """Irregular sampling, occasional missing headings/statics, arbitrary courses."""
    n = int(rng.integers(2, 150)) if n is None else n
    gaps = rng.integers(10, 400, size=n - 1)
    times = [T0]
    for g in gaps:
        times.append(times[-1] + timedelta(seconds=int(g)))
    speeds = np.round(rng.uniform(0.0, 12.0, n), int(rng.integers(1, 4)))
    courses = np.round(rng.uniform(0.0, 360.0, n), 1) % 360.0
    headings = [None if rng.random() < 0.2 else float(round(h % 360.0, 1) % 360.0)
                for h in courses + rng.normal(0, 8, n)]
    statics = tuple(None if rng.random() < 0.15 else float(round(v, 1))
                    for v in rng.uniform([15, 5, 1], [80, 20, 4]))
    return make_trip(list(speeds), list(courses), headings=headings, times=times, statics=statics)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def circle_arc_trip(n_points: int, radius_km: float = 2.0, speed_kn: float = 6.0) -> Trip:
    """Semicircle of ``radius_km`` traversed at constant speed; positions on the arc."""
    center = GeoPoint(38.6, -90.2)
    arc_km = math.pi * radius_km
    total_s = arc_km / (speed_kn * KM_PER_NMI) * 3600.0
    dt = total_s / (n_points - 1)
    positions, courses = [], []
    for i in range(n_points):
        theta = 180.0 * i / (n_points - 1)  # bearing from centre sweeps 270 -> 90 via north
        bearing = (270.0 + theta) % 360.0
        positions.append(destination(center, bearing, radius_km))
        courses.append((bearing + 90.0) % 360.0)
    times = [T0 + timedelta(seconds=round(dt * i, 6)) for i in range(n_points)]
    return make_trip([speed_kn] * n_points, courses, positions=positions, times=times)
