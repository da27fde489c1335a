"""Straightforward pure-Python recomputation of the 39 trip features.

Deliberately shares no code with ``bargecount.features``: plain loops,
``math`` only, its own haversine and angle helpers.
"""
import math

R_KM = 6371.0088


def _mean(xs):
    total = 0.0
    for x in xs:
        total += x
    return total / len(xs)


def _std(xs):
    if len(xs) < 2:
        return None
    m = _mean(xs)
    acc = 0.0
    for x in xs:
        acc += (x - m) ** 2
    return math.sqrt(acc / (len(xs) - 1))


def _median(xs):
    s = sorted(xs)
    n = len(s)
    mid = n // 2
    return s[mid] if n % 2 else (s[mid - 1] + s[mid]) / 2


def _quantile(xs, q):
    s = sorted(xs)
    h = (len(s) - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


def _entropy(counts):
    total = sum(counts)
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return max(h, 0.0)


def _wrap(d):
    d = d % 360.0
    return d - 360.0 if d > 180.0 else d


def _haversine(lat1, lon1, lat2, lon2):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    a = (math.sin((p2 - p1) / 2) ** 2
         + math.cos(p1) * math.cos(p2) * math.sin(math.radians(lon2 - lon1) / 2) ** 2)
    return 2 * R_KM * math.atan2(math.sqrt(a), math.sqrt(1 - a))


def _prod(*xs):
    if any(x is None for x in xs):
        return None
    out = 1.0
    for x in xs:
        out *= x
    return out


def oracle_features(trip, low=2.0, high=8.0, opt=(4.0, 8.0), speed_bins=10, course_bins=36,
                    min_direct_km=0.05):
    recs = trip.records
    n = len(recs)
    t = [(r.timestamp - recs[0].timestamp).total_seconds() for r in recs]
    s = [r.sog for r in recs]
    c = [r.cog for r in recs]
    f = {"LEN": trip.length_m, "WID": trip.width_m, "DFT": trip.draft_m}

    # speed
    mean = _mean(s)
    med = _median(s)
    std = _std(s)
    f["SOG_MEAN"], f["SOG_MED"], f["SOG_STD"] = mean, med, std
    f["SOG_IQR"] = _quantile(s, 0.75) - _quantile(s, 0.25)
    f["SOG_MAD"] = _median([abs(x - med) for x in s])
    f["SOG_MAX"], f["SOG_MIN"] = max(s), min(s)
    f["SOG_RANGE"] = max(s) - min(s)
    f["SOG_CV"] = std / mean if mean != 0 else None
    gaps = [t[i + 1] - t[i] for i in range(n - 1)]
    weights = gaps + [sum(gaps) / len(gaps)]
    wt = sum(weights)
    f["SOG_PCT_LOW"] = 100 * sum(w for w, x in zip(weights, s) if x < low) / wt
    f["SOG_PCT_HIGH"] = 100 * sum(w for w, x in zip(weights, s) if x > high) / wt
    f["SOG_PCT_OPT"] = 100 * sum(w for w, x in zip(weights, s) if opt[0] <= x <= opt[1]) / wt
    counts = [0] * speed_bins
    lo, hi = min(s), max(s)
    for x in s:
        k = 0 if hi == lo else min(speed_bins - 1, math.floor(speed_bins * (x - lo) / (hi - lo) + 1e-9))
        counts[k] += 1
    f["SOG_ENT"] = _entropy(counts)

    # acceleration, knots per minute
    acc = [(s[i + 1] - s[i]) / (gaps[i] / 60.0) for i in range(n - 1)]
    pos = [a for a in acc if a > 0]
    neg = [a for a in acc if a < 0]
    f["ACC_POS_MEAN"] = _mean(pos) if pos else None
    f["ACC_NEG_MEAN"] = _mean(neg) if neg else None
    f["ACC_STD"] = _std(acc)
    f["ACC_MIN"] = min(acc)
    if len(acc) >= 2:
        nz = [a for a in acc if a != 0]
        f["ACC_ZC"] = float(sum(1 for a, b in zip(nz, nz[1:]) if (a > 0) != (b > 0)))
    else:
        f["ACC_ZC"] = None

    # course
    unwrapped = [c[0]]
    for i in range(1, n):
        unwrapped.append(unwrapped[-1] + _wrap(c[i] - c[i - 1]))
    f["COG_STD"] = _std(unwrapped)
    ccounts = [0] * course_bins
    for x in c:
        ccounts[min(course_bins - 1, math.floor(x * course_bins / 360.0))] += 1
    f["COG_ENT"] = _entropy(ccounts)
    turns = [_wrap(c[i + 1] - c[i]) for i in range(n - 1)]
    f["TRN_STD"] = _std([abs(d / (g / 60.0)) for d, g in zip(turns, gaps)])
    f["COG_TOTAL_CHANGE"] = sum(abs(d) for d in turns)
    offs = [_wrap(r.cog - r.heading) for r in recs if r.heading is not None]
    if len(offs) >= 2:
        f["COG_HDG_DIFF_MEAN"], f["COG_HDG_DIFF_STD"] = _mean(offs), _std(offs)
    else:
        f["COG_HDG_DIFF_MEAN"] = f["COG_HDG_DIFF_STD"] = None

    # geometry
    f["DUR_HRS"] = t[-1] / 3600.0
    f["DIST_KM"] = sum((s[i] + s[i + 1]) / 2 * gaps[i] / 3600.0 for i in range(n - 1)) * 1.852
    direct = _haversine(recs[0].lat, recs[0].lon, recs[-1].lat, recs[-1].lon)
    f["DIST_HAVERSINE_KM"] = direct
    f["SINO_IDX"] = f["DIST_KM"] / direct if direct >= min_direct_km else None

    # interactions
    L, W, D = f["LEN"], f["WID"], f["DFT"]
    f["AREA"] = _prod(L, W)
    f["DLT_RATIO"] = None if (D is None or not L) else D / L
    f["DUR_SOGCV"] = _prod(f["DUR_HRS"], f["SOG_CV"])
    f["SOG_LEN"] = _prod(mean, L)
    f["SOGSTD_DFT"] = _prod(std, D)
    f["SOG_WID"] = _prod(mean, W)
    f["SOG_MEAN_SQ"] = _prod(mean, mean)
    f["DFT_SQ"] = _prod(D, D)
    return f


def agree(a, b, rel=1e-9, abs_floor=1e-12):
    """Missing markers must match exactly; numbers within ``rel`` relative.

    ``abs_floor`` only matters for values that are zero up to rounding.
    """
    if a is None or b is None:
        return a is None and b is None
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_floor)
