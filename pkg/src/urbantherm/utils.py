"""Small shared helpers: time handling, numeric primitives."""

from __future__ import annotations

import math
import re
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import ConfigurationError, EmptyInputError

STAMP_FORMAT = "%Y%m%d-%H%M%S"

_OFFSET_RE = re.compile(r"^(?:UTC)?([+-])(\d{1,2})(?::?(\d{2}))?$")


def parse_timezone(spec: str):
    """Turn a timezone spec into a tzinfo.

    Accepts "UTC", fixed offsets like "+08:00", "-0530" or "UTC+8", and
    IANA names (e.g. "Asia/Singapore") when the system tz database is
    available.
    """
    if spec is None or spec.upper() in ("UTC", "Z"):
        return timezone.utc
    m = _OFFSET_RE.match(spec.strip())
    if m:
        sign = 1 if m.group(1) == "+" else -1
        hours = int(m.group(2))
        minutes = int(m.group(3) or 0)
        if hours > 14 or minutes > 59:
            raise ConfigurationError(f"implausible UTC offset: {spec!r}")
        return timezone(sign * timedelta(hours=hours, minutes=minutes))
    try:
        from zoneinfo import ZoneInfo

        return ZoneInfo(spec)
    except Exception as exc:
        raise ConfigurationError(f"unrecognized timezone: {spec!r}") from exc


def ensure_utc(ts: datetime) -> datetime:
    """Normalize a timestamp to an aware UTC instant (naive input = UTC)."""
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_stamp(ts: datetime) -> str:
    return ensure_utc(ts).strftime(STAMP_FORMAT)


def parse_stamp(stamp: str) -> datetime:
    return datetime.strptime(stamp, STAMP_FORMAT).replace(tzinfo=timezone.utc)


def local_hour(ts: datetime, tz) -> float:
    """Fractional local hour of day in [0, 24)."""
    local = ensure_utc(ts).astimezone(tz)
    return local.hour + local.minute / 60.0 + local.second / 3600.0 + local.microsecond / 3.6e9


def circular_hour_distance(a: float, b: float) -> float:
    d = abs(a - b) % 24.0
    return min(d, 24.0 - d)


def nearest_bucket(hour: float, buckets) -> float:
    """Nearest bucket by circular hour distance; ties go to the bucket
    reached by stepping backward in time from ``hour``."""
    dists = [circular_hour_distance(hour, b) for b in buckets]
    best = min(dists)
    candidates = [b for b, d in zip(buckets, dists) if d == best]
    if len(candidates) == 1:
        return candidates[0]
    earlier = (hour - best) % 24.0
    for b in candidates:
        if math.isclose(b % 24.0, earlier, abs_tol=1e-9):
            return b
    return min(candidates)


def population_stats(values: np.ndarray):
    """Mean and population standard deviation, computed about the minimum.

    Shifting by the minimum keeps the mean exact for uniform inputs (so a
    constant field never leaks pixels above its own mean) and conditions
    the variance sum for temperature-scale magnitudes.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("statistics of an empty value set are undefined")
    m = values.min()
    d = values - m
    mean_d = d.mean()
    var = np.mean((d - mean_d) ** 2)
    return float(m + mean_d), float(np.sqrt(var))


def lower_median(values: np.ndarray) -> float:
    """Median as the lower-middle element for even counts (exact pick)."""
    v = np.asarray(values).ravel()
    k = (v.size - 1) // 2
    return float(np.partition(v, k)[k])


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def kelvin_to_celsius(k):
    return np.asarray(k, dtype=np.float64) - 273.15
