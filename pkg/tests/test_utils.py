from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, strategies as st

from urbantherm.errors import ConfigurationError, EmptyInputError
from urbantherm.utils import (
    circular_hour_distance,
    ensure_utc,
    format_stamp,
    kelvin_to_celsius,
    local_hour,
    lower_median,
    nearest_bucket,
    parse_stamp,
    parse_timezone,
    population_stats,
    round_half_up,
)

BUCKETS = (0, 4, 8, 12, 16, 20)


def test_stamp_round_trip():
    ts = datetime(2021, 6, 21, 14, 30, 59, tzinfo=timezone.utc)
    assert format_stamp(ts) == "20210621-143059"
    assert parse_stamp("20210621-143059") == ts


def test_parse_stamp_rejects_garbage():
    with pytest.raises(ValueError):
        parse_stamp("20211399-000000")


def test_ensure_utc_converts_and_defaults():
    naive = datetime(2021, 1, 1, 12, 0)
    assert ensure_utc(naive).tzinfo == timezone.utc
    plus8 = datetime(2021, 1, 1, 20, 0, tzinfo=parse_timezone("+08:00"))
    assert ensure_utc(plus8).hour == 12


@pytest.mark.parametrize("spec,utc_noon_local", [
    ("UTC", 12.0),
    ("+08:00", 20.0),
    ("-05:00", 7.0),
    ("UTC+8", 20.0),
])
def test_parse_timezone_offsets(spec, utc_noon_local):
    tz = parse_timezone(spec)
    ts = datetime(2021, 6, 1, 12, 0, tzinfo=timezone.utc)
    assert local_hour(ts, tz) == utc_noon_local


def test_parse_timezone_rejects_unknown():
    with pytest.raises(ConfigurationError):
        parse_timezone("Mars/Olympus")


def test_local_hour_is_fractional():
    ts = datetime(2021, 6, 1, 12, 30, tzinfo=timezone.utc)
    assert local_hour(ts, timezone.utc) == 12.5


def test_circular_hour_distance_wraps():
    assert circular_hour_distance(23.0, 1.0) == 2.0
    assert circular_hour_distance(0.0, 12.0) == 12.0
    assert circular_hour_distance(6.0, 6.0) == 0.0


class TestNearestBucket:
    def test_exact_hit(self):
        assert nearest_bucket(8.0, BUCKETS) == 8

    def test_wraps_past_midnight(self):
        # 23:00 is 1 h from bucket 0 and 3 h from bucket 20
        assert nearest_bucket(23.0, BUCKETS) == 0

    def test_tie_goes_to_earlier_bucket(self):
        # 02:00 sits exactly between buckets 0 and 4
        assert nearest_bucket(2.0, BUCKETS) == 0
        assert nearest_bucket(6.0, BUCKETS) == 4

    @given(st.floats(min_value=0.0, max_value=23.999))
    def test_result_is_a_bucket(self, hour):
        assert nearest_bucket(hour, BUCKETS) in BUCKETS


class TestPopulationStats:
    def test_against_brute_force(self, rng):
        values = rng.uniform(250, 340, size=999)
        mean, std = population_stats(values)
        assert mean == pytest.approx(values.sum() / values.size, abs=1e-9)
        brute = np.sqrt(((values - values.mean()) ** 2).sum() / values.size)
        assert std == pytest.approx(brute, abs=1e-9)

    def test_uniform_field_is_exact(self):
        # the acceptance-critical case: a constant input must give back
        # exactly that constant, no rounding slack for the mean
        values = np.full(10_000, 300.17)
        mean, std = population_stats(values)
        assert mean == 300.17
        assert std == 0.0

    def test_empty_raises(self):
        with pytest.raises(EmptyInputError):
            population_stats(np.array([]))

    @given(
        st.lists(st.floats(min_value=1.0, max_value=1000.0), min_size=1, max_size=50),
        st.floats(min_value=0.5, max_value=2.0),
        st.floats(min_value=-10.0, max_value=10.0),
    )
    def test_affine_equivariance(self, values, a, b):
        values = np.asarray(values)
        mean, std = population_stats(values)
        mean2, std2 = population_stats(a * values + b)
        assert mean2 == pytest.approx(a * mean + b, rel=1e-9, abs=1e-9)
        assert std2 == pytest.approx(a * std, rel=1e-9, abs=1e-9)


class TestLowerMedian:
    def test_odd_is_middle(self):
        assert lower_median(np.array([3.0, 1.0, 2.0])) == 2.0

    def test_even_takes_lower_of_pair(self):
        assert lower_median(np.array([304.0, 300.0])) == 300.0
        assert lower_median(np.array([1.0, 2.0, 3.0, 4.0])) == 2.0

    def test_is_an_element(self, rng):
        values = rng.normal(300, 5, size=42)
        assert lower_median(values) in values


def test_round_half_up_on_the_halves():
    x = np.array([0.5, 1.5, 2.5, -0.5, -1.5])
    assert round_half_up(x).tolist() == [1.0, 2.0, 3.0, 0.0, -1.0]


def test_kelvin_to_celsius():
    assert kelvin_to_celsius(273.15) == 0.0
    assert float(kelvin_to_celsius(np.array([300.0]))[0]) == pytest.approx(26.85)
