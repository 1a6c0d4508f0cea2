"""Count/temperature conversion against independently computed references.

The frozen reference values below were evaluated at 50 significant
digits with mpmath from the calibration model
T = B / ln(R1 / (R2 (U + O)) + F) and its closed-form inverse, then
rounded to the shown precision.
"""

from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from urbantherm import (
    EmissivityTable,
    LabelMask,
    PlanckConstants,
    RadiometricFrame,
    TemperatureField,
    correct_emissivity,
    counts_to_temperature,
    forward_model,
)
from urbantherm.errors import (
    ConfigurationError,
    EmptyInputError,
    RangeError,
    StateError,
)

# mpmath, 50 digits, defaults R1=14911.1846 R2=0.0108 B=1396.6 O=-6303 F=1
T_OF_19560 = 299.99885549619699
T_OF_6304 = 98.782884495971251
T_OF_65535 = 437.68694673054906
U_OF_300 = 19560.237710173145
CORR_300_095 = 303.87176849398805
CORR_310_090 = 318.27392978490570


def frame_of(counts, **kw):
    counts = np.atleast_2d(np.asarray(counts, dtype=np.uint16))
    return RadiometricFrame(counts, timestamp=datetime(2021, 6, 21, tzinfo=timezone.utc), **kw)


class TestPlanckConstants:
    def test_defaults_freeze_the_calibration(self):
        c = PlanckConstants()
        assert (c.r1, c.r2, c.b, c.o, c.f) == (14911.1846, 0.0108, 1396.6, -6303.0, 1.0)

    @pytest.mark.parametrize("field,value", [("r1", -1.0), ("r2", 0.0), ("b", -5.0)])
    def test_rejects_nonpositive(self, field, value):
        with pytest.raises(ConfigurationError):
            PlanckConstants(**{field: value})

    def test_dict_round_trip(self):
        c = PlanckConstants(r1=15000.0, o=-6000.0)
        assert PlanckConstants.from_dict(c.to_dict()) == c


class TestCountsToTemperature:
    def test_frozen_reference_points(self):
        field = counts_to_temperature(frame_of([[19560, 6304, 65535]]))
        assert field.valid.all()
        np.testing.assert_allclose(
            field.kelvin[0], [T_OF_19560, T_OF_6304, T_OF_65535], rtol=0, atol=1e-9
        )

    def test_invalid_below_offset_not_frame_fatal(self):
        # counts <= -O make the log argument undefined; only those pixels drop out
        field = counts_to_temperature(frame_of([[0, 6303, 6304, 19560]]))
        assert field.valid.tolist() == [[False, False, True, True]]
        assert np.isnan(field.kelvin[0, 0]) and np.isnan(field.kelvin[0, 1])

    def test_all_uint16_values_never_raise(self):
        counts = np.arange(65536, dtype=np.uint16).reshape(256, 256)
        field = counts_to_temperature(frame_of(counts))
        assert int(field.valid.sum()) == 65536 - 6304

    def test_monotone_over_valid_domain(self):
        counts = np.arange(6304, 65536, dtype=np.uint16).reshape(1, -1)
        kelvin = counts_to_temperature(frame_of(counts)).kelvin[0]
        assert (np.diff(kelvin) > 0).all()

    def test_not_emissivity_corrected_yet(self):
        assert counts_to_temperature(frame_of([[20000]])).emissivity_corrected is False


class TestForwardModel:
    def test_frozen_inverse_point(self):
        field = TemperatureField.from_kelvin(np.full((1, 1), 300.0))
        assert forward_model(field).counts[0, 0] == round(U_OF_300)

    def test_round_trip_error_within_quantization(self, rng):
        t = rng.uniform(250.0, 340.0, size=(64, 64))
        frame = forward_model(TemperatureField.from_kelvin(t))
        back = counts_to_temperature(frame)
        assert np.abs(back.kelvin - t).max() < 0.01

    def test_out_of_range_names_the_pixel(self):
        t = np.full((2, 3), 300.0)
        t[1, 2] = 500.0  # above the 16-bit count ceiling
        with pytest.raises(RangeError) as err:
            forward_model(TemperatureField.from_kelvin(t))
        assert err.value.pixel == (1, 2)

    def test_clamp_mode_warns_instead(self):
        t = np.full((1, 2), 300.0)
        t[0, 1] = 500.0
        with pytest.warns(UserWarning, match="clamped 1"):
            frame = forward_model(TemperatureField.from_kelvin(t), clamp=True)
        assert frame.counts[0, 1] == 65535

    def test_requires_fully_valid_field(self):
        field = TemperatureField(
            kelvin=np.array([[300.0, np.nan]]),
            valid=np.array([[True, False]]),
        )
        with pytest.raises(RangeError):
            forward_model(field)

    @given(st.floats(min_value=150.0, max_value=430.0))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, t):
        field = TemperatureField.from_kelvin(np.full((1, 1), t))
        back = counts_to_temperature(forward_model(field))
        # one count never spans more than ~0.04 K anywhere in this range
        assert abs(float(back.kelvin[0, 0]) - t) < 0.05


class TestEmissivityCorrection:
    def setup_method(self):
        self.mask = LabelMask(np.array([[0, 1], [2, 3]], dtype=np.uint8))

    def field(self, kelvin):
        return TemperatureField.from_kelvin(np.asarray(kelvin, dtype=np.float64))

    def test_unity_is_exact_identity(self):
        table = EmissivityTable({c: 1.0 for c in range(6)})
        field = self.field([[300.0, 301.0], [302.0, 303.0]])
        out = correct_emissivity(field, self.mask, table)
        assert (out.kelvin == field.kelvin).all()
        assert out.emissivity_corrected

    def test_frozen_reference_corrections(self):
        table = EmissivityTable({0: 1.0, 1: 0.95, 2: 0.90, 3: 1.0, 4: 1.0, 5: 1.0})
        field = self.field([[300.0, 300.0], [310.0, 300.0]])
        out = correct_emissivity(field, self.mask, table)
        assert out.kelvin[0, 0] == 300.0
        assert out.kelvin[0, 1] == pytest.approx(CORR_300_095, abs=1e-9)
        assert out.kelvin[1, 0] == pytest.approx(CORR_310_090, abs=1e-9)

    def test_monotone_in_emissivity(self):
        # lower emissivity -> larger corrected temperature, strictly
        previous = None
        field = self.field([[300.0]])
        mask = LabelMask(np.array([[1]], dtype=np.uint8))
        for eps in (1.0, 0.98, 0.9, 0.7, 0.5):
            table = EmissivityTable({c: (eps if c == 1 else 1.0) for c in range(6)})
            t = float(correct_emissivity(field, mask, table).kelvin[0, 0])
            if previous is not None:
                assert t > previous
            previous = t

    def test_double_correction_rejected(self):
        field = self.field([[300.0, 300.0], [300.0, 300.0]])
        once = correct_emissivity(field, self.mask)
        with pytest.raises(StateError):
            correct_emissivity(once, self.mask)

    def test_invalid_pixels_stay_invalid(self):
        field = TemperatureField(
            kelvin=np.array([[300.0, np.nan], [300.0, 300.0]]),
            valid=np.array([[True, False], [True, True]]),
        )
        out = correct_emissivity(field, self.mask)
        assert not out.valid[0, 1]
        assert np.isnan(out.kelvin[0, 1])

    def test_default_table_keeps_background_uncorrected(self):
        field = self.field([[300.0, 300.0], [300.0, 300.0]])
        out = correct_emissivity(field, self.mask)
        assert out.kelvin[0, 0] == 300.0  # background eps = 1


class TestEmissivityTable:
    def test_requires_all_classes(self):
        with pytest.raises(ConfigurationError):
            EmissivityTable({0: 1.0, 1: 0.9})

    @pytest.mark.parametrize("eps", [0.0, -0.5, 1.5, float("nan")])
    def test_rejects_out_of_range(self, eps):
        values = {c: 1.0 for c in range(6)}
        values[2] = eps
        with pytest.raises(ConfigurationError):
            EmissivityTable(values)

    def test_default_background_and_sky_are_unity(self):
        table = EmissivityTable.default()
        assert table.values[0] == 1.0
        assert table.values[4] == 1.0


class TestFrameAndFieldTypes:
    def test_frame_requires_uint16_2d(self):
        with pytest.raises(Exception):
            RadiometricFrame(np.zeros((2, 2), dtype=np.float32),
                             timestamp=datetime(2021, 1, 1, tzinfo=timezone.utc))

    def test_empty_frame_rejected(self):
        with pytest.raises(EmptyInputError):
            frame_of(np.zeros((0, 4), dtype=np.uint16))

    def test_frame_is_immutable_and_caller_array_untouched(self):
        counts = np.full((2, 2), 9000, dtype=np.uint16)
        frame = frame_of(counts)
        with pytest.raises(ValueError):
            frame.counts[0, 0] = 1
        counts[0, 0] = 123  # the caller's copy must stay writable
        assert frame.counts[0, 0] == 9000

    def test_timestamp_normalized_to_utc(self):
        naive = datetime(2021, 6, 1, 8, 0)
        frame = RadiometricFrame(np.zeros((1, 1), dtype=np.uint16), timestamp=naive)
        assert frame.timestamp.tzinfo == timezone.utc

    def test_field_rejects_nonpositive_valid_kelvin(self):
        with pytest.raises(RangeError):
            TemperatureField(kelvin=np.array([[-1.0]]), valid=np.array([[True]]))
