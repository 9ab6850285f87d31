import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessim.profiles import (
    MINUTES_PER_YEAR,
    MinuteSeries,
    ProfileError,
    ProfileGapError,
    ProfileLengthError,
    ProfileParseError,
    ScalingPolicy,
    load_profile,
    resample_to_minutes,
    scale_to_year,
    synthetic_year,
    write_profile,
)


def write_csv(path, start, periods, freq, values):
    stamps = pd.date_range(start, periods=periods, freq=freq)
    frame = pd.DataFrame({"timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%S"), "power_w": values})
    frame.to_csv(path, index=False)
    return path


class TestMinuteSeries:
    def test_rejects_wrong_length(self):
        with pytest.raises(ProfileLengthError):
            MinuteSeries(np.zeros(100), "pv")

    def test_rejects_negative_and_nan(self):
        values = np.zeros(MINUTES_PER_YEAR)
        values[5] = -1
        with pytest.raises(ProfileError):
            MinuteSeries(values, "load")
        values[5] = np.nan
        with pytest.raises(ProfileError):
            MinuteSeries(values, "load")

    def test_values_are_read_only(self, sample_profiles):
        pv, _ = sample_profiles
        with pytest.raises(ValueError):
            pv.values[0] = 1.0


class TestScaling:
    def test_year_one_is_identity(self, sample_profiles):
        pv, load = sample_profiles
        for base in (pv, load):
            out = scale_to_year(base, ScalingPolicy(), 1)
            assert np.array_equal(out.values, base.values)
            assert out.year_index == 1

    def test_pv_year_two_factor(self):
        assert ScalingPolicy().factor("pv", 2) == pytest.approx(0.9955, abs=1e-15)

    def test_load_year_fifteen_factor(self):
        assert ScalingPolicy().factor("load", 15) == pytest.approx(1.31948, abs=1e-5)
        assert ScalingPolicy().factor("load", 15) == 1.02 ** 14

    def test_energy_scales_with_factor(self, sample_profiles):
        _, load = sample_profiles
        out = scale_to_year(load, ScalingPolicy(), 9)
        assert out.energy_wh == pytest.approx(1.02 ** 8 * load.energy_wh, rel=1e-12)

    @pytest.mark.parametrize("year", [0, 16])
    def test_year_out_of_horizon(self, sample_profiles, year):
        with pytest.raises(ValueError):
            scale_to_year(sample_profiles[0], ScalingPolicy(), year)

    def test_rate_bounds(self):
        with pytest.raises(ValueError):
            ScalingPolicy(load_growth_rate=0.25)
        with pytest.raises(ValueError):
            ScalingPolicy(pv_degradation_rate=-0.01)


class TestResample:
    def test_constant_two_second_signal(self):
        seconds = np.arange(0, 3600, 2.0)
        minutes = resample_to_minutes(seconds, np.full(seconds.size, 1000.0), 2)
        assert np.all(minutes[:60] == 1000.0)
        assert np.isnan(minutes[60:]).all()

    def test_alternating_one_second_signal_averages(self):
        seconds = np.arange(0, 600, 1.0)
        power = np.where(np.arange(600) % 2 == 0, 0.0, 2000.0)
        minutes = resample_to_minutes(seconds, power, 1)
        assert np.all(minutes[:10] == 1000.0)

    def test_fifteen_minute_step_hold(self):
        minutes = resample_to_minutes(np.array([0.0, 900.0]), np.array([480.0, 300.0]), 900)
        assert np.all(minutes[:15] == 480.0)
        assert np.all(minutes[15:30] == 300.0)
        assert np.isnan(minutes[30])

    @given(st.lists(st.floats(0, 5000), min_size=120, max_size=120))
    def test_sub_minute_energy_conserved(self, samples):
        power = np.array(samples)
        minutes = resample_to_minutes(np.arange(0, 240, 2.0), power, 2)
        assert minutes[:4].sum() * 60 == pytest.approx(power.sum() * 2, rel=1e-9, abs=1e-9)


class TestLoadProfile:
    def test_fifteen_minute_file(self, tmp_path):
        values = np.full(35040, 300.0)
        values[0] = 480.0
        path = write_csv(tmp_path / "load.csv", "2019-01-01", 35040, "15min", values)
        series = load_profile(path, "load", 900)
        assert np.all(series.values[:15] == 480.0)
        assert series.values[15] == 300.0
        assert series.year_index == 1 and series.kind == "load"

    def test_thirty_second_file_end_to_end(self, tmp_path):
        n = MINUTES_PER_YEAR * 2
        values = np.where(np.arange(n) % 2 == 0, 500.0, 1500.0)
        path = write_csv(tmp_path / "pv.csv", "2019-01-01", n, "30s", values)
        series = load_profile(path, "pv", 30)
        assert np.all(series.values == 1000.0)

    def test_round_trip_with_writer(self, tmp_path, sample_profiles):
        pv, _ = sample_profiles
        write_profile(pv, tmp_path / "pv.csv")
        back = load_profile(tmp_path / "pv.csv", "pv", 60)
        assert np.allclose(back.values, pv.values, atol=1e-6)

    def test_leap_year_drops_feb_29(self, tmp_path):
        n = 366 * 96
        stamps = pd.date_range("2020-01-01", periods=n, freq="15min")
        values = np.where((stamps.month == 2) & (stamps.day == 29), 9999.0, 100.0)
        path = write_csv(tmp_path / "leap.csv", "2020-01-01", n, "15min", values)
        series = load_profile(path, "load", 900)
        assert series.values.max() == 100.0

    def test_short_gap_interpolated(self, tmp_path):
        values = np.full(35040, 200.0)
        values[100:103] = 800.0
        stamps = pd.date_range("2019-01-01", periods=35040, freq="15min")
        frame = pd.DataFrame({"timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%S"), "power_w": values})
        frame = frame.drop(index=[50, 51])  # 30-minute hole
        frame.to_csv(tmp_path / "gap.csv", index=False)
        series = load_profile(tmp_path / "gap.csv", "load", 900)
        assert np.all(series.values[50 * 15 : 52 * 15] == 200.0)

    def test_long_gap_rejected_with_location(self, tmp_path):
        stamps = pd.date_range("2019-01-01", periods=35040, freq="15min")
        frame = pd.DataFrame({"timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%S"), "power_w": 1.0})
        frame.drop(index=range(40, 44)).to_csv(tmp_path / "gap.csv", index=False)
        with pytest.raises(ProfileGapError) as err:
            load_profile(tmp_path / "gap.csv", "load", 900)
        assert err.value.start_minute == 600 and err.value.length == 60

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("timestamp,power_w\n2019-01-01T00:00:00,1\n2019-01-01T00:15:00,abc\n")
        with pytest.raises(ProfileParseError) as err:
            load_profile(path, "load", 900)
        assert err.value.line == 3

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,watts\n2019-01-01T00:00:00,1\n")
        with pytest.raises(ProfileParseError):
            load_profile(path, "load", 900)

    def test_partial_year_is_length_error(self, tmp_path):
        path = write_csv(tmp_path / "short.csv", "2019-01-01", 96 * 30, "15min", np.ones(96 * 30))
        with pytest.raises(ProfileLengthError):
            load_profile(path, "load", 900)

    def test_step_must_divide_minute(self, tmp_path):
        with pytest.raises(ValueError):
            load_profile(tmp_path / "x.csv", "pv", 7)


class TestSyntheticYear:
    def test_deterministic(self):
        assert np.array_equal(synthetic_year("pv").values, synthetic_year("pv").values)

    def test_summer_outproduces_winter(self, sample_profiles):
        daily = sample_profiles[0].values.reshape(365, 1440).sum(axis=1)
        assert daily[150:210].mean() > 1.3 * daily[:30].mean()
