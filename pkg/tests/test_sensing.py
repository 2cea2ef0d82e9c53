import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmwpower.sensing import (
    AdcModel,
    CalibrationError,
    CalibrationResult,
    DetectorModel,
    calibrate,
    detector_voltage,
    generate_sweep,
    measure_power,
    quantization_bound_db,
    read_sweep_csv,
    write_sweep_csv,
)

DET = DetectorModel()


class TestDetector:
    def test_intercept_is_zero_volts(self):
        assert detector_voltage(DET.intercept_dbm, DET, clamp=False) == 0.0

    def test_substitution(self):
        assert detector_voltage(-35.0, DET) == pytest.approx(0.25)

    def test_clamped_below_range(self):
        assert detector_voltage(-80.0, DET) == DET.clamp_v[0]
        assert detector_voltage(20.0, DET) == DET.clamp_v[1]

    def test_validation(self):
        with pytest.raises(ValueError):
            DetectorModel(slope_v_per_db=0)
        with pytest.raises(ValueError):
            DetectorModel(range_min_dbm=0, range_max_dbm=-10)
        with pytest.raises(ValueError):
            AdcModel(bits=20)


class TestMeasure:
    @given(st.floats(-40, 0))
    def test_ideal_round_trip(self, p):
        m = measure_power(p, DET)
        assert abs(m.p_est_dbm - p) < 1e-12 and not m.saturated

    def test_quantization_bound_3v3(self):
        adc = AdcModel(12, 3.3)
        assert quantization_bound_db(DET, adc) == pytest.approx(3.3 / 4096 / (2 * 0.025))
        assert quantization_bound_db(DET, adc) == pytest.approx(0.0161, abs=1e-4)

    @pytest.mark.parametrize("adc", [AdcModel(), AdcModel(12, 3.3), AdcModel(10, 2.0)])
    def test_dense_quantization_error(self, adc):
        ps = np.linspace(DET.range_min_dbm, DET.range_max_dbm, 20_001)
        bound = adc.lsb_v / (2 * abs(DET.slope_v_per_db))
        worst = 0.0
        for p in ps:
            m = measure_power(p, DET, adc)
            if not m.saturated:
                worst = max(worst, abs(m.p_est_dbm - p))
        assert worst <= bound + 1e-9

    def test_over_range_flagged(self):
        assert measure_power(DET.range_max_dbm + 5, DET, AdcModel()).saturated

    def test_adc_clip_flagged(self):
        assert measure_power(-10.0, DET, AdcModel(12, 0.5)).saturated

    def test_reference_lands_on_code(self):
        adc = AdcModel()
        v = detector_voltage(-30.0, DET)
        assert v / adc.lsb_v == pytest.approx(375.0, abs=1e-9)
        assert measure_power(-30.0, DET, adc).p_est_dbm == pytest.approx(-30.0, abs=1e-12)


class TestCalibrate:
    def test_noiseless_recovery(self):
        det = DetectorModel(0.0213, -51.7)
        cal = calibrate(generate_sweep(det, np.linspace(-40, -10, 12)))
        assert cal.slope_v_per_db == pytest.approx(0.0213, abs=1e-10)
        assert cal.intercept_dbm == pytest.approx(-51.7, abs=1e-10)
        assert cal.r2 == pytest.approx(1.0, abs=1e-12)

    def test_noisy_r2_and_slope(self):
        rng = np.random.default_rng(7)
        sweep = generate_sweep(DET, np.linspace(-40, -10, 20), 2e-3, rng)
        cal = calibrate(sweep)
        assert cal.r2 >= 0.998
        assert abs(cal.slope_v_per_db / DET.slope_v_per_db - 1) < 0.02

    def test_slope_spread_matches_ols_variance(self):
        # sd(slope) = sigma / sqrt(Sxx)
        ps = np.linspace(-40, -10, 20)
        sd = 2e-3 / math.sqrt(float(((ps - ps.mean()) ** 2).sum()))
        rng = np.random.default_rng(3)
        slopes = [calibrate(generate_sweep(DET, ps, 2e-3, rng)).slope_v_per_db for _ in range(400)]
        assert np.std(slopes) == pytest.approx(sd, rel=0.15)

    @pytest.mark.parametrize("pts", [[], [(1, 2), (2, 3)], [(1, 2), (1, 3), (2, 4)]])
    def test_under_determined(self, pts):
        with pytest.raises(CalibrationError):
            calibrate(pts)

    def test_csv_round_trip(self, tmp_path):
        sweep = generate_sweep(DET, np.linspace(-40, 0, 9))
        path = tmp_path / "s.csv"
        write_sweep_csv(path, sweep)
        assert path.read_text().splitlines()[0] == "p_in_dbm,v_out_volts"
        assert read_sweep_csv(path) == pytest.approx(sweep)

    def test_csv_errors(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(CalibrationError):
            read_sweep_csv(path)
        path.write_text("p_in_dbm,v_out_volts\n1,x\n")
        with pytest.raises(CalibrationError, match=":2:"):
            read_sweep_csv(path)

    def test_result_inverse(self):
        cal = CalibrationResult(0.025, -45.0, 1.0)
        assert cal.power(0.25) == pytest.approx(-35.0)
