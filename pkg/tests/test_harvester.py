import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wptlab.distributions import Cscg, Flash
from wptlab.errors import CsvFormatError, FitError, InvalidMomentsError, ParameterError
from wptlab.harvester import (
    CwCscgFading,
    CwNoFading,
    DiodeParams,
    FitDataset,
    LogPolyFitModel,
    TaylorDiodeModel,
    TdCw,
    TdMod,
    TdWf,
    eval_fit,
    fit_logpoly,
    fit_rmse_log,
    fourth_order_factor,
    taylor_from_diode,
    zdc_closed_form,
    zdc_from_moments,
)
from wptlab.units import dbm_to_watts, watts_to_dbm

from conftest import CW_FIT, FIT_RANGE_W, MS_FIT, rel_err


class TestTaylorFromDiode:
    def test_unit_inputs_exact(self):
        m = taylor_from_diode(DiodeParams(i_s=1.0, n=1.0, v_t=1.0), r_ant=50.0)
        assert m.k2 == 0.5
        assert m.k4 == 1.0 / 24.0

    def test_reference_diode_values(self):
        # published rounded values; the formula-exact k4 differs by <0.1%
        m = taylor_from_diode(DiodeParams(), r_ant=50.0)
        assert m.k2 == pytest.approx(0.0034, abs=5e-5)
        assert m.k4 == pytest.approx(0.3829, rel=1.5e-3)
        nvt = 1.05 * 0.02586
        assert m.k2 == 5e-6 / (2 * nvt**2)
        assert m.k4 == 5e-6 / (24 * nvt**4)

    def test_invalid_saturation_current(self):
        with pytest.raises(ParameterError):
            DiodeParams(i_s=0.0)

    def test_invalid_r_ant(self):
        with pytest.raises(ParameterError):
            taylor_from_diode(DiodeParams(), r_ant=0.0)


@pytest.fixture(scope="module")
def ref_taylor():
    return TaylorDiodeModel(k2=0.0034, k4=0.3829, r_ant=50.0)


class TestZdcFromMoments:
    def test_reference_arithmetic(self, ref_taylor):
        # independent evaluation of the figure of merit
        expected = 0.0034 * 50 * 1e-5 + 0.3829 * 50**2 * 1.5e-10
        assert expected == pytest.approx(1.8436e-6, rel=1e-4)
        assert zdc_from_moments(ref_taylor, 1e-5, 1.5e-10) == expected

    def test_zero_moments(self, ref_taylor):
        assert zdc_from_moments(ref_taylor, 0.0, 0.0) == 0.0

    def test_doubled_fourth_moment(self, ref_taylor):
        z1 = zdc_from_moments(ref_taylor, 1e-5, 1.5e-10)
        z2 = zdc_from_moments(ref_taylor, 1e-5, 3.0e-10)
        assert z2 == pytest.approx(1.9872e-6, rel=1e-4)
        # the fourth-order contribution doubled exactly
        second = 0.0034 * 50 * 1e-5
        assert (z2 - second) == pytest.approx(2 * (z1 - second), rel=1e-12)

    def test_jensen_violation_rejected(self, ref_taylor):
        with pytest.raises(InvalidMomentsError):
            zdc_from_moments(ref_taylor, 1.0, 0.5)

    def test_jensen_tolerance_absorbs_noise(self, ref_taylor):
        zdc_from_moments(ref_taylor, 1.0, 1.0 - 1e-10)

    @given(
        m2=st.floats(0.0, 1e3),
        dm4=st.floats(0.0, 1e3),
        bump=st.floats(0.0, 1.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_both_moments(self, ref_taylor, m2, dm4, bump):
        m4 = m2**2 + dm4
        base = zdc_from_moments(ref_taylor, m2, m4)
        assert zdc_from_moments(ref_taylor, m2, m4 + bump) >= base
        assert zdc_from_moments(ref_taylor, m2 + bump, (m2 + bump) ** 2 + dm4) >= base


class TestZdcClosedForm:
    def test_fading_doubles_fourth_order_term(self, ref_taylor):
        p = 1e-5
        z_cw = zdc_closed_form(ref_taylor, p, CwNoFading())
        z_fade = zdc_closed_form(ref_taylor, p, CwCscgFading())
        second = ref_taylor.k2 * ref_taylor.r_ant * p
        assert (z_fade - second) == 2.0 * (z_cw - second)

    def test_single_antenna_is_no_diversity(self, ref_taylor):
        p = 3e-6
        assert zdc_closed_form(ref_taylor, p, TdCw(1)) == zdc_closed_form(ref_taylor, p, CwNoFading())

    def test_td_waveform_factor(self, ref_taylor):
        p = 1e-5
        z = zdc_closed_form(ref_taylor, p, TdWf(m=2, n=8))
        assert fourth_order_factor(TdWf(m=2, n=8)) == 8.0625
        expected = ref_taylor.k2 * 50 * p + 1.5 * ref_taylor.k4 * 2500 * p * p * 8.0625
        assert z == expected

    def test_td_mod_factor(self, ref_taylor):
        assert fourth_order_factor(TdMod(m=2, dist=Cscg())) == 3.0
        assert fourth_order_factor(TdMod(m=1, dist=Flash(1.0))) == 1.0

    def test_fading_beats_no_fading(self, ref_taylor):
        for p in (1e-8, 1e-5, 1e-3):
            assert zdc_closed_form(ref_taylor, p, CwCscgFading()) > zdc_closed_form(
                ref_taylor, p, CwNoFading()
            )

    def test_td_factor_bounds_and_monotonicity(self, ref_taylor):
        factors = [fourth_order_factor(TdCw(m)) for m in range(1, 65)]
        assert factors[0] == 1.0
        assert all(1.0 <= f < 2.0 for f in factors)
        assert all(b >= a for a, b in zip(factors, factors[1:]))

    def test_invalid_antenna_count(self):
        with pytest.raises(ParameterError):
            TdCw(0)
        with pytest.raises(ParameterError):
            TdWf(m=2, n=0)

    def test_invalid_power(self, ref_taylor):
        with pytest.raises(ParameterError):
            zdc_closed_form(ref_taylor, 0.0, CwNoFading())


def synthetic_dataset(a, b, c, p_rf):
    p_rf = np.asarray(p_rf)
    ln = np.log(p_rf)
    return FitDataset(p_rf=p_rf, p_dc=np.exp(a * ln**2 + b * ln + c))


class TestFitLogPoly:
    def test_recovers_cw_reference_coefficients(self):
        grid = dbm_to_watts(np.linspace(-40, -5, 30))
        data = synthetic_dataset(p_rf=grid, **CW_FIT)
        m = fit_logpoly(data, degree=2)
        assert abs(m.a - CW_FIT["a"]) < 1e-9
        assert abs(m.b - CW_FIT["b"]) < 1e-9
        assert abs(m.c - CW_FIT["c"]) < 1e-9
        assert m.valid_range == (grid.min(), grid.max())
        assert fit_rmse_log(m, data) < 1e-10

    def test_recovers_multisine_reference_coefficients(self):
        grid = dbm_to_watts(np.linspace(-40, -5, 24))
        data = synthetic_dataset(p_rf=grid, **MS_FIT)
        m = fit_logpoly(data, degree=2)
        assert abs(m.a - MS_FIT["a"]) < 1e-9
        assert abs(m.b - MS_FIT["b"]) < 1e-9
        assert abs(m.c - MS_FIT["c"]) < 1e-9

    def test_two_point_line_degree_one(self):
        p = np.array([1e-6, 1e-4])
        d = np.array([2e-8, 5e-5])
        m = fit_logpoly(FitDataset(p_rf=p, p_dc=d), degree=1)
        slope = math.log(d[1] / d[0]) / math.log(p[1] / p[0])
        intercept = math.log(d[0]) - slope * math.log(p[0])
        assert m.a == 0.0
        assert m.degree == 1
        assert m.b == pytest.approx(slope, rel=1e-12)
        assert m.c == pytest.approx(intercept, rel=1e-12)

    def test_rank_deficient_design(self):
        data = FitDataset(p_rf=np.array([1e-5] * 4), p_dc=np.array([1e-6, 2e-6, 1e-6, 2e-6]))
        with pytest.raises(FitError):
            fit_logpoly(data, degree=1)

    def test_degree_two_needs_three_distinct_powers(self):
        data = FitDataset(p_rf=np.array([1e-5, 1e-4, 1e-5]), p_dc=np.array([1e-6, 1e-5, 1e-6]))
        with pytest.raises(FitError):
            fit_logpoly(data, degree=2)

    @given(
        a=st.floats(-0.2, 0.0),
        b=st.floats(-2.0, 2.0),
        c=st.floats(-15.0, 0.0),
        n=st.integers(3, 40),
    )
    @settings(max_examples=100, deadline=None)
    def test_noiseless_roundtrip(self, a, b, c, n):
        grid = dbm_to_watts(np.linspace(-40, -5, n))
        m = fit_logpoly(synthetic_dataset(a, b, c, grid), degree=2)
        assert abs(m.a - a) < 1e-9
        assert abs(m.b - b) < 1e-9
        assert abs(m.c - c) < 1e-9


class TestEvalFit:
    def test_reference_cw_model_at_minus20dbm(self, cw_fit_model):
        # plug the coefficients in by hand as the oracle
        ln = math.log(1e-5)
        expected = math.exp(CW_FIT["a"] * ln**2 + CW_FIT["b"] * ln + CW_FIT["c"])
        got = eval_fit(cw_fit_model, 1e-5)
        assert got == expected
        assert got == pytest.approx(1.09e-6, rel=2e-3)
        # sanity: efficiency in the tens-of-percent decade
        assert 0.05 < got / 1e-5 < 0.2

    def test_sensitivity_floor(self, cw_fit_model):
        m = cw_fit_model.with_floor(1e-7)
        assert eval_fit(m, 1e-8) == 0.0
        assert eval_fit(m, 2e-7) > 0.0

    def test_identity_model(self, identity_model):
        for p in (1e-9, 1e-5, 0.5):
            assert eval_fit(identity_model, p) == pytest.approx(p, rel=1e-12)

    def test_continuity_except_at_floor(self, cw_fit_model):
        m = cw_fit_model.with_floor(1e-6)
        eps = 1e-12
        below = eval_fit(m, 1e-6 * (1 - eps))
        at = eval_fit(m, 1e-6)
        above = eval_fit(m, 1e-6 * (1 + eps))
        assert below == 0.0
        assert at > 0.0
        assert rel_err(above, at) < 1e-9  # continuous from above

    def test_vectorized(self, cw_fit_model):
        p = np.array([1e-6, 1e-5, 1e-4])
        out = eval_fit(cw_fit_model, p)
        assert out.shape == (3,)
        assert out[1] == eval_fit(cw_fit_model, 1e-5)

    def test_extrapolation_flag(self, cw_fit_model):
        assert cw_fit_model.is_extrapolated(1e-8)
        assert not cw_fit_model.is_extrapolated(1e-5)
        assert cw_fit_model.is_extrapolated(1e-2)

    def test_invalid_power(self, cw_fit_model):
        with pytest.raises(ParameterError):
            eval_fit(cw_fit_model, 0.0)


class TestModelValidation:
    def test_degree_one_requires_zero_a(self):
        with pytest.raises(ParameterError):
            LogPolyFitModel(a=0.1, b=1.0, c=0.0, valid_range=(1e-9, 1.0), degree=1)

    def test_empty_valid_range(self):
        with pytest.raises(ParameterError):
            LogPolyFitModel(a=0.0, b=1.0, c=0.0, valid_range=(1e-3, 1e-6))

    def test_negative_floor(self):
        with pytest.raises(ParameterError):
            LogPolyFitModel(a=0.0, b=1.0, c=0.0, valid_range=(1e-9, 1.0), p_rf_min=-1.0)


class TestIo:
    def test_json_roundtrip_schema(self, cw_fit_model, tmp_path):
        path = tmp_path / "model.json"
        m = cw_fit_model.with_floor(3e-7)
        m.save_json(path)
        raw = json.loads(path.read_text())
        assert set(raw) == {"degree", "a", "b", "c", "valid_range_w", "p_rf_min_w"}
        back = LogPolyFitModel.load_json(path)
        assert back == m

    def test_csv_dbm_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("prf_dbm,pdc_dbm\n-20,-29.6\n-10,-18.0\n")
        data = FitDataset.from_csv(path)
        assert data.p_rf[0] == pytest.approx(1e-5)
        assert data.p_dc[1] == pytest.approx(dbm_to_watts(-18.0))

    def test_csv_watt_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("prf_w,pdc_w\n1e-5,1.1e-6\n1e-4,2e-5\n")
        data = FitDataset.from_csv(path)
        assert data.p_rf[1] == 1e-4

    def test_csv_bad_header(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("power,dc\n1,2\n")
        with pytest.raises(CsvFormatError) as exc:
            FitDataset.from_csv(path)
        assert exc.value.line == 1

    def test_csv_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("prf_w,pdc_w\n1e-5,1e-6\nnot,numeric\n")
        with pytest.raises(CsvFormatError) as exc:
            FitDataset.from_csv(path)
        assert exc.value.line == 3

    def test_dataset_rejects_nonpositive(self):
        with pytest.raises(ParameterError):
            FitDataset(p_rf=np.array([1e-5, -1e-5]), p_dc=np.array([1e-6, 1e-6]))


def test_dbm_conversions_roundtrip():
    assert dbm_to_watts(-20.0) == pytest.approx(1e-5, rel=1e-12)
    assert watts_to_dbm(1e-5) == pytest.approx(-20.0, abs=1e-12)
    grid = np.linspace(-40, 20, 13)
    assert np.allclose(watts_to_dbm(dbm_to_watts(grid)), grid, atol=1e-12)
