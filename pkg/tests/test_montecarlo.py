import math

import numpy as np
import pytest

from wptlab.errors import DurationError, ParameterError
from wptlab.gains import QuadratureSettings, e_fading, e_td2
from wptlab.montecarlo import (
    McResult,
    MomentEstimate,
    estimate_moments,
    mc_channel_fourth_moment,
    mc_fading_gain,
    mc_td_gain,
)
from wptlab.signals import Cw, Multisine, SampledSignal, TransmitConfig, WaveformSpec, synthesize
from wptlab.units import dbm_to_watts

from conftest import power_model


def unit_cw_signal(cycles=50, spc=64):
    w = WaveformSpec(family=Cw(), power=1.0, carrier=1e6)
    return synthesize(w, TransmitConfig.single_antenna(), duration=cycles * 1e-6,
                      sample_rate=spc * 1e6, seed=0)


class TestEstimateMoments:
    def test_unit_cw(self):
        est = estimate_moments(unit_cw_signal())
        assert abs(est.m2 - 1.0) < 1e-3
        assert abs(est.m4 - 1.5) < 1e-3

    def test_two_tone_against_dense_average(self):
        # independent oracle: dense time-average of the explicit two-tone
        # waveform over one full beat period
        delta_f, f0, p = 1e5, 1.6e6, 1.0
        t = np.arange(2**22) / 2**22 * (1.0 / delta_f)
        dense = np.sqrt(2 * p / 2) * (
            np.cos(2 * np.pi * f0 * t) + np.cos(2 * np.pi * (f0 + delta_f) * t)
        )
        oracle_m4 = float((dense**4).mean())
        assert abs(oracle_m4 - 2.25) < 1e-3  # 1.5 * g_wf(2) * P^2

        w = WaveformSpec(family=Multisine(n_tones=2, delta_f=delta_f), power=p, carrier=f0)
        sig = synthesize(w, TransmitConfig.single_antenna(), duration=1.0 / delta_f,
                         sample_rate=64e6, seed=0)
        est = estimate_moments(sig)
        assert abs(est.m4 - oracle_m4) < 1e-3
        assert abs(est.m4 - 2.25) < 1e-3

    def test_all_zero_signal(self):
        sig = SampledSignal(sample_rate=1e3, samples=np.zeros(1000), duration=1.0)
        est = estimate_moments(sig)
        assert est.m2 == 0.0
        assert est.m4 == 0.0
        assert est.se_m2 == 0.0

    def test_jensen_holds_for_arbitrary_signals(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = rng.integers(10, 3000)
            y = rng.standard_normal(n) * rng.uniform(0.01, 10.0)
            sig = SampledSignal(sample_rate=1.0, samples=y, duration=float(n))
            est = estimate_moments(sig)
            assert est.m4 >= est.m2**2 * (1 - 1e-9)

    def test_too_short(self):
        sig = SampledSignal(sample_rate=1.0, samples=np.zeros(1), duration=1.0)
        with pytest.raises(DurationError):
            estimate_moments(sig)

    def test_estimate_validation(self):
        with pytest.raises(ParameterError):
            MomentEstimate(m2=1.0, m4=0.5, se_m2=0.0, se_m4=0.0, count=10)


class TestChannelFourthMoment:
    def test_single_antenna_exact(self):
        res = mc_channel_fourth_moment(1, trials=1000, seed=0)
        assert res.estimate == 1.0
        assert res.std_error == 0.0

    def test_m2_reference(self):
        res = mc_channel_fourth_moment(2, trials=10**6, seed=1)
        assert res.agrees_with(1.5)
        assert res.std_error < 0.01

    def test_m4_reference(self):
        res = mc_channel_fourth_moment(4, trials=10**6, seed=2)
        assert res.agrees_with(1.75)

    def test_equal_channel_formula(self):
        # E|h|^4 / M^2 = 2 - 1/M for equal unit channels
        for m, seed in ((3, 3), (8, 4)):
            res = mc_channel_fourth_moment(m, trials=4 * 10**5, seed=seed)
            assert res.agrees_with(2.0 - 1.0 / m)

    def test_imbalance_reduces_benefit(self):
        dominant = mc_channel_fourth_moment(2, h=(1.0, 0.0), trials=1000, seed=5)
        # single active unit channel: |h|^4/M^2 = 1/4 exactly, no variance
        assert dominant.estimate == pytest.approx(0.25, rel=1e-12)
        assert dominant.std_error < 1e-12
        balanced = mc_channel_fourth_moment(2, trials=10**5, seed=5)
        assert balanced.estimate > dominant.estimate

    def test_validation(self):
        with pytest.raises(ParameterError):
            mc_channel_fourth_moment(0)
        with pytest.raises(ParameterError):
            mc_channel_fourth_moment(2, trials=0)


class TestMcFadingGain:
    def test_identity_model(self, identity_model):
        res = mc_fading_gain(identity_model, 0.3, trials=10**5, seed=0)
        assert res.agrees_with(1.0)

    def test_gamma3_oracle(self):
        # slope-2 model at 1 W: expectation Gamma(3) = 2
        res = mc_fading_gain(power_model(2.0), 1.0, trials=10**6, seed=1)
        assert res.agrees_with(2.0)

    def test_agrees_with_quadrature(self, cw_fit_model):
        p = dbm_to_watts(-30.0)
        res = mc_fading_gain(cw_fit_model, p, trials=10**6, seed=2)
        assert res.agrees_with(e_fading(cw_fit_model, p))

    def test_floor_agrees_with_truncated_quadrature(self, cw_fit_model):
        p = dbm_to_watts(-35.0)
        model = cw_fit_model.with_floor(3e-7)
        res = mc_fading_gain(model, p, trials=10**6, seed=3)
        assert res.agrees_with(e_fading(model, p))


class TestMcTdGain:
    def test_single_antenna_exact(self, cw_fit_model):
        res = mc_td_gain(cw_fit_model, 1e-5, m=1, trials=1000, seed=0)
        assert res.estimate == pytest.approx(1.0, rel=1e-12)
        assert res.std_error < 1e-12

    def test_identity_model_m2(self, identity_model):
        # E[1 + cos U] = 1
        res = mc_td_gain(identity_model, 0.25, m=2, trials=10**6, seed=1)
        assert res.agrees_with(1.0)

    def test_agrees_with_quadrature(self, cw_fit_model):
        p = dbm_to_watts(-20.0)
        res = mc_td_gain(cw_fit_model, p, m=2, trials=10**6, seed=2)
        assert res.agrees_with(e_td2(cw_fit_model, p))

    def test_m4_beats_m2_at_low_power(self, cw_fit_model):
        p = dbm_to_watts(-35.0)
        g2 = mc_td_gain(cw_fit_model, p, m=2, trials=4 * 10**5, seed=3)
        g4 = mc_td_gain(cw_fit_model, p, m=4, trials=4 * 10**5, seed=4)
        assert g4.estimate > g2.estimate


class TestDeterminism:
    def test_bitwise_reproducibility(self, cw_fit_model):
        a = mc_fading_gain(cw_fit_model, 1e-5, trials=10**5, seed=77)
        b = mc_fading_gain(cw_fit_model, 1e-5, trials=10**5, seed=77)
        assert a == b
        c = mc_fading_gain(cw_fit_model, 1e-5, trials=10**5, seed=78)
        assert c.estimate != a.estimate

    def test_block_size_does_not_change_values(self, monkeypatch):
        # drawing trials in blocks from one stream is block-size independent
        import wptlab.montecarlo as mc

        full = mc_channel_fourth_moment(2, trials=12_345, seed=9)
        monkeypatch.setattr(mc, "_BLOCK", 1000)
        blocked = mc_channel_fourth_moment(2, trials=12_345, seed=9)
        assert full == blocked


def test_mc_result_validation():
    with pytest.raises(ParameterError):
        McResult(estimate=1.0, std_error=-1.0, trials=10, seed=0)
    with pytest.raises(ParameterError):
        McResult(estimate=1.0, std_error=0.0, trials=0, seed=0)
