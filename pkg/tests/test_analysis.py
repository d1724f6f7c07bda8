"""Analysis-layer tests: integrated sensitivity against closed forms,
numeric bandwidth extraction, gain curves and the optimal squeeze
setting."""

import dataclasses
import math

import numpy as np
import pytest

from sqzcavity import (AboveThreshold, CavityRates, InvalidConfig, NoCrossing,
                       OpticalConfig, Spectrum, closed_form_bandwidth,
                       enhancement_gain, gain_curve, integrated_sensitivity,
                       intracavity_variance, numeric_bandwidth, opo_threshold,
                       optimal_squeeze, peak_sensitivity, snr_spectrum)

HAND = CavityRates(gamma_c=1.0, gamma_s=0.5, gamma_l=0.0, eta=1.0,
                   prefactor=1.0)


class TestSnrSpectrum:
    def test_channels_and_ratio(self, reference_config, omega_grid):
        spec = snr_spectrum(reference_config, omega_grid)
        assert set(spec.channels) == {"noise_psd", "signal_tf_sq", "snr"}
        np.testing.assert_allclose(
            spec.channel("snr"),
            spec.channel("signal_tf_sq") / spec.channel("noise_psd"),
            rtol=1e-15)

    def test_reduced_model_accepted(self):
        spec = snr_spectrum(HAND, np.linspace(0.0, 4.0, 33))
        assert spec.channel("snr")[0] == pytest.approx(4.0, rel=1e-12)

    def test_rejects_unknown_model(self):
        with pytest.raises(TypeError):
            snr_spectrum(object(), np.linspace(0.0, 1.0, 8))


class TestIntegratedSensitivity:
    def test_reduced_matches_lorentzian_closed_form(self):
        # integral over [0, inf) of A/(B^2+w^2) is (pi/2) A/B = (pi/2) S B
        value = integrated_sensitivity(HAND)
        expected = (math.pi / 2.0) * peak_sensitivity(HAND) \
            * closed_form_bandwidth(HAND)
        assert value == pytest.approx(expected, rel=1e-9)

    def test_ratio_equals_enhancement_gain(self):
        off = dataclasses.replace(HAND, gamma_s=0.0)
        ratio = integrated_sensitivity(HAND) / integrated_sensitivity(off)
        assert ratio == pytest.approx(enhancement_gain(HAND), rel=1e-6)
        assert ratio == pytest.approx(2.0, rel=1e-6)

    def test_exact_model_trivial_ratio_at_q0(self, reference_config):
        cfg = dataclasses.replace(reference_config, q=0.0)
        value = integrated_sensitivity(cfg)
        assert value == pytest.approx(integrated_sensitivity(cfg), rel=1e-12)
        assert value > 0.0

    def test_exact_ratio_close_to_reduced_gain(self, reference_config):
        # narrowband cavity: the exact integrated-sensitivity ratio should
        # land near the reduced-model enhancement gain
        from sqzcavity import rates_from_optics

        off = dataclasses.replace(reference_config, q=0.0)
        ratio = (integrated_sensitivity(reference_config)
                 / integrated_sensitivity(off))
        reduced = enhancement_gain(rates_from_optics(reference_config))
        assert ratio == pytest.approx(reduced, rel=0.05)


class TestNumericBandwidth:
    def test_matches_closed_form_on_reduced_model(self):
        omega = np.linspace(0.0, 5.0, 2001)
        spec = snr_spectrum(HAND, omega)

        def snr_at(w):
            point = snr_spectrum(HAND, np.array([0.0, w]))
            return float(point.channel("snr")[1])

        value = numeric_bandwidth(spec, refine=snr_at)
        assert value == pytest.approx(closed_form_bandwidth(HAND), rel=1e-9)

    def test_grid_only_close(self):
        omega = np.linspace(0.0, 5.0, 4001)
        spec = snr_spectrum(HAND, omega)
        assert numeric_bandwidth(spec) == pytest.approx(
            closed_form_bandwidth(HAND), rel=1e-5)

    def test_flat_channel_raises(self):
        omega = np.linspace(0.0, 1.0, 32)
        flat = Spectrum(omega, {"snr": np.ones_like(omega)})
        with pytest.raises(NoCrossing):
            numeric_bandwidth(flat)


class TestIntracavityVariance:
    def test_near_threshold_ratio_one_half(self):
        cfg_off = OpticalConfig(lambda0=1550e-9, length=0.0277, t_c_sq=1e-5,
                                t_b_sq=1e-5, r_int_sq=1e-8)
        cfg = dataclasses.replace(cfg_off, q=0.9999 * opo_threshold(cfg_off))
        ratio = intracavity_variance(cfg) / intracavity_variance(cfg_off)
        assert ratio == pytest.approx(0.5, rel=0.05)


class TestGainCurve:
    def test_reference_curve(self, reference_config):
        q_th = opo_threshold(reference_config)
        q_values = np.linspace(0.0, 0.95 * q_th, 21)
        curves = gain_curve(reference_config, [0.82], q_values)
        points = curves[0.82]
        assert len(points) == 21
        first = points[0]
        assert first.q == 0.0
        assert first.detected_squeeze_db == pytest.approx(0.0, abs=1e-12)
        assert first.gain == pytest.approx(1.0, rel=1e-9)
        gains = [p.gain for p in points]
        best = int(np.argmax(gains))
        assert 0 < best < len(points) - 1          # interior maximum
        assert 1.21 <= gains[best] <= 1.31

    def test_gain_monotone_in_eta(self, reference_config):
        q_th = opo_threshold(reference_config)
        q_values = np.linspace(0.0, 0.8 * q_th, 9)
        curves = gain_curve(reference_config, [0.7, 0.9], q_values)
        for low, high in zip(curves[0.7][1:], curves[0.9][1:]):
            assert high.gain > low.gain

    def test_scale_invariance(self, reference_config):
        q_th = opo_threshold(reference_config)
        q_values = np.linspace(0.0, 0.9 * q_th, 7)
        long_cavity = dataclasses.replace(reference_config, length=0.277)
        a = gain_curve(reference_config, [0.82], q_values)[0.82]
        b = gain_curve(long_cavity, [0.82], q_values)[0.82]
        for pa, pb in zip(a, b):
            assert pb.gain == pytest.approx(pa.gain, rel=1e-9)
            assert pb.detected_squeeze_db == pytest.approx(
                pa.detected_squeeze_db, rel=1e-9)
            assert pb.bandwidth == pytest.approx(0.1 * pa.bandwidth, rel=1e-9)

    def test_rejects_q_at_threshold(self, reference_config):
        q_th = opo_threshold(reference_config)
        with pytest.raises(AboveThreshold):
            gain_curve(reference_config, [0.82], [0.0, q_th])

    def test_thread_env_validation(self, reference_config, monkeypatch):
        monkeypatch.setenv("SQZ_CAVITY_THREADS", "not-a-number")
        with pytest.raises(InvalidConfig):
            gain_curve(reference_config, [0.82], [0.0, 0.01])
        monkeypatch.setenv("SQZ_CAVITY_THREADS", "1")
        curves = gain_curve(reference_config, [0.82], [0.0, 0.01])
        assert len(curves[0.82]) == 2


class TestOptimalSqueeze:
    def test_reference_cavity(self, reference_config):
        best = optimal_squeeze(reference_config)
        assert not best.loss_limited
        assert 0.0 < best.q_opt < opo_threshold(reference_config)
        assert best.gain == pytest.approx(1.2685, rel=1e-3)
        # numeric maximum and stationary point of the closed form agree
        assert best.q_opt == pytest.approx(best.q_stationary, rel=1e-5)

    def test_lossless_perfect_detection_unbounded(self):
        cfg = OpticalConfig(lambda0=1550e-9, length=0.0277, t_c_sq=0.15,
                            eta_det=1.0)
        best = optimal_squeeze(cfg)
        assert best.loss_limited
        assert math.isinf(best.gain)
        # the reduced-model divergence point gamma_s = gamma_c maps to
        # q = t_c^2 / 4
        assert best.q_opt == pytest.approx(0.15 / 4.0, rel=1e-12)

    def test_no_benefit_when_detection_too_poor(self):
        cfg = OpticalConfig(lambda0=1550e-9, length=0.0277, t_c_sq=0.15,
                            r_int_sq=0.0018, t_b_sq=0.0005, eta_det=0.5)
        best = optimal_squeeze(cfg)
        assert best.q_opt == 0.0
        assert best.gain == pytest.approx(1.0, rel=1e-12)
        assert isinstance(best.q_opt, float)
