import numpy as np
import pytest

from baton import csi
from baton.errors import AllZeroTrace, WindowTooLong
from baton.sim import default_links, named_shape, synthesize_features

LAM = csi.SPEED_OF_LIGHT / csi.CARRIER_FREQUENCY
QUIET = csi.NoiseConfig(kappa_step=0.0)


def _ramp(rate, seconds=2.0, start=5.0):
    t = np.arange(int(seconds * csi.SAMPLE_RATE)) / csi.SAMPLE_RATE
    return start + rate * t


def test_wavelength_and_doppler_relation():
    assert LAM == pytest.approx(0.056352, abs=1e-6)
    assert -1.0 / LAM == pytest.approx(-17.7457, abs=1e-3)


def test_stationary_streams_have_constant_modulus():
    trace = csi.synthesize_from_path_length(np.full(1000, 4.0), csi.NoiseConfig(kappa_step=0.05, seed=1))
    mod = np.abs(trace.samples)
    assert np.ptp(mod, axis=0).max() < 1e-12


def test_spectrogram_peak_at_analytic_doppler():
    spec = csi.spectrogram(csi.synthesize_from_path_length(_ramp(1.0), QUIET))
    peak = spec.frequencies[np.argmax(spec.magnitude, axis=0)]
    bin_hz = csi.SAMPLE_RATE / csi.StftConfig().nfft
    assert np.all(np.abs(peak - (-1.0 / LAM)) <= bin_hz)


def test_kappa_cancels_bit_exact():
    L = _ramp(0.7)
    kappa = np.cumsum(np.random.default_rng(4).normal(0, 0.3, L.size))
    with_drift = csi.synthesize_from_path_length(L, QUIET, kappa=kappa)
    without = csi.synthesize_from_path_length(L, QUIET, kappa=np.zeros_like(L))
    a = csi.conjugate_product(with_drift)
    b = csi.conjugate_product(without)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    # the drift factor itself multiplies to exactly one
    d = np.exp(-1j * kappa)
    assert np.array_equal(np.abs(d * np.conj(d)).round(15), np.ones_like(kappa))


@pytest.mark.parametrize("r", [-1.8, -1.0, -0.4, 0.4, 1.0, 1.8])
def test_constant_rate_round_trip(r):
    series = csi.extract_plcr(csi.synthesize_from_path_length(_ramp(r), QUIET))
    assert series.valid.all()
    assert np.all(np.abs(series.values - r) <= series.plcr_resolution)


def test_negative_rate_has_positive_doppler_and_negative_plcr():
    spec = csi.spectrogram(csi.synthesize_from_path_length(_ramp(-0.5), QUIET))
    peak = spec.frequencies[np.argmax(spec.magnitude, axis=0)]
    assert np.all(peak > 0)
    assert np.all(csi.extract_plcr(csi.synthesize_from_path_length(_ramp(-0.5), QUIET)).values < 0)


def test_stationary_frames_flagged():
    trace = csi.synthesize_from_path_length(np.full(2000, 4.0), QUIET)
    series = csi.extract_plcr(trace)
    assert not series.valid.any()
    with pytest.raises(AllZeroTrace):
        csi.extract_plcr(trace, strict=True)


def test_window_longer_than_trace():
    with pytest.raises(WindowTooLong):
        csi.spectrogram(csi.synthesize_from_path_length(np.full(50, 4.0), QUIET))


def test_binary_round_trip():
    trace = csi.synthesize_from_path_length(_ramp(1.0, 0.5), csi.NoiseConfig(noise_power=0.01, seed=2))
    back = csi.CsiTrace.from_bytes(trace.to_bytes())
    assert np.array_equal(back.samples, trace.samples)
    assert back.sample_rate == trace.sample_rate and back.t0 == trace.t0


def test_csi_features_match_direct_model_on_straight_trace():
    traj = named_shape("straight")
    links = default_links(4)
    direct = synthesize_features(traj, links)
    via = synthesize_features(traj, links, mode="csi", csi_noise=QUIET)
    bin_w = csi.SAMPLE_RATE / csi.StftConfig().nfft * LAM
    assert np.nanmax(np.abs(via.values[1:] - direct.values[1:])) < bin_w
