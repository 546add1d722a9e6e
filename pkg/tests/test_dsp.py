import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import signal as sps

from conftest import sine
from eegbench import dsp
from eegbench.errors import DegenerateSignalError, InvalidInputError, SpecError
from eegbench.signal_core import Segment, rms

FS = 256


def db(x):
    return 20 * np.log10(np.abs(x))


class TestFilterSpec:
    @pytest.mark.parametrize(
        "kind,cut",
        [("notch", (10,)), ("bandpass", (12,)), ("bandpass", (40, 12)), ("highpass", (-1,)), ("lowpass", (1, 2))],
    )
    def test_invalid(self, kind, cut):
        with pytest.raises(SpecError):
            dsp.FilterSpec(kind, cut)

    def test_order_and_nyquist(self):
        with pytest.raises(SpecError):
            dsp.FilterSpec("highpass", (12,), order=0)
        with pytest.raises(SpecError):
            dsp.design_filter(dsp.FilterSpec("lowpass", (128,)), FS)


class TestDesign:
    def test_highpass_stopband(self):
        sos = dsp.design_filter(dsp.FilterSpec("highpass", (12,), order=4), FS)
        assert db(dsp.frequency_response(sos, [2.0], FS))[0] <= -40

    def test_passband_center_unity(self):
        sos = dsp.design_filter(dsp.FilterSpec("bandpass", (12, 40), order=4), FS)
        center = np.sqrt(12 * 40)
        assert abs(db(dsp.frequency_response(sos, [center], FS))[0]) <= 0.5
        sos = dsp.design_filter(dsp.FilterSpec("highpass", (12,), order=4), FS)
        assert abs(db(dsp.frequency_response(sos, [70.0], FS))[0]) <= 0.5

    def test_own_response_matches_scipy(self):
        sos = dsp.design_filter(dsp.FilterSpec("bandpass", (12, 40), order=4), FS)
        f = np.linspace(0.5, 127, 300)
        _, h = sps.sosfreqz(sos, worN=f, fs=FS)
        assert np.allclose(dsp.frequency_response(sos, f, FS), h, rtol=1e-10, atol=1e-12)

    def test_wide_band_keeps_white_noise(self, rng):
        x = Segment(rng.standard_normal(4096), FS)
        out = dsp.apply_filter(x, dsp.FilterSpec("bandpass", (0.5, 127.0), order=4))
        assert abs(np.var(out.samples) / np.var(x.samples) - 1) < 0.10


class TestApplyFilter:
    def test_two_hz_sine_suppressed(self):
        x = Segment(sine(2, FS, 512), FS)
        out = dsp.apply_filter(x, dsp.FilterSpec("highpass", (12,)))
        assert rms(out) <= 0.01 * rms(x)

    def test_twenty_hz_sine_passes(self):
        x = Segment(sine(20, FS, 512), FS)
        out = dsp.apply_filter(x, dsp.FilterSpec("bandpass", (12, 40)))
        assert abs(rms(out) / rms(x) - 1) < 0.10

    def test_zero_in_zero_out(self):
        out = dsp.apply_filter(Segment(np.zeros(512), FS), dsp.FilterSpec("highpass", (12,)))
        assert np.array_equal(out.samples, np.zeros(512))

    def test_too_short(self):
        with pytest.raises(InvalidInputError):
            dsp.apply_filter(Segment(np.ones(12), FS), dsp.FilterSpec("highpass", (12,), order=4))

    @pytest.mark.parametrize("center", [100, 256, 400])
    def test_zero_phase_keeps_pulse_centre(self, center):
        n = 512
        t = np.arange(n)
        x = np.exp(-0.5 * ((t - center) / 6.0) ** 2)
        out = dsp.apply_filter(Segment(x, FS), dsp.FilterSpec("lowpass", (20,))).samples
        com_in = np.sum(t * x) / np.sum(x)
        com_out = np.sum(t * out) / np.sum(out)
        assert abs(com_out - com_in) <= 1

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_linear(self, a, b):
        r = np.random.default_rng(3)
        s1, s2 = r.standard_normal(256), r.standard_normal(256)
        spec = dsp.FilterSpec("bandpass", (12, 40))
        f = lambda v: dsp.apply_filter(Segment(v, FS), spec).samples  # noqa: E731
        assert np.allclose(f(a * s1 + b * s2), a * f(s1) + b * f(s2), atol=1e-9)


class TestResample:
    def test_doubling_length(self, rng):
        out = dsp.resample(Segment(rng.standard_normal(512), 256), 512)
        assert len(out) == 1024 and out.fs == 512

    def test_identity(self, rng):
        x = Segment(rng.standard_normal(100), 256)
        assert np.array_equal(dsp.resample(x, 256).samples, x.samples)

    def test_peak_location(self):
        out = dsp.resample(Segment(sine(10, 256, 512), 256), 512)
        est = dsp.psd(out)
        assert est.freqs[np.argmax(est.power)] == pytest.approx(10.0)

    def test_round_trip_band_limited(self):
        x = sine(10, 256, 512) + 0.5 * sine(23, 256, 512, phase=1.0)
        up = dsp.resample(Segment(x, 256), 512)
        back = dsp.resample(up, 256).samples
        assert rms(back - x) / rms(x) < 0.02

    def test_bad_rate(self):
        with pytest.raises(InvalidInputError):
            dsp.resample(Segment(np.ones(8), 256), 0)


class TestPsd:
    def test_zero(self):
        assert np.all(dsp.psd(Segment(np.zeros(64), FS)).power == 0)

    def test_single_bin_sine(self):
        est = dsp.psd(Segment(sine(10, FS, 512), FS))
        k = int(np.argmax(est.power))
        assert est.freqs[k] == 10.0
        assert est.power[k] / est.power.sum() >= 0.99

    @pytest.mark.parametrize("n", [64, 511, 512])
    def test_parseval(self, n, rng):
        x = rng.standard_normal(n)
        est = dsp.psd(Segment(x, FS))
        assert np.sum(est.power) * est.df == pytest.approx(np.mean(x**2), rel=1e-6)

    @settings(max_examples=50)
    @given(arrays(np.float64, st.integers(2, 300), elements=st.floats(-1e3, 1e3)))
    def test_parseval_property(self, x):
        est = dsp.psd(x, fs=100)
        assert np.sum(est.power) * est.df == pytest.approx(np.mean(x**2), rel=1e-6, abs=1e-12)

    def test_restrict(self, rng):
        est = dsp.psd(Segment(rng.standard_normal(1024), 512)).restrict(120)
        assert est.freqs.max() <= 120 and est.freqs[-1] == 120

    def test_hamming_option(self):
        est = dsp.psd(Segment(sine(10, FS, 512), FS), window="hamming")
        assert est.freqs[np.argmax(est.power)] == 10.0
        with pytest.raises(InvalidInputError):
            dsp.psd(Segment(np.ones(8), FS), window="blackman")

    def test_array_needs_rate(self):
        with pytest.raises(InvalidInputError):
            dsp.psd(np.ones(8))


class TestBandRatios:
    def test_alpha_sine(self):
        r = dsp.band_power_ratios(Segment(sine(10, FS, 512), FS))
        assert r.alpha >= 0.99

    def test_partition(self, rng):
        r = dsp.band_power_ratios(Segment(rng.standard_normal(512), FS))
        assert sum(r.as_tuple()) == pytest.approx(1.0, abs=1e-9)
        assert list(r.as_dict()) == ["delta", "theta", "alpha", "beta", "gamma"]

    @given(st.floats(1e-3, 1e3), st.booleans())
    def test_scale_invariant(self, c, flip):
        x = np.random.default_rng(0).standard_normal(512)
        c = -c if flip else c
        a = dsp.band_power_ratios(Segment(x, FS)).as_tuple()
        b = dsp.band_power_ratios(Segment(c * x, FS)).as_tuple()
        assert np.allclose(a, b, atol=1e-9)

    def test_band_edges_half_open(self):
        # 4 Hz belongs to theta, 80 Hz to gamma
        assert dsp.band_power_ratios(Segment(sine(4, FS, 512), FS)).theta > 0.99
        assert dsp.band_power_ratios(Segment(sine(80, FS, 512), FS)).gamma > 0.99

    def test_low_rate_rejected(self):
        with pytest.raises(InvalidInputError):
            dsp.band_power_ratios(Segment(np.ones(128), 64))

    def test_no_band_power(self):
        with pytest.raises(DegenerateSignalError):
            dsp.band_power_ratios(Segment(np.ones(512), FS))
