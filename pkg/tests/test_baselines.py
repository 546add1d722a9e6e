import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import sine
from eegbench import _kernels, dsp
from eegbench.baselines import (
    EmdConfig,
    emd,
    emd_denoise,
    filter_denoise,
    filter_spec_for,
    spectral_centroid,
    two_means_1d,
)
from eegbench.dataset import synth_surrogate
from eegbench.errors import DecompositionError, InvalidInputError
from eegbench.signal_core import Segment, rms

FS = 256


def energy(v):
    return float(np.sum(np.asarray(v) ** 2))


class TestKernels:
    def test_extrema_and_crossings(self):
        x = np.array([0.0, 1.0, 0.5, -1.0, -1.0, 0.2, 0.0, 0.3])
        mx, mn = _kernels.find_extrema(x)
        assert mx.tolist() == [1, 5] and mn.tolist() == [3, 6]
        assert _kernels.count_zero_crossings(np.array([1.0, -1.0, 0.0, -2.0, 3.0])) == 2

    @pytest.mark.skipif(_kernels.compiled is None, reason="compiled kernels not built")
    def test_backends_agree(self, rng):
        for _ in range(20):
            x = np.round(rng.standard_normal(200), 1)  # plenty of plateaus and exact zeros
            a, b = _kernels.compiled.find_extrema(x), _kernels.python.find_extrema(x)
            assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
            assert _kernels.compiled.count_zero_crossings(x) == _kernels.python.count_zero_crossings(x)


class TestEmd:
    def test_completeness_surrogate(self):
        bank = synth_surrogate("EEG", 20, 4)
        for i in range(20):
            s = bank.segment(i)
            dec = emd(s)
            assert np.linalg.norm(dec.reconstruct() - s.samples) / np.linalg.norm(s.samples) < 1e-8
            assert 1 <= len(dec) <= 10

    def test_pure_sine_first_imf(self):
        s = Segment(sine(10, FS, 512), FS)
        dec = emd(s)
        assert energy(dec.imfs[0].samples) >= 0.95 * energy(s.samples)

    def test_two_tone_ordering(self):
        s = Segment(sine(5, FS, 512) + sine(40, FS, 512, amp=0.8), FS)
        dec = emd(s)
        assert len(dec) >= 2
        est = dsp.psd(dec.imfs[0])
        assert abs(est.freqs[np.argmax(est.power)] - 40) <= 1
        assert spectral_centroid(dec.imfs[0].samples, FS) > spectral_centroid(dec.imfs[1].samples, FS)

    def test_imfs_satisfy_definition(self):
        s = synth_surrogate("EEG", 1, 9).segment(0)
        for imf in emd(s).imfs:
            mx, mn = _kernels.find_extrema(np.ascontiguousarray(imf.samples))
            zc = _kernels.count_zero_crossings(np.ascontiguousarray(imf.samples))
            assert abs(mx.size + mn.size - zc) <= 1

    def test_zero_signal_fails(self):
        with pytest.raises(DecompositionError):
            emd(Segment(np.zeros(64), FS))

    def test_imf_cap(self):
        s = synth_surrogate("EEG", 1, 3).segment(0)
        assert len(emd(s, EmdConfig(max_imfs=2))) == 2

    @pytest.mark.parametrize("kw", [dict(max_imfs=0), dict(sd_threshold=0), dict(max_sift=0)])
    def test_config_validation(self, kw):
        with pytest.raises(InvalidInputError):
            EmdConfig(**kw)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_completeness_property(self, seed):
        x = np.random.default_rng(seed).standard_normal(128)
        dec = emd(Segment(x, FS))
        assert np.linalg.norm(dec.reconstruct() - x) <= 1e-8 * np.linalg.norm(x)


class TestEmdDenoise:
    def test_sine_kept_in_ocular_mode(self):
        s = Segment(sine(10, FS, 512), FS)
        out = emd_denoise(s, "ocular")
        assert abs(rms(out) / rms(s) - 1) <= 0.15

    def test_drift_removed(self):
        x = sine(10, FS, 512) + 5 * sine(1, FS, 512, phase=0.4)
        out = emd_denoise(Segment(x, FS), "ocular")
        p_in, p_out = dsp.psd(Segment(x, FS)), dsp.psd(out)
        k = int(np.argmin(np.abs(p_in.freqs - 1.0)))
        assert 10 * np.log10(p_in.power[k] / p_out.power[k]) >= 10

    def test_myogenic_drops_fast_components(self):
        x = sine(6, FS, 512) + sine(70, FS, 512, amp=1.0)
        res = emd_denoise(Segment(x, FS), "myogenic", details=True)
        assert 0 in res.removed
        est = dsp.psd(res.output)
        assert est.freqs[np.argmax(est.power)] == pytest.approx(6.0)

    def test_zero_signal_passthrough(self):
        res = emd_denoise(Segment(np.zeros(64), FS), "ocular", details=True)
        assert res.passthrough and np.array_equal(res.output.samples, np.zeros(64))

    def test_never_adds_energy(self):
        bank = synth_surrogate("EEG", 15, 5)
        for i in range(15):
            s = bank.segment(i)
            for kind in ("ocular", "myogenic"):
                assert energy(emd_denoise(s, kind).samples) <= energy(s.samples) + 1e-9

    def test_unknown_type(self):
        with pytest.raises(InvalidInputError):
            emd_denoise(Segment(np.ones(8), FS), "cardiac")

    def test_two_means(self):
        up = two_means_1d([1.0, 1.2, 0.9, 30.0, 28.0])
        assert up.tolist() == [False, False, False, True, True]
        assert not two_means_1d([2.0, 2.0]).any()


class TestFilterDenoise:
    def test_specs(self):
        assert filter_spec_for("ocular").kind == "highpass" and filter_spec_for("ocular").cutoffs == (12.0,)
        assert filter_spec_for("myogenic").cutoffs == (12.0, 40.0)

    def test_twenty_hz_kept(self):
        s = Segment(sine(20, 512, 1024), 512)
        assert abs(rms(filter_denoise(s, "myogenic")) / rms(s) - 1) < 0.10

    def test_sixty_hz_attenuated(self):
        s = Segment(sine(60, 512, 1024), 512)
        assert 20 * np.log10(rms(filter_denoise(s, "myogenic")) / rms(s)) <= -20

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-10, 10), st.floats(-10, 10), st.sampled_from(["ocular", "myogenic"]))
    def test_linear(self, a, b, kind):
        r = np.random.default_rng(1)
        s1, s2 = r.standard_normal(512), r.standard_normal(512)
        f = lambda v: filter_denoise(Segment(v, FS), kind).samples  # noqa: E731
        assert np.allclose(f(a * s1 + b * s2), a * f(s1) + b * f(s2), atol=1e-9)
