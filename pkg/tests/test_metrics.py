import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import sine
from eegbench.dataset import GenerationConfig, generate_semisynthetic, synth_surrogate
from eegbench.errors import DegenerateSignalError, InvalidInputError, ShapeError
from eegbench.metrics import (
    CSV_COLUMNS,
    EvalReport,
    PairRecord,
    anova_oneway,
    best_worst,
    betainc_reg,
    cc,
    evaluate,
    f_sf,
    rrmse_spectral,
    rrmse_temporal,
    spearman,
)
from eegbench.signal_core import Segment

FS = 256


def S(v, fs=FS):
    return Segment(np.asarray(v, dtype=float), fs)


@pytest.fixture
def x(rng):
    return S(rng.standard_normal(512))


class TestTemporal:
    def test_identity(self, x):
        assert rrmse_temporal(x, x) == 0.0

    def test_zero_denoiser(self, x):
        assert rrmse_temporal(S(np.zeros(512)), x) == 1.0

    def test_double(self, x):
        assert rrmse_temporal(S(2 * x.samples), x) == pytest.approx(1.0, abs=1e-15)

    def test_errors(self, x):
        with pytest.raises(ShapeError):
            rrmse_temporal(S(np.ones(3)), x)
        with pytest.raises(DegenerateSignalError):
            rrmse_temporal(x, S(np.zeros(512)))


class TestSpectral:
    def test_identity(self, x):
        assert rrmse_spectral(x, x) == 0.0

    def test_zero_denoiser(self, x):
        assert rrmse_spectral(S(np.zeros(512)), x) == 1.0

    def test_quarter_period_shift(self):
        a, b = S(sine(10, FS, 512)), S(sine(10, FS, 512, phase=np.pi / 2))
        assert rrmse_spectral(b, a) < 1e-10
        assert rrmse_temporal(b, a) > 1.0

    def test_cap_at_120_hz(self, rng):
        truth = S(rng.standard_normal(1024), 512)
        noisy = S(truth.samples + sine(200, 512, 1024, amp=5), 512)
        assert rrmse_spectral(noisy, truth) < 1e-10


class TestCc:
    def test_identical_and_flipped(self, x):
        assert cc(x, x) == pytest.approx(1.0, abs=1e-15)
        assert cc(S(-x.samples), x) == pytest.approx(-1.0, abs=1e-15)

    def test_independent_noise(self, rng):
        a, b = S(rng.standard_normal(512)), S(rng.standard_normal(512))
        assert abs(cc(a, b)) < 0.15

    def test_matches_numpy(self, rng):
        a, b = rng.standard_normal(100), rng.standard_normal(100)
        assert cc(S(a), S(b)) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)

    def test_constant(self, x):
        with pytest.raises(DegenerateSignalError):
            cc(S(np.ones(512)), x)


@settings(max_examples=50)
@given(st.floats(1e-3, 1e3), st.booleans(), st.floats(0.01, 100), st.floats(-50, 50), st.integers(0, 1000))
def test_invariances(c, flip, a, b, seed):
    r = np.random.default_rng(seed)
    d, t = r.standard_normal(64), r.standard_normal(64)
    k = -c if flip else c
    assert rrmse_temporal(S(k * d), S(k * t)) == pytest.approx(rrmse_temporal(S(d), S(t)), rel=1e-9)
    assert rrmse_spectral(S(k * d), S(k * t)) == pytest.approx(rrmse_spectral(S(d), S(t)), rel=1e-9)
    assert cc(S(a * d + b), S(t)) == pytest.approx(cc(S(d), S(t)), abs=1e-9)
    assert cc(S(d), S(a * t + b)) == pytest.approx(cc(S(d), S(t)), abs=1e-9)


def _test_pairs():
    eeg = synth_surrogate("EEG", 30, 1)
    art = synth_surrogate("EOG", 30, 2)
    return generate_semisynthetic(eeg, art, GenerationConfig(seed=0)).test


class TestEvaluate:
    def test_identity_method(self):
        pairs = _test_pairs()
        rep = evaluate(lambda y: y, [type(p)(p.ground_truth, p.ground_truth, p.lam, p.snr_db, p.sigma_y) for p in pairs])
        assert np.all(rep.values("rrmse_t") == 0) and np.all(rep.values("rrmse_s") == 0)
        assert np.allclose(rep.values("cc"), 1.0)

    def test_zero_method(self):
        pairs = _test_pairs()
        rep = evaluate(lambda y: Segment(np.zeros(len(y)), y.fs), pairs, name="zero")
        stats_ = rep.level_stats()
        assert list(stats_) == [float(v) for v in range(-7, 3)]
        for lvl, st_ in stats_.items():
            assert st_["rrmse_t"][0] == 1.0
        assert rep.n_failed == 0
        assert np.all(np.isnan(rep.values("cc")))  # undefined for a constant output
        assert set(rep.band_ratios) == {"ground_truth", "contaminated", "denoised"}

    def test_failures_recorded(self):
        pairs = _test_pairs()

        def flaky(y):
            if y.samples[0] > 0:
                raise RuntimeError("boom")
            return y

        rep = evaluate(flaky, pairs)
        bad = [r for r in rep.records if not r.ok]
        assert bad and all("boom" in r.error for r in bad)
        assert len(rep.ok_records) + rep.n_failed == len(pairs)

    def test_csv(self, tmp_path):
        pairs = _test_pairs()
        rep = evaluate(lambda y: y, pairs, name="identity", seed=4)
        rep.write_csv(tmp_path / "p.csv")
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS) == "method,seed,snr_db,pair_index,rrmse_t,rrmse_s,cc"
        assert len(lines) == len(pairs) + 1 and lines[1].startswith("identity,4,")

    def test_bad_method(self):
        with pytest.raises(InvalidInputError):
            evaluate(42, _test_pairs())


class TestBestWorst:
    def _rep(self, vals):
        return EvalReport("m", [PairRecord(i, 0.0, rrmse_t=v) for i, v in enumerate(vals)])

    def test_single(self):
        assert best_worst(self._rep([0.5])) == (0, 0)

    def test_two(self):
        assert best_worst(self._rep([0.2, 0.9])) == (0, 1)

    def test_tie(self):
        assert best_worst(self._rep([0.4, 0.4, 0.4])) == (0, 0)

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            best_worst(EvalReport("m", []))


class TestAnova:
    def test_identical_groups(self):
        F, p = anova_oneway([[1, 2, 3], [1, 2, 3]])
        assert F == 0.0 and p == 1.0

    def test_hand_value(self):
        F, p = anova_oneway([[1, 2, 3], [2, 3, 4]])
        assert F == pytest.approx(1.5, abs=1e-12)
        assert p == pytest.approx(stats.f_oneway([1, 2, 3], [2, 3, 4]).pvalue, rel=1e-10)

    def test_separated(self):
        _, p = anova_oneway([[0, 0.01, -0.01], [10, 10.01, 9.99]])
        assert p < 0.001

    @settings(max_examples=40)
    @given(st.integers(0, 10**6), st.integers(2, 5), st.integers(2, 30))
    def test_matches_scipy(self, seed, k, n):
        r = np.random.default_rng(seed)
        groups = [r.standard_normal(n) + r.uniform(-1, 1) for _ in range(k)]
        F, p = anova_oneway(groups)
        ref = stats.f_oneway(*groups)
        assert F == pytest.approx(ref.statistic, rel=1e-9)
        assert p == pytest.approx(ref.pvalue, rel=1e-7, abs=1e-300)

    @settings(max_examples=60)
    @given(st.floats(0.1, 50), st.floats(0.1, 50), st.floats(0.0, 1.0))
    def test_betainc_matches_scipy(self, a, b, xv):
        from scipy.special import betainc

        assert betainc_reg(a, b, xv) == pytest.approx(betainc(a, b, xv), rel=1e-9, abs=1e-13)

    def test_f_tail(self):
        assert f_sf(3.0, 2, 10) == pytest.approx(stats.f.sf(3.0, 2, 10), rel=1e-10)

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            anova_oneway([[1, 2, 3]])
        with pytest.raises(InvalidInputError):
            anova_oneway([[1], [2, 3]])


def test_spearman():
    assert spearman([1, 2, 3, 4], [10, 8, 5, 1]) == pytest.approx(-1.0)
    a, b = np.random.default_rng(0).standard_normal((2, 30))
    assert spearman(a, b) == pytest.approx(stats.spearmanr(a, b).statistic, abs=1e-12)
