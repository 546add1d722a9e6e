"""Segment banks, train/val/test splits and semi-synthetic pair generation.

Real banks come from the published ``.npy`` matrices (rows = segments).
When those are not available, :func:`synth_surrogate` produces banks with
roughly the right spectral character so that every pipeline stage can run.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sps

from . import dsp
from .errors import FormatError, InvalidInputError, ShapeError
from .npyio import load_npy
from .signal_core import Segment

__all__ = [
    "SegmentBank",
    "SplitIndices",
    "SemiSyntheticPair",
    "PairSet",
    "GenerationConfig",
    "OCULAR_SNR_LEVELS",
    "MYOGENIC_WIDE_SNR_LEVELS",
    "PUBLISHED_FILES",
    "DATA_ENV_VAR",
    "make_rng",
    "load_npy",
    "load_bank",
    "load_published_banks",
    "split",
    "generate_semisynthetic",
    "synth_surrogate",
]

OCULAR_SNR_LEVELS = tuple(float(v) for v in range(-7, 3))
MYOGENIC_WIDE_SNR_LEVELS = tuple(float(v) for v in range(-7, 5))

PUBLISHED_FILES = {
    "EEG": "EEG_all_epochs.npy",
    "EOG": "EOG_all_epochs.npy",
    "EMG": "EMG_all_epochs.npy",
}
PUBLISHED_SHAPES = {"EEG": (4514, 512, 256), "EOG": (3400, 512, 256), "EMG": (5598, 1024, 512)}
DATA_ENV_VAR = "EEGBENCH_DATA"

ARTIFACT_KIND = {"ocular": "EOG", "myogenic": "EMG"}


def make_rng(*seed_words) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by one or more integers."""
    seq = np.random.SeedSequence([int(w) & 0xFFFFFFFFFFFFFFFF for w in seed_words])
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class SegmentBank:
    kind: str
    matrix: np.ndarray
    fs: int

    def __post_init__(self):
        if self.kind not in ("EEG", "EOG", "EMG"):
            raise InvalidInputError(f"unknown bank kind {self.kind!r}")
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
            raise ShapeError(f"bank matrix must be a non-empty 2-D array, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError(f"{self.kind} bank contains non-finite values")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "fs", int(self.fs))

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def seg_len(self) -> int:
        return self.matrix.shape[1]

    def segment(self, i) -> Segment:
        return Segment(self.matrix[i], self.fs)

    def resampled(self, fs_to: int) -> "SegmentBank":
        if fs_to == self.fs:
            return self
        rows = [dsp.resample(Segment(r, self.fs), fs_to).samples for r in self.matrix]
        return SegmentBank(self.kind, np.vstack(rows), fs_to)


def load_bank(path, kind: str, fs: int | None = None) -> SegmentBank:
    if fs is None:
        fs = PUBLISHED_SHAPES[kind][2]
    return SegmentBank(kind, load_npy(path), fs)


def load_published_banks(root=None, check_shapes: bool = True):
    """Load the three published banks from ``root`` (or ``$EEGBENCH_DATA``).

    Raises FileNotFoundError naming the expected files when any is missing.
    """
    root = root or os.environ.get(DATA_ENV_VAR)
    if not root:
        raise FileNotFoundError(
            f"dataset root not given; set {DATA_ENV_VAR} to a directory containing "
            + ", ".join(PUBLISHED_FILES.values())
        )
    root = Path(root)
    missing = [name for name in PUBLISHED_FILES.values() if not (root / name).is_file()]
    if missing:
        raise FileNotFoundError(f"missing dataset files in {root}: {', '.join(missing)}")
    banks = {}
    for kind, name in PUBLISHED_FILES.items():
        bank = load_bank(root / name, kind)
        if check_shapes:
            rows, cols, _ = PUBLISHED_SHAPES[kind]
            if bank.matrix.shape != (rows, cols):
                raise FormatError(
                    f"{name}: expected shape {(rows, cols)}, found {bank.matrix.shape}", field="shape"
                )
        banks[kind] = bank
    return banks


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def sizes(self):
        return len(self.train), len(self.val), len(self.test)

    def as_dict(self):
        return {"train": self.train.tolist(), "val": self.val.tolist(), "test": self.test.tolist()}


def split(n: int, ratios=(0.8, 0.1, 0.1), seed: int = 0) -> SplitIndices:
    """Shuffle ``range(n)`` and cut it into train/val/test.

    Validation and test sizes are ``floor(n * ratio)``; the remainder goes to
    training.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise InvalidInputError(f"need three positive split ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidInputError(f"split ratios must sum to 1, got {sum(ratios)}")
    if n < 10:
        raise InvalidInputError(f"need at least 10 items to split, got {n}")
    total = sum(ratios)
    n_val = int(math.floor(n * ratios[1] / total + 1e-9))
    n_test = int(math.floor(n * ratios[2] / total + 1e-9))
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise InvalidInputError(f"n={n} too small for ratios {ratios}")
    perm = make_rng(seed, 0x5B1).permutation(n)
    return SplitIndices(
        np.sort(perm[:n_train]),
        np.sort(perm[n_train : n_train + n_val]),
        np.sort(perm[n_train + n_val :]),
    )


@dataclass(frozen=True, eq=False)
class SemiSyntheticPair:
    ground_truth: Segment
    contaminated: Segment
    lam: float
    snr_db: float
    sigma_y: float
    eeg_index: int = -1
    artifact_index: int = -1

    @property
    def artifact(self) -> Segment:
        """The scaled artifact ``lam * n`` recovered as ``y - x``."""
        return Segment(self.contaminated.samples - self.ground_truth.samples, self.ground_truth.fs)


@dataclass(eq=False)
class PairSet:
    """Column-oriented storage for many semi-synthetic pairs of one split."""

    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    snr_db: np.ndarray
    sigma_y: np.ndarray
    eeg_index: np.ndarray
    artifact_index: np.ndarray
    fs: int

    def __len__(self):
        return self.x.shape[0]

    def __getitem__(self, i) -> SemiSyntheticPair:
        return SemiSyntheticPair(
            Segment(self.x[i], self.fs),
            Segment(self.y[i], self.fs),
            float(self.lam[i]),
            float(self.snr_db[i]),
            float(self.sigma_y[i]),
            int(self.eeg_index[i]),
            int(self.artifact_index[i]),
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def seg_len(self) -> int:
        return self.x.shape[1]

    def normalized(self):
        """``(x_hat, y_hat)`` with each row divided by its own std(y)."""
        s = self.sigma_y[:, None]
        return self.x / s, self.y / s

    def subset(self, idx) -> "PairSet":
        idx = np.asarray(idx)
        return PairSet(*(getattr(self, f)[idx] for f in _PAIR_FIELDS), fs=self.fs)

    def save(self, directory, prefix: str):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for f in _PAIR_FIELDS:
            np.save(directory / f"{prefix}_{f}.npy", getattr(self, f))

    @classmethod
    def load(cls, directory, prefix: str, fs: int) -> "PairSet":
        directory = Path(directory)
        arrays = []
        for f in _PAIR_FIELDS:
            path = directory / f"{prefix}_{f}.npy"
            if not path.is_file():
                raise FormatError(f"missing set file {path}", field=str(path))
            arrays.append(np.load(path))
        return cls(*arrays, fs=fs)


_PAIR_FIELDS = ("x", "y", "lam", "snr_db", "sigma_y", "eeg_index", "artifact_index")


@dataclass(frozen=True)
class GenerationConfig:
    artifact_type: str = "ocular"
    snr_levels: tuple = OCULAR_SNR_LEVELS
    seed: int = 0
    ratios: tuple = (0.8, 0.1, 0.1)
    # same artifact partner at every SNR level (False re-pairs per level)
    same_partner_across_levels: bool = True

    def __post_init__(self):
        if self.artifact_type not in ARTIFACT_KIND:
            raise InvalidInputError(f"artifact_type must be 'ocular' or 'myogenic', got {self.artifact_type!r}")
        levels = tuple(float(v) for v in self.snr_levels)
        if not levels or not all(np.isfinite(levels)):
            raise InvalidInputError("snr_levels must be a non-empty list of finite values")
        object.__setattr__(self, "snr_levels", levels)
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise InvalidInputError(f"split ratios must sum to 1, got {self.ratios}")

    def to_dict(self):
        return {
            "artifact_type": self.artifact_type,
            "snr_levels": list(self.snr_levels),
            "seed": int(self.seed),
            "ratios": list(self.ratios),
            "same_partner_across_levels": self.same_partner_across_levels,
        }


@dataclass
class GeneratedSets:
    train: PairSet
    val: PairSet
    test: PairSet
    eeg_split: SplitIndices
    artifact_split: SplitIndices
    config: GenerationConfig
    fs: int

    def parts(self):
        return {"train": self.train, "val": self.val, "test": self.test}

    def manifest(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "fs": self.fs,
            "seg_len": self.train.seg_len,
            "sizes": {k: len(v) for k, v in self.parts().items()},
            "eeg_split": self.eeg_split.as_dict(),
            "artifact_split": self.artifact_split.as_dict(),
            "lambda": {k: [float(v) for v in p.lam] for k, p in self.parts().items()},
        }

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, part in self.parts().items():
            part.save(directory, name)
        text = json.dumps(self.manifest(), indent=1, sort_keys=True)
        (directory / "manifest.json").write_text(text + "\n")
        return directory


def _row_rms(m):
    return np.sqrt(np.mean(m * m, axis=1))


def _mix_split(eeg, art, eeg_rows, art_rows, levels, rng, same_partner):
    n_base = len(art_rows)
    eeg_rows = rng.permutation(eeg_rows)
    if len(eeg_rows) < n_base:
        # reuse randomly chosen EEG rows of this split to match the artifact count
        extra = rng.choice(eeg_rows, size=n_base - len(eeg_rows), replace=True)
        eeg_rows = rng.permutation(np.concatenate([eeg_rows, extra]))
    else:
        eeg_rows = eeg_rows[:n_base]
    n_lev = len(levels)
    if same_partner:
        art_perm = np.repeat(rng.permutation(art_rows)[:, None], n_lev, axis=1)
    else:
        art_perm = np.stack([rng.permutation(art_rows) for _ in range(n_lev)], axis=1)
    e_idx = np.repeat(eeg_rows, n_lev)
    a_idx = art_perm.reshape(-1)
    snr = np.tile(np.asarray(levels, dtype=np.float64), n_base)

    x = eeg.matrix[e_idx]
    n = art.matrix[a_idx]
    rx, rn = _row_rms(x), _row_rms(n)
    if np.any(rx == 0) or np.any(rn == 0):
        raise InvalidInputError("bank contains an all-zero segment; cannot set SNR")
    lam = rx / (rn * 10.0 ** (snr / 10.0))
    y = x + lam[:, None] * n
    sigma = y.std(axis=1)
    return PairSet(x, y, lam, snr, sigma, e_idx.astype(np.int64), a_idx.astype(np.int64), eeg.fs)


def generate_semisynthetic(eeg: SegmentBank, art: SegmentBank, cfg: GenerationConfig) -> GeneratedSets:
    """Mix clean EEG with artifacts at every configured SNR level.

    EEG and artifact rows are split into train/val/test *before* pairing and
    SNR expansion, so no clean segment appears in more than one split. Each
    base pair is emitted once per SNR level.
    """
    want = ARTIFACT_KIND[cfg.artifact_type]
    if eeg.kind != "EEG":
        raise InvalidInputError(f"expected an EEG bank, got {eeg.kind}")
    if art.kind != want:
        raise InvalidInputError(f"{cfg.artifact_type} contamination needs an {want} bank, got {art.kind}")
    if eeg.fs != art.fs:
        eeg = eeg.resampled(art.fs)
    if eeg.seg_len != art.seg_len or eeg.fs != art.fs:
        raise InvalidInputError(
            f"EEG ({eeg.seg_len} @ {eeg.fs} Hz) and artifact ({art.seg_len} @ {art.fs} Hz) rows do not match"
        )
    eeg_split = split(len(eeg), cfg.ratios, seed=cfg.seed)
    art_split = split(len(art), cfg.ratios, seed=cfg.seed + 1)
    rng = make_rng(cfg.seed, 0xC0FFEE)
    parts = {}
    for name in ("train", "val", "test"):
        parts[name] = _mix_split(
            eeg,
            art,
            getattr(eeg_split, name),
            getattr(art_split, name),
            cfg.snr_levels,
            rng,
            cfg.same_partner_across_levels,
        )
    return GeneratedSets(parts["train"], parts["val"], parts["test"], eeg_split, art_split, cfg, eeg.fs)


# --------------------------------------------------------------------------
# surrogate banks

_DEFAULT_GEOMETRY = {"EEG": (256, 512), "EOG": (256, 512), "EMG": (512, 1024)}


def _standardize_rows(m):
    m = m - m.mean(axis=1, keepdims=True)
    return m / m.std(axis=1, keepdims=True)


def _shaped_noise(rng, count, n, fs, lo, hi, exponent):
    """Random-phase noise with PSD ~ f**-exponent, exactly band-limited to [lo, hi]."""
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    band = (freqs >= lo) & (freqs <= hi)
    amp = np.zeros_like(freqs)
    amp[band] = freqs[band] ** (-exponent / 2.0)
    spec = amp * (rng.standard_normal((count, freqs.size)) + 1j * rng.standard_normal((count, freqs.size)))
    return np.fft.irfft(spec, n=n, axis=1)


def _surrogate_eeg(rng, count, fs, n):
    hi = min(80.0, 0.45 * fs)
    background = _standardize_rows(_shaped_noise(rng, count, n, fs, 1.0, hi, 1.0))
    t = np.arange(n) / fs
    f0 = 10.0 + rng.uniform(-0.5, 0.5, size=(count, 1))
    phase = rng.uniform(0, 2 * np.pi, size=(count, 1))
    # slow amplitude modulation of the alpha rhythm
    mod = 1.0 + 0.3 * np.sin(2 * np.pi * rng.uniform(0.2, 0.6, (count, 1)) * t + rng.uniform(0, 2 * np.pi, (count, 1)))
    alpha = 0.8 * mod * np.sin(2 * np.pi * f0 * t + phase)
    return background + alpha


def _surrogate_eog(rng, count, fs, n):
    t = np.arange(n) / fs
    dur = n / fs
    out = np.zeros((count, n))
    for r in range(count):
        k = max(1, rng.poisson(0.8 * dur))
        for _ in range(k):
            t0 = rng.uniform(0.0, dur)
            width = rng.uniform(0.08, 0.2)
            out[r] += rng.choice((-1.0, 1.0)) * rng.uniform(0.5, 1.5) * np.exp(-0.5 * ((t - t0) / width) ** 2)
        f = rng.uniform(0.3, 1.5)
        out[r] += rng.uniform(0.1, 0.5) * np.sin(2 * np.pi * f * t + rng.uniform(0, 2 * np.pi))
    sos = dsp.design_filter(dsp.FilterSpec("bandpass", (0.3, min(10.0, 0.45 * fs)), order=2), fs)
    out = sps.sosfiltfilt(sos, out, axis=1)
    return out


def _surrogate_emg(rng, count, fs, n):
    hi = min(120.0, 0.45 * fs)
    noise = rng.standard_normal((count, n))
    sos = dsp.design_filter(dsp.FilterSpec("bandpass", (20.0, hi), order=4), fs)
    noise = sps.sosfiltfilt(sos, noise, axis=1)
    t = np.arange(n) / fs
    dur = n / fs
    gate = np.full((count, n), 0.1)
    for r in range(count):
        for _ in range(1 + rng.poisson(1.0 * dur)):
            t0 = rng.uniform(0.0, dur)
            width = rng.uniform(0.1, 0.4)
            gate[r] += rng.uniform(0.5, 1.5) * np.exp(-0.5 * ((t - t0) / width) ** 2)
    return noise * gate


def synth_surrogate(kind: str, count: int, seed: int = 0, fs: int | None = None, seg_len: int | None = None) -> SegmentBank:
    """Synthetic stand-in for a published bank; rows are standardized.

    EEG: pink (1/f) background within 1-80 Hz plus an amplitude-modulated
    ~10 Hz rhythm. EOG: blink-like Gaussian pulses and slow drift,
    band-passed 0.3-10 Hz. EMG: burst-gated noise band-passed 20-120 Hz.
    Band edges are clipped to 0.45*fs for low sampling rates.
    """
    if count < 1:
        raise InvalidInputError("count must be at least 1")
    dfs, dlen = _DEFAULT_GEOMETRY[kind]
    fs = dfs if fs is None else int(fs)
    n = (dlen if fs == dfs else int(round(2 * fs))) if seg_len is None else int(seg_len)
    rng = make_rng(seed, {"EEG": 1, "EOG": 2, "EMG": 3}[kind])
    gen = {"EEG": _surrogate_eeg, "EOG": _surrogate_eog, "EMG": _surrogate_emg}[kind]
    return SegmentBank(kind, _standardize_rows(gen(rng, count, fs, n)), fs)
