"""Single-channel segments and the linear contamination model.

A contaminated segment is ``y = x + lam * n`` where ``x`` is clean EEG and
``n`` an artifact. The SNR convention is ``10 * log10(rms(x) / rms(lam * n))``,
i.e. an RMS ratio in base-10 decibels (not a power ratio).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSignalError, InvalidInputError, ShapeError

__all__ = [
    "Segment",
    "MixParams",
    "NormalizationRecord",
    "rms",
    "lambda_for_snr",
    "mix",
    "snr_of",
    "standardize",
    "normalize_pair",
    "denormalize",
]


@dataclass(frozen=True, eq=False)
class Segment:
    """A 1-D real time series sampled at ``fs`` Hz."""

    samples: np.ndarray
    fs: int

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        if arr.size == 0:
            raise InvalidInputError("segment has no samples")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("segment contains non-finite samples")
        if int(self.fs) != self.fs or self.fs <= 0:
            raise InvalidInputError(f"sampling rate must be a positive integer, got {self.fs!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "fs", int(self.fs))

    def __len__(self):
        return self.samples.size

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.samples
        return self.samples.astype(dtype)

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    def with_samples(self, samples) -> "Segment":
        return Segment(samples, self.fs)


@dataclass(frozen=True)
class MixParams:
    lam: float
    snr_db: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidInputError(f"lambda must be nonnegative, got {self.lam}")
        if not np.isfinite(self.snr_db):
            raise InvalidInputError("snr_db must be finite")


@dataclass(frozen=True)
class NormalizationRecord:
    sigma_y: float

    def __post_init__(self):
        if not self.sigma_y > 0:
            raise DegenerateSignalError(f"sigma_y must be positive, got {self.sigma_y}")


def _values(s) -> np.ndarray:
    if isinstance(s, Segment):
        return s.samples
    arr = np.asarray(s, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise InvalidInputError("empty segment")
    return arr


def rms(s) -> float:
    v = _values(s)
    peak = float(np.max(np.abs(v)))
    if peak == 0:
        return 0.0
    # scale first so tiny or huge samples neither underflow nor overflow when squared
    u = v / peak
    return peak * float(np.sqrt(np.mean(u * u)))


def lambda_for_snr(x: Segment, n: Segment, snr_db: float) -> float:
    """Scale factor for ``n`` so that mixing into ``x`` hits ``snr_db``."""
    rx, rn = rms(x), rms(n)
    if rx == 0 or rn == 0:
        raise DegenerateSignalError("lambda_for_snr needs nonzero RMS in both signal and artifact")
    return rx / (rn * 10.0 ** (snr_db / 10.0))


def _check_compatible(a: Segment, b: Segment):
    if len(a) != len(b):
        raise ShapeError(f"segment lengths differ: {len(a)} vs {len(b)}")
    if a.fs != b.fs:
        raise ShapeError(f"sampling rates differ: {a.fs} vs {b.fs}")


def mix(x: Segment, n: Segment, lam: float) -> Segment:
    _check_compatible(x, n)
    return Segment(x.samples + lam * n.samples, x.fs)


def snr_of(x: Segment, scaled_noise: Segment) -> float:
    rx, rn = rms(x), rms(scaled_noise)
    if rn == 0:
        raise DegenerateSignalError("noise has zero RMS; SNR is unbounded")
    if rx == 0:
        raise DegenerateSignalError("signal has zero RMS; SNR is -inf")
    return 10.0 * np.log10(rx / rn)


def standardize(s: Segment, ddof: int = 0) -> Segment:
    """Zero mean, unit standard deviation (population form by default)."""
    v = s.samples
    sd = v.std(ddof=ddof)
    if sd == 0:
        raise DegenerateSignalError("cannot standardize a constant segment")
    return Segment((v - v.mean()) / sd, s.fs)


def normalize_pair(x: Segment, y: Segment):
    """Divide both ground truth and contaminated segment by std(y).

    Returns ``(x_hat, y_hat, NormalizationRecord)``.
    """
    _check_compatible(x, y)
    sigma = float(y.samples.std())
    if sigma == 0:
        raise DegenerateSignalError("contaminated segment is constant")
    return (
        Segment(x.samples / sigma, x.fs),
        Segment(y.samples / sigma, y.fs),
        NormalizationRecord(sigma),
    )


def denormalize(s: Segment, rec: NormalizationRecord) -> Segment:
    return Segment(s.samples * rec.sigma_y, s.fs)
