"""Filtering, resampling and spectral estimation for single-channel segments."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal as sps

from .errors import DegenerateSignalError, InvalidInputError, SpecError
from .signal_core import Segment

__all__ = [
    "FilterSpec",
    "PsdEstimate",
    "BandPowerRatios",
    "BANDS",
    "design_filter",
    "apply_filter",
    "frequency_response",
    "resample",
    "psd",
    "band_power_ratios",
]

# Canonical EEG bands in Hz. Half-open [lo, hi) except the last, closed at 80.
BANDS = (
    ("delta", 1.0, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 80.0),
)

_KINDS = ("lowpass", "highpass", "bandpass", "bandstop")


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    cutoffs: tuple
    order: int = 4
    zero_phase: bool = True

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SpecError(f"unknown filter kind {self.kind!r}; expected one of {_KINDS}")
        cut = tuple(float(c) for c in np.atleast_1d(self.cutoffs))
        object.__setattr__(self, "cutoffs", cut)
        need = 2 if self.kind in ("bandpass", "bandstop") else 1
        if len(cut) != need:
            raise SpecError(f"{self.kind} filter needs {need} cutoff(s), got {len(cut)}")
        if need == 2 and not cut[0] < cut[1]:
            raise SpecError(f"band edges must satisfy low < high, got {cut}")
        if any(c <= 0 for c in cut):
            raise SpecError(f"cutoffs must be positive, got {cut}")
        if int(self.order) != self.order or self.order < 1:
            raise SpecError(f"order must be a positive integer, got {self.order}")

    def validate(self, fs: float):
        nyq = fs / 2.0
        if any(c >= nyq for c in self.cutoffs):
            raise SpecError(f"cutoffs {self.cutoffs} must lie below Nyquist ({nyq} Hz)")


def design_filter(spec: FilterSpec, fs: float) -> np.ndarray:
    """Butterworth design in second-order sections, shape ``(n_sections, 6)``."""
    spec.validate(fs)
    wn = spec.cutoffs[0] if len(spec.cutoffs) == 1 else list(spec.cutoffs)
    return sps.butter(spec.order, wn, btype=spec.kind, fs=fs, output="sos")


def frequency_response(sos: np.ndarray, freqs, fs: float) -> np.ndarray:
    """Complex response of a single forward pass at ``freqs`` (Hz)."""
    z = np.exp(1j * 2 * np.pi * np.asarray(freqs, dtype=float) / fs)
    h = np.ones_like(z)
    for b0, b1, b2, a0, a1, a2 in sos:
        h *= (b0 + b1 / z + b2 / z**2) / (a0 + a1 / z + a2 / z**2)
    return h


def apply_filter(s: Segment, spec: FilterSpec) -> Segment:
    sos = design_filter(spec, s.fs)
    if len(s) <= 3 * spec.order:
        raise InvalidInputError(f"segment of {len(s)} samples too short for order-{spec.order} filter")
    if spec.zero_phase:
        # odd (point) reflection padding, clipped for short segments
        padlen = min(3 * (2 * len(sos) + 1), len(s) - 1)
        out = sps.sosfiltfilt(sos, s.samples, padtype="odd", padlen=padlen)
    else:
        out = sps.sosfilt(sos, s.samples)
    return Segment(out, s.fs)


def resample(s: Segment, fs_to: int, max_factor: int = 1000) -> Segment:
    """Polyphase rational resampling with an anti-alias FIR at 0.9x the lower Nyquist."""
    if int(fs_to) != fs_to or fs_to <= 0:
        raise InvalidInputError(f"target rate must be a positive integer, got {fs_to!r}")
    fs_to = int(fs_to)
    if fs_to == s.fs:
        return Segment(s.samples, s.fs)
    ratio = Fraction(fs_to, s.fs)
    up, down = ratio.numerator, ratio.denominator
    if max(up, down) > max_factor:
        raise InvalidInputError(f"resampling ratio {up}/{down} exceeds supported factor {max_factor}")
    n_out = int(round(len(s) * fs_to / s.fs))
    half_len = 10 * max(up, down)
    taps = sps.firwin(2 * half_len + 1, 0.9 / max(up, down), window=("kaiser", 5.0))
    out = sps.resample_poly(s.samples, up, down, window=taps, padtype="line")
    if out.size < n_out:
        out = np.pad(out, (0, n_out - out.size), mode="edge")
    return Segment(out[:n_out], fs_to)


@dataclass(frozen=True, eq=False)
class PsdEstimate:
    freqs: np.ndarray
    power: np.ndarray
    fs: int
    nfft: int

    @property
    def df(self) -> float:
        return self.fs / self.nfft

    def restrict(self, fmax: float) -> "PsdEstimate":
        keep = self.freqs <= fmax
        return PsdEstimate(self.freqs[keep], self.power[keep], self.fs, self.nfft)


def psd(s, window: str = "rectangular", fs: int | None = None) -> PsdEstimate:
    """One-sided periodogram with ``nfft`` equal to the segment length.

    Scaled so that ``sum(power) * df`` equals the mean square of the
    samples (for the rectangular window).
    """
    if isinstance(s, Segment):
        x, fs = s.samples, s.fs
    else:
        x = np.asarray(s, dtype=np.float64)
        if fs is None:
            raise InvalidInputError("fs is required when passing a raw array")
    n = x.size
    if n < 2:
        raise InvalidInputError("psd needs at least two samples")
    if window == "rectangular":
        w = np.ones(n)
    elif window == "hamming":
        w = np.hamming(n)
    else:
        raise InvalidInputError(f"unknown window {window!r}")
    spec = np.fft.rfft(x * w)
    power = (spec.real**2 + spec.imag**2) / (fs * np.sum(w * w))
    if n % 2 == 0:
        power[1:-1] *= 2
    else:
        power[1:] *= 2
    freqs = np.arange(power.size) * (fs / n)
    return PsdEstimate(freqs, power, int(fs), n)


@dataclass(frozen=True)
class BandPowerRatios:
    delta: float
    theta: float
    alpha: float
    beta: float
    gamma: float

    def as_tuple(self):
        return (self.delta, self.theta, self.alpha, self.beta, self.gamma)

    def as_dict(self):
        return dict(zip(("delta", "theta", "alpha", "beta", "gamma"), self.as_tuple()))


def _band_masks(freqs):
    masks = []
    for i, (_, lo, hi) in enumerate(BANDS):
        if i == len(BANDS) - 1:
            masks.append((freqs >= lo) & (freqs <= hi))
        else:
            masks.append((freqs >= lo) & (freqs < hi))
    return masks


def band_power_ratios(s: Segment) -> BandPowerRatios:
    if s.fs < 160:
        raise InvalidInputError(f"band ratios need fs >= 160 Hz to resolve 80 Hz, got {s.fs}")
    est = psd(s)
    band = np.array([est.power[m].sum() for m in _band_masks(est.freqs)])
    total = band.sum()
    if total == 0:
        raise DegenerateSignalError("no power in 1-80 Hz")
    return BandPowerRatios(*(band / total).tolist())
