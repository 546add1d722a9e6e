"""Traditional comparators: EMD-based IMF rejection and fixed-band filtering."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels, dsp
from .errors import DecompositionError, InvalidInputError
from .signal_core import Segment

log = logging.getLogger(__name__)

ARTIFACT_TYPES = ("ocular", "myogenic")


@dataclass(frozen=True)
class EmdConfig:
    max_imfs: int = 10
    sd_threshold: float = 0.2
    max_sift: int = 100
    n_mirror: int = 2  # extrema mirrored at each boundary

    def __post_init__(self):
        if self.max_imfs < 1:
            raise InvalidInputError("max_imfs must be >= 1")
        if not self.sd_threshold > 0:
            raise InvalidInputError("sd_threshold must be positive")
        if self.max_sift < 1:
            raise InvalidInputError("max_sift must be >= 1")


@dataclass(eq=False)
class ImfSet:
    imfs: list
    residual: Segment

    def reconstruct(self) -> np.ndarray:
        total = self.residual.samples.copy()
        for imf in self.imfs:
            total = total + imf.samples
        return total

    def __len__(self):
        return len(self.imfs)


def _mirror(idx, vals, n, n_mirror, t_first, t_last, v_first, v_last):
    """Extend extrema by reflecting them about the segment end points."""
    k = min(n_mirror, idx.size)
    left_t = 2 * t_first - idx[:k][::-1]
    left_v = vals[:k][::-1]
    right_t = 2 * t_last - idx[-k:][::-1]
    right_v = vals[-k:][::-1]
    t = np.concatenate([left_t, [t_first] if idx[0] != t_first else [], idx, [t_last] if idx[-1] != t_last else [], right_t])
    v = np.concatenate([left_v, [v_first] if idx[0] != t_first else [], vals, [v_last] if idx[-1] != t_last else [], right_v])
    order = np.argsort(t, kind="stable")
    t, v = t[order], v[order]
    keep = np.concatenate([[True], np.diff(t) > 0])
    return t[keep], v[keep]


def _envelope(h, idx, n_mirror, upper):
    n = h.size
    # end points clamp to the nearer extremum value so the envelope bounds the signal
    vals = h[idx]
    v_first = max(h[0], vals[0]) if upper else min(h[0], vals[0])
    v_last = max(h[-1], vals[-1]) if upper else min(h[-1], vals[-1])
    t, v = _mirror(idx.astype(float), vals, n, n_mirror, 0.0, float(n - 1), v_first, v_last)
    return CubicSpline(t, v)(np.arange(n))


def _n_extrema(h):
    mx, mn = _kernels.find_extrema(np.ascontiguousarray(h))
    return mx, mn


def _is_imf(h) -> bool:
    mx, mn = _n_extrema(h)
    zc = _kernels.count_zero_crossings(np.ascontiguousarray(h))
    return abs(mx.size + mn.size - zc) <= 1


def _sift(x, cfg):
    h = x.copy()
    for _ in range(cfg.max_sift):
        mx, mn = _n_extrema(h)
        if mx.size < 2 or mn.size < 2:
            break
        mean = 0.5 * (_envelope(h, mx, cfg.n_mirror, True) + _envelope(h, mn, cfg.n_mirror, False))
        new = h - mean
        denom = np.sum(h * h)
        sd = np.sum((h - new) ** 2) / denom if denom > 0 else 0.0
        h = new
        if sd < cfg.sd_threshold and _is_imf(h):
            break
    return h


def emd(s: Segment, cfg: EmdConfig = EmdConfig()) -> ImfSet:
    """Classic sifting EMD with cubic-spline envelopes.

    IMFs are ordered fastest first. The residual is defined as the input
    minus all IMFs, so reconstruction is exact up to rounding.
    """
    x = s.samples.copy()
    mx, mn = _n_extrema(x)
    if mx.size + mn.size < 4:
        raise DecompositionError(f"segment has {mx.size + mn.size} extrema; need at least 4")
    imfs = []
    resid = x.copy()
    while len(imfs) < cfg.max_imfs:
        mx, mn = _n_extrema(resid)
        if mx.size < 2 or mn.size < 2:  # monotone or nearly so
            break
        imf = _sift(resid, cfg)
        imfs.append(imf)
        resid = resid - imf
    residual = x - np.sum(imfs, axis=0) if imfs else x
    return ImfSet([Segment(i, s.fs) for i in imfs], Segment(residual, s.fs))


def spectral_centroid(samples, fs) -> float:
    est = dsp.psd(samples, fs=fs)
    total = est.power.sum()
    if total == 0:
        return 0.0
    return float(np.sum(est.freqs * est.power) / total)


def two_means_1d(values, max_iter: int = 100):
    """Split scalars into two clusters; returns a boolean mask of the upper cluster."""
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(), v.max()
    if lo == hi:
        return np.zeros(v.size, dtype=bool)
    upper = np.zeros(v.size, dtype=bool)
    for _ in range(max_iter):
        new = np.abs(v - hi) < np.abs(v - lo)
        if np.array_equal(new, upper) and _ > 0:
            break
        upper = new
        if upper.all() or not upper.any():
            break
        lo, hi = v[~upper].mean(), v[upper].mean()
    return upper


@dataclass(eq=False)
class EmdDenoiseResult:
    output: Segment
    passthrough: bool = False
    removed: list = field(default_factory=list)
    centroids: list = field(default_factory=list)


def emd_denoise(s: Segment, artifact_type: str, cfg: EmdConfig = EmdConfig(), details: bool = False):
    """Drop the IMF cluster that looks like the artifact.

    Components (IMFs plus residual) are scored by spectral centroid and split
    by 1-D 2-means; the low-centroid cluster is removed for ocular artifacts
    and the high-centroid cluster for myogenic ones. When decomposition fails
    the input is returned unchanged and ``passthrough`` is set.
    """
    if artifact_type not in ARTIFACT_TYPES:
        raise InvalidInputError(f"artifact_type must be one of {ARTIFACT_TYPES}")
    try:
        dec = emd(s, cfg)
    except DecompositionError as exc:
        log.warning("EMD failed (%s); passing segment through", exc)
        res = EmdDenoiseResult(Segment(s.samples, s.fs), passthrough=True)
        return res if details else res.output
    comps = [imf.samples for imf in dec.imfs] + [dec.residual.samples]
    cents = [spectral_centroid(c, s.fs) for c in comps]
    if len(dec.imfs) < 1:
        res = EmdDenoiseResult(Segment(s.samples, s.fs), passthrough=True, centroids=cents)
        return res if details else res.output
    upper = two_means_1d(cents)
    remove = ~upper if artifact_type == "ocular" else upper
    if remove.all():  # degenerate split: keep everything
        remove[:] = False
    kept = np.zeros_like(s.samples)
    for c, r in zip(comps, remove):
        if not r:
            kept = kept + c
    res = EmdDenoiseResult(Segment(kept, s.fs), removed=np.flatnonzero(remove).tolist(), centroids=cents)
    return res if details else res.output


FILTER_BANDS = {
    "ocular": ("highpass", (12.0,)),
    "myogenic": ("bandpass", (12.0, 40.0)),
}


def filter_spec_for(artifact_type: str, order: int = 4) -> dsp.FilterSpec:
    if artifact_type not in ARTIFACT_TYPES:
        raise InvalidInputError(f"artifact_type must be one of {ARTIFACT_TYPES}")
    kind, cut = FILTER_BANDS[artifact_type]
    return dsp.FilterSpec(kind, cut, order=order, zero_phase=True)


def filter_denoise(s: Segment, artifact_type: str, order: int = 4) -> Segment:
    """Zero-phase 12 Hz high-pass (ocular) or 12-40 Hz band-pass (myogenic)."""
    return dsp.apply_filter(s, filter_spec_for(artifact_type, order))
