"""Detrended fluctuation analysis with linear detrending."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DEFAULT_FIT_RANGE = (10, 4500)
SCALES_PER_DECADE = 20


class InvalidParameter(ValueError):
    pass


class InsufficientScales(ValueError):
    pass


class DegenerateSeries(ValueError):
    """F(l) vanishes at some fitted scale, so ln F is undefined."""


@dataclass(frozen=True)
class DfaResult:
    scales: np.ndarray
    fluctuations: np.ndarray
    hurst: float = float("nan")
    fit_range: tuple[int, int] = DEFAULT_FIT_RANGE
    r2: float = float("nan")
    n_fit: int = 0

    def rows(self):
        return list(zip(self.scales.tolist(), self.fluctuations.tolist()))


def default_scales(n: int, fit_range=DEFAULT_FIT_RANGE,
                   per_decade: int = SCALES_PER_DECADE) -> np.ndarray:
    """Log-spaced integer scales in ``[lo, min(hi, n/4))``."""
    lo, hi = fit_range
    top = min(hi, n / 4)
    if top <= lo:
        return np.array([], dtype=np.int64)
    exps = np.arange(np.log10(lo), np.log10(top), 1.0 / per_decade)
    scales = np.unique(np.round(10.0**exps).astype(np.int64))
    return scales[(scales >= lo) & (scales < hi) & (scales <= n / 4)]


def _segment_variance(profile: np.ndarray, scale: int, both_ends: bool) -> float:
    n = profile.size
    k = n // scale
    segs = profile[: k * scale].reshape(k, scale)
    if both_ends:
        segs = np.concatenate([segs, profile[n - k * scale:].reshape(k, scale)])
    t = np.arange(scale, dtype=float)
    t -= t.mean()
    centered = segs - segs.mean(axis=1, keepdims=True)
    slope = centered @ t / (t @ t)
    resid = centered - slope[:, None] * t
    return float(np.mean(resid * resid))


def dfa(series, scales=None, both_ends: bool = True) -> DfaResult:
    """Fluctuation function F(l) of ``series`` (no fit).

    The profile is the cumulative sum of the mean-subtracted series. At
    each scale it is cut into floor(N/l) segments from the start and, with
    ``both_ends``, as many again from the end; F(l) is the RMS residual of
    per-segment least-squares lines pooled over all segments.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 16:
        raise InvalidParameter("series must be 1-d with at least 16 points")
    n = x.size
    if scales is None:
        scales = default_scales(n)
    scales = np.asarray(scales, dtype=np.int64)
    if scales.size == 0:
        raise InvalidParameter("no scales")
    if np.any(np.diff(scales) <= 0):
        raise InvalidParameter("scales must be strictly increasing")
    if scales.min() < 4:
        raise InvalidParameter("every scale must be >= 4")
    if scales.max() > n / 4:
        raise InvalidParameter(f"scale {scales.max()} exceeds N/4 = {n / 4}")
    profile = np.cumsum(x - x.mean())
    fluct = np.array([np.sqrt(_segment_variance(profile, int(s), both_ends)) for s in scales])
    return DfaResult(scales=scales, fluctuations=fluct)


def fit_hurst(result: DfaResult, fit_range=DEFAULT_FIT_RANGE) -> DfaResult:
    """OLS slope of ln F on ln l over scales in ``[lo, hi)``."""
    lo, hi = fit_range
    mask = (result.scales >= lo) & (result.scales < hi)
    if mask.sum() < 3:
        raise InsufficientScales(f"{int(mask.sum())} scales in [{lo}, {hi}), need 3")
    f = result.fluctuations[mask]
    if not np.all(f > 0):
        raise DegenerateSeries("zero fluctuation inside the fit range (locally constant series)")
    lx = np.log(result.scales[mask].astype(float))
    ly = np.log(f)
    lxc = lx - lx.mean()
    lyc = ly - ly.mean()
    slope = float(lxc @ lyc / (lxc @ lxc))
    ss_res = float(np.sum((lyc - slope * lxc) ** 2))
    ss_tot = float(lyc @ lyc)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return replace(result, hurst=slope, fit_range=(lo, hi), r2=r2, n_fit=int(mask.sum()))


def hurst_exponent(series, fit_range=DEFAULT_FIT_RANGE, both_ends: bool = True) -> DfaResult:
    x = np.asarray(series, dtype=float)
    return fit_hurst(dfa(x, default_scales(x.size, fit_range), both_ends), fit_range)
