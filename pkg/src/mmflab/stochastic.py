"""Input streams of the order-flow model.

Two series drive every simulation: the +/-1 order-direction series with
long memory (Hurst index ``H_s``) and the relative-price series with
Student-t marginals (tail index ``alpha_x``) and long memory (``H_x``).
Both start from fractional Gaussian noise synthesized by circulant
embedding; the relative prices are obtained by IAAFT so that the drawn
Student-t sample is kept exactly while its spectrum is borrowed from fGn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Rng = np.random.Generator

EIGEN_TOL = 1e-10


class InvalidParameter(ValueError):
    pass


class NumericFailure(RuntimeError):
    pass


def make_rng(seed: int) -> Rng:
    """PCG64 generator; identical seeds give identical streams on every platform."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def child_rngs(seed: int, n: int) -> list[Rng]:
    """``n`` statistically independent generators derived from one seed."""
    children = np.random.SeedSequence(int(seed)).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


@dataclass(frozen=True)
class FgnSample:
    values: np.ndarray
    hurst: float


@dataclass(frozen=True)
class SignSeries:
    values: np.ndarray  # int8, entries +1 / -1
    target_hurst: float


@dataclass(frozen=True)
class RelativePriceSeries:
    values: np.ndarray
    target_hurst: float
    tail_index: float | None = None
    iterations: int = 0
    converged: bool = False
    spectrum_mismatch: float = float("nan")

    def convergence_report(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "spectrum_mismatch": self.spectrum_mismatch,
        }


def fgn_autocovariance(k, hurst: float) -> np.ndarray:
    """Autocovariance of unit-variance fGn at integer lags ``k``."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


def generate_fgn(n: int, hurst: float, rng: Rng) -> FgnSample:
    """Exact fractional Gaussian noise of length ``n`` (Davies-Harte).

    The covariance row ``gamma(0..n), gamma(n-1..1)`` is embedded in a
    circulant matrix of size ``2n`` whose eigenvalues are its FFT. For fGn
    they are nonnegative for every ``H`` in (0, 1).
    """
    if not 0.0 < hurst < 1.0:
        raise InvalidParameter(f"hurst must lie in (0, 1), got {hurst}")
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    n = int(n)
    gamma = fgn_autocovariance(np.arange(n + 1), hurst)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    m = row.size  # 2n
    eig = np.fft.fft(row).real
    if eig.min() < -EIGEN_TOL:
        raise NumericFailure(f"negative embedding eigenvalue {eig.min():.3e}")
    eig = np.clip(eig, 0.0, None)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    w = np.fft.fft(np.sqrt(eig / m) * z)
    return FgnSample(values=w.real[:n].copy(), hurst=float(hurst))


def signs_from_fgn(fgn: FgnSample) -> SignSeries:
    values = np.asarray(fgn.values)
    if values.size == 0:
        raise InvalidParameter("empty fGn sample")
    signs = np.where(values >= 0.0, 1, -1).astype(np.int8)
    return SignSeries(values=signs, target_hurst=fgn.hurst)


def sample_student_t(n: int, dof: float, rng: Rng) -> np.ndarray:
    """Student-t draws as ``Z / sqrt(V / dof)`` with ``V ~ chi2(dof)``."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if not dof > 0:
        raise InvalidParameter(f"dof must be > 0, got {dof}")
    z = rng.standard_normal(n)
    chi2 = 2.0 * rng.standard_gamma(0.5 * dof, n)
    return z / np.sqrt(chi2 / dof)


def _spectrum_mismatch(series: np.ndarray, target_amp: np.ndarray) -> float:
    amp = np.abs(np.fft.rfft(series))
    return float(np.sqrt(np.mean((amp - target_amp) ** 2)) / np.sqrt(np.mean(target_amp**2)))


def iaaft(amplitudes, spectrum_source: FgnSample, max_iter: int = 100) -> RelativePriceSeries:
    """Rearrange ``amplitudes`` so that its power spectrum follows ``spectrum_source``.

    The iteration starts from the amplitudes placed in the rank order of the
    spectrum source and alternates spectral and rank adjustment, ending on a
    rank adjustment, so the output is always an exact permutation of the
    input. It stops when the rank permutation repeats or after ``max_iter``
    rounds.
    """
    x = np.asarray(amplitudes, dtype=float)
    src = np.asarray(spectrum_source.values, dtype=float)
    if x.ndim != 1 or src.ndim != 1 or x.size != src.size:
        raise InvalidParameter("amplitudes and spectrum source must be 1-d of equal length")
    if x.size < 4:
        raise InvalidParameter(f"series length must be >= 4, got {x.size}")
    if max_iter < 1:
        raise InvalidParameter(f"max_iter must be >= 1, got {max_iter}")

    n = x.size
    sorted_amp = np.sort(x, kind="stable")
    target_amp = np.abs(np.fft.rfft(src))

    order = np.argsort(src, kind="stable")
    y = np.empty(n)
    y[order] = sorted_amp

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        spec = np.fft.rfft(y)
        phase = np.exp(1j * np.angle(spec))
        z = np.fft.irfft(target_amp * phase, n)
        new_order = np.argsort(z, kind="stable")
        y = np.empty(n)
        y[new_order] = sorted_amp
        if np.array_equal(new_order, order):
            converged = True
            break
        order = new_order

    return RelativePriceSeries(
        values=y,
        target_hurst=spectrum_source.hurst,
        iterations=iterations,
        converged=converged,
        spectrum_mismatch=_spectrum_mismatch(y, target_amp),
    )


def order_signs(n: int, hurst: float, rng: Rng) -> SignSeries:
    return signs_from_fgn(generate_fgn(n, hurst, rng))


def relative_prices(n: int, tail_index: float, hurst: float, rng: Rng,
                    max_iter: int = 100) -> RelativePriceSeries:
    """Student-t sample reordered to carry the long memory of fGn(``hurst``)."""
    sample = sample_student_t(n, tail_index, rng)
    source = generate_fgn(n, hurst, rng)
    out = iaaft(sample, source, max_iter=max_iter)
    return RelativePriceSeries(
        values=out.values,
        target_hurst=float(hurst),
        tail_index=float(tail_index),
        iterations=out.iterations,
        converged=out.converged,
        spectrum_mismatch=out.spectrum_mismatch,
    )
