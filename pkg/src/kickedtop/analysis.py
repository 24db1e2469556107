"""Steady-state extraction, scaling fits and magnetization statistics.

Everything here reduces raw stroboscopic series or per-trajectory
samples to the published quantities: plateau averages, the size-halving
magic difference, power-law / log-linear exponents, pooled variances,
and peak structure of magnetization histograms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks as _scipy_find_peaks

__all__ = [
    "ScalingFit",
    "Histogram",
    "Peak",
    "steady_average",
    "delta_magic",
    "fit_power_law",
    "fit_log_linear",
    "variance_mz",
    "histogram_mz",
    "find_peaks",
]

log = logging.getLogger(__name__)

DEFAULT_BIN_WIDTH = 0.01


def steady_average(series, k0: int) -> tuple[float, float]:
    """Mean and standard error of the entries with index >= k0.

    The standard error is the plain sample estimate (no autocorrelation
    correction; the plateaus used here are long and the tolerances loose).
    Constant tails give stderr 0.
    """
    series = np.asarray(series, dtype=float)
    if k0 < 0 or k0 >= series.size:
        raise ValueError(f"k0 = {k0} must lie in [0, {series.size})")
    tail = series[k0:]
    if tail.size == 1:
        return float(tail[0]), 0.0
    return float(tail.mean()), float(tail.std(ddof=1) / math.sqrt(tail.size))


def delta_magic(asymptotic: dict) -> dict:
    """delta M_N = Mbar(N) - Mbar(N/2) for every N whose half size is
    present; sizes without a partner are skipped with a warning."""
    out = {}
    for N in sorted(asymptotic):
        half = N // 2
        if N % 2 == 0 and half in asymptotic:
            out[N] = asymptotic[N] - asymptotic[half]
        else:
            log.warning("delta_magic: no N/2 partner for N = %d, skipping", N)
    return out


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit of a size-scaling law.

    model 'power' fits y = prefactor * N^exponent in ln-ln coordinates;
    model 'log' fits y = prefactor + exponent * ln(N+1).
    """

    exponent: float
    prefactor: float
    stderr: float
    window: tuple
    model: str


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Slope, intercept and slope standard error of an ordinary
    least-squares line."""
    n = x.size
    A = np.vstack([x, np.ones(n)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    if n == 2:
        return slope, intercept, 0.0
    resid = y - A @ coef
    s2 = float(resid @ resid) / (n - 2)
    sxx = float(np.sum((x - x.mean()) ** 2))
    return slope, intercept, math.sqrt(s2 / sxx)


def _fit_points(points, exclude_smallest: bool):
    pts = sorted((float(N), float(y)) for N, y in points)
    if exclude_smallest:
        pts = pts[1:]
    if len(pts) < 3:
        raise ValueError("need at least 3 points to fit")
    N = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    return N, y


def fit_power_law(points, exclude_smallest: bool = False) -> ScalingFit:
    """Fit y = c N^alpha by OLS on (ln N, ln y); y must be positive."""
    N, y = _fit_points(points, exclude_smallest)
    if np.any(y <= 0):
        raise ValueError("power-law fit requires positive values")
    slope, intercept, err = _ols(np.log(N), np.log(y))
    return ScalingFit(exponent=slope, prefactor=math.exp(intercept), stderr=err,
                      window=tuple(int(n) for n in N), model="power")


def fit_log_linear(points, exclude_smallest: bool = False) -> ScalingFit:
    """Fit y = a + b ln(N+1); returns b as the exponent and a as the
    prefactor."""
    N, y = _fit_points(points, exclude_smallest)
    slope, intercept, err = _ols(np.log(N + 1.0), y)
    return ScalingFit(exponent=slope, prefactor=intercept, stderr=err,
                      window=tuple(int(n) for n in N), model="log")


def variance_mz(samples) -> float:
    """Pooled variance <x^2> - <x>^2 of per-trajectory magnetization
    expectations gathered over trajectories and steady-state times."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample set")
    return float(np.mean(x**2) - np.mean(x) ** 2)


@dataclass(frozen=True)
class Histogram:
    """Normalized density histogram on [-1, 1]."""

    edges: np.ndarray
    density: np.ndarray
    n_samples: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])


def histogram_mz(samples, bin_width: float = DEFAULT_BIN_WIDTH) -> Histogram:
    """Density histogram of magnetization samples with uniform bins
    covering [-1, 1]; sum(density) * width = 1."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample set")
    if np.min(x) < -1.0 - 1e-9 or np.max(x) > 1.0 + 1e-9:
        raise ValueError("samples outside [-1, 1]")
    x = np.clip(x, -1.0, 1.0)
    n_bins = round(2.0 / bin_width)
    edges = np.linspace(-1.0, 1.0, n_bins + 1)
    density, _ = np.histogram(x, bins=edges, density=True)
    return Histogram(edges=edges, density=density, n_samples=x.size)


@dataclass(frozen=True)
class Peak:
    position: float
    height: float
    is_global_max: bool


def find_peaks(hist: Histogram, min_prominence: float | None = None) -> list[Peak]:
    """Local maxima of the histogram with prominence above the threshold
    (default 5% of the global maximum); boundary bins count as peak
    candidates. The entry carrying the global maximum is flagged."""
    dens = hist.density
    if min_prominence is None:
        min_prominence = 0.05 * float(dens.max())
    padded = np.concatenate([[0.0], dens, [0.0]])
    idx, _ = _scipy_find_peaks(padded, prominence=min_prominence)
    idx = idx - 1
    centers = hist.centers
    if idx.size == 0:
        return []
    heights = dens[idx]
    top = idx[int(np.argmax(heights))]
    return [Peak(position=float(centers[i]), height=float(dens[i]),
                 is_global_max=bool(i == top)) for i in idx]
