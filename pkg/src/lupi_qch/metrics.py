"""Goodness-of-fit measures for predicted choice distributions."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

__all__ = [
    "PROB_FLOOR",
    "BinnedCounts",
    "log_likelihood",
    "bin_counts",
    "chi_squared",
    "significance_stars",
    "proportion_below",
    "wasserstein_1d",
]

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-300

# chi-square critical values for df = 5 at the 10%, 5% and 1% levels
_CRITICAL_DF5 = ((0.01, 15.086, "***"), (0.05, 11.070, "**"), (0.10, 9.236, "*"))


@dataclass(frozen=True)
class BinnedCounts:
    """Observed and expected counts per bin; ``ranges`` are inclusive action ranges."""

    ranges: list[tuple[int, int]]
    observed: NDArray[np.float64]
    expected: NDArray[np.float64]

    @property
    def df(self) -> int:
        return len(self.ranges) - 1


def log_likelihood(counts: ArrayLike, predicted: ArrayLike) -> float:
    """Multinomial log-likelihood (without the combinatorial constant)."""
    c = np.asarray(counts, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if c.shape != p.shape:
        raise ValueError(f"shape mismatch: counts {c.shape} vs predicted {p.shape}")
    mask = c != 0
    return float(np.dot(c[mask], np.log(np.maximum(p[mask], PROB_FLOOR))))


def bin_counts(
    observed_avg_freq: ArrayLike,
    predicted: ArrayLike,
    submissions_per_day: float = 38,
    bin_size: int = 2,
    num_bins: int = 6,
) -> BinnedCounts:
    obs = np.asarray(observed_avg_freq, dtype=np.float64)
    pred = np.asarray(predicted, dtype=np.float64)
    if obs.shape != pred.shape:
        raise ValueError("observed and predicted must have the same length")
    if bin_size < 1 or num_bins < 2:
        raise ValueError("need bin_size >= 1 and num_bins >= 2")
    if bin_size * num_bins > obs.size:
        raise ValueError(f"{num_bins} bins of size {bin_size} exceed {obs.size} actions")
    ranges = [(i * bin_size + 1, (i + 1) * bin_size) for i in range(num_bins)]
    width = bin_size * num_bins
    O = obs[:width].reshape(num_bins, bin_size).sum(axis=1)
    E = submissions_per_day * pred[:width].reshape(num_bins, bin_size).sum(axis=1)
    return BinnedCounts(ranges, O, E)


def chi_squared(
    observed_avg_freq: ArrayLike,
    predicted: ArrayLike,
    submissions_per_day: float = 38,
    bin_size: int = 2,
    num_bins: int = 6,
) -> tuple[float, int]:
    """Pearson statistic over the first ``num_bins`` bins of ``bin_size`` numbers.

    Observations are average daily counts; expected counts are
    ``submissions_per_day`` times the predicted mass in each bin.
    """
    b = bin_counts(observed_avg_freq, predicted, submissions_per_day, bin_size, num_bins)
    if np.any(b.expected <= 0):
        raise ValueError("expected count is zero in some bin")
    if np.any(b.expected < 5):
        log.warning("expected count below 5 in %d bin(s)", int(np.sum(b.expected < 5)))
    chi2 = float(np.sum((b.observed - b.expected) ** 2 / b.expected))
    return chi2, b.df


def significance_stars(chi2: float, df: int) -> str:
    """``***``/``**``/``*`` for rejection at 1/5/10 percent, else empty."""
    if df == 5:
        table = _CRITICAL_DF5
    else:
        table = tuple((a, stats.chi2.isf(a, df), s) for a, _, s in _CRITICAL_DF5)
    for _, crit, stars in table:
        if chi2 > crit:
            return stars
    return ""


def proportion_below(empirical: ArrayLike, predicted: ArrayLike) -> float:
    """Percentage of empirical mass lying under the predicted density (overlap)."""
    e = np.asarray(empirical, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if e.shape != p.shape:
        raise ValueError("distributions must have the same length")
    return float(100.0 * np.minimum(e, p).sum())


def wasserstein_1d(a: ArrayLike, b: ArrayLike) -> float:
    """Earth mover's distance between distributions on unit-spaced points."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("distributions must have the same length")
    return float(np.abs(np.cumsum(a - b)[:-1]).sum())
