"""Quantal cognitive hierarchies for the symmetric LUPI game.

A level-0 player randomizes uniformly. A level-k player quantal-responds to a
population drawn from levels ``0..k-1`` weighted by the level distribution
and renormalized. The same construction serves both the Poisson-QCH baseline
(weights from a truncated Poisson) and the iteratively learned population.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .game import GameSpec, expected_utilities, quantal_response
from .metrics import log_likelihood

__all__ = [
    "DEFAULT_LEVELS",
    "GridSpec",
    "Hierarchy",
    "as_level_distribution",
    "poisson_levels",
    "build_hierarchy",
    "predict",
    "lambda_profile",
    "fit_lambda",
]

#: Highest reasoning level considered unless configured otherwise.
DEFAULT_LEVELS = 40


@dataclass(frozen=True)
class GridSpec:
    """Uniformly spaced precision grid ``linspace(lo, hi, count)``."""

    lo: float = 1.0
    hi: float = 20.0
    count: int = 500

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("grid needs at least one point")
        if self.lo <= 0 or (self.count > 1 and not self.lo < self.hi):
            raise ValueError(f"grid bounds must satisfy 0 < lo < hi, got {self.lo}, {self.hi}")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``"lo:hi:count"``."""
        try:
            lo, hi, count = text.split(":")
            return cls(float(lo), float(hi), int(count))
        except ValueError as exc:
            raise ValueError(f"bad grid {text!r}, expected lo:hi:count ({exc})") from None

    @classmethod
    def single(cls, lam: float) -> "GridSpec":
        return cls(lam, lam, 1)

    @property
    def points(self) -> NDArray[np.float64]:
        if self.count == 1:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.count)

    @property
    def step(self) -> float:
        return 0.0 if self.count == 1 else (self.hi - self.lo) / (self.count - 1)


@dataclass
class Hierarchy:
    """Level strategies ``levels[l]`` for l = 0..m, built at precision ``lam``."""

    levels: NDArray[np.float64]
    lam: float
    spec: GameSpec
    warnings: list[str] = field(default_factory=list)

    @property
    def m(self) -> int:
        return self.levels.shape[0] - 1


def as_level_distribution(weights: ArrayLike, tol: float = 1e-9) -> NDArray[np.float64]:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("level distribution must be a non-empty 1-D vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("level distribution must be finite and nonnegative")
    if abs(w.sum() - 1.0) > tol:
        raise ValueError(f"level distribution sums to {w.sum():.15g}, not 1")
    return w


def poisson_levels(tau: float, m: int = DEFAULT_LEVELS) -> NDArray[np.float64]:
    """Poisson(tau) weights over levels 0..m, renormalized after truncation."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    if m < 0:
        raise ValueError("m must be >= 0")
    ell = np.arange(m + 1)
    logw = ell * math.log(tau) - np.array([math.lgamma(l + 1.0) for l in ell])
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def build_hierarchy(level_dist: ArrayLike, lam: float, spec: GameSpec) -> Hierarchy:
    """Quantal best-response strategies for every level in ``level_dist``.

    Where every lower level has zero weight the mixture is undefined; the
    uniform mix over levels ``0..k-1`` is used instead and a warning recorded.
    """
    p = as_level_distribution(level_dist)
    K = spec.K
    levels = np.empty((p.size, K))
    levels[0] = 1.0 / K
    notes: list[str] = []
    acc = p[0] * levels[0]
    mass = p[0]
    for k in range(1, p.size):
        if mass > 0:
            mix = acc / mass
        else:
            mix = levels[:k].mean(axis=0)
            notes.append(f"level {k}: no weight on levels 0..{k - 1}, using uniform level mix")
        levels[k] = quantal_response(expected_utilities(mix / mix.sum(), spec), lam)
        acc = acc + p[k] * levels[k]
        mass = mass + p[k]
    return Hierarchy(levels=levels, lam=float(lam), spec=spec, warnings=notes)


def predict(level_dist: ArrayLike, hierarchy: Hierarchy) -> NDArray[np.float64]:
    """Population action distribution: level strategies mixed by ``level_dist``."""
    p = as_level_distribution(level_dist)
    if p.size != hierarchy.levels.shape[0]:
        raise ValueError(
            f"level distribution has {p.size} levels, hierarchy has {hierarchy.levels.shape[0]}"
        )
    out = p @ hierarchy.levels
    return out / out.sum()


def _resolve_levels(level_source) -> NDArray[np.float64]:
    if isinstance(level_source, tuple):
        tau, m = level_source
        return poisson_levels(tau, m)
    return as_level_distribution(level_source)


def lambda_profile(
    counts: ArrayLike, level_source, spec: GameSpec, grid: GridSpec
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Log-likelihood of ``counts`` at every grid precision."""
    c = np.asarray(counts, dtype=np.float64)
    if c.shape != (spec.K,) or np.any(c < 0) or not c.sum() > 0:
        raise ValueError("counts must be a nonnegative length-K vector with positive total")
    p = _resolve_levels(level_source)
    lams = grid.points
    ll = np.array([log_likelihood(c, predict(p, build_hierarchy(p, lam, spec))) for lam in lams])
    return lams, ll


def fit_lambda(
    counts: ArrayLike, level_source, spec: GameSpec, grid: GridSpec = GridSpec()
) -> tuple[float, float]:
    """Maximum-likelihood precision on ``grid``.

    ``level_source`` is either a level distribution or a ``(tau, m)`` pair for
    the Poisson baseline. Ties go to the smaller precision.
    """
    lams, ll = lambda_profile(counts, level_source, spec, grid)
    i = int(np.argmax(ll))
    return float(lams[i]), float(ll[i])
