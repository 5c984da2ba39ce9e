"""Poisson-Nash equilibrium of the LUPI game.

Indifference between consecutive supported numbers gives

    p_k - p_{k+1} = -(1/n) ln(1 - n p_k exp(-n p_k)),

so the whole equilibrium is pinned down by ``p_1``. We bisect on ``p_1``
until the forward recursion sums to one.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from .game import GameSpec, as_strategy, expected_utilities

__all__ = [
    "SolverError",
    "next_probability",
    "equilibrium_sequence",
    "solve_pne",
    "recursion_residuals",
    "indifference_residual",
]


class SolverError(RuntimeError):
    """Raised when the equilibrium search fails; carries the best residual seen."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


def _expm1_minus_x(x: float) -> float:
    # exp(x) - 1 - x without cancellation near 0
    if x < 0.1:
        term = x * x / 2.0
        total = term
        j = 2
        while term > 1e-17 * total:
            j += 1
            term *= x / j
            total += term
        return total
    return math.expm1(x) - x


def next_probability(p: float, n: float) -> float:
    """Probability on ``k + 1`` that keeps a player indifferent to ``k`` with mass ``p``."""
    # p + ln(1 - x e^{-x}) / n == ln(e^x - x) / n with x = n p
    return math.log1p(_expm1_minus_x(n * p)) / n


def equilibrium_sequence(p1: float, spec: GameSpec) -> NDArray[np.float64]:
    """Run the indifference recursion forward from ``p1``.

    Stops at ``K`` entries or as soon as the next value is not positive
    (in floating point the tail decays quadratically and underflows);
    the remaining entries are left at exactly zero.
    """
    out = np.zeros(spec.K)
    p = p1
    for k in range(spec.K):
        if p <= 0.0:
            break
        out[k] = p
        p = next_probability(p, spec.n)
    return out


def solve_pne(
    spec: GameSpec,
    tol: float = 1e-12,
    max_support: int | None = None,
    bracket: tuple[float, float] = (0.0, 1.0),
    max_iter: int = 200,
) -> NDArray[np.float64]:
    """Unique mixed Poisson-Nash equilibrium of the LUPI game.

    Args:
        spec: the game.
        tol: tolerance on ``|sum(p) - 1|``.
        max_support: optionally restrict the game to ``1..max_support``;
            deviations are then only checked within that range.
        bracket: initial search interval for ``p_1``.
        max_iter: bisection budget.

    Raises:
        SolverError: if the probability sum cannot be matched within ``tol``
            or a zero-probability action turns out to be a profitable deviation.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = bracket
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"invalid bracket {bracket!r}")
    if max_support is not None and not 1 <= max_support <= spec.K:
        raise ValueError(f"max_support must lie in 1..{spec.K}")
    limit = spec.K if max_support is None else max_support
    sub = GameSpec(K=max(limit, 2), n=spec.n, prize=spec.prize)

    def excess(p1: float) -> tuple[float, NDArray[np.float64]]:
        seq = equilibrium_sequence(p1, sub)[:limit]
        return seq.sum() - 1.0, seq

    if excess(hi)[0] < 0:
        raise SolverError("upper bracket does not reach total probability 1", abs(excess(hi)[0]))
    if lo > 0 and excess(lo)[0] > 0:
        raise SolverError("lower bracket already exceeds total probability 1", excess(lo)[0])

    best = (math.inf, None)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f, seq = excess(mid)
        if abs(f) < best[0]:
            best = (abs(f), seq)
        if f > 0:
            hi = mid
        else:
            lo = mid
    for end in (lo, hi):
        if end > 0:
            f, seq = excess(end)
            if abs(f) < best[0]:
                best = (abs(f), seq)

    resid, seq = best
    if seq is None or resid > tol:
        raise SolverError("probability sum did not converge", resid)

    p = np.zeros(spec.K)
    p[:limit] = seq
    u = expected_utilities(p, spec)[:limit]
    support = p[:limit] > 0
    gain = u[~support].max(initial=-math.inf) - u[support].max()
    if gain > 1e-9:
        raise SolverError("zero-probability action is a profitable deviation", gain)
    return p


def recursion_residuals(p: NDArray[np.float64], n: float) -> NDArray[np.float64]:
    """Indifference-condition residuals over consecutive supported pairs."""
    p = np.asarray(p, dtype=np.float64)
    both = (p[:-1] > 0) & (p[1:] > 0)
    pk, pk1 = p[:-1][both], p[1:][both]
    x = n * pk
    return (pk - pk1) + np.log1p(-x * np.exp(-x)) / n


def indifference_residual(p: NDArray[np.float64], spec: GameSpec) -> float:
    """Spread (max - min) of expected utility over the support of ``p``."""
    p = as_strategy(p, spec.K)
    u = expected_utilities(p, spec)[p > 0]
    return float(u.max() - u.min())
