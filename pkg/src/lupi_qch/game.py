"""LUPI Poisson game primitives.

Actions are the integers ``1..K``. Strategies are stored as plain 1-D numpy
arrays where ``probs[k - 1]`` is the probability of choosing ``k``; every
public function that takes an action index uses the 1-based game index.

Under a Poisson(n) population, the number of opponents picking ``j`` is an
independent Poisson(n * p_j) draw, so a player on ``k`` wins iff nobody else
picked ``k`` and no lower number was picked by exactly one opponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "GameSpec",
    "LAB_GAME",
    "as_strategy",
    "win_probability",
    "expected_utilities",
    "quantal_response",
]


@dataclass(frozen=True)
class GameSpec:
    """Lowest-unique-positive-integer game with a Poisson population.

    Attributes:
        K: largest integer a player may choose.
        n: mean of the Poisson number of players.
        prize: payoff to the winner.
    """

    K: int = 99
    n: float = 26.9
    prize: float = 1.0

    def __post_init__(self) -> None:
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f"K must be an integer >= 2, got {self.K!r}")
        if not (self.n > 0 and math.isfinite(self.n)):
            raise ValueError(f"n must be a positive finite number, got {self.n!r}")
        if not (self.prize > 0 and math.isfinite(self.prize)):
            raise ValueError(f"prize must be positive, got {self.prize!r}")


#: The laboratory configuration: numbers 1..99, on average 26.9 active players.
LAB_GAME = GameSpec(K=99, n=26.9, prize=1.0)


def as_strategy(probs: ArrayLike, K: int | None = None, tol: float = 1e-9) -> NDArray[np.float64]:
    """Validate and return ``probs`` as a float64 probability vector."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"strategy must be 1-D, got shape {p.shape}")
    if K is not None and p.size != K:
        raise ValueError(f"strategy has {p.size} entries, expected {K}")
    if not np.all(np.isfinite(p)):
        raise ValueError("strategy contains non-finite entries")
    if np.any(p < 0):
        raise ValueError("strategy contains negative entries")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"strategy sums to {p.sum():.15g}, not 1")
    return p


def _no_single(x: NDArray[np.float64]) -> NDArray[np.float64]:
    # P(Poisson(x) != 1)
    return 1.0 - x * np.exp(-x)


def win_probability(k: int, opp: ArrayLike, spec: GameSpec) -> float:
    """Probability that choosing ``k`` wins against a Poisson population playing ``opp``."""
    p = as_strategy(opp, spec.K)
    if int(k) != k or not 1 <= k <= spec.K:
        raise ValueError(f"action {k!r} outside 1..{spec.K}")
    k = int(k)
    x = spec.n * p
    blocked = 1.0
    for j in range(k - 1):
        blocked *= 1.0 - x[j] * math.exp(-x[j])
    return math.exp(-x[k - 1]) * blocked


def expected_utilities(opp: ArrayLike, spec: GameSpec) -> NDArray[np.float64]:
    """Expected payoff of every action ``1..K`` against ``opp``, in O(K)."""
    p = as_strategy(opp, spec.K)
    x = spec.n * p
    prefix = np.empty_like(x)
    prefix[0] = 1.0
    np.cumprod(_no_single(x[:-1]), out=prefix[1:])
    return spec.prize * np.exp(-x) * prefix


def quantal_response(utilities: ArrayLike, lam: float) -> NDArray[np.float64]:
    """Logit response with precision ``lam`` to a vector of utilities."""
    u = np.asarray(utilities, dtype=np.float64)
    if lam < 0 or math.isnan(lam):
        raise ValueError(f"precision must be >= 0, got {lam!r}")
    if np.any(np.isnan(u)):
        raise ValueError("utilities contain NaN")
    if lam == 0:
        return np.full(u.shape, 1.0 / u.size)
    if not np.all(np.isfinite(u)):
        raise ValueError("utilities must be finite")
    z = lam * u
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()
