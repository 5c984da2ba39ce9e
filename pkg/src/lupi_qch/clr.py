"""Simplex-constrained least squares.

Solves ``min ||A beta - y||^2`` subject to ``beta >= 0, sum(beta) == 1``,
where the columns of ``A`` are level strategies and ``y`` an agent's action
frequencies. Identical columns are merged before solving and their weight is
split evenly afterwards, which picks the minimum-norm optimum among the
otherwise tied solutions.
"""
from __future__ import annotations

import itertools
import logging
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import null_space

__all__ = ["METHODS", "solve_simplex_lsq", "project_simplex", "group_columns"]

log = logging.getLogger(__name__)

METHODS = ("active-set", "enumerate", "projected-gradient")

_DUP_TOL = 1e-14
_MAX_ENUMERATE = 16


@lru_cache(maxsize=64)
def _sum_zero_basis(f: int) -> NDArray[np.float64]:
    return null_space(np.ones((1, f)))


def group_columns(A: NDArray[np.float64], tol: float = _DUP_TOL) -> list[list[int]]:
    """Indices of ``A``'s columns grouped by (near-)equality, in first-seen order."""
    diff = np.abs(A[:, :, None] - A[:, None, :]).max(axis=0) <= tol
    seen = np.zeros(A.shape[1], dtype=bool)
    groups = []
    for j in range(A.shape[1]):
        if not seen[j]:
            members = np.flatnonzero(diff[j] & ~seen)
            seen[members] = True
            groups.append(members.tolist())
    return groups


def project_simplex(v: NDArray[np.float64]) -> NDArray[np.float64]:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _face_solution(B: NDArray[np.float64], y: NDArray[np.float64]) -> NDArray[np.float64]:
    # min ||B w - y|| s.t. sum(w) == 1, minimum-norm w among minimizers
    f = B.shape[1]
    if f == 1:
        return np.ones(1)
    w0 = np.full(f, 1.0 / f)
    Z = _sum_zero_basis(f)
    z = np.linalg.lstsq(B @ Z, y - B @ w0, rcond=None)[0]
    return w0 + Z @ z


def _objective(B, y, w) -> float:
    r = B @ w - y
    return float(r @ r)


def _active_set(B: NDArray[np.float64], y: NDArray[np.float64], tol: float = 1e-12) -> NDArray[np.float64]:
    g = B.shape[1]
    if g == 1:
        return np.ones(1)
    # start from the best vertex
    j0 = int(np.argmin(((B - y[:, None]) ** 2).sum(axis=0)))
    free = np.zeros(g, dtype=bool)
    free[j0] = True
    w = np.zeros(g)
    w[j0] = 1.0
    for _ in range(20 * g + 50):
        grad = B.T @ (B @ w - y)
        mu = grad - grad[free].mean()
        mu[free] = 0.0
        j = int(np.argmin(mu))
        if mu[j] >= -tol:
            return w
        free[j] = True
        for _ in range(g + 1):
            idx = np.flatnonzero(free)
            z = _face_solution(B[:, idx], y)
            if np.all(z > 0):
                w[:] = 0.0
                w[idx] = z
                break
            cur = w[idx]
            bad = z <= 0
            pos = np.flatnonzero(bad & (cur > 0))
            drop = list(idx[bad & (cur == 0)])
            if pos.size:
                ratios = cur[pos] / (cur[pos] - z[pos])
                k = int(np.argmin(ratios))
                w[idx] = cur + ratios[k] * (z - cur)
                drop.append(idx[pos[k]])
            drop = np.union1d(drop, idx[w[idx] <= 0]).astype(int)
            w[drop] = 0.0
            free[drop] = False
            w /= w.sum()
    log.warning("active-set CLR hit its iteration cap; finishing with projected gradient")
    return _projected_gradient(B, y, start=w)


def _enumerate(B: NDArray[np.float64], y: NDArray[np.float64], tol: float = 1e-12) -> NDArray[np.float64]:
    g = B.shape[1]
    if g > _MAX_ENUMERATE:
        raise ValueError(f"enumeration over {g} levels is too expensive (max {_MAX_ENUMERATE})")
    best, best_obj = None, np.inf
    for size in range(1, g + 1):
        for subset in itertools.combinations(range(g), size):
            idx = list(subset)
            z = _face_solution(B[:, idx], y)
            if z.min() < -tol:
                continue
            w = np.zeros(g)
            w[idx] = np.maximum(z, 0.0)
            w /= w.sum()
            obj = _objective(B, y, w)
            if obj < best_obj - 1e-15:
                best, best_obj = w, obj
    return best


def _projected_gradient(
    B: NDArray[np.float64],
    y: NDArray[np.float64],
    start: NDArray[np.float64] | None = None,
    max_iter: int = 10_000,
    tol: float = 1e-12,
) -> NDArray[np.float64]:
    g = B.shape[1]
    G = B.T @ B
    c = B.T @ y
    step = 1.0 / (2.0 * np.trace(G))
    w = np.full(g, 1.0 / g) if start is None else start.copy()
    obj = _objective(B, y, w)
    for _ in range(max_iter):
        w = project_simplex(w - step * 2.0 * (G @ w - c))
        new = _objective(B, y, w)
        if obj - new < tol and new <= obj:
            break
        obj = new
    return w


_SOLVERS = {
    "active-set": _active_set,
    "enumerate": _enumerate,
    "projected-gradient": _projected_gradient,
}


def solve_simplex_lsq(
    A: NDArray[np.float64],
    y: NDArray[np.float64],
    method: str = "active-set",
    groups: list[list[int]] | None = None,
) -> tuple[NDArray[np.float64], float]:
    """Best convex combination of ``A``'s columns for target ``y``.

    ``groups`` may carry a precomputed :func:`group_columns` result when many
    targets are fitted against the same ``A``. Returns the weight vector and
    the attained squared residual.
    """
    try:
        solver = _SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown CLR method {method!r}; choose from {METHODS}") from None
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if A.ndim != 2 or y.shape != (A.shape[0],):
        raise ValueError(f"incompatible shapes {A.shape} and {y.shape}")
    if groups is None:
        groups = group_columns(A)
    B = A[:, [g[0] for g in groups]]
    wg = solver(B, y)
    beta = np.zeros(A.shape[1])
    for g, weight in zip(groups, wg):
        beta[g] = weight / len(g)
    beta /= beta.sum()
    return beta, _objective(A, y, beta)
