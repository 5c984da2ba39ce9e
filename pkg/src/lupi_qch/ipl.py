"""Iterative population learning for the quantal cognitive hierarchy.

Each iteration builds level strategies from the current population level
distribution, regresses every agent's action frequencies onto them
(simplex-constrained least squares), and averages the agent weights into the
next population vector. The precision is held fixed inside the loop and
chosen by an outer grid search.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .clr import group_columns, solve_simplex_lsq
from .data import AgentTrace, pooled_counts
from .game import GameSpec
from .hierarchy import DEFAULT_LEVELS, GridSpec, Hierarchy, build_hierarchy, predict
from .metrics import log_likelihood

__all__ = [
    "AgentFit",
    "IplResult",
    "clr_fit",
    "aggregate",
    "ipl_step",
    "ipl_run",
    "ipl_fit_lambda",
    "fixed_point_residual",
]

log = logging.getLogger(__name__)


@dataclass
class AgentFit:
    agent_id: str
    beta: NDArray[np.float64]
    residual: float

    @property
    def mean_level(self) -> float:
        return float(np.arange(self.beta.size) @ self.beta)


@dataclass
class IplResult:
    """Outcome of one IPL run.

    ``population`` is the returned level distribution and ``hierarchy`` the
    level strategies it generates; ``agent_fits`` are the regressions whose
    average produced ``population``. ``trajectory`` holds the population and
    pooled log-likelihood after every iteration.
    """

    population: NDArray[np.float64]
    hierarchy: Hierarchy
    agent_fits: list[AgentFit]
    iterations: int
    converged: bool
    loglik: float
    trajectory: list[tuple[NDArray[np.float64], float]] = field(default_factory=list)
    seed: object = None

    @property
    def lam(self) -> float:
        return self.hierarchy.lam

    @property
    def prediction(self) -> NDArray[np.float64]:
        return predict(self.population, self.hierarchy)


def clr_fit(
    hierarchy: Hierarchy, trace: AgentTrace, method: str = "active-set", groups=None
) -> AgentFit:
    """Best convex combination of the level strategies for one agent's frequencies."""
    if trace.K != hierarchy.spec.K:
        raise ValueError(f"trace has K={trace.K}, hierarchy has K={hierarchy.spec.K}")
    beta, resid = solve_simplex_lsq(hierarchy.levels.T, trace.freq, method, groups)
    return AgentFit(trace.agent_id, beta, resid)


def aggregate(fits: Sequence[AgentFit]) -> NDArray[np.float64]:
    """Population level distribution as the plain average of agent weights."""
    if not fits:
        raise ValueError("cannot aggregate an empty list of fits")
    sizes = {f.beta.size for f in fits}
    if len(sizes) != 1:
        raise ValueError(f"agent weight vectors differ in length: {sorted(sizes)}")
    p = np.mean([f.beta for f in fits], axis=0)
    return p / p.sum()


def ipl_step(
    population: NDArray[np.float64],
    traces: Sequence[AgentTrace],
    lam: float,
    spec: GameSpec,
    method: str = "active-set",
) -> tuple[Hierarchy, list[AgentFit], NDArray[np.float64]]:
    """One full iteration: hierarchy from ``population``, per-agent fits, new population."""
    hierarchy = build_hierarchy(population, lam, spec)
    groups = group_columns(hierarchy.levels.T)
    fits = [clr_fit(hierarchy, t, method, groups) for t in traces]
    return hierarchy, fits, aggregate(fits)


def _check_traces(traces: Sequence[AgentTrace], spec: GameSpec) -> None:
    if not traces:
        raise ValueError("no traces")
    if any(t.K != spec.K for t in traces):
        raise ValueError(f"all traces must use K={spec.K}")


def ipl_run(
    traces: Sequence[AgentTrace],
    lam: float,
    spec: GameSpec,
    epsilon: float = 1e-4,
    max_iter: int = 100,
    seed=0,
    levels: int = DEFAULT_LEVELS,
    method: str = "active-set",
) -> IplResult:
    """Iterate to a self-consistent population level distribution.

    The start is ``levels + 1`` uniform(0, 1) draws from ``seed``,
    normalized. Iteration stops once the population moves less than
    ``epsilon`` in L2; otherwise after ``max_iter`` iterations the state
    with the best pooled log-likelihood is returned.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if levels < 0:
        raise ValueError("levels must be >= 0")
    _check_traces(traces, spec)
    counts = pooled_counts(traces, spec.K)

    rng = np.random.default_rng(seed)
    p = rng.uniform(0.0, 1.0, size=levels + 1)
    p /= p.sum()
    hierarchy = build_hierarchy(p, lam, spec)

    trajectory: list[tuple[NDArray[np.float64], float]] = []
    best: IplResult | None = None
    for t in range(1, max_iter + 1):
        groups = group_columns(hierarchy.levels.T)
        fits = [clr_fit(hierarchy, tr, method, groups) for tr in traces]
        p_new = aggregate(fits)
        h_new = build_hierarchy(p_new, lam, spec)
        ll = log_likelihood(counts, predict(p_new, h_new))
        trajectory.append((p_new, ll))
        step = float(np.linalg.norm(p_new - p))
        state = IplResult(p_new, h_new, fits, t, step < epsilon, ll, trajectory, seed)
        if state.converged:
            return state
        if best is None or ll > best.loglik:
            best = state
        p, hierarchy = p_new, h_new
    log.info("IPL at lambda=%g did not converge in %d iterations", lam, max_iter)
    best.iterations = max_iter
    return best


def _run_task(args) -> IplResult:
    traces, lam, spec, epsilon, max_iter, seed, levels, method = args
    return ipl_run(traces, lam, spec, epsilon, max_iter, seed, levels, method)


def ipl_fit_lambda(
    traces: Sequence[AgentTrace],
    spec: GameSpec,
    grid: GridSpec = GridSpec(),
    epsilon: float = 1e-4,
    max_iter: int = 100,
    restarts: int = 5,
    seed: int = 0,
    levels: int = DEFAULT_LEVELS,
    method: str = "active-set",
    jobs: int = 1,
) -> tuple[IplResult, float]:
    """Grid search over precision with ``restarts`` random starts per grid point.

    Restart ``r`` uses seed ``seed + r``. The highest final log-likelihood
    wins; ties go to the smaller precision, then the lower restart index.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    _check_traces(traces, spec)
    tasks = [
        (traces, float(lam), spec, epsilon, max_iter, seed + r, levels, method)
        for lam in grid.points
        for r in range(restarts)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_run_task(t) for t in tasks]
    best = None
    for res in results:
        if best is None or res.loglik > best.loglik:
            best = res
    return best, best.lam


def fixed_point_residual(result: IplResult, traces: Sequence[AgentTrace], spec: GameSpec) -> float:
    """L2 change of the population under one more full iteration."""
    _check_traces(traces, spec)
    *_, p_next = ipl_step(result.population, traces, result.lam, spec)
    return float(np.linalg.norm(p_next - result.population))
