"""Behavioral models for the lowest-unique-positive-integer game.

Poisson-Nash equilibrium, Poisson quantal cognitive hierarchy, and the
iterative population learning (QCH-IPL) estimator, with the goodness-of-fit
metrics used to compare them on laboratory choice data.
"""
from .data import (
    AgentTrace,
    LabDataset,
    WeekWindow,
    load_lab_dataset,
    pooled_counts,
    synthesize_traces,
    weekly_traces,
    write_lab_dataset,
)
from .game import LAB_GAME, GameSpec, expected_utilities, quantal_response, win_probability
from .hierarchy import GridSpec, Hierarchy, build_hierarchy, fit_lambda, poisson_levels, predict
from .ipl import AgentFit, IplResult, aggregate, clr_fit, fixed_point_residual, ipl_fit_lambda, ipl_run
from .metrics import chi_squared, log_likelihood, proportion_below, wasserstein_1d
from .pne import SolverError, solve_pne

__version__ = "0.1.0"
