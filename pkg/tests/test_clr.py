import numpy as np
import pytest

from lupi_qch.clr import group_columns, project_simplex, solve_simplex_lsq
from lupi_qch.data import AgentTrace
from lupi_qch.game import GameSpec
from lupi_qch.hierarchy import build_hierarchy
from lupi_qch.ipl import clr_fit

from oracles import simplex_grid_min


def random_hierarchy(rng, m=3, K=10):
    spec = GameSpec(K=K, n=float(rng.uniform(2, 12)))
    return build_hierarchy(rng.dirichlet(np.ones(m + 1)), float(rng.uniform(5, 40)), spec)


def test_point_mass_recovered_exactly(lab):
    h = build_hierarchy(np.full(5, 0.2), 12.0, lab)
    beta, resid = solve_simplex_lsq(h.levels.T, h.levels[2])
    np.testing.assert_allclose(beta, np.eye(5)[2], atol=1e-10)
    assert resid <= 1e-12


def test_convex_combination_recovered(lab):
    h = build_hierarchy(np.full(5, 0.2), 12.0, lab)
    y = 0.3 * h.levels[0] + 0.7 * h.levels[1]
    beta, resid = solve_simplex_lsq(h.levels.T, y)
    np.testing.assert_allclose(beta, [0.3, 0.7, 0, 0, 0], atol=1e-9)
    assert resid <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    h = random_hierarchy(rng)
    y = np.bincount(rng.integers(0, 10, 7), minlength=10) / 7
    beta, obj = solve_simplex_lsq(h.levels.T, y)
    grid_obj, _ = simplex_grid_min(h.levels.T, y)
    assert obj <= grid_obj + 1e-12
    assert grid_obj - obj <= 1e-5


@pytest.mark.parametrize("seed", range(20))
def test_methods_agree(seed):
    rng = np.random.default_rng(100 + seed)
    m = int(rng.integers(1, 9))
    K = int(rng.integers(3, 20))
    A = rng.dirichlet(np.ones(K), size=m + 1).T
    y = rng.dirichlet(np.full(K, 0.4))
    _, active = solve_simplex_lsq(A, y)
    _, enum = solve_simplex_lsq(A, y, "enumerate")
    _, pgd = solve_simplex_lsq(A, y, "projected-gradient")
    assert abs(active - enum) <= 1e-12
    assert pgd >= active - 1e-12 and pgd - active <= 1e-6


def test_duplicates_split_evenly():
    rng = np.random.default_rng(4)
    a, b = rng.dirichlet(np.ones(6), size=2)
    A = np.column_stack([a, b, b, b])
    beta, _ = solve_simplex_lsq(A, 0.4 * a + 0.6 * b)
    np.testing.assert_allclose(beta, [0.4, 0.2, 0.2, 0.2], atol=1e-10)


def test_all_identical_columns_give_uniform_weights():
    A = np.tile(np.full((8, 1), 1 / 8), (1, 5))
    beta, _ = solve_simplex_lsq(A, np.eye(8)[0])
    np.testing.assert_allclose(beta, np.full(5, 0.2))


def test_group_columns():
    A = np.array([[1.0, 0.0, 1.0, 0.5], [0.0, 1.0, 0.0, 0.5]])
    assert group_columns(A) == [[0, 2], [1], [3]]


def test_project_simplex():
    np.testing.assert_allclose(project_simplex(np.array([0.2, 0.3, 0.5])), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
    np.testing.assert_allclose(project_simplex(np.array([1.0, 1.0])), [0.5, 0.5])


def test_unknown_method():
    with pytest.raises(ValueError):
        solve_simplex_lsq(np.eye(2), np.array([0.5, 0.5]), "simplex")


def test_clr_fit_wraps_solver(lab):
    h = build_hierarchy(np.full(4, 0.25), 10.0, lab)
    fit = clr_fit(h, AgentTrace("a", (1, 1, 2, 3, 3, 3, 9), 99))
    assert fit.agent_id == "a"
    assert abs(fit.beta.sum() - 1) <= 1e-12 and np.all(fit.beta >= 0)
    assert fit.residual >= 0
    assert 0 <= fit.mean_level <= 3
    with pytest.raises(ValueError):
        clr_fit(h, AgentTrace("b", (1, 2), 10))
