import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lupi_qch.metrics import (
    bin_counts,
    chi_squared,
    log_likelihood,
    proportion_below,
    significance_stars,
    wasserstein_1d,
)

from oracles import transport_lp


def test_log_likelihood_examples():
    assert log_likelihood(np.zeros(3), np.full(3, 1 / 3)) == 0
    assert log_likelihood([1, 0], [0.5, 0.5]) == pytest.approx(math.log(0.5))
    assert log_likelihood([2, 0], [0.0, 1.0]) == pytest.approx(2 * math.log(1e-300))


def test_log_likelihood_ranking_survives_rescaling():
    rng = np.random.default_rng(0)
    for _ in range(20):
        c = rng.integers(0, 10, 12).astype(float)
        a, b = rng.dirichlet(np.ones(12), size=2)
        first = log_likelihood(c, a) >= log_likelihood(c, b)
        s = rng.uniform(0.1, 10)
        assert first == (log_likelihood(s * c, a) >= log_likelihood(s * c, b))


def test_chi_squared_perfect_fit():
    pred = np.random.default_rng(2).dirichlet(np.ones(20))
    chi2, df = chi_squared(38 * pred, pred, 38)
    assert chi2 == pytest.approx(0, abs=1e-12) and df == 5


def test_chi_squared_two_bins_by_hand():
    chi2, df = chi_squared([6.0, 4.0], [0.5, 0.5], submissions_per_day=10, bin_size=1, num_bins=2)
    assert chi2 == pytest.approx(0.4, abs=1e-15) and df == 1


def test_bins_cover_first_twelve_numbers():
    b = bin_counts(np.arange(1, 21, dtype=float), np.full(20, 0.05), 38)
    assert b.ranges == [(1, 2), (3, 4), (5, 6), (7, 8), (9, 10), (11, 12)]
    np.testing.assert_allclose(b.observed, [3, 7, 11, 15, 19, 23])
    np.testing.assert_allclose(b.expected, np.full(6, 3.8))
    assert b.df == 5


def test_chi_squared_zero_expected_is_an_error():
    with pytest.raises(ValueError):
        chi_squared([1, 1, 1, 1], [0, 0, 0.5, 0.5], 10, 1, 2)


def test_low_expected_counts_warn(caplog):
    chi_squared([1.0, 1.0], [0.5, 0.5], 4, 1, 2)
    assert "below 5" in caplog.text


def test_significance_stars():
    assert significance_stars(24.69, 5) == "***"
    assert significance_stars(11.58, 5) == "**"
    assert significance_stars(10.06, 5) == "*"
    assert significance_stars(8.49, 5) == ""
    assert significance_stars(7.0, 2) == "**"


def test_proportion_below_examples():
    p = np.random.default_rng(3).dirichlet(np.ones(9))
    assert proportion_below(p, p) == pytest.approx(100)
    assert proportion_below([1, 0], [0, 1]) == 0


def test_wasserstein_examples():
    p = np.random.default_rng(4).dirichlet(np.ones(9))
    assert wasserstein_1d(p, p) == 0
    assert wasserstein_1d(np.eye(5)[0], np.eye(5)[3]) == pytest.approx(3)
    assert wasserstein_1d([0.5, 0.5, 0], [0, 0.5, 0.5]) == pytest.approx(1.0, abs=1e-15)
    assert transport_lp([0.5, 0.5, 0], [0, 0.5, 0.5]) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_wasserstein_matches_transport_lp(seed):
    a, b = np.random.default_rng(seed).dirichlet(np.ones(6), size=2)
    assert wasserstein_1d(a, b) == pytest.approx(transport_lp(a, b), abs=1e-9)


def dist(size):
    return arrays(np.float64, size, elements=st.floats(0.0, 1.0)).filter(lambda v: v.sum() > 1e-3).map(
        lambda v: v / v.sum()
    )


@settings(max_examples=100, deadline=None)
@given(dist(8), dist(8), dist(8))
def test_wasserstein_metric_axioms(a, b, c):
    ab, ba = wasserstein_1d(a, b), wasserstein_1d(b, a)
    assert ab == pytest.approx(ba, abs=1e-12)
    assert ab >= 0
    assert wasserstein_1d(a, c) <= ab + wasserstein_1d(b, c) + 1e-12
    if np.max(np.abs(a - b)) > 1e-9:
        assert ab > 0


@settings(max_examples=100, deadline=None)
@given(dist(10), dist(10))
def test_proportion_below_bounds(a, b):
    v = proportion_below(a, b)
    assert 0 <= v <= 100 + 1e-9
    if np.max(np.abs(a - b)) > 1e-9:
        assert v < 100


@settings(max_examples=100, deadline=None)
@given(dist(12), dist(12))
def test_chi_squared_nonnegative(a, b):
    b = 0.5 * b + 0.5 / 12
    chi2, _ = chi_squared(38 * a, b, 38)
    assert chi2 >= 0
