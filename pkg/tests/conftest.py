import numpy as np
import pytest

from lupi_qch.data import synthesize_traces
from lupi_qch.game import LAB_GAME, GameSpec
from lupi_qch.hierarchy import poisson_levels


@pytest.fixture
def lab():
    return LAB_GAME


@pytest.fixture
def small_game():
    return GameSpec(K=5, n=3.0)


def pure_level_betas(tau, levels, agents):
    """Agents each fixed at one level, level shares from truncated Poisson(tau)."""
    pop = poisson_levels(tau, levels)
    counts = np.round(pop * agents).astype(int)
    counts[0] += agents - counts.sum()
    eye = np.eye(levels + 1)
    return [eye[l] for l in np.repeat(np.arange(levels + 1), counts)]


@pytest.fixture(scope="session")
def recovery_case():
    """50 pure-level agents x 10,000 rounds at lambda = 10, m = 5 on the lab game."""
    betas = pure_level_betas(1.5, 5, 50)
    traces = synthesize_traces(betas, 10.0, LAB_GAME, 10_000, seed=7)
    return np.mean(betas, axis=0), traces


# acceptance reporting: one line per criterion, echoed in the terminal summary
_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


class Criterion:
    def __init__(self, lines, number, title):
        self.lines, self.number, self.title = lines, number, title
        self.failures, self.notes = [], []

    def check(self, ok, detail):
        (self.notes if ok else self.failures).append(detail)
        return ok

    def _emit(self, status, detail):
        line = f"[{status}] criterion {self.number}: {self.title}" + (f" -- {detail}" if detail else "")
        self.lines.append(line)
        print(line)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and issubclass(exc_type, pytest.skip.Exception):
            self._emit("SKIP", str(exc))
            return False
        if exc_type is not None:
            self._emit("FAIL", f"{exc_type.__name__}: {exc}")
            return False
        if self.failures:
            self._emit("FAIL", "; ".join(self.failures))
            pytest.fail("; ".join(self.failures))
        self._emit("PASS", "; ".join(self.notes))
        return False


@pytest.fixture
def criterion(pytestconfig):
    return lambda number, title: Criterion(pytestconfig.stash[_ACCEPTANCE], number, title)


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
