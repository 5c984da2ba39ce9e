"""Lab LUPI choice data: loading, weekly windows, pooled counts, synthetic traces.

The on-disk format is a comma-separated long table with header
``participant,round,choice``; an optional winners table has header
``round,winning_number`` (empty number for rounds without a winner).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .game import GameSpec
from .hierarchy import as_level_distribution, build_hierarchy

__all__ = [
    "DAYS_PER_WEEK",
    "DataError",
    "AgentTrace",
    "LabDataset",
    "WeekWindow",
    "load_lab_dataset",
    "write_lab_dataset",
    "weekly_traces",
    "pooled_counts",
    "synthesize_traces",
    "traces_to_dataset",
]

DAYS_PER_WEEK = 7
HEADER = ("participant", "round", "choice")
WINNERS_HEADER = ("round", "winning_number")


class DataError(ValueError):
    """Malformed or invalid choice data."""


@dataclass(frozen=True)
class AgentTrace:
    """One participant's choices over a window of rounds."""

    agent_id: str
    choices: tuple[int, ...]
    K: int = 99

    def __post_init__(self) -> None:
        if len(self.choices) == 0:
            raise ValueError(f"agent {self.agent_id}: empty trace")
        bad = [c for c in self.choices if not 1 <= c <= self.K]
        if bad:
            raise ValueError(f"agent {self.agent_id}: choices outside 1..{self.K}: {bad[:10]}")

    @property
    def counts(self) -> NDArray[np.float64]:
        return np.bincount(np.asarray(self.choices) - 1, minlength=self.K).astype(np.float64)

    @property
    def freq(self) -> NDArray[np.float64]:
        return self.counts / len(self.choices)


@dataclass(frozen=True)
class WeekWindow:
    week: int

    def __post_init__(self) -> None:
        if self.week < 1:
            raise ValueError(f"week must be >= 1, got {self.week}")

    @property
    def rounds(self) -> range:
        start = DAYS_PER_WEEK * (self.week - 1) + 1
        return range(start, start + DAYS_PER_WEEK)


@dataclass
class LabDataset:
    """Choices indexed by participant and round.

    ``choices[i, r - 1]`` is participant ``participants[i]``'s pick in round
    ``r``; 0 marks a missing cell.
    """

    participants: list[str]
    choices: NDArray[np.int64]
    K: int = 99
    winning_numbers: dict[int, int | None] = field(default_factory=dict)

    @property
    def n_rounds(self) -> int:
        return self.choices.shape[1]

    @property
    def n_weeks(self) -> int:
        return self.n_rounds // DAYS_PER_WEEK

    def records(self) -> list[tuple[str, int, int]]:
        return [
            (pid, r + 1, int(c))
            for pid, row in zip(self.participants, self.choices)
            for r, c in enumerate(row)
            if c
        ]


def _read_rows(path: Path, header: tuple[str, ...]) -> Iterable[tuple[int, list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(h.strip() for h in first) != header:
            raise DataError(f"{path}:1: expected header {','.join(header)}, got {first}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            yield reader.line_num, row


def load_lab_dataset(path, K: int = 99, winners_path=None) -> LabDataset:
    """Parse a ``participant,round,choice`` table.

    Raises:
        DataError: malformed rows (with line numbers), duplicate cells, or
            choices outside ``1..K`` (all offenders listed).
    """
    path = Path(path)
    order: dict[str, int] = {}
    cells: dict[tuple[int, int], int] = {}
    offenders = []
    for line, row in _read_rows(path, HEADER):
        if len(row) != 3:
            raise DataError(f"{path}:{line}: expected 3 fields, got {len(row)}")
        pid = row[0].strip()
        try:
            rnd, choice = int(row[1]), int(row[2])
        except ValueError:
            raise DataError(f"{path}:{line}: round and choice must be integers: {row}") from None
        if not pid:
            raise DataError(f"{path}:{line}: empty participant id")
        if rnd < 1:
            raise DataError(f"{path}:{line}: round must be >= 1, got {rnd}")
        if not 1 <= choice <= K:
            offenders.append((line, pid, rnd, choice))
        i = order.setdefault(pid, len(order))
        if (i, rnd) in cells:
            raise DataError(f"{path}:{line}: duplicate entry for participant {pid} round {rnd}")
        cells[(i, rnd)] = choice
    if offenders:
        listing = "; ".join(f"line {l}: participant {p} round {r} choice {c}" for l, p, r, c in offenders)
        raise DataError(f"{len(offenders)} choice(s) outside 1..{K}: {listing}")
    if not cells:
        raise DataError(f"{path}: no records")
    n_rounds = max(r for _, r in cells)
    choices = np.zeros((len(order), n_rounds), dtype=np.int64)
    for (i, r), c in cells.items():
        choices[i, r - 1] = c
    winners = _load_winners(Path(winners_path), K) if winners_path else {}
    return LabDataset(list(order), choices, K, winners)


def _load_winners(path: Path, K: int) -> dict[int, int | None]:
    out: dict[int, int | None] = {}
    for line, row in _read_rows(path, WINNERS_HEADER):
        if len(row) != 2:
            raise DataError(f"{path}:{line}: expected 2 fields, got {len(row)}")
        try:
            rnd = int(row[0])
            num = int(row[1]) if row[1].strip() else None
        except ValueError:
            raise DataError(f"{path}:{line}: non-integer field: {row}") from None
        if num is not None and not 1 <= num <= K:
            raise DataError(f"{path}:{line}: winning number {num} outside 1..{K}")
        out[rnd] = num
    return out


def write_lab_dataset(ds: LabDataset, path, winners_path=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(ds.records())
    if winners_path is not None:
        with open(winners_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(WINNERS_HEADER)
            for rnd in sorted(ds.winning_numbers):
                num = ds.winning_numbers[rnd]
                w.writerow((rnd, "" if num is None else num))


def weekly_traces(ds: LabDataset, week: WeekWindow | int) -> list[AgentTrace]:
    """One trace per participant holding that week's seven choices."""
    if isinstance(week, int):
        week = WeekWindow(week)
    if week.week > ds.n_weeks:
        raise ValueError(f"week {week.week} beyond the {ds.n_weeks} weeks in the data")
    cols = np.array(week.rounds) - 1
    block = ds.choices[:, cols]
    missing = np.argwhere(block == 0)
    if missing.size:
        i, j = missing[0]
        raise DataError(
            f"participant {ds.participants[i]} has no choice for round {week.rounds[j]}"
            f" ({len(missing)} gap(s) in week {week.week})"
        )
    return [
        AgentTrace(pid, tuple(int(c) for c in row), ds.K)
        for pid, row in zip(ds.participants, block)
    ]


def pooled_counts(traces: Sequence[AgentTrace], K: int | None = None) -> NDArray[np.float64]:
    """Total number of times each action ``1..K`` was chosen across ``traces``."""
    if not traces:
        raise ValueError("no traces")
    K = traces[0].K if K is None else K
    allc = np.concatenate([np.asarray(t.choices) for t in traces])
    return np.bincount(allc - 1, minlength=K).astype(np.float64)


def synthesize_traces(
    true_betas: Sequence[ArrayLike],
    lam: float,
    spec: GameSpec,
    rounds_per_agent: int,
    seed=0,
) -> list[AgentTrace]:
    """Sample choice traces from per-agent level mixtures.

    The level strategies are built from the average of ``true_betas``; each
    round an agent draws a level from its own beta and then an action from
    that level's strategy.
    """
    if rounds_per_agent < 1:
        raise ValueError("rounds_per_agent must be >= 1")
    betas = np.array([as_level_distribution(b) for b in true_betas])
    population = betas.mean(axis=0)
    hierarchy = build_hierarchy(population / population.sum(), lam, spec)
    rng = np.random.default_rng(seed)
    traces = []
    for i, beta in enumerate(betas):
        levels = rng.choice(beta.size, size=rounds_per_agent, p=beta)
        actions = np.empty(rounds_per_agent, dtype=np.int64)
        for lvl in np.unique(levels):
            where = np.flatnonzero(levels == lvl)
            actions[where] = rng.choice(spec.K, size=where.size, p=hierarchy.levels[lvl]) + 1
        traces.append(AgentTrace(str(i + 1), tuple(actions.tolist()), spec.K))
    return traces


def traces_to_dataset(traces: Sequence[AgentTrace]) -> LabDataset:
    """Pack equal-length traces (round ``r`` = position ``r``) into a dataset."""
    lengths = {len(t.choices) for t in traces}
    if len(lengths) != 1:
        raise ValueError("traces must all have the same length")
    return LabDataset(
        [t.agent_id for t in traces],
        np.array([t.choices for t in traces], dtype=np.int64),
        traces[0].K,
    )
