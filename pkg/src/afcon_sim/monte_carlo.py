"""Repeated tournament playouts with reproducible per-run random streams.

Run ``i`` of a batch seeded with ``seed`` always draws from
``Generator(Philox(key=seed, counter=[0, 0, 0, i]))``. Streams are
therefore fixed by ``(seed, i)`` alone, and the aggregated integer counts
do not depend on how runs are split across workers.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .tournament import Stage, Variant, simulate_tournament

STAGE_COLUMNS = ("champion", "final", "semifinal", "quarterfinal", "last16")
RANK_COLUMNS = ("first", "second", "third_qualified", "eliminated")
_STAGE_INDEX = {
    "last16": Stage.LAST16,
    "quarterfinal": Stage.QUARTERFINAL,
    "semifinal": Stage.SEMIFINAL,
    "final": Stage.FINAL,
    "champion": Stage.CHAMPION,
}
SLOTS = {"champion": 1, "final": 2, "semifinal": 4, "quarterfinal": 8}


def run_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, int(index)]))


@dataclass
class SimulationSummary:
    """Integer outcome counts over ``n_runs`` tournaments.

    ``stage_counts[t, j]`` counts runs in which team ``t`` reached at least
    the stage ``STAGE_COLUMNS[j]``; ``rank_counts[t, j]`` counts group-stage
    outcomes ``RANK_COLUMNS[j]``.
    """

    teams: tuple
    groups: dict
    stage_counts: np.ndarray
    rank_counts: np.ndarray
    n_runs: int
    variant: Variant
    seed: int

    def merge(self, other: "SimulationSummary") -> "SimulationSummary":
        if self.teams != other.teams or self.variant != other.variant:
            raise ValueError("cannot merge summaries of different team sets or variants")
        return SimulationSummary(
            self.teams, self.groups, self.stage_counts + other.stage_counts,
            self.rank_counts + other.rank_counts, self.n_runs + other.n_runs, self.variant, self.seed,
        )

    def to_dict(self) -> dict:
        return {
            "n_runs": int(self.n_runs),
            "variant": self.variant.value,
            "seed": int(self.seed),
            "teams": {
                t: {
                    "group": self.groups[t],
                    "stages": dict(zip(STAGE_COLUMNS, map(int, self.stage_counts[i]))),
                    "group_ranks": dict(zip(RANK_COLUMNS, map(int, self.rank_counts[i]))),
                }
                for i, t in enumerate(self.teams)
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationSummary":
        teams = tuple(d["teams"])
        return cls(
            teams=teams,
            groups={t: d["teams"][t]["group"] for t in teams},
            stage_counts=np.array([[d["teams"][t]["stages"][c] for c in STAGE_COLUMNS] for t in teams], dtype=np.int64),
            rank_counts=np.array([[d["teams"][t]["group_ranks"][c] for c in RANK_COLUMNS] for t in teams], dtype=np.int64),
            n_runs=int(d["n_runs"]),
            variant=Variant(d["variant"]),
            seed=int(d["seed"]),
        )


def _empty_counts(n_teams):
    return np.zeros((n_teams, len(STAGE_COLUMNS)), np.int64), np.zeros((n_teams, len(RANK_COLUMNS)), np.int64)


def _run_range(config, model, base_elo, seed, variant, start, stop):
    teams = config.teams
    index = {t: i for i, t in enumerate(teams)}
    stage_counts, rank_counts = _empty_counts(len(teams))
    thresholds = [_STAGE_INDEX[c] for c in STAGE_COLUMNS]
    for run in range(start, stop):
        out = simulate_tournament(config, model, base_elo, run_stream(seed, run), variant)
        for team, st in out.stage.items():
            row = index[team]
            if st >= Stage.LAST16:
                for j, threshold in enumerate(thresholds):
                    if st >= threshold:
                        stage_counts[row, j] += 1
            rank_counts[row, out.group_outcome[team]] += 1
    return stage_counts, rank_counts


_worker_state = None


def _init_worker(config, model, base_elo, seed, variant):
    global _worker_state
    _worker_state = (config, model, base_elo, seed, variant)


def _worker_chunk(bounds):
    return _run_range(*_worker_state, *bounds)


def run_simulations(config, model, base_elo, n: int, seed: int, variant=Variant.WITH_THIRDS,
                    jobs: int = 1, chunk_size: int = 1000) -> SimulationSummary:
    if n < 1:
        raise ValueError("need at least one simulation")
    variant = Variant(variant)
    teams = tuple(config.teams)
    stage_counts, rank_counts = _empty_counts(len(teams))
    if jobs <= 1:
        s, r = _run_range(config, model, base_elo, seed, variant, 0, n)
        stage_counts += s
        rank_counts += r
    else:
        chunk = max(1, min(chunk_size, math.ceil(n / jobs)))
        bounds = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker,
            initargs=(config, model, base_elo, seed, variant),
        ) as pool:
            for s, r in pool.map(_worker_chunk, bounds):
                stage_counts += s
                rank_counts += r
    return SimulationSummary(teams, config.group_of(), stage_counts, rank_counts, n, variant, int(seed))


def stage_probabilities(summary: SimulationSummary) -> dict[str, dict[str, float]]:
    n = summary.n_runs
    return {
        t: {c: float(summary.stage_counts[i, j] / n) for j, c in enumerate(STAGE_COLUMNS)}
        for i, t in enumerate(summary.teams)
    }


def group_probabilities(summary: SimulationSummary) -> dict[str, dict[str, dict[str, float]]]:
    n = summary.n_runs
    out: dict[str, dict[str, dict[str, float]]] = {}
    for i, t in enumerate(summary.teams):
        out.setdefault(summary.groups[t], {})[t] = {
            c: float(summary.rank_counts[i, j] / n) for j, c in enumerate(RANK_COLUMNS)
        }
    return out


def diff_summaries(a: SimulationSummary, b: SimulationSummary) -> dict[str, dict[str, float]]:
    """Stage probabilities of ``a`` minus those of ``b``, in percentage points."""
    if set(a.teams) != set(b.teams):
        raise ValueError("summaries cover different team sets")
    pa, pb = stage_probabilities(a), stage_probabilities(b)
    return {t: {c: 100.0 * (pa[t][c] - pb[t][c]) for c in STAGE_COLUMNS} for t in a.teams}


def standard_error(p: float, n: int) -> float:
    if not 0.0 <= p <= 1.0 or n < 1:
        raise ValueError("need 0 <= p <= 1 and n >= 1")
    return math.sqrt(p * (1.0 - p) / n)
