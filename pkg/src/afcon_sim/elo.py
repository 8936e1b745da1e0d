"""In-tournament Elo ratings (World Football Elo conventions)."""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_K = 50.0


def expected_score(r_a: float, r_b: float) -> float:
    d = r_a - r_b
    if d == 0:
        return 0.5
    x = -d / 400.0
    if x > 300.0:  # 10**x would overflow; the score is 0 to double precision
        return 0.0
    return 1.0 / (10.0 ** x + 1.0)


def goal_multiplier(margin: int) -> float:
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if margin <= 1:
        return 1.0
    if margin == 2:
        return 1.5
    return (11.0 + margin) / 8.0


def result_value(goals_a: int, goals_b: int) -> float:
    if goals_a > goals_b:
        return 1.0
    if goals_a < goals_b:
        return 0.0
    return 0.5


@dataclass
class EloState:
    """Mutable ratings for one simulated tournament run.

    ``bonus`` holds per-team offsets (host advantage) that enter expected
    scores but are never written back into the ratings.
    """

    ratings: dict[str, float]
    k_factor: float = DEFAULT_K
    bonus: dict[str, float] | None = None

    def __post_init__(self):
        if not self.k_factor > 0:
            raise ValueError("k_factor must be positive")
        for team, r in self.ratings.items():
            if not math.isfinite(r):
                raise ValueError(f"non-finite rating for {team}")

    def __getitem__(self, team: str) -> float:
        return self.ratings[team]

    def effective(self, team: str) -> float:
        r = self.ratings[team]
        if self.bonus:
            r += self.bonus.get(team, 0.0)
        return r

    def copy(self) -> "EloState":
        return EloState(dict(self.ratings), self.k_factor, dict(self.bonus) if self.bonus else None)

    def apply(self, a: str, b: str, goals_a: int, goals_b: int, w: float | None = None) -> float:
        """Update in place; returns the points transferred to ``a``.

        ``w`` overrides the actual result value (1, 0.5, 0) for ``a``.
        """
        ratings = self.ratings
        if a not in ratings or b not in ratings:
            missing = a if a not in ratings else b
            raise KeyError(f"unknown team {missing}")
        if w is None:
            w = result_value(goals_a, goals_b)
        we = expected_score(self.effective(a), self.effective(b))
        delta = self.k_factor * goal_multiplier(abs(goals_a - goals_b)) * (w - we)
        # exact zero-sum on the pair: b loses what a gains
        total = ratings[a] + ratings[b]
        new_a = ratings[a] + delta
        ratings[a] = new_a
        ratings[b] = total - new_a
        return delta


def update(state: EloState, a: str, b: str, goals_a: int, goals_b: int) -> EloState:
    """Functional update returning a new state; ``state`` is untouched."""
    new = state.copy()
    new.apply(a, b, goals_a, goals_b)
    return new


def reset(base, teams=None, k_factor: float = DEFAULT_K, bonus=None) -> EloState:
    """Fresh state from an Elo table (mapping or :class:`~afcon_sim.data.EloTable`)."""
    ratings = base.ratings if hasattr(base, "ratings") else base
    if teams is not None:
        missing = [t for t in teams if t not in ratings]
        if missing:
            raise KeyError(f"no Elo rating for {', '.join(missing)}")
        return EloState({t: float(ratings[t]) for t in teams}, k_factor, bonus)
    return EloState({t: float(r) for t, r in ratings.items()}, k_factor, bonus)
