"""Nested Poisson match model.

For a match between a stronger team A (higher Elo) and a weaker team B:

* A's goals are Poisson with rate ``(mu_A(E_B) + nu_B(E_A)) / 2`` where
  ``log mu_A(E) = a0 + a1 E`` is A's scoring regression and
  ``log nu_B(E) = b0 + b1 E`` is B's conceding regression;
* B's goals are then Poisson with rate ``exp(g0 + g1 E_A + g2 G_A)``, B's
  scoring regression conditioned on the goals it conceded.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import team_history
from .glm import (
    DegenerateResponseError,
    GlmFit,
    SingularDesignError,
    fit_poisson,
    predict_mean,
)

MIN_MATCHES = 8
DISPLAY_MAX_GOALS = 10
AGGREGATE_MAX_GOALS = 25
RATE_WARNING = 30.0

ATTACK, CONCEDE, NESTED = "attack", "concede", "nested"
KINDS = (ATTACK, CONCEDE, NESTED)


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class TeamModel:
    team: str
    attack: GlmFit
    concede: GlmFit
    nested: GlmFit
    n_matches: int
    fallback: bool = False
    fallback_parts: tuple = ()

    def __post_init__(self):
        for kind, p in zip(KINDS, (2, 2, 3)):
            if getattr(self, kind).p_params != p:
                raise ValueError(f"{kind} fit must have {p} parameters")

    def fit_for(self, kind: str) -> GlmFit:
        return getattr(self, kind)


@dataclass(frozen=True)
class Score:
    goals_strong: int
    goals_weak: int


@dataclass(frozen=True)
class MatchForecast:
    strong: str
    weak: str
    lambda_strong: float
    weak_coef: tuple
    elo_strong: float
    swapped: bool = False

    def weak_rate(self, goals_strong) -> float:
        g0, g1, g2 = self.weak_coef
        return math.exp(g0 + g1 * self.elo_strong + g2 * goals_strong)

    def in_input_order(self, score: Score) -> tuple[int, int]:
        """Goals ordered as the teams were passed to :func:`forecast`."""
        if self.swapped:
            return score.goals_weak, score.goals_strong
        return score.goals_strong, score.goals_weak


def design(history, kind: str):
    """Design matrix (with intercept) and response for one regression."""
    if kind == ATTACK:
        X = [[1.0, h.opponent_elo] for h in history]
        y = [h.goals_for for h in history]
    elif kind == CONCEDE:
        X = [[1.0, h.opponent_elo] for h in history]
        y = [h.goals_against for h in history]
    elif kind == NESTED:
        X = [[1.0, h.opponent_elo, h.opponent_goals] for h in history]
        y = [h.goals_for for h in history]
    else:
        raise ValueError(f"unknown regression kind {kind!r}")
    p = 3 if kind == NESTED else 2
    return np.asarray(X, dtype=float).reshape(-1, p), np.asarray(y, dtype=float)


def _try_fit(history, kind):
    X, y = design(history, kind)
    try:
        fit = fit_poisson(X, y)
    except (SingularDesignError, DegenerateResponseError, ValueError):
        return None
    return fit if fit.converged else None


def fit_team_models(records, teams, min_matches: int = MIN_MATCHES) -> dict[str, TeamModel]:
    """Per-team attack, concede and nested regressions.

    Teams with fewer than ``min_matches`` matches, and any single regression
    that fails to fit, fall back to a pooled regression over all listed
    teams' matches.
    """
    histories = {t: team_history(records, t) for t in teams}
    pooled_history = [h for t in teams for h in histories[t]]
    pooled = {kind: _try_fit(pooled_history, kind) for kind in KINDS} if pooled_history else {}

    models = {}
    for team in teams:
        hist = histories[team]
        fits, used_pool = {}, []
        for kind in KINDS:
            fit = _try_fit(hist, kind) if len(hist) >= min_matches else None
            if fit is None:
                fit = pooled.get(kind)
                if fit is None:
                    raise InsufficientDataError(
                        f"{team}: cannot fit {kind} regression and no pooled fallback is available"
                    )
                used_pool.append(kind)
            fits[kind] = fit
        models[team] = TeamModel(
            team, fits[ATTACK], fits[CONCEDE], fits[NESTED], len(hist),
            fallback=bool(used_pool), fallback_parts=tuple(used_pool),
        )
    return models


def _rating(elo, team):
    if hasattr(elo, "effective"):
        return elo.effective(team)
    return float(elo[team])


def orient(a: str, b: str, elo_a: float, elo_b: float) -> bool:
    """True when ``b`` is the strong side; exact ties go to the smaller id."""
    if elo_a != elo_b:
        return elo_b > elo_a
    return b < a


def forecast(models, elo, a: str, b: str) -> MatchForecast:
    if a == b:
        raise ValueError("a team cannot play itself")
    for t in (a, b):
        if t not in models:
            raise KeyError(f"no fitted model for {t}")
    ea, eb = _rating(elo, a), _rating(elo, b)
    swapped = orient(a, b, ea, eb)
    if swapped:
        a, b, ea, eb = b, a, eb, ea
    mu = predict_mean(models[a].attack, (1.0, eb))
    nu = predict_mean(models[b].concede, (1.0, ea))
    lam = 0.5 * (mu + nu)
    if lam > RATE_WARNING:
        warnings.warn(f"implausible scoring rate {lam:.1f} for {a} vs {b}", RuntimeWarning, stacklevel=2)
    gamma = tuple(float(c) for c in models[b].nested.coefficients)
    return MatchForecast(a, b, lam, gamma, ea, swapped)


def _poisson_draw(rate, u):
    k = 0
    p = math.exp(-rate)
    cdf = p
    while u > cdf:
        k += 1
        p *= rate / k
        cdf += p
        if p == 0.0:
            break
    return k


def simulate_match(fc: MatchForecast, rng) -> Score:
    """Strong side's goals first, then the weak side's conditional on them."""
    lam = fc.lambda_strong
    gs = _poisson_draw(lam, rng.random()) if lam < 30 else int(rng.poisson(lam))
    rate = fc.weak_rate(gs)
    if rate > RATE_WARNING:
        warnings.warn(f"implausible scoring rate {rate:.1f} for {fc.weak}", RuntimeWarning, stacklevel=2)
    gw = _poisson_draw(rate, rng.random()) if rate < 30 else int(rng.poisson(rate))
    return Score(gs, gw)


def _strong_marginal(lam, max_goals):
    pmf = stats.poisson.pmf(np.arange(max_goals + 1), lam)
    # goal counts past max_goals that still carry non-negligible mass
    hi = max(max_goals + 1, int(lam + 40 * math.sqrt(lam) + 40))
    tail_i = np.arange(max_goals + 1, hi + 1)
    return pmf, tail_i, stats.poisson.pmf(tail_i, lam)


def score_matrix(fc: MatchForecast, max_goals: int = DISPLAY_MAX_GOALS) -> np.ndarray:
    """Joint score probabilities, strong side on rows.

    Shape ``(max_goals + 2, max_goals + 2)``; the last row and column
    collect the mass of more than ``max_goals`` goals.
    """
    if max_goals < 0:
        raise ValueError("max_goals must be non-negative")
    m = max_goals
    j = np.arange(m + 1)
    pmf_s, tail_i, tail_p = _strong_marginal(fc.lambda_strong, m)
    out = np.zeros((m + 2, m + 2))
    for i in range(m + 1):
        r = fc.weak_rate(i)
        out[i, : m + 1] = pmf_s[i] * stats.poisson.pmf(j, r)
        out[i, m + 1] = pmf_s[i] * stats.poisson.sf(m, r)
    for i, pi in zip(tail_i, tail_p):
        if pi == 0.0:
            continue
        out[m + 1, : m + 1] += pi * stats.poisson.pmf(j, fc.weak_rate(i))
    out[m + 1, m + 1] = 0.0
    out[m + 1, m + 1] = max(1.0 - out.sum(), 0.0)
    return out


def oriented_matrix(fc: MatchForecast, matrix: np.ndarray) -> np.ndarray:
    """Matrix with rows for the first team passed to :func:`forecast`."""
    return matrix.T if fc.swapped else matrix


def win_draw_loss(fc: MatchForecast, max_goals: int = AGGREGATE_MAX_GOALS) -> tuple[float, float, float]:
    """(strong win, draw, weak win) probabilities."""
    mat = score_matrix(fc, max_goals)
    m = max_goals
    core = mat[: m + 1, : m + 1]
    draw = float(np.trace(core)) + float(mat[m + 1, m + 1])
    strong = float(np.tril(core, -1).sum()) + float(mat[m + 1, : m + 1].sum())
    weak = float(np.triu(core, 1).sum()) + float(mat[: m + 1, m + 1].sum())
    total = strong + draw + weak
    return strong / total, draw / total, weak / total


def most_probable_score(matrix: np.ndarray) -> tuple[int, int]:
    m = matrix.shape[0] - 2
    core = matrix[: m + 1, : m + 1]
    i, j = np.unravel_index(int(np.argmax(core)), core.shape)
    return int(i), int(j)


class NestedPoissonModel(BaseEstimator):
    """Estimator wrapper around :func:`fit_team_models`.

    ``fit`` takes match records (and optionally the participant list);
    afterwards ``team_models_`` maps team id to :class:`TeamModel`.
    """

    def __init__(self, min_matches=MIN_MATCHES):
        self.min_matches = min_matches

    def fit(self, records, teams=None):
        records = list(records)
        if teams is None:
            teams = sorted({r.team_a for r in records} | {r.team_b for r in records})
        teams = list(teams)
        if not any(team_history(records, t) for t in teams):
            raise InsufficientDataError("no participating team has any training matches")
        self.team_models_ = fit_team_models(records, teams, self.min_matches)
        self.teams_ = teams
        self._prepare()
        return self

    @classmethod
    def from_team_models(cls, team_models, min_matches=MIN_MATCHES) -> "NestedPoissonModel":
        est = cls(min_matches=min_matches)
        est.team_models_ = dict(team_models)
        est.teams_ = list(team_models)
        est._prepare()
        return est

    @classmethod
    def from_coefficients(cls, coefficients) -> "NestedPoissonModel":
        """Build from ``{team: {"attack": (a0, a1), "concede": (b0, b1), "nested": (g0, g1, g2)}}``."""
        models = {
            team: TeamModel(
                team,
                GlmFit.from_coefficients(c["attack"]),
                GlmFit.from_coefficients(c["concede"]),
                GlmFit.from_coefficients(c["nested"]),
                n_matches=0,
            )
            for team, c in coefficients.items()
        }
        return cls.from_team_models(models)

    def _prepare(self):
        # plain-float coefficient tuples for the simulation hot path
        self._coef = {
            t: (
                tuple(float(c) for c in m.attack.coefficients),
                tuple(float(c) for c in m.concede.coefficients),
                tuple(float(c) for c in m.nested.coefficients),
            )
            for t, m in self.team_models_.items()
        }

    def __setstate__(self, state):
        super().__setstate__(state)
        if "team_models_" in state:
            self._prepare()

    def forecast(self, elo, a, b) -> MatchForecast:
        check_is_fitted(self, "team_models_")
        return forecast(self.team_models_, elo, a, b)

    def score_matrix(self, elo, a, b, max_goals=DISPLAY_MAX_GOALS) -> np.ndarray:
        """Score matrix with rows for ``a`` and columns for ``b``."""
        fc = self.forecast(elo, a, b)
        return oriented_matrix(fc, score_matrix(fc, max_goals))

    def predict_proba(self, elo, pairs) -> np.ndarray:
        """Rows of (P(first wins), P(draw), P(second wins)) for each pair."""
        out = []
        for a, b in pairs:
            fc = self.forecast(elo, a, b)
            s, d, w = win_draw_loss(fc)
            out.append((w, d, s) if fc.swapped else (s, d, w))
        return np.asarray(out)

    def play_match(self, elo, a, b, rng) -> tuple[int, int]:
        """Simulate one match; goals returned in ``(a, b)`` order.

        Equivalent to ``simulate_match(forecast(...))`` with the same
        stream consumption, minus the per-call object overhead.
        """
        ea, eb = _rating(elo, a), _rating(elo, b)
        swapped = orient(a, b, ea, eb)
        if swapped:
            a, b, ea, eb = b, a, eb, ea
        (a0, a1), _, _ = self._coef[a]
        _, (b0, b1), (g0, g1, g2) = self._coef[b]
        lam = 0.5 * (math.exp(a0 + a1 * eb) + math.exp(b0 + b1 * ea))
        gs = _poisson_draw(lam, rng.random()) if lam < 30 else int(rng.poisson(lam))
        rate = math.exp(g0 + g1 * ea + g2 * gs)
        gw = _poisson_draw(rate, rng.random()) if rate < 30 else int(rng.poisson(rate))
        return (gw, gs) if swapped else (gs, gw)

    def coefficient_table(self) -> dict:
        check_is_fitted(self, "team_models_")
        return {
            t: {k: [float(c) for c in m.fit_for(k).coefficients] for k in KINDS}
            for t, m in self.team_models_.items()
        }
