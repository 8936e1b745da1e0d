"""One playout of the 24-team, six-group tournament format."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

from .elo import EloState, expected_score, reset


class Stage(enum.IntEnum):
    GROUP = 0
    LAST16 = 1
    QUARTERFINAL = 2
    SEMIFINAL = 3
    FINAL = 4
    CHAMPION = 5


class GroupOutcome(enum.IntEnum):
    FIRST = 0
    SECOND = 1
    THIRD_QUALIFIED = 2
    ELIMINATED = 3


class Variant(str, enum.Enum):
    WITH_THIRDS = "with-thirds"
    WITHOUT_THIRDS = "without-thirds"


KNOCKOUT_STAGES = (Stage.QUARTERFINAL, Stage.SEMIFINAL, Stage.FINAL)


class MatchResult(NamedTuple):
    stage: str
    team_a: str
    team_b: str | None
    goals_a: int | None
    goals_b: int | None
    winner: str | None = None


@dataclass
class TeamRecord:
    team: str
    points: int = 0
    wins: int = 0
    draws: int = 0
    losses: int = 0
    goals_for: int = 0
    goals_against: int = 0
    rank: int = 0

    @property
    def goal_difference(self) -> int:
        return self.goals_for - self.goals_against

    def add(self, gf: int, ga: int) -> None:
        self.goals_for += gf
        self.goals_against += ga
        if gf > ga:
            self.wins += 1
            self.points += 3
        elif gf == ga:
            self.draws += 1
            self.points += 1
        else:
            self.losses += 1


@dataclass
class GroupStanding:
    label: str
    rows: list[TeamRecord]
    results: list[MatchResult] = field(default_factory=list)

    def team_at(self, rank: int) -> str:
        return self.rows[rank - 1].team

    def record_at(self, rank: int) -> TeamRecord:
        return self.rows[rank - 1]


@dataclass
class TournamentOutcome:
    stage: dict[str, Stage]
    group_rank: dict[str, int]
    group_outcome: dict[str, GroupOutcome]
    champion: str
    log: list[MatchResult]
    variant: Variant = Variant.WITH_THIRDS


def _lots(teams: list[str], rng) -> list[str]:
    # one uniform per team, in id order, so the draw is reproducible per stream
    keys = {t: rng.random() for t in sorted(teams)}
    return sorted(teams, key=lambda t: keys[t])


def _resolve_ties(items: list, key, rng, name=lambda x: x) -> list:
    """Sort descending by ``key``; items still tied are ordered by lots."""
    items = sorted(items, key=key, reverse=True)
    out = []
    i = 0
    while i < len(items):
        j = i + 1
        while j < len(items) and key(items[j]) == key(items[i]):
            j += 1
        block = items[i:j]
        if len(block) > 1:
            by_name = {name(x): x for x in block}
            block = [by_name[n] for n in _lots(list(by_name), rng)]
        out.extend(block)
        i = j
    return out


def rank_group(results, teams=None, rng=None) -> list[TeamRecord]:
    """Final group table, best first.

    Order: points, then head-to-head points and goal difference among the
    teams level on points, then overall goal difference, overall goals
    scored, and finally drawing of lots from ``rng``.
    """
    results = [(r[0], r[1], r[2], r[3]) if not isinstance(r, MatchResult)
               else (r.team_a, r.team_b, r.goals_a, r.goals_b) for r in results]
    if teams is None:
        teams = sorted({t for r in results for t in r[:2]})
    table = {t: TeamRecord(t) for t in teams}
    played = set()
    for a, b, ga, gb in results:
        if a not in table or b not in table:
            raise ValueError(f"result {a}-{b} involves a team outside the group")
        table[a].add(ga, gb)
        table[b].add(gb, ga)
        played.add(frozenset((a, b)))
    n = len(teams)
    if len(played) != n * (n - 1) // 2 or len(results) != len(played):
        raise ValueError("group results are not a complete single round robin")

    by_points: dict[int, list[str]] = {}
    for t, rec in table.items():
        by_points.setdefault(rec.points, []).append(t)
    h2h = {t: (0, 0) for t in teams}
    for tied in by_points.values():
        if len(tied) < 2:
            continue
        members = set(tied)
        sub = {t: TeamRecord(t) for t in tied}
        for a, b, ga, gb in results:
            if a in members and b in members:
                sub[a].add(ga, gb)
                sub[b].add(gb, ga)
        for t in tied:
            h2h[t] = (sub[t].points, sub[t].goal_difference)

    def key(t):
        rec = table[t]
        return (rec.points, h2h[t][0], h2h[t][1], rec.goal_difference, rec.goals_for)

    if rng is None:
        ordered = sorted(teams, key=key, reverse=True)
        keys = [key(t) for t in ordered]
        if len(set(keys)) != len(keys):
            raise ValueError("ranking needs drawing of lots but no rng was supplied")
    else:
        ordered = _resolve_ties(list(teams), key, rng)
    rows = [table[t] for t in ordered]
    for i, rec in enumerate(rows, start=1):
        rec.rank = i
    return rows


def rank_thirds(thirds, rng) -> list[tuple[str, TeamRecord]]:
    """Best four of the six group thirds as ``(group label, record)`` pairs.

    Order: points, goal difference, goals scored, then lots.
    """
    thirds = list(thirds)

    def key(item):
        rec = item[1]
        return (rec.points, rec.goal_difference, rec.goals_for)

    ordered = _resolve_ties(thirds, key, rng, name=lambda item: item[1].team)
    return ordered[:4]


def simulate_group(label, teams, schedule, model, elo: EloState, rng) -> tuple[GroupStanding, EloState]:
    """Play the six group matches in schedule order, updating ``elo`` after each."""
    results = []
    for a, b in schedule:
        ga, gb = model.play_match(elo, a, b, rng)
        elo.apply(a, b, ga, gb)
        results.append(MatchResult("group", a, b, ga, gb))
    rows = rank_group(results, list(teams), rng)
    return GroupStanding(label, rows, results), elo


def _resolve_descriptor(desc: str, standings: dict[str, GroupStanding]) -> str:
    return standings[desc[1]].team_at(int(desc[0]))


def build_round_of_16(standings, qualified_thirds, config) -> list[tuple[str, str, str | None]]:
    """Round-of-16 pairings ``(slot, home, away)`` in template order.

    ``qualified_thirds`` is a sequence of ``(group label, team)``, or None
    when no thirds advance; third-place sides are then None.
    """
    if qualified_thirds is None:
        thirds, assignment = None, None
    else:
        thirds = {label: team for label, team in qualified_thirds}
        key = frozenset(thirds)
        try:
            assignment = config.third_lookup[key]
        except KeyError:
            raise KeyError(f"no third-place allocation for groups {''.join(sorted(key))}") from None
    pairings = []
    for slot, (home, away) in config.r16_template.items():
        sides = []
        for desc in (home, away):
            if desc.startswith("3"):
                sides.append(None if thirds is None else thirds[assignment[slot]])
            else:
                sides.append(_resolve_descriptor(desc, standings))
        pairings.append((slot, sides[0], sides[1]))
    return pairings


def resolve_knockout_match(a, b, model, elo: EloState, rng, stage="knockout", draw_as_draw=True) -> MatchResult:
    """Play a knockout tie; a level score is settled by an Elo-weighted coin."""
    ga, gb = model.play_match(elo, a, b, rng)
    if ga > gb:
        winner = a
    elif gb > ga:
        winner = b
    else:
        p_a = expected_score(elo.effective(a), elo.effective(b))
        winner = a if rng.random() < p_a else b
    if ga == gb and not draw_as_draw:
        elo.apply(a, b, ga, gb, w=1.0 if winner == a else 0.0)
    else:
        elo.apply(a, b, ga, gb)
    return MatchResult(stage, a, b, ga, gb, winner)


def _host_bonus(config):
    if config.host and config.host_advantage:
        return {config.host: float(config.host_advantage)}
    return None


def simulate_tournament(config, model, base_elo, rng, variant=Variant.WITH_THIRDS) -> TournamentOutcome:
    variant = Variant(variant)
    elo = reset(base_elo, config.teams, config.elo_k, _host_bonus(config))
    log: list[MatchResult] = []
    stage = {t: Stage.GROUP for t in config.teams}
    group_rank: dict[str, int] = {}
    outcome: dict[str, GroupOutcome] = {}

    standings = {}
    for label, teams in config.groups.items():
        st, _ = simulate_group(label, teams, config.group_schedule[label], model, elo, rng)
        standings[label] = st
        log.extend(st.results)
        for rec in st.rows:
            group_rank[rec.team] = rec.rank
            outcome[rec.team] = (
                GroupOutcome.FIRST if rec.rank == 1
                else GroupOutcome.SECOND if rec.rank == 2
                else GroupOutcome.ELIMINATED
            )

    if variant is Variant.WITH_THIRDS:
        third_entries = [(label, st.record_at(3)) for label, st in standings.items()]
        qualified = [(label, rec.team) for label, rec in rank_thirds(third_entries, rng)]
        for _, team in qualified:
            outcome[team] = GroupOutcome.THIRD_QUALIFIED
    else:
        qualified = None

    winners: dict[str, str] = {}
    for slot, home, away in build_round_of_16(standings, qualified, config):
        if home is None or away is None:
            # a winner drawn against a third goes straight to the quarterfinal
            team = home if away is None else away
            stage[team] = Stage.LAST16
            winners[slot] = team
            log.append(MatchResult("last16", team, None, None, None, team))
            continue
        stage[home] = stage[away] = Stage.LAST16
        res = resolve_knockout_match(home, away, model, elo, rng, "last16", config.knockout_draw_as_draw)
        log.append(res)
        winners[slot] = res.winner

    for round_slots, round_stage, name in zip(
        config.knockout_rounds(), KNOCKOUT_STAGES, ("quarterfinal", "semifinal", "final")
    ):
        for slot in round_slots:
            f1, f2 = config.bracket[slot]
            a, b = winners[f1], winners[f2]
            stage[a] = stage[b] = round_stage
            res = resolve_knockout_match(a, b, model, elo, rng, name, config.knockout_draw_as_draw)
            log.append(res)
            winners[slot] = res.winner
    champion = log[-1].winner
    stage[champion] = Stage.CHAMPION
    return TournamentOutcome(stage, group_rank, outcome, champion, log, variant)
