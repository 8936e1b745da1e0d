"""Loading and validation of match history, Elo tables and tournament configs."""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import NamedTuple

MATCH_COLUMNS = ("date", "team_a", "team_b", "goals_a", "goals_b", "elo_a", "elo_b", "neutral")
GROUP_LABELS = ("A", "B", "C", "D", "E", "F")

DATA_DIR = Path(__file__).parent / "data"


class DataError(ValueError):
    """Raised when an input file violates its format or invariants."""


@dataclass(frozen=True)
class MatchRecord:
    date: dt.date
    team_a: str
    team_b: str
    goals_a: int
    goals_b: int
    elo_a: float
    elo_b: float
    neutral: bool

    def __post_init__(self):
        if not self.team_a or not self.team_b:
            raise DataError("team id must be non-empty")
        if self.team_a == self.team_b:
            raise DataError(f"team_a == team_b ({self.team_a})")
        if self.goals_a < 0 or self.goals_b < 0:
            raise DataError("goals must be >= 0")
        for elo in (self.elo_a, self.elo_b):
            if not (0.0 < elo < 3000.0):
                raise DataError(f"Elo value {elo} outside (0, 3000)")


class HistoryEntry(NamedTuple):
    opponent_elo: float
    goals_for: int
    goals_against: int
    opponent_goals: int


@dataclass(frozen=True)
class EloTable:
    ratings: dict[str, float]
    as_of: dt.date | None = None

    def __getitem__(self, team: str) -> float:
        return self.ratings[team]

    def __contains__(self, team: str) -> bool:
        return team in self.ratings


@dataclass(frozen=True)
class TournamentConfig:
    """Static description of the tournament format.

    ``r16_template`` maps slot id -> (descriptor, descriptor). A descriptor is
    ``"1X"`` (winner of group X), ``"2X"`` (runner-up of X) or ``"3..."`` (a
    qualified third; trailing letters, if any, list the groups allowed in
    that slot). ``bracket`` maps later-round slot ids to their two feeder
    slots.
    """

    groups: dict[str, tuple[str, ...]]
    group_schedule: dict[str, tuple[tuple[str, str], ...]]
    r16_template: dict[str, tuple[str, str]]
    third_lookup: dict[frozenset, dict[str, str]]
    bracket: dict[str, tuple[str, str]]
    elo_k: float = 50.0
    simulations: int = 100_000
    seed: int = 2019
    host: str | None = None
    host_advantage: float = 0.0
    knockout_draw_as_draw: bool = True
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def teams(self) -> list[str]:
        return [t for g in self.groups.values() for t in g]

    def group_of(self) -> dict[str, str]:
        return {t: label for label, teams in self.groups.items() for t in teams}

    def knockout_rounds(self) -> list[list[str]]:
        """Later-round slot ids grouped by depth (QF, SF, F)."""
        return self._rounds

    @cached_property
    def _rounds(self) -> list[list[str]]:
        rounds = []
        known = set(self.r16_template)
        remaining = dict(self.bracket)
        while remaining:
            layer = sorted(s for s, feeders in remaining.items() if set(feeders) <= known)
            if not layer:
                raise DataError("bracket contains a cycle or unknown feeder slot")
            rounds.append(layer)
            known.update(layer)
            for s in layer:
                del remaining[s]
        return rounds


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise DataError(f"invalid boolean {text!r}")


def _parse_match_row(row: dict[str, str]) -> MatchRecord:
    try:
        return MatchRecord(
            date=dt.date.fromisoformat(row["date"].strip()),
            team_a=row["team_a"].strip(),
            team_b=row["team_b"].strip(),
            goals_a=int(row["goals_a"]),
            goals_b=int(row["goals_b"]),
            elo_a=float(row["elo_a"]),
            elo_b=float(row["elo_b"]),
            neutral=_parse_bool(row["neutral"]),
        )
    except (TypeError, KeyError) as exc:
        raise DataError(f"missing field {exc}") from exc
    except DataError:
        raise
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def load_matches(path) -> list[MatchRecord]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != MATCH_COLUMNS:
            raise DataError(f"{path}: header must be {','.join(MATCH_COLUMNS)}")
        records = []
        # line 1 is the header
        for lineno, row in enumerate(reader, start=2):
            try:
                records.append(_parse_match_row(row))
            except DataError as exc:
                raise DataError(f"{path}: row {lineno}: {exc}") from None
    return records


def save_matches(records, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MATCH_COLUMNS)
        for r in records:
            writer.writerow([
                r.date.isoformat(), r.team_a, r.team_b, r.goals_a, r.goals_b,
                repr(float(r.elo_a)), repr(float(r.elo_b)), "true" if r.neutral else "false",
            ])


def load_elo(path, as_of: dt.date | None = None) -> EloTable:
    path = Path(path)
    ratings: dict[str, float] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["team", "elo"]:
            raise DataError(f"{path}: header must be team,elo")
        for lineno, row in enumerate(reader, start=2):
            team = (row["team"] or "").strip()
            try:
                elo = float(row["elo"])
            except (TypeError, ValueError):
                raise DataError(f"{path}: row {lineno}: invalid elo {row['elo']!r}") from None
            if not team:
                raise DataError(f"{path}: row {lineno}: empty team id")
            if team in ratings:
                raise DataError(f"{path}: row {lineno}: duplicate team {team}")
            if not math.isfinite(elo):
                raise DataError(f"{path}: row {lineno}: non-finite elo")
            ratings[team] = elo
    return EloTable(ratings=ratings, as_of=as_of)


def load_teams(path) -> list[str]:
    """Participant list: one team id per line, ``#`` comments allowed."""
    teams = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            teams.append(line)
    return teams


def training_window(records, start: dt.date, end: dt.date, neutral_only: bool = True) -> list[MatchRecord]:
    """Records dated within ``[start, end]`` (both inclusive)."""
    if start > end:
        raise ValueError("start must not be after end")
    return [r for r in records if start <= r.date <= end and (r.neutral or not neutral_only)]


def team_history(records, team: str) -> list[HistoryEntry]:
    out = []
    for r in records:
        if r.team_a == team:
            out.append(HistoryEntry(r.elo_b, r.goals_a, r.goals_b, r.goals_b))
        elif r.team_b == team:
            out.append(HistoryEntry(r.elo_a, r.goals_b, r.goals_a, r.goals_a))
    return out


def _descriptor_group(desc: str) -> str:
    return desc[1:]


def validate_config(cfg: TournamentConfig) -> None:
    labels = tuple(cfg.groups)
    if labels != GROUP_LABELS:
        raise DataError(f"groups must be labelled {', '.join(GROUP_LABELS)} in order")
    seen = set()
    for label, teams in cfg.groups.items():
        if len(teams) != 4:
            raise DataError(f"group {label} must have 4 teams")
        seen.update(teams)
    if len(seen) != 24:
        raise DataError("groups must partition exactly 24 distinct teams")

    for label, teams in cfg.groups.items():
        pairs = cfg.group_schedule.get(label)
        if pairs is None or len(pairs) != 6:
            raise DataError(f"group {label} needs 6 scheduled pairings")
        expected = {frozenset(p) for p in combinations(teams, 2)}
        if {frozenset(p) for p in pairs} != expected:
            raise DataError(f"group {label} schedule is not a full round robin")

    if len(cfg.r16_template) != 8:
        raise DataError("r16_template needs 8 slots")
    third_slots = []
    placed = []
    for slot, (home, away) in cfg.r16_template.items():
        for desc in (home, away):
            if desc.startswith("3"):
                third_slots.append(slot)
            elif len(desc) == 2 and desc[0] in "12" and desc[1] in labels:
                placed.append(desc)
            else:
                raise DataError(f"slot {slot}: bad descriptor {desc!r}")
    if len(set(placed)) != 12 or len(placed) != 12 or len(third_slots) != 4 or len(set(third_slots)) != 4:
        raise DataError("r16_template must place every winner and runner-up once plus 4 thirds")

    subsets = {frozenset(c) for c in combinations(labels, 4)}
    if set(cfg.third_lookup) != subsets:
        raise DataError("third_lookup must cover all 15 four-group subsets")
    for key, assignment in cfg.third_lookup.items():
        if set(assignment) != set(third_slots) or set(assignment.values()) != key:
            raise DataError(f"third_lookup row {''.join(sorted(key))} is not a bijection onto third slots")
        for slot, grp in assignment.items():
            home, away = cfg.r16_template[slot]
            third_desc = home if home.startswith("3") else away
            other = away if home.startswith("3") else home
            allowed = _descriptor_group(third_desc)
            if allowed and grp not in allowed:
                raise DataError(f"third_lookup row {''.join(sorted(key))}: group {grp} not allowed in {slot}")
            if other[1] == grp:
                raise DataError(f"third_lookup row {''.join(sorted(key))}: third of {grp} meets its own group")

    feeders = [f for pair in cfg.bracket.values() for f in pair]
    if len(feeders) != len(set(feeders)):
        raise DataError("every bracket slot must feed exactly one later slot")
    rounds = cfg.knockout_rounds()
    if [len(r) for r in rounds] != [4, 2, 1]:
        raise DataError("bracket must have 4 quarterfinals, 2 semifinals and a final")
    if set(feeders) != set(cfg.r16_template) | set(rounds[0]) | set(rounds[1]):
        raise DataError("bracket leaves some slots unreachable")
    if cfg.elo_k <= 0 or cfg.simulations < 1 or cfg.seed < 0:
        raise DataError("elo_k and simulations must be positive, seed unsigned")


def config_from_dict(doc: dict) -> TournamentConfig:
    try:
        third_lookup = {}
        for row in doc["third_lookup"]:
            key = frozenset(row["thirds"])
            if key in third_lookup:
                raise DataError(f"duplicate third_lookup row {sorted(key)}")
            third_lookup[key] = dict(row["assignment"])
        cfg = TournamentConfig(
            groups={k: tuple(v) for k, v in doc["groups"].items()},
            group_schedule={k: tuple(tuple(p) for p in v) for k, v in doc["group_schedule"].items()},
            r16_template={k: tuple(v) for k, v in doc["r16_template"].items()},
            third_lookup=third_lookup,
            bracket={k: tuple(v) for k, v in doc["bracket"].items()},
            elo_k=float(doc["elo_k"]),
            simulations=int(doc["simulations"]),
            seed=int(doc["seed"]),
            host=doc.get("host"),
            host_advantage=float(doc.get("host_advantage", 0.0)),
            knockout_draw_as_draw=bool(doc.get("knockout_draw_as_draw", True)),
            raw=doc,
        )
    except KeyError as exc:
        raise DataError(f"tournament config missing key {exc}") from None
    except (TypeError, ValueError, AttributeError) as exc:
        raise DataError(f"malformed tournament config: {exc}") from None
    validate_config(cfg)
    return cfg


def load_config(path) -> TournamentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    return config_from_dict(doc)


def demo_paths() -> dict[str, Path]:
    """Bundled synthetic demo inputs."""
    return {
        "matches": DATA_DIR / "demo_matches.csv",
        "elo": DATA_DIR / "elo_2019.csv",
        "config": DATA_DIR / "afcon2019.json",
        "teams": DATA_DIR / "teams.txt",
    }
