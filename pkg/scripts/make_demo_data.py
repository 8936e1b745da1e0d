#!/usr/bin/env python3
"""Regenerate the bundled demo inputs under src/afcon_sim/data/.

The match history is SYNTHETIC. Each participant plays neutral-ground
matches against a pool of non-participating opponents; goals follow
team-specific log-linear Poisson processes whose strength tracks the
team's Elo. Senegal's scoring and Ivory Coast's conceding/scoring
processes use the worked-example coefficients. A few home
matches and pre-2010 matches are mixed in so the training filter has
something to remove.
"""

import datetime as dt
import json
import math
from itertools import combinations, permutations
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "afcon_sim" / "data"
SEED = 20190412

TEAMS = {
    # id: (name, group, Elo on 2019-04-12)
    "EGY": ("Egypt", "A", 1626), "COD": ("DR Congo", "A", 1560),
    "UGA": ("Uganda", "A", 1480), "ZWE": ("Zimbabwe", "A", 1440),
    "NGA": ("Nigeria", "B", 1717), "GIN": ("Guinea", "B", 1540),
    "MDG": ("Madagascar", "B", 1400), "BDI": ("Burundi", "B", 1330),
    "SEN": ("Senegal", "C", 1764), "DZA": ("Algeria", "C", 1590),
    "KEN": ("Kenya", "C", 1420), "TZA": ("Tanzania", "C", 1330),
    "MAR": ("Morocco", "D", 1706), "CIV": ("Ivory Coast", "D", 1612),
    "ZAF": ("South Africa", "D", 1580), "NAM": ("Namibia", "D", 1390),
    "TUN": ("Tunisia", "E", 1642), "MLI": ("Mali", "E", 1575),
    "MRT": ("Mauritania", "E", 1300), "AGO": ("Angola", "E", 1450),
    "CMR": ("Cameroon", "F", 1625), "GHA": ("Ghana", "F", 1634),
    "BEN": ("Benin", "F", 1430), "GNB": ("Guinea-Bissau", "F", 1320),
}

SCHEDULE = {
    "A": [("EGY", "ZWE"), ("COD", "UGA"), ("UGA", "ZWE"), ("EGY", "COD"), ("UGA", "EGY"), ("ZWE", "COD")],
    "B": [("NGA", "BDI"), ("GIN", "MDG"), ("NGA", "GIN"), ("MDG", "BDI"), ("MDG", "NGA"), ("BDI", "GIN")],
    "C": [("SEN", "TZA"), ("DZA", "KEN"), ("SEN", "DZA"), ("KEN", "TZA"), ("KEN", "SEN"), ("TZA", "DZA")],
    "D": [("MAR", "NAM"), ("CIV", "ZAF"), ("MAR", "CIV"), ("ZAF", "NAM"), ("NAM", "CIV"), ("ZAF", "MAR")],
    "E": [("TUN", "AGO"), ("MLI", "MRT"), ("TUN", "MLI"), ("MRT", "AGO"), ("MRT", "TUN"), ("AGO", "MLI")],
    "F": [("CMR", "GNB"), ("GHA", "BEN"), ("CMR", "GHA"), ("BEN", "GNB"), ("BEN", "CMR"), ("GNB", "GHA")],
}

R16 = {
    "M37": ["1D", "3BEF"], "M38": ["2A", "2C"], "M39": ["1A", "3CDE"], "M40": ["2B", "2F"],
    "M41": ["1B", "3ACD"], "M42": ["1C", "3ABF"], "M43": ["1E", "2D"], "M44": ["1F", "2E"],
}
BRACKET = {
    "QF1": ["M37", "M38"], "QF2": ["M39", "M40"], "QF3": ["M42", "M43"], "QF4": ["M41", "M44"],
    "SF1": ["QF1", "QF4"], "SF2": ["QF2", "QF3"],
    "F": ["SF1", "SF2"],
}
# allocation used at the 2019 tournament (thirds from A, B, D, F)
KNOWN_ALLOCATIONS = {"ABDF": {"M37": "F", "M39": "D", "M41": "A", "M42": "B"}}

SCORE_SLOPE = -0.00145
CONCEDE_SLOPE = 0.0024
NESTED_GOALS = 0.137
WORKED = {
    "SEN": {"attack": (2.73, -0.00145)},
    "CIV": {"concede": (-4.0158, 0.00243), "nested": (1.431, -0.000728, 0.137)},
}


def third_lookup():
    third_slots = {slot: desc[1][1:] for slot, desc in R16.items() if desc[1].startswith("3")}
    rows = []
    for subset in combinations("ABCDEF", 4):
        key = "".join(subset)
        if key in KNOWN_ALLOCATIONS:
            assignment = KNOWN_ALLOCATIONS[key]
        else:
            assignment = next(
                dict(zip(third_slots, perm))
                for perm in permutations(subset)
                if all(g in third_slots[s] for s, g in zip(third_slots, perm))
            )
        rows.append({"thirds": list(subset), "assignment": dict(sorted(assignment.items()))})
    return rows


def team_processes(team, elo):
    """(attack, concede, goals-given-conceded slope) for the generating process."""
    a0 = 0.555 + 0.003 * (elo - 1764) - SCORE_SLOPE * 1500
    b0 = -0.37 - 0.003 * (elo - 1612) - CONCEDE_SLOPE * 1500
    attack = WORKED.get(team, {}).get("attack", (a0, SCORE_SLOPE))
    concede = WORKED.get(team, {}).get("concede", (b0, CONCEDE_SLOPE))
    return attack, concede


def main():
    rng = np.random.default_rng(SEED)
    OUT.mkdir(parents=True, exist_ok=True)

    groups = {}
    for tid, (_, grp, _) in TEAMS.items():
        groups.setdefault(grp, []).append(tid)
    config = {
        "groups": groups,
        "group_schedule": {g: [list(p) for p in pairs] for g, pairs in SCHEDULE.items()},
        "r16_template": R16,
        "third_lookup": third_lookup(),
        "bracket": BRACKET,
        "elo_k": 50.0,
        "simulations": 100000,
        "seed": 2019,
        "host": "EGY",
        "host_advantage": 0.0,
        "knockout_draw_as_draw": True,
    }
    (OUT / "afcon2019.json").write_text(json.dumps(config, indent=2) + "\n")

    with (OUT / "elo_2019.csv").open("w") as fh:
        fh.write("team,elo\n")
        for tid, (_, _, elo) in TEAMS.items():
            fh.write(f"{tid},{elo}\n")
    with (OUT / "teams.txt").open("w") as fh:
        fh.write("# AFCON 2019 participants (id  # name)\n")
        for tid, (name, _, _) in TEAMS.items():
            fh.write(f"{tid}  # {name}\n")

    opponents = {f"X{i:02d}": float(e) for i, e in enumerate(np.linspace(1200, 1950, 40), start=1)}
    opp_ids = list(opponents)
    start, end = dt.date(2010, 1, 1), dt.date(2019, 4, 12)
    span = (end - start).days
    rows = []
    for tid, (_, _, elo) in TEAMS.items():
        (a0, a1), (b0, b1) = team_processes(tid, elo)
        n = 26 + int((elo - 1300) / 20)
        for _ in range(n):
            opp = opp_ids[rng.integers(len(opp_ids))]
            e_opp = opponents[opp] + rng.normal(0, 30)
            e_own = elo + rng.normal(0, 30)
            mu = math.exp(a0 + a1 * e_opp)
            nu = math.exp(b0 + b1 * e_opp)
            against = int(rng.poisson(nu))
            # conditional on goals conceded, keeping the marginal mean at mu
            rate = mu * math.exp(NESTED_GOALS * against - nu * (math.exp(NESTED_GOALS) - 1.0))
            scored = int(rng.poisson(rate))
            date = start + dt.timedelta(days=int(rng.integers(span + 1)))
            rows.append((date, tid, opp, scored, against, e_own, e_opp, True))
        # noise the training filter must drop
        for _ in range(3):
            opp = opp_ids[rng.integers(len(opp_ids))]
            date = start + dt.timedelta(days=int(rng.integers(span + 1)))
            rows.append((date, tid, opp, int(rng.integers(0, 5)), int(rng.integers(0, 3)),
                         elo + 60.0, opponents[opp], False))
        old = dt.date(2009, 1, 1) + dt.timedelta(days=int(rng.integers(365)))
        rows.append((old, tid, opp_ids[rng.integers(len(opp_ids))], 1, 1, float(elo), 1500.0, True))

    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    with (OUT / "demo_matches.csv").open("w") as fh:
        fh.write("date,team_a,team_b,goals_a,goals_b,elo_a,elo_b,neutral\n")
        for date, a, b, ga, gb, ea, eb, neutral in rows:
            fh.write(f"{date.isoformat()},{a},{b},{ga},{gb},{ea:.1f},{eb:.1f},{'true' if neutral else 'false'}\n")
    print(f"wrote {len(rows)} matches to {OUT}")


if __name__ == "__main__":
    main()
