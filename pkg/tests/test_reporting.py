import csv
import datetime as dt
import io
import json
from fractions import Fraction

import numpy as np
import pytest

from afcon_sim.data import MatchRecord, team_history
from afcon_sim.glm import GlmFit
from afcon_sim.match_model import TeamModel, fit_team_models
from afcon_sim.monte_carlo import SimulationSummary, run_simulations, stage_probabilities
from afcon_sim.reporting import (
    GOF_COLUMNS,
    Table,
    diff_table,
    format_percent,
    gof_report,
    gof_rows,
    regression_curve,
    render,
    render_tables,
    score_matrix_table,
    stage_table,
    write_table,
)
from afcon_sim.tournament import Variant


@pytest.mark.parametrize("p, text", [
    (0.154, "15.40"), (Fraction(1540, 10000), "15.40"), (0.0, "0.00"), (1.0, "100.00"),
    (Fraction(1, 8000), "0.01"),  # 0.0125 rounds half-up
    (Fraction(1, 3), "33.33"), (Fraction(2, 3), "66.67"), (0.000049, "0.00"),
])
def test_format_percent(p, text):
    assert format_percent(p) == text


def test_format_percent_reparse_bound():
    rng = np.random.default_rng(0)
    for p in rng.random(2000):
        assert abs(float(format_percent(float(p))) / 100 - p) <= 0.00005 + 1e-15


@pytest.fixture(scope="module")
def summary(demo_config, demo_model, demo_elo):
    return run_simulations(demo_config, demo_model, demo_elo, 300, 11)


def test_stage_table_reparses(summary):
    table = stage_table(summary)
    probs = stage_probabilities(summary)
    champ = [probs[r[0]]["champion"] for r in table.rows]
    assert champ == sorted(champ, reverse=True)
    for row in csv.DictReader(io.StringIO(render(table, "csv"))):
        for col, val in row.items():
            if col != "team":
                assert abs(float(val) / 100 - probs[row["team"]][col]) <= 0.005


def test_render_tables_deterministic(summary, tmp_path):
    for fmt in ("csv", "json", "text"):
        a = render_tables(summary, tmp_path / "a", fmt)
        b = render_tables(summary, tmp_path / "b", fmt)
        assert [p.name for p in a] == [p.name for p in b]
        assert len(a) == 7
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes()


def test_json_and_text_render(summary):
    table = stage_table(summary, names={"SEN": "Senegal"})
    recs = json.loads(render(table, "json"))
    assert len(recs) == 24 and "Senegal" in {r["team"] for r in recs}
    lines = render(table, "text").splitlines()
    assert set(lines[1]) <= {"-", " "}
    assert len({len(line) for line in lines[2:]}) <= 2  # right-aligned numeric columns


def test_empty_table_header_only(tmp_path):
    empty = SimulationSummary((), {}, np.zeros((0, 5), np.int64), np.zeros((0, 4), np.int64), 1,
                              Variant.WITH_THIRDS, 0)
    path = write_table(stage_table(empty), tmp_path / "stages.csv")
    assert path.read_text() == "team,champion,final,semifinal,quarterfinal,last16\n"


def test_unknown_format():
    with pytest.raises(ValueError):
        render(Table(("a",), ()), "xml")


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        write_table(Table(("a",), ()), blocker / "x.csv")


def test_diff_table(demo_config, demo_model, demo_elo, summary):
    other = run_simulations(demo_config, demo_model, demo_elo, 300, 11, Variant.WITHOUT_THIRDS)
    zero = diff_table(summary, summary)
    assert all(v == "0.00" for r in zero.rows for v in r[1:])
    ab = {r[0]: r[1:] for r in diff_table(other, summary).rows}
    ba = {r[0]: r[1:] for r in diff_table(summary, other).rows}
    for t in ab:
        for x, y in zip(ab[t], ba[t]):
            assert float(x) == -float(y)


def test_score_matrix_table():
    mat = np.full((3, 3), 1 / 9)
    t = score_matrix_table(mat)
    assert t.columns == ("goals", "0", "1", ">1")
    assert t.rows[2][0] == ">1" and t.rows[0][1] == "0.111111"


def test_regression_curve_worked_example():
    model = TeamModel("SEN", GlmFit.from_coefficients((2.73, -0.00145)), GlmFit.from_coefficients((0.0, 0.0)),
                      GlmFit.from_coefficients((0.0, 0.0, 0.0)), 0)
    c = regression_curve(model, [], "attack", [1612.0])
    assert len(c.curve) == 1 and c.curve[0][1] == pytest.approx(1.48, abs=0.005)
    with pytest.raises(ValueError):
        regression_curve(model, [], "attack", [1700.0, 1600.0])
    with pytest.raises(ValueError):
        regression_curve(model, [], "nested", [1600.0])


def test_regression_curve_echoes_history(demo_model, demo_records):
    hist = team_history(demo_records, "SEN")
    grid = np.linspace(1200, 2000, 9)
    c = regression_curve(demo_model.team_models_["SEN"], hist, "concede", grid)
    assert len(c.points) == len(hist)
    fit = demo_model.team_models_["SEN"].concede
    for e, mu in c.curve:
        assert mu == pytest.approx(float(np.exp(fit.coefficients[0] + fit.coefficients[1] * e)), rel=1e-12)
    assert len(c.table().rows) == len(hist) + 9


def test_gof_report_every_team_once(demo_model, demo_records, demo_teams):
    histories = {t: team_history(demo_records, t) for t in demo_teams}
    table, averages = gof_report(demo_model.team_models_, histories)
    assert table.columns == GOF_COLUMNS
    assert sorted(r[0] for r in table.rows) == sorted(demo_teams)
    assert all(0 < v < 1 for v in averages.values())


def test_gof_perfect_fit():
    # A always scores twice, so its attack and nested fits reproduce every observation
    recs = [MatchRecord(dt.date(2015, 1, 1) + dt.timedelta(days=i), "A", "B", 2, i % 3,
                        1500.0 + 10 * (i % 5), 1400.0 + 10 * (i % 4), True) for i in range(15)]
    models = fit_team_models(recs, ["A", "B"])
    rows = {r["team"]: r for r in gof_rows(models, {t: team_history(recs, t) for t in "AB"})}
    assert rows["A"]["attack_pearson_p"] == pytest.approx(1.0)
    assert rows["A"]["nested_pearson_p"] == pytest.approx(1.0)
    # B's nested covariate (A's goals) is constant, so that part falls back and is left blank
    assert models["B"].fallback_parts == ("nested",) and rows["B"]["nested_pearson_p"] is None


@pytest.mark.slow
def test_gof_average_p_value_well_specified():
    rng = np.random.default_rng(99)
    avgs = []
    for rep in range(50):
        recs = []
        day = dt.date(2012, 1, 1)
        elo = {"A": 1600.0, "B": 1500.0, "C": 1400.0}
        for _ in range(40):
            a, b = rng.choice(list(elo), 2, replace=False)
            ea, eb = elo[a] + rng.normal(0, 150), elo[b] + rng.normal(0, 150)
            ga = rng.poisson(np.exp(4 - 0.002 * eb))
            gb = rng.poisson(np.exp(4 - 0.002 * ea))
            recs.append(MatchRecord(day, a, b, int(ga), int(gb), float(ea), float(eb), True))
            day += dt.timedelta(days=1)
        models = fit_team_models(recs, list(elo))
        _, averages = gof_report(models, {t: team_history(recs, t) for t in elo})
        avgs.append(averages["attack"])
    assert 0.3 < float(np.mean(avgs)) < 0.7
