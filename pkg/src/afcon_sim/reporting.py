"""Tables and plot-ready data series written to CSV, JSON or aligned text."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np

from .glm import deviance_test, fitted_means, pearson_gof
from .match_model import ATTACK, CONCEDE, KINDS, design
from .monte_carlo import RANK_COLUMNS, STAGE_COLUMNS, SimulationSummary

FORMATS = ("csv", "json", "text")
_CENT = Decimal("0.01")


def format_percent(p) -> str:
    """Probability as a percentage, rounded half-up to two decimals.

    ``Fraction`` inputs are rounded exactly; floats via their shortest repr.
    """
    if isinstance(p, Fraction):
        d = Decimal(p.numerator * 100) / Decimal(p.denominator)
    else:
        d = Decimal(repr(float(p))) * 100
    d = d.quantize(_CENT, rounding=ROUND_HALF_UP)
    return "0.00" if d == 0 else str(d)


def _format_points(x) -> str:
    """Percentage points (already scaled), half-up to two decimals."""
    if isinstance(x, Fraction):
        d = Decimal(x.numerator) / Decimal(x.denominator)
    else:
        d = Decimal(repr(float(x)))
    d = d.quantize(_CENT, rounding=ROUND_HALF_UP)
    return "0.00" if d == 0 else str(d)


def _format_number(x, digits=4) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{digits}f}"


@dataclass(frozen=True)
class Table:
    columns: tuple
    rows: tuple

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def render(table: Table, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table.columns)
        writer.writerows(table.rows)
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(table.records(), indent=2) + "\n"
    if fmt == "text":
        cells = [list(map(str, table.columns))] + [list(map(str, r)) for r in table.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(table.columns))]
        lines = []
        for k, row in enumerate(cells):
            parts = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
            lines.append("  ".join(parts).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def write_table(table: Table, path, fmt: str | None = None) -> Path:
    path = Path(path)
    if fmt is None:
        fmt = {".json": "json", ".txt": "text"}.get(path.suffix, "csv")
    text = render(table, fmt)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(text)
    return path


# -- simulation tables ------------------------------------------------------

def _exact(count, n) -> Fraction:
    return Fraction(int(count), int(n))


def stage_table(summary: SimulationSummary, names: dict | None = None) -> Table:
    """Champion, Final, Semifinal, Quarterfinal, Last16 percentages, favourites first."""
    order = sorted(range(len(summary.teams)),
                   key=lambda i: (-int(summary.stage_counts[i, 0]), summary.teams[i]))
    rows = []
    for i in order:
        t = summary.teams[i]
        rows.append((
            (names or {}).get(t, t),
            *(format_percent(_exact(c, summary.n_runs)) for c in summary.stage_counts[i]),
        ))
    return Table(("team",) + STAGE_COLUMNS, tuple(rows))


def group_tables(summary: SimulationSummary, names: dict | None = None) -> dict[str, Table]:
    out: dict[str, list] = {}
    for i, t in enumerate(summary.teams):
        out.setdefault(summary.groups[t], []).append((
            (names or {}).get(t, t),
            *(format_percent(_exact(c, summary.n_runs)) for c in summary.rank_counts[i]),
        ))
    return {g: Table(("team",) + RANK_COLUMNS, tuple(rows)) for g, rows in sorted(out.items())}


def diff_table(a: SimulationSummary, b: SimulationSummary, names: dict | None = None) -> Table:
    """Per-team stage probability differences ``a - b`` in percentage points."""
    if set(a.teams) != set(b.teams):
        raise ValueError("summaries cover different team sets")
    ib = {t: i for i, t in enumerate(b.teams)}
    rows = []
    order = sorted(range(len(a.teams)), key=lambda i: (-int(a.stage_counts[i, 0]), a.teams[i]))
    for i in order:
        t = a.teams[i]
        j = ib[t]
        diffs = [
            100 * (_exact(a.stage_counts[i, k], a.n_runs) - _exact(b.stage_counts[j, k], b.n_runs))
            for k in range(len(STAGE_COLUMNS))
        ]
        rows.append(((names or {}).get(t, t), *map(_format_points, diffs)))
    return Table(("team",) + STAGE_COLUMNS, tuple(rows))


def score_matrix_table(matrix: np.ndarray) -> Table:
    """Rows: first team's goals; the last row/column is the ``>max`` tail."""
    m = matrix.shape[0] - 2
    labels = [str(i) for i in range(m + 1)] + [f">{m}"]
    rows = tuple(
        (labels[i], *(f"{matrix[i, j]:.6f}" for j in range(m + 2))) for i in range(m + 2)
    )
    return Table(("goals",) + tuple(labels), rows)


_EXT = {"csv": ".csv", "json": ".json", "text": ".txt"}


def render_tables(summary: SimulationSummary, out_dir, fmt: str = "csv", names: dict | None = None) -> list[Path]:
    """Write ``stages`` and one ``group_<X>`` table per group into ``out_dir``."""
    out_dir = Path(out_dir)
    ext = _EXT[fmt]
    paths = [write_table(stage_table(summary, names), out_dir / f"stages{ext}", fmt)]
    for label, table in group_tables(summary, names).items():
        paths.append(write_table(table, out_dir / f"group_{label}{ext}", fmt))
    return paths


# -- regression diagnostics ------------------------------------------------

@dataclass(frozen=True)
class RegressionCurve:
    team: str
    kind: str
    points: tuple
    curve: tuple

    def table(self) -> Table:
        rows = [("observed", f"{e:.1f}", str(g)) for e, g in self.points]
        rows += [("fitted", f"{e:.1f}", f"{mu:.6f}") for e, mu in self.curve]
        return Table(("series", "opponent_elo", "goals"), tuple(rows))


def regression_curve(model, history, kind: str, grid) -> RegressionCurve:
    """Observed goals against opponent Elo, with the fitted mean on ``grid``."""
    if kind not in (ATTACK, CONCEDE):
        raise ValueError("kind must be 'attack' or 'concede'")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be non-empty and strictly increasing")
    fit = model.fit_for(kind)
    means = fitted_means(fit, np.column_stack([np.ones(grid.size), grid]))
    attr = "goals_for" if kind == ATTACK else "goals_against"
    points = tuple((float(h.opponent_elo), int(getattr(h, attr))) for h in history)
    return RegressionCurve(model.team, kind, points, tuple(zip(map(float, grid), map(float, means))))


GOF_COLUMNS = (
    "team", "n_matches", "fallback",
    *(f"{k}_{c}" for k in KINDS for c in ("pearson", "pearson_p", "null_dev", "resid_dev", "dev_p")),
)


def gof_rows(models, histories) -> list[dict]:
    """Per-team Pearson and deviance diagnostics for all three regressions.

    Regressions that fell back to the pooled fit are left blank: their
    coefficients were not estimated from that team's matches.
    """
    out = []
    for team, model in models.items():
        hist = histories.get(team, [])
        row = {"team": team, "n_matches": len(hist), "fallback": bool(model.fallback)}
        for kind in KINDS:
            fit = model.fit_for(kind)
            vals = dict.fromkeys(("pearson", "pearson_p", "null_dev", "resid_dev", "dev_p"))
            if kind not in model.fallback_parts and fit.df_residual > 0:
                X, y = design(hist, kind)
                g = pearson_gof(fit, X, y)
                d = deviance_test(fit)
                vals.update(pearson=g.statistic, pearson_p=g.p_value, null_dev=fit.null_deviance,
                            resid_dev=fit.residual_deviance, dev_p=d.p_value)
            row.update({f"{kind}_{k}": v for k, v in vals.items()})
        out.append(row)
    return out


def gof_report(models, histories) -> tuple[Table, dict[str, float]]:
    """Diagnostics table plus the average Pearson p-value per regression."""
    rows = gof_rows(models, histories)
    averages = {}
    for kind in KINDS:
        ps = [r[f"{kind}_pearson_p"] for r in rows if r[f"{kind}_pearson_p"] is not None]
        averages[kind] = float(np.mean(ps)) if ps else float("nan")
    table_rows = tuple(
        tuple(
            ("true" if r[c] else "false") if c == "fallback" else
            r[c] if c == "team" else _format_number(r[c])
            for c in GOF_COLUMNS
        )
        for r in rows
    )
    return Table(GOF_COLUMNS, table_rows), averages
