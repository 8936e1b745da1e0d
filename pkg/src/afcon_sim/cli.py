"""Command-line entry point: ``afcon-sim {fit,forecast,simulate,gof,compare,curves}``.

Exit codes: 0 success, 1 internal error, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bundle import BundleError, load_bundle, save_bundle
from .data import DataError, demo_paths, load_config, load_elo, load_matches, load_teams, team_history, training_window
from .match_model import ATTACK, CONCEDE, InsufficientDataError, NestedPoissonModel, most_probable_score, win_draw_loss
from .monte_carlo import run_simulations
from .reporting import (
    diff_table,
    gof_report,
    regression_curve,
    render_tables,
    score_matrix_table,
    write_table,
)
from .tournament import Variant

log = logging.getLogger("afcon_sim")

DEFAULT_FROM = dt.date(2010, 1, 1)
DEFAULT_TO = dt.date(2019, 4, 12)
DEFAULT_SEED = 2019
DEFAULT_RUNS = 100_000


class UsageError(Exception):
    pass


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid ISO date {text!r}") from None


def _require(path, what):
    if not Path(path).is_file():
        raise UsageError(f"{what} file not found: {path}")
    return Path(path)


def _training_records(matches_path, start, end, neutral_only):
    records = load_matches(_require(matches_path, "matches"))
    return training_window(records, start, end, neutral_only)


def _write_manifest(out: Path, command: str, inputs: dict, **params) -> Path:
    manifest = {
        "tool": "afcon-sim",
        "version": __version__,
        "command": command,
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in inputs.items()},
        **params,
        "output_dir": str(out),
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# -- commands ---------------------------------------------------------------

def cmd_fit(args) -> int:
    records = _training_records(args.matches, args.date_from, args.date_to, not args.all_grounds)
    teams = load_teams(_require(args.teams, "teams"))
    if args.elo:
        elo = load_elo(_require(args.elo, "elo"))
        missing = [t for t in teams if t not in elo]
        if missing:
            raise UsageError(f"no Elo rating for {', '.join(missing)}")
    model = NestedPoissonModel(min_matches=args.min_matches).fit(records, teams)
    training = {
        "matches": str(args.matches),
        "matches_sha256": _sha256(args.matches),
        "from": args.date_from.isoformat(),
        "to": args.date_to.isoformat(),
        "neutral_only": not args.all_grounds,
        "n_records": len(records),
    }
    path = save_bundle(model, args.out, training)
    n_fallback = sum(m.fallback for m in model.team_models_.values())
    print(f"fitted {len(model.team_models_)} teams ({n_fallback} with pooled fallback) -> {path}")
    return 0


def _load_model(path):
    return load_bundle(_require(path, "bundle"))


def cmd_forecast(args) -> int:
    model, _ = _load_model(args.bundle)
    elo = load_elo(_require(args.elo, "elo"))
    a, b = args.team_a, args.team_b
    if a == b:
        raise UsageError("a team cannot play itself")
    for t in (a, b):
        if t not in model.team_models_:
            raise UsageError(f"unknown team {t} (not in bundle)")
        if t not in elo:
            raise UsageError(f"unknown team {t} (no Elo rating)")
    if args.max_goals < 0:
        raise UsageError("--max-goals must be >= 0")
    fc = model.forecast(elo, a, b)
    matrix = model.score_matrix(elo, a, b, args.max_goals)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = write_table(score_matrix_table(matrix), out / f"score_matrix_{a}_{b}.csv")
    s, d, w = win_draw_loss(fc)
    p_a, p_b = (w, s) if fc.swapped else (s, w)
    i, j = most_probable_score(matrix)
    print(f"most probable score: {i}-{j}")
    print(f"{a} win {p_a:.4f}  draw {d:.4f}  {b} win {p_b:.4f}")
    print(f"score matrix -> {path}")
    return 0


def _simulation_inputs(args):
    model, _ = _load_model(args.bundle)
    config = load_config(_require(args.config, "config"))
    elo = load_elo(_require(args.elo, "elo"))
    missing = [t for t in config.teams if t not in model.team_models_ or t not in elo]
    if missing:
        raise UsageError(f"teams without model or Elo rating: {', '.join(missing)}")
    runs = args.runs if args.runs is not None else config.simulations
    seed = args.seed if args.seed is not None else config.seed
    if runs < 1:
        raise UsageError("--runs must be positive")
    if seed < 0:
        raise UsageError("--seed must be unsigned")
    return model, config, elo, runs, seed


def _names(config):
    return config.raw.get("names") if config.raw else None


def cmd_simulate(args) -> int:
    model, config, elo, runs, seed = _simulation_inputs(args)
    variant = Variant(args.variant)
    summary = run_simulations(config, model, elo, runs, seed, variant, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    render_tables(summary, out, args.format, _names(config))
    (out / "summary.json").write_text(summary.to_json())
    _write_manifest(out, "simulate", {"bundle": args.bundle, "config": args.config, "elo": args.elo},
                    seed=seed, n_runs=runs, variant=variant.value)
    print(f"{runs} tournaments ({variant.value}, seed {seed}) -> {out}")
    return 0


def cmd_compare(args) -> int:
    model, config, elo, runs, seed = _simulation_inputs(args)
    a = run_simulations(config, model, elo, runs, seed, Variant(args.variant_a), jobs=args.jobs)
    b = run_simulations(config, model, elo, runs, seed, Variant(args.variant_b), jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = _names(config)
    write_table(diff_table(a, b, names), out / "diff.csv")
    for summary in (a, b):
        render_tables(summary, out / summary.variant.value, "csv", names)
    _write_manifest(out, "compare", {"bundle": args.bundle, "config": args.config, "elo": args.elo},
                    seed=seed, n_runs=runs, variant=[args.variant_a, args.variant_b])
    print(f"difference {args.variant_a} - {args.variant_b} over {runs} runs -> {out / 'diff.csv'}")
    return 0


def _histories_for(model, training, matches_path):
    start = dt.date.fromisoformat(training.get("from", DEFAULT_FROM.isoformat()))
    end = dt.date.fromisoformat(training.get("to", DEFAULT_TO.isoformat()))
    records = _training_records(matches_path, start, end, training.get("neutral_only", True))
    histories = {t: team_history(records, t) for t in model.team_models_}
    mismatched = [t for t, m in model.team_models_.items() if m.n_matches != len(histories[t])]
    if mismatched:
        raise UsageError(f"bundle was not fitted from these matches (teams {', '.join(mismatched)})")
    return histories


def cmd_gof(args) -> int:
    model, training = _load_model(args.bundle)
    histories = _histories_for(model, training, args.matches)
    table, averages = gof_report(model.team_models_, histories)
    out = Path(args.out)
    path = write_table(table, out / "gof.csv")
    for kind, p in averages.items():
        print(f"average Pearson p-value ({kind}): {p:.3f}")
    print(f"diagnostics for {len(table.rows)} teams -> {path}")
    return 0


def cmd_curves(args) -> int:
    model, training = _load_model(args.bundle)
    histories = _histories_for(model, training, args.matches)
    teams = args.team or list(model.team_models_)
    grid = np.arange(args.grid_min, args.grid_max + 0.5 * args.grid_step, args.grid_step)
    out = Path(args.out)
    for team in teams:
        if team not in model.team_models_:
            raise UsageError(f"unknown team {team}")
        for kind in (ATTACK, CONCEDE):
            curve = regression_curve(model.team_models_[team], histories[team], kind, grid)
            write_table(curve.table(), out / f"curve_{team}_{kind}.csv")
    print(f"regression curves for {len(teams)} teams -> {out}")
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    demo = demo_paths()
    parser = argparse.ArgumentParser(prog="afcon-sim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit per-team regressions and write a model bundle")
    p.add_argument("--matches", default=demo["matches"])
    p.add_argument("--elo", default=demo["elo"])
    p.add_argument("--teams", default=demo["teams"], help="participant list file")
    p.add_argument("--from", dest="date_from", type=_date, default=DEFAULT_FROM)
    p.add_argument("--to", dest="date_to", type=_date, default=DEFAULT_TO)
    p.add_argument("--all-grounds", action="store_true", help="keep non-neutral matches")
    p.add_argument("--min-matches", type=int, default=8)
    p.add_argument("--out", default="out/bundle.json", help="bundle path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="score matrix for one match")
    p.add_argument("team_a")
    p.add_argument("team_b")
    p.add_argument("--bundle", default="out/bundle.json")
    p.add_argument("--elo", default=demo["elo"])
    p.add_argument("--max-goals", type=int, default=10)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_forecast)

    for name, func, help_ in (
        ("simulate", cmd_simulate, "Monte Carlo simulation of the tournament"),
        ("compare", cmd_compare, "difference table between two tournament formats"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--bundle", default="out/bundle.json")
        p.add_argument("--config", default=demo["config"])
        p.add_argument("--elo", default=demo["elo"])
        p.add_argument("--runs", type=int, default=None, help=f"default: config value ({DEFAULT_RUNS})")
        p.add_argument("--seed", type=int, default=None, help=f"default: config value ({DEFAULT_SEED})")
        p.add_argument("--jobs", type=int, default=1, help="worker processes; never changes results")
        p.add_argument("--out", default="out")
        if name == "simulate":
            p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.WITH_THIRDS.value)
            p.add_argument("--format", choices=["csv", "json", "text"], default="csv")
        else:
            p.add_argument("--variant-a", choices=[v.value for v in Variant], default=Variant.WITHOUT_THIRDS.value)
            p.add_argument("--variant-b", choices=[v.value for v in Variant], default=Variant.WITH_THIRDS.value)
        p.set_defaults(func=func)

    p = sub.add_parser("gof", help="goodness-of-fit and deviance table")
    p.add_argument("--bundle", default="out/bundle.json")
    p.add_argument("--matches", default=demo["matches"])
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("curves", help="regression plot data (observed goals and fitted mean)")
    p.add_argument("--bundle", default="out/bundle.json")
    p.add_argument("--matches", default=demo["matches"])
    p.add_argument("--team", action="append", help="repeatable; default all teams")
    p.add_argument("--grid-min", type=float, default=1100.0)
    p.add_argument("--grid-max", type=float, default=2000.0)
    p.add_argument("--grid-step", type=float, default=10.0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_curves)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, DataError, BundleError, InsufficientDataError, FileNotFoundError) as exc:
        print(f"afcon-sim: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"afcon-sim: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
