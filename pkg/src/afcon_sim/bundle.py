"""Versioned JSON serialisation of fitted team models."""

from __future__ import annotations

import json
from pathlib import Path

from .glm import GlmFit
from .match_model import KINDS, NestedPoissonModel, TeamModel

BUNDLE_FORMAT = "afcon-sim-model-bundle"
BUNDLE_VERSION = 1


class BundleError(ValueError):
    pass


def bundle_to_dict(model: NestedPoissonModel, training: dict | None = None) -> dict:
    teams = {}
    for team, tm in model.team_models_.items():
        teams[team] = {
            "n_matches": tm.n_matches,
            "fallback": tm.fallback,
            "fallback_parts": list(tm.fallback_parts),
            **{kind: tm.fit_for(kind).to_dict() for kind in KINDS},
        }
    return {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "min_matches": model.min_matches,
        "training": training or {},
        "teams": teams,
    }


def bundle_from_dict(doc: dict) -> tuple[NestedPoissonModel, dict]:
    if doc.get("format") != BUNDLE_FORMAT:
        raise BundleError("not a model bundle")
    if doc.get("version") != BUNDLE_VERSION:
        raise BundleError(f"unsupported bundle version {doc.get('version')!r} (expected {BUNDLE_VERSION})")
    try:
        models = {
            team: TeamModel(
                team,
                GlmFit.from_dict(entry["attack"]),
                GlmFit.from_dict(entry["concede"]),
                GlmFit.from_dict(entry["nested"]),
                n_matches=int(entry["n_matches"]),
                fallback=bool(entry["fallback"]),
                fallback_parts=tuple(entry["fallback_parts"]),
            )
            for team, entry in doc["teams"].items()
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"malformed bundle: {exc}") from None
    model = NestedPoissonModel.from_team_models(models, min_matches=int(doc.get("min_matches", 8)))
    return model, doc.get("training", {})


def save_bundle(model: NestedPoissonModel, path, training: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(bundle_to_dict(model, training), indent=2) + "\n")
    return path


def load_bundle(path) -> tuple[NestedPoissonModel, dict]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}: invalid JSON: {exc}") from None
    return bundle_from_dict(doc)
