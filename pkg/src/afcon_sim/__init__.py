"""Nested Poisson regression forecasts for the Africa Cup of Nations 2019."""

__version__ = "0.1.0"

from .data import EloTable, MatchRecord, TournamentConfig, load_config, load_elo, load_matches
from .glm import GlmFit, PoissonRegression, fit_poisson
from .match_model import MatchForecast, NestedPoissonModel, TeamModel
from .monte_carlo import SimulationSummary, run_simulations
from .tournament import Variant, simulate_tournament

__all__ = [
    "EloTable", "GlmFit", "MatchForecast", "MatchRecord", "NestedPoissonModel", "PoissonRegression",
    "SimulationSummary", "TeamModel", "TournamentConfig", "Variant", "fit_poisson", "load_config",
    "load_elo", "load_matches", "run_simulations", "simulate_tournament",
]
