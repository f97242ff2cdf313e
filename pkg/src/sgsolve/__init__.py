"""Solvers for simple stochastic games with reachability objectives."""

from .game import Game, GameError, Owner, ParseError, Strategy, make_game, parse_model, render_model
from .oracle import enumerate_solve
from .qp_solver import QpSolverConfig, solve_game_qp
from .result import SolveResult
from .si import SiConfig, solve_si, topological_si

__all__ = [
    "Game", "GameError", "Owner", "ParseError", "Strategy", "make_game", "parse_model", "render_model",
    "enumerate_solve", "QpSolverConfig", "solve_game_qp", "SolveResult", "SiConfig", "solve_si",
    "topological_si",
]
__version__ = "0.1.0"
