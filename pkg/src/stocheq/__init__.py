"""Approximate Nash equilibria of multiplayer stochastic games.

Fictitious play solves each stage game; value iteration (VI-FP) or exact
policy evaluation (PI-FP) updates state values between rounds, and an
ex-post best-response check measures how far the result is from
equilibrium.
"""

__version__ = "0.1.0"

from .estimator import StochasticGameSolver
from .expost import brute_force_epsilon, build_best_response_mdp, ex_post_epsilon, policy_iteration
from .game import StochasticGame, build_payoff_tensor, expected_profile_payoff, validate_game
from .hostility import (
    HostilityGameSpec,
    build_hostility_game,
    generate_default_spec,
    parse_spec,
    resolve_outcome,
    serialize_spec,
)
from .solver import ConvergenceReport, SolverConfig, run_pi_fp, run_vi_fp, solve_all_stages
from .stage import FixedIterations, MinRegretIterations, RegretThreshold, solve_stage_game

__all__ = [
    "ConvergenceReport",
    "FixedIterations",
    "HostilityGameSpec",
    "MinRegretIterations",
    "RegretThreshold",
    "SolverConfig",
    "StochasticGame",
    "StochasticGameSolver",
    "brute_force_epsilon",
    "build_best_response_mdp",
    "build_hostility_game",
    "build_payoff_tensor",
    "ex_post_epsilon",
    "expected_profile_payoff",
    "generate_default_spec",
    "parse_spec",
    "policy_iteration",
    "resolve_outcome",
    "run_pi_fp",
    "run_vi_fp",
    "serialize_spec",
    "solve_all_stages",
    "solve_stage_game",
    "validate_game",
]
