"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .game import NORMALIZE_ATOL, PROB_ATOL, StochasticGame, StrategyProfile, validate_game


class InvalidGameError(ValueError):
    """Raised when a game violates its structural invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        head = "; ".join(self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"invalid stochastic game: {head}{more}")


def check_game(game: StochasticGame) -> StochasticGame:
    """Return ``game`` unchanged or raise :class:`InvalidGameError`."""
    if not isinstance(game, StochasticGame):
        raise TypeError(f"expected StochasticGame, got {type(game).__name__}")
    violations = validate_game(game)
    if violations:
        raise InvalidGameError(violations)
    return game


def check_simplex(weights, *, name: str = "strategy", normalize: bool = False) -> np.ndarray:
    """Validate a probability vector.

    With ``normalize=True`` a vector whose sum is within 1e-9 of one is
    rescaled; anything further off is rejected.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError(f"{name}: expected a non-empty 1-D vector, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError(f"{name}: weights must be finite and nonnegative")
    total = math.fsum(w)
    tol = NORMALIZE_ATOL if normalize else PROB_ATOL
    if abs(total - 1.0) > tol:
        raise ValueError(f"{name}: weights sum to {total!r}, not 1")
    if normalize and total != 1.0:
        w = w / total
    return w


def check_profile(game: StochasticGame, profile: Mapping[int, Sequence], *, normalize: bool = False) -> StrategyProfile:
    """Validate a StrategyProfile against ``game`` and return a clean copy."""
    out: StrategyProfile = {}
    missing = [game.state_names[s] for s in game.nonterminal_states if s not in profile]
    if missing:
        raise ValueError(f"profile has no strategies for state(s) {missing}")
    for s in game.nonterminal_states:
        shape = game.num_actions(s)
        strategies = profile[s]
        if len(strategies) != game.n_players:
            raise ValueError(
                f"state {game.state_names[s]!r}: {len(strategies)} strategies for {game.n_players} players"
            )
        clean = []
        for i, sigma in enumerate(strategies):
            label = f"state {game.state_names[s]!r} player {game.player_names[i]!r}"
            sigma = check_simplex(sigma, name=label, normalize=normalize)
            if sigma.shape != (shape[i],):
                raise ValueError(f"{label}: {sigma.size} weights for {shape[i]} actions")
            clean.append(sigma)
        out[s] = tuple(clean)
    extra = [s for s in profile if s not in out]
    if extra:
        raise ValueError(f"profile names state(s) {extra} that are not nonterminal states of the game")
    return out


def check_values(game: StochasticGame, values) -> np.ndarray:
    """Validate a ValueTable: shape ``(n_states, n_players)``, finite, terminal rows intact."""
    v = np.asarray(values, dtype=float)
    if v.shape != (game.n_states, game.n_players):
        raise ValueError(f"value table shape {v.shape}, expected {(game.n_states, game.n_players)}")
    if not np.all(np.isfinite(v)):
        raise ValueError("value table contains non-finite entries")
    for s, payoff in game.terminal_payoffs.items():
        if not np.array_equal(v[s], payoff):
            raise ValueError(f"terminal state {game.state_names[s]!r}: value {v[s]} differs from payoff {payoff}")
    return v


def initial_values(game: StochasticGame, init="zero") -> np.ndarray:
    """Build the starting ValueTable.

    ``init`` is ``"zero"``, ``"pessimistic"`` (every nonterminal entry set to
    the smallest terminal payoff), a float constant, or a full table.
    """
    table = game.terminal_value_table()
    nonterminal = game.nonterminal_states
    if isinstance(init, str):
        if init == "zero":
            return table
        if init == "pessimistic":
            floor = min(float(p.min()) for p in game.terminal_payoffs.values()) if game.terminal_payoffs else 0.0
            table[nonterminal] = floor
            return table
        raise ValueError(f"unknown value initialization {init!r}")
    if np.isscalar(init):
        table[nonterminal] = float(init)
        return table
    return check_values(game, init).copy()
