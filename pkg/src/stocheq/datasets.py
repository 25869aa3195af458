"""Small seeded games for tests and demos."""

from __future__ import annotations

import numpy as np

from .game import StochasticGame, StrategyProfile


def matching_pennies() -> np.ndarray:
    """Payoff tensor of matching pennies, +1/-1, shape (2, 2, 2)."""
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return np.stack([a, -a])


def prisoners_dilemma() -> np.ndarray:
    """Prisoner's dilemma; action 1 (defect) is strictly dominant for both."""
    row = np.array([[3.0, 0.0], [5.0, 1.0]])
    return np.stack([row, row.T])


def random_zero_sum(n_actions: int, seed: int) -> np.ndarray:
    """Two-player zero-sum tensor with standard normal entries."""
    a = np.random.default_rng(seed).normal(size=(n_actions, n_actions))
    return np.stack([a, -a])


def make_random_game(
    seed: int,
    n_players: int = 2,
    n_nonterminal: int = 2,
    n_actions=(2, 3),
    n_terminal: int = 2,
    min_absorption: float = 0.2,
    payoff_range=(-100.0, 100.0),
    rewards: bool = True,
) -> StochasticGame:
    """Random stochastic game in which every profile absorbs with probability >= ``min_absorption``.

    Cycles among nonterminal states are allowed; the absorption floor makes
    ``I - P`` nonsingular for every stationary profile.
    """
    rng = np.random.default_rng(seed)
    lo_a, hi_a = (n_actions, n_actions) if np.isscalar(n_actions) else n_actions
    lo, hi = payoff_range
    U, T = n_nonterminal, n_terminal
    names = [f"S{k}" for k in range(U)] + [f"T{k}" for k in range(T)]
    succ_all = np.arange(U + T)
    next_states, next_probs, reward = {}, {}, {}
    for s in range(U):
        shape = tuple(int(rng.integers(lo_a, hi_a + 1)) for _ in range(n_players))
        absorb = rng.uniform(min_absorption, 1.0, size=shape)
        probs = np.concatenate(
            [
                rng.dirichlet(np.ones(U), size=shape) * (1.0 - absorb)[..., None],
                rng.dirichlet(np.ones(T), size=shape) * absorb[..., None],
            ],
            axis=-1,
        )
        probs /= probs.sum(axis=-1, keepdims=True)
        next_probs[s] = probs
        next_states[s] = np.broadcast_to(succ_all, probs.shape).copy()
        if rewards:
            reward[s] = rng.uniform(lo, hi, size=shape + (n_players,)) * 0.1
    terminal = {U + k: rng.uniform(lo, hi, size=n_players) for k in range(T)}
    return StochasticGame(
        n_players=n_players,
        state_names=names,
        terminal_payoffs=terminal,
        next_states=next_states,
        next_probs=next_probs,
        rewards=reward,
    )


def make_single_agent_chain(seed: int, n_nonterminal: int = 4, n_actions=(2, 4)) -> StochasticGame:
    """Absorbing single-player MDP with nonnegative rewards and payoffs."""
    return make_random_game(
        seed,
        n_players=1,
        n_nonterminal=n_nonterminal,
        n_actions=n_actions,
        n_terminal=2,
        payoff_range=(0.0, 100.0),
    )


def random_profile(game: StochasticGame, seed: int) -> StrategyProfile:
    """Random mixed profile, occasionally with pure components."""
    rng = np.random.default_rng(seed)
    profile = {}
    for s in game.nonterminal_states:
        strategies = []
        for k in game.num_actions(s):
            if rng.random() < 0.25:
                sigma = np.eye(k)[rng.integers(k)]
            else:
                sigma = rng.dirichlet(np.ones(k))
            strategies.append(sigma)
        profile[s] = tuple(strategies)
    return profile
