"""Ex-post solution quality.

Fixing every opponent at a stationary profile turns the game into a Markov
decision process for the remaining player. Policy iteration on that MDP
gives the player's best-response value; the largest gain over the profile's
own value at the initial state is the profile's epsilon.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .game import StochasticGame, StrategyProfile
from .values import NonAbsorbingChainError, create_transition_matrix, solve_absorbing

GAIN_CLAMP = 1e-6
MAX_PI_ROUNDS = 10_000
BRUTE_FORCE_LIMIT = 10**6


class ConsistencyError(RuntimeError):
    """A best response came out worse than the profile it responds to."""


@dataclass(frozen=True)
class BestResponseMdp:
    """Single-player MDP with all opponents marginalized out.

    ``transitions[k]`` has shape ``(A(s_k), n_states)`` and covers terminal
    successors, so every row sums to one. ``rewards[k]`` is the expected
    immediate reward per action; terminal payoffs are in ``terminal_values``.
    """

    player: int
    states: np.ndarray
    transitions: tuple[np.ndarray, ...]
    rewards: tuple[np.ndarray, ...]
    terminal_values: np.ndarray
    state_names: tuple[str, ...]

    @property
    def n_actions(self) -> tuple[int, ...]:
        return tuple(t.shape[0] for t in self.transitions)

    def action_values(self, values: np.ndarray) -> list[np.ndarray]:
        """One-step lookahead ``r(s, a) + sum_j p(j | s, a) v(j)`` for each state."""
        return [r + T @ values for T, r in zip(self.transitions, self.rewards)]


@dataclass(frozen=True)
class PolicyIterationResult:
    policy: np.ndarray
    values: np.ndarray
    iterations: int
    initial_values: np.ndarray


def build_best_response_mdp(game: StochasticGame, profile: StrategyProfile, player: int) -> BestResponseMdp:
    n_states = game.n_states
    transitions, rewards = [], []
    for s in game.nonterminal_states:
        strategies = list(profile[s])
        strategies[player] = np.ones(game.num_actions(s)[player])
        w = np.ones(())
        for sigma in strategies:
            w = np.multiply.outer(w, np.asarray(sigma, dtype=float))
        # player's own axis first, opponents flattened
        w_own = np.moveaxis(w, player, 0)
        probs = np.moveaxis(game.next_probs[s], player, 0)
        succ = np.moveaxis(game.next_states[s], player, 0)
        reward = np.moveaxis(game.reward(s)[..., player], player, 0)
        k = w_own.shape[0]
        mass = (w_own[..., None] * probs).reshape(k, -1)
        succ = succ.reshape(k, -1)
        T = np.zeros((k, n_states))
        for a in range(k):
            np.add.at(T[a], succ[a], mass[a])
        transitions.append(T)
        rewards.append((w_own * reward).reshape(k, -1).sum(axis=1))
    terminal_values = np.zeros(n_states)
    for s, payoff in game.terminal_payoffs.items():
        terminal_values[s] = payoff[player]
    return BestResponseMdp(
        player=player,
        states=np.asarray(game.nonterminal_states, dtype=np.int64),
        transitions=tuple(transitions),
        rewards=tuple(rewards),
        terminal_values=terminal_values,
        state_names=tuple(game.state_names[s] for s in game.nonterminal_states),
    )


def _evaluate(mdp: BestResponseMdp, policy: np.ndarray) -> np.ndarray:
    """Value of a (possibly mixed) policy; ``policy[k]`` is a weight vector."""
    states = mdp.states
    rows = np.array([w @ T for w, T in zip(policy, mdp.transitions)]).reshape(len(states), -1)
    r = np.array([w @ rew for w, rew in zip(policy, mdp.rewards)])
    P = rows[:, states]
    r = r + rows @ mdp.terminal_values
    try:
        v = solve_absorbing(P, r, mdp.state_names)
    except NonAbsorbingChainError as exc:
        raise NonAbsorbingChainError(exc.states, f"non-absorbing policy: {exc}") from None
    full = mdp.terminal_values.copy()
    full[states] = v
    return full


def policy_iteration(mdp: BestResponseMdp, initial_policy: Sequence[np.ndarray] | None = None) -> PolicyIterationResult:
    """Optimal stationary policy of ``mdp`` by policy iteration.

    Parameters
    ----------
    mdp : BestResponseMdp
    initial_policy : per-state weight vectors, optional
        May be mixed; it is evaluated as given and the first improvement step
        makes it pure. Defaults to action 0 everywhere.

    Returns
    -------
    PolicyIterationResult
        ``policy`` is one action index per nonterminal state, ``values`` the
        full value vector over game states, ``initial_values`` the value of
        ``initial_policy``. ``iterations`` counts evaluate/improve rounds,
        including the last one that leaves the policy unchanged.
    """
    sizes = mdp.n_actions
    if initial_policy is None:
        current = [np.eye(k)[0] for k in sizes]
    else:
        current = [np.asarray(w, dtype=float) for w in initial_policy]
        if len(current) != len(sizes) or any(w.shape != (k,) for w, k in zip(current, sizes)):
            raise ValueError("initial policy does not match the MDP's action counts")
    pure = [int(np.flatnonzero(w == 1.0)[0]) if np.count_nonzero(w) == 1 and w.max() == 1.0 else None for w in current]

    values = _evaluate(mdp, current)
    first = values
    for rounds in range(1, MAX_PI_ROUNDS + 1):
        q = mdp.action_values(values)
        new = []
        for k, qs in enumerate(q):
            best = qs.max()
            tol = 1e-12 * max(1.0, abs(best))
            keep = pure[k]
            if keep is not None and qs[keep] >= best - tol:
                new.append(keep)
            else:
                new.append(int(np.flatnonzero(qs >= best - tol)[0]))
        if new == pure:
            return PolicyIterationResult(
                policy=np.asarray(new, dtype=np.int64), values=values, iterations=rounds, initial_values=first
            )
        pure = new
        values = _evaluate(mdp, [np.eye(k)[a] for k, a in zip(sizes, pure)])
    raise RuntimeError(f"policy iteration did not stabilize within {MAX_PI_ROUNDS} rounds")


def _player_gain(game: StochasticGame, profile: StrategyProfile, player: int) -> float:
    mdp = build_best_response_mdp(game, profile, player)
    result = policy_iteration(mdp, [profile[s][player] for s in game.nonterminal_states])
    s0 = game.initial_state
    gain = float(result.values[s0] - result.initial_values[s0])
    if gain < -GAIN_CLAMP:
        raise ConsistencyError(
            f"player {game.player_names[player]!r}: best response is worse than the profile by {-gain:.3e}"
        )
    return max(gain, 0.0)


def ex_post_epsilon(game: StochasticGame, profile: StrategyProfile, workers: int = 1) -> tuple[float, np.ndarray]:
    """Largest amount any player gains at the initial state by deviating.

    Returns
    -------
    epsilon : float
    gains : ndarray, shape (n_players,)
    """
    players = range(game.n_players)
    if workers > 1 and game.n_players > 1:
        with ThreadPoolExecutor(max_workers=min(workers, game.n_players)) as pool:
            gains = list(pool.map(lambda i: _player_gain(game, profile, i), players))
    else:
        gains = [_player_gain(game, profile, i) for i in players]
    gains = np.asarray(gains)
    return float(gains.max()), gains


def _profile_value(game: StochasticGame, profile: Mapping[int, Sequence[np.ndarray]], player: int) -> float:
    chain = create_transition_matrix(game, profile)
    v = np.linalg.solve(np.eye(len(chain.states)) - chain.P, chain.r[:, player])
    row = int(np.flatnonzero(chain.states == game.initial_state)[0])
    return float(v[row])


def brute_force_epsilon(game: StochasticGame, profile: StrategyProfile, limit: int = BRUTE_FORCE_LIMIT) -> float:
    """Epsilon by enumerating every pure stationary deviation.

    Only for tiny games: refuses when a player has more than ``limit`` pure
    stationary policies.
    """
    states = game.nonterminal_states
    best_gain = 0.0
    for i in range(game.n_players):
        counts = [game.num_actions(s)[i] for s in states]
        if math.prod(counts) > limit:
            raise ValueError(f"player {i} has {math.prod(counts)} pure policies, above the limit of {limit}")
        base = _profile_value(game, profile, i)
        for choice in itertools.product(*(range(k) for k in counts)):
            deviation = {}
            for s, a, k in zip(states, choice, counts):
                strategies = list(profile[s])
                strategies[i] = np.eye(k)[a]
                deviation[s] = tuple(strategies)
            best_gain = max(best_gain, _profile_value(game, deviation, i) - base)
    return best_gain
