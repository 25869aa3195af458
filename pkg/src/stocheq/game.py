"""Finite n-player stochastic games.

A game is a set of states, each either *terminal* (a fixed payoff vector, no
actions) or *nonterminal* (every player picks an action, the joint action
profile yields an immediate reward and a distribution over successor states).

Outcome distributions are stored sparsely per joint profile: for a
nonterminal state with action counts ``(A_0, ..., A_{n-1})`` the game keeps

``next_states[s]``
    integer array of shape ``(A_0, ..., A_{n-1}, m)``
``next_probs[s]``
    float array of the same shape; ``next_probs[s][a].sum() == 1``

so each profile lists at most ``m`` successors. Padding slots carry
probability zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

PROB_ATOL = 1e-12
NORMALIZE_ATOL = 1e-9

# per (nonterminal state, player) mixed strategies
StrategyProfile = dict[int, tuple[np.ndarray, ...]]


@dataclass(frozen=True, eq=False)
class StochasticGame:
    """An n-player stochastic game with sparse per-profile transitions.

    Parameters
    ----------
    n_players : int
    state_names : sequence of str
        One label per state; index in this list is the state id.
    terminal_payoffs : mapping of int to array-like, shape (n_players,)
        Payoff vector of every terminal state. States not in this mapping are
        nonterminal.
    next_states, next_probs : mapping of int to ndarray
        Sparse outcome distribution of each nonterminal state, see module
        docstring.
    rewards : mapping of int to ndarray, optional
        Immediate reward per nonterminal state, shape ``(*A, n_players)``.
        Missing states have zero reward.
    initial_state : int, default 0
    player_names, action_names : optional labels

    Notes
    -----
    Instances are not validated on construction; use
    :func:`validate_game` for diagnostics or
    :func:`stocheq.validation.check_game` to raise.
    """

    n_players: int
    state_names: tuple[str, ...]
    terminal_payoffs: Mapping[int, np.ndarray]
    next_states: Mapping[int, np.ndarray]
    next_probs: Mapping[int, np.ndarray]
    rewards: Mapping[int, np.ndarray] = field(default_factory=dict)
    initial_state: int = 0
    player_names: tuple[str, ...] | None = None
    action_names: Mapping[int, tuple[tuple[str, ...], ...]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "state_names", tuple(self.state_names))
        object.__setattr__(
            self,
            "terminal_payoffs",
            {int(s): np.asarray(v, dtype=float) for s, v in self.terminal_payoffs.items()},
        )
        object.__setattr__(
            self, "next_states", {int(s): np.asarray(v, dtype=np.int64) for s, v in self.next_states.items()}
        )
        object.__setattr__(
            self, "next_probs", {int(s): np.asarray(v, dtype=float) for s, v in self.next_probs.items()}
        )
        object.__setattr__(
            self, "rewards", {int(s): np.asarray(v, dtype=float) for s, v in self.rewards.items()}
        )
        if self.player_names is None:
            object.__setattr__(self, "player_names", tuple(f"P{i}" for i in range(self.n_players)))
        else:
            object.__setattr__(self, "player_names", tuple(self.player_names))
        for arr in (*self.next_states.values(), *self.next_probs.values(), *self.rewards.values()):
            arr.setflags(write=False)
        for arr in self.terminal_payoffs.values():
            arr.setflags(write=False)

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def terminal_states(self) -> list[int]:
        return sorted(s for s in self.terminal_payoffs if 0 <= s < self.n_states)

    @property
    def nonterminal_states(self) -> list[int]:
        return [s for s in range(self.n_states) if s not in self.terminal_payoffs]

    def is_terminal(self, state: int) -> bool:
        return state in self.terminal_payoffs

    def num_actions(self, state: int) -> tuple[int, ...]:
        """Action counts ``(A_0, ..., A_{n-1})`` at a nonterminal state."""
        if self.is_terminal(state):
            raise ValueError(f"state {self.state_names[state]!r} is terminal and has no actions")
        return tuple(self.next_probs[state].shape[:-1])

    def reward(self, state: int) -> np.ndarray:
        """Immediate reward array of shape ``(*A, n_players)``."""
        r = self.rewards.get(state)
        if r is None:
            return np.zeros(self.num_actions(state) + (self.n_players,))
        return r

    def outcome(self, state: int, profile: Sequence[int]) -> list[tuple[int, float]]:
        """Nonzero ``(successor, probability)`` entries for a pure joint profile.

        Repeated successors in the sparse slots are merged.
        """
        idx = tuple(int(a) for a in profile)
        merged: dict[int, float] = {}
        for q, p in zip(self.next_states[state][idx], self.next_probs[state][idx]):
            if p != 0.0:
                merged[int(q)] = merged.get(int(q), 0.0) + float(p)
        return sorted(merged.items())

    def terminal_value_table(self) -> np.ndarray:
        """ValueTable with terminal payoffs filled in and zeros elsewhere."""
        table = np.zeros((self.n_states, self.n_players))
        for s, payoff in self.terminal_payoffs.items():
            table[s] = payoff
        return table

    def state_index(self, name: str) -> int:
        try:
            return self.state_names.index(name)
        except ValueError:
            raise KeyError(f"unknown state {name!r}") from None

    def action_labels(self, state: int, player: int) -> tuple[str, ...]:
        if self.action_names is not None and state in self.action_names:
            return tuple(self.action_names[state][player])
        return tuple(str(a) for a in range(self.num_actions(state)[player]))


def validate_game(game: StochasticGame) -> list[str]:
    """Check the structural invariants of ``game``.

    Returns a list of human-readable violations; an empty list means the game
    is well formed. Nothing is raised.
    """
    out: list[str] = []
    names = game.state_names
    n_states = game.n_states

    def label(s):
        return repr(names[s]) if 0 <= s < n_states else f"#{s}"

    if game.n_players < 1:
        out.append(f"n_players must be >= 1, got {game.n_players}")
    if len(game.player_names) != game.n_players:
        out.append(f"{len(game.player_names)} player names for {game.n_players} players")
    if not 0 <= game.initial_state < n_states:
        out.append(f"initial state {game.initial_state} does not exist")
    elif game.is_terminal(game.initial_state):
        out.append(f"initial state {label(game.initial_state)} is terminal")

    for s, payoff in game.terminal_payoffs.items():
        if not 0 <= s < n_states:
            out.append(f"terminal payoff given for nonexistent state {s}")
        elif payoff.shape != (game.n_players,):
            out.append(f"terminal state {label(s)}: payoff shape {payoff.shape}, expected ({game.n_players},)")
        elif not np.all(np.isfinite(payoff)):
            out.append(f"terminal state {label(s)}: non-finite payoff")
        if s in game.next_states or s in game.next_probs:
            out.append(f"terminal state {label(s)} has outgoing transitions")
        if s in game.rewards:
            out.append(f"terminal state {label(s)} has stage rewards")

    nonterminal = game.nonterminal_states
    if not nonterminal:
        out.append("game has no nonterminal state")

    for s in nonterminal:
        if s not in game.next_probs or s not in game.next_states:
            out.append(f"state {label(s)}: missing transition table")
            continue
        probs, succ = game.next_probs[s], game.next_states[s]
        if probs.ndim != game.n_players + 1:
            out.append(
                f"state {label(s)}: transition table has {probs.ndim - 1} action axes, expected {game.n_players}"
            )
            continue
        if succ.shape != probs.shape:
            out.append(f"state {label(s)}: successor shape {succ.shape} != probability shape {probs.shape}")
            continue
        shape = probs.shape[:-1]
        if any(a < 1 for a in shape):
            out.append(f"state {label(s)}: every player needs >= 1 action, got {shape}")
            continue
        reward = game.rewards.get(s)
        if reward is not None and reward.shape != shape + (game.n_players,):
            out.append(f"state {label(s)}: reward shape {reward.shape}, expected {shape + (game.n_players,)}")
        elif reward is not None and not np.all(np.isfinite(reward)):
            out.append(f"state {label(s)}: non-finite reward")
        if game.action_names is not None and s in game.action_names:
            got = tuple(len(a) for a in game.action_names[s])
            if got != shape:
                out.append(f"state {label(s)}: action names {got} do not match action counts {shape}")
        out_of_range = ~np.isfinite(probs) | (probs < -PROB_ATOL) | (probs > 1 + PROB_ATOL)
        bad_range = out_of_range.any(axis=-1)
        for a in zip(*np.nonzero(bad_range)):
            out.append(f"state {label(s)} profile {tuple(map(int, a))}: probability outside [0, 1]")
        # cheap screen first, exact fsum only where the plain sum is close to the limit
        sums = probs.sum(axis=-1)
        suspect = ~bad_range & (np.abs(sums - 1.0) > PROB_ATOL / 4)
        for a in zip(*np.nonzero(suspect)):
            total = math.fsum(probs[a])
            if abs(total - 1.0) > PROB_ATOL:
                out.append(f"state {label(s)} profile {tuple(map(int, a))}: probabilities sum to {total!r}, not 1")
        dangling = ((probs != 0.0) & ((succ < 0) | (succ >= n_states))).any(axis=-1)
        for a in zip(*np.nonzero(dangling)):
            bad = sorted({int(q) for q, p in zip(succ[a], probs[a]) if p != 0.0 and not 0 <= q < n_states})
            out.append(f"state {label(s)} profile {tuple(map(int, a))}: successor(s) {bad} do not exist")
    return out


def build_payoff_tensor(game: StochasticGame, state: int, values: np.ndarray) -> np.ndarray:
    """Stage-game payoffs at ``state`` given continuation ``values``.

    Entry ``[i, a_0, ..., a_{n-1}]`` is player i's immediate reward at the
    profile plus the expected value of the successor state.

    Returns
    -------
    ndarray of shape ``(n_players, *A)``
    """
    if game.is_terminal(state):
        raise ValueError(f"state {game.state_names[state]!r} is terminal; it has no stage game")
    values = np.asarray(values, dtype=float)
    if values.shape != (game.n_states, game.n_players):
        raise ValueError(f"values shape {values.shape}, expected {(game.n_states, game.n_players)}")
    # (*A, m, n) successor values weighted by (*A, m, 1) probabilities
    cont = np.einsum("...m,...mi->...i", game.next_probs[state], values[game.next_states[state]])
    payoff = cont + game.reward(state)
    return np.moveaxis(payoff, -1, 0)


def expected_profile_payoff(tensor: np.ndarray, strategies: Sequence[np.ndarray]) -> np.ndarray:
    """Expected payoff of every player when all play ``strategies``.

    Parameters
    ----------
    tensor : ndarray, shape (n_players, A_0, ..., A_{n-1})
    strategies : sequence of n 1-D arrays

    Returns
    -------
    ndarray of shape (n_players,)
    """
    tensor = np.asarray(tensor, dtype=float)
    n = tensor.shape[0]
    if tensor.ndim != n + 1 or len(strategies) != n:
        raise ValueError(f"tensor shape {tensor.shape} does not fit {len(strategies)} strategies")
    out = tensor
    for j, sigma in enumerate(strategies):
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != (tensor.shape[j + 1],):
            raise ValueError(f"strategy {j} has shape {sigma.shape}, expected ({tensor.shape[j + 1]},)")
        # contract the leading action axis (axis 1 after the player axis)
        out = np.tensordot(out, sigma, axes=([1], [0]))
    return out


def uniform_profile(game: StochasticGame) -> StrategyProfile:
    """Uniform mixed strategy for every player at every nonterminal state."""
    return {
        s: tuple(np.full(k, 1.0 / k) for k in game.num_actions(s))
        for s in game.nonterminal_states
    }


def pure_profile(game: StochasticGame, actions: Mapping[int, Sequence[int]]) -> StrategyProfile:
    """Profile playing ``actions[s][i]`` with certainty."""
    profile = {}
    for s in game.nonterminal_states:
        strategies = []
        for i, k in enumerate(game.num_actions(s)):
            sigma = np.zeros(k)
            sigma[actions[s][i]] = 1.0
            strategies.append(sigma)
        profile[s] = tuple(strategies)
    return profile
