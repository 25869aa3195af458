import numpy as np
import pytest

from stocheq.game import StochasticGame
from stocheq.hostility import HostilityGameSpec, Player, build_hostility_game, generate_default_spec

DEFAULT_SEED = 7


def hand_game(s1_values=None) -> StochasticGame:
    """Two players, states S0, S1 (nonterminal), B = (100, -100), R = (-100, 100).

    S0, profile -> outcome
        (0, 0): B
        (0, 1): 0.5 B, 0.5 S1
        (1, 0): S1, immediate reward (1, 2)
        (1, 1): 0.25 R, 0.75 S1
    S1 has one action per player: 0.5 B, 0.5 R.
    """
    B, R = 2, 3
    succ0 = np.array([[[B, B], [B, 1]], [[1, 1], [R, 1]]])
    prob0 = np.array([[[1.0, 0.0], [0.5, 0.5]], [[1.0, 0.0], [0.25, 0.75]]])
    reward0 = np.zeros((2, 2, 2))
    reward0[1, 0] = [1.0, 2.0]
    return StochasticGame(
        n_players=2,
        state_names=["S0", "S1", "B", "R"],
        terminal_payoffs={B: [100.0, -100.0], R: [-100.0, 100.0]},
        next_states={0: succ0, 1: np.array([[[B, R]]])},
        next_probs={0: prob0, 1: np.array([[[0.5, 0.5]]])},
        rewards={0: reward0},
    )


def make_spec(
    moves,
    *,
    hostility=None,
    K=10.0,
    b_def=0.2,
    b_undef=0.6,
    r_def=0.1,
    r_undef=0.5,
    counters=None,
) -> HostilityGameSpec:
    """Hostility spec with uniform probability tables.

    ``moves`` maps player name to its move list; the first entry is blue.
    """
    names = list(moves)
    blue, reds = names[0], names[1:]
    players = [Player(blue, "blue", "Blue")] + [Player(r, "red", r) for r in reds]
    hostility = hostility or {p: {m: 1.0 for m in moves[p]} for p in names}
    counters = counters or {r: {m: [] for m in moves[r]} for r in reds}
    return HostilityGameSpec(
        players=players,
        moves={p: list(ms) for p, ms in moves.items()},
        counters=counters,
        b_def={b: {r: b_def for r in reds} for b in moves[blue]},
        b_undef={b: {r: b_undef for r in reds} for b in moves[blue]},
        r_def={r: {m: r_def for m in moves[r]} for r in reds},
        r_undef={r: {m: r_undef for m in moves[r]} for r in reds},
        blue_win={blue: 100.0, **{r: -100.0 for r in reds}},
        red_win={blue: -100.0, **{r: 100.0 for r in reds}},
        kinetic={p: -200.0 for p in names},
        hostility=hostility,
        K=K,
    )


def tiny_spec() -> HostilityGameSpec:
    """Three nonterminal states, two moves each: small enough for brute force."""
    spec = make_spec(
        {"Blue": ["b1", "b2"], "Red": ["r1", "r2"]},
        hostility={"Blue": {"b1": 1.0, "b2": 2.0}, "Red": {"r1": 1.0, "r2": 1.0}},
        K=3.0,
        counters={"Red": {"r1": ["b1"], "r2": []}},
        b_def=0.1,
        b_undef=0.3,
        r_def=0.05,
        r_undef=0.2,
    )
    spec.b_undef["b2"]["Red"] = 0.45
    spec.r_undef["Red"]["r2"] = 0.35
    return spec


@pytest.fixture
def game():
    return hand_game()


@pytest.fixture(scope="session")
def small_spec():
    return generate_default_spec(DEFAULT_SEED, "small")


@pytest.fixture(scope="session")
def small_game(small_spec):
    return build_hostility_game(small_spec)


def slow_vi_game() -> StochasticGame:
    """Player 0 picks A (exit to 95) or B (stay w.p. 0.95, else exit to 50); player 1 is a bystander.

    Started from optimistic values, the one-step backup keeps preferring B for
    dozens of iterations while exact evaluation exposes B's true worth (50)
    after one step.
    """
    return StochasticGame(
        n_players=2,
        state_names=["S", "T95", "T50"],
        terminal_payoffs={1: [95.0, 0.0], 2: [50.0, 0.0]},
        next_states={0: np.array([[[1, 1]], [[0, 2]]])},
        next_probs={0: np.array([[[1.0, 0.0]], [[0.95, 0.05]]])},
        player_names=("Chooser", "Bystander"),
    )


def trap_game() -> StochasticGame:
    """One player: action 0 loops on L forever, action 1 exits to a payoff of -10."""
    return StochasticGame(
        n_players=1,
        state_names=["L", "T"],
        terminal_payoffs={1: [-10.0]},
        next_states={0: np.array([[0], [1]])},
        next_probs={0: np.ones((2, 1))},
    )
