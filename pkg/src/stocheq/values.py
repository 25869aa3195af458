"""Value updates for the outer loop.

``value_iteration_update`` is the local one-step backup used by VI-FP;
``create_transition_matrix`` + ``evaluate_policy`` is the global policy
evaluation used by PI-FP.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .game import StochasticGame, StrategyProfile, build_payoff_tensor, expected_profile_payoff

PIVOT_TOL = 1e-12
RESIDUAL_TOL = 1e-8


class NonAbsorbingChainError(np.linalg.LinAlgError):
    """``I - P`` is singular: some states never reach a terminal state."""

    def __init__(self, states: list[str], message: str | None = None):
        self.states = states
        super().__init__(message or f"non-absorbing chain: states {states} do not reach a terminal state")


@dataclass(frozen=True)
class InducedChain:
    """Markov chain over nonterminal states induced by a strategy profile.

    Attributes
    ----------
    states : ndarray of int, shape (U,)
        Game state id of each row.
    P : ndarray, shape (U, U)
        Substochastic transition matrix; the row deficit is the probability
        of absorbing in a terminal state.
    r : ndarray, shape (U, n_players)
        Expected one-step reward, terminal payoffs folded in.
    base : ndarray, shape (n_states, n_players)
        Terminal payoffs, used to assemble a full ValueTable.
    state_names : tuple of str
    """

    states: np.ndarray
    P: np.ndarray
    r: np.ndarray
    base: np.ndarray
    state_names: tuple[str, ...]


def _joint_weights(strategies) -> np.ndarray:
    """Product distribution over joint profiles, shape (A_0, ..., A_{n-1})."""
    w = np.ones(())
    for sigma in strategies:
        w = np.multiply.outer(w, np.asarray(sigma, dtype=float))
    return w


def value_iteration_update(game: StochasticGame, profile: StrategyProfile, values: np.ndarray) -> np.ndarray:
    """One synchronous backup of every nonterminal state under ``profile``."""
    values = np.asarray(values, dtype=float)
    new = values.copy()
    for s in game.nonterminal_states:
        new[s] = expected_profile_payoff(build_payoff_tensor(game, s, values), profile[s])
    return new


def create_transition_matrix(game: StochasticGame, profile: StrategyProfile) -> InducedChain:
    nonterminal = game.nonterminal_states
    row_of = {s: k for k, s in enumerate(nonterminal)}
    base = game.terminal_value_table()
    # column map: nonterminal states to their row, terminals to -1
    col = np.full(game.n_states, -1, dtype=np.int64)
    for s, k in row_of.items():
        col[s] = k
    U, n = len(nonterminal), game.n_players
    P = np.zeros((U, U))
    r = np.zeros((U, n))
    for k, s in enumerate(nonterminal):
        w = _joint_weights(profile[s])[..., None]  # (*A, 1)
        mass = (w * game.next_probs[s]).reshape(-1)
        succ = game.next_states[s].reshape(-1)
        r[k] = np.tensordot(w[..., 0], game.reward(s), axes=w.ndim - 1)
        r[k] += mass @ base[succ]
        live = col[succ] >= 0
        np.add.at(P[k], col[succ[live]], mass[live])
    return InducedChain(
        states=np.asarray(nonterminal, dtype=np.int64),
        P=P,
        r=r,
        base=base,
        state_names=tuple(game.state_names[s] for s in nonterminal),
    )


def _trapped_states(P: np.ndarray, tol: float = 1e-12) -> list[int]:
    """Rows that cannot reach any row with absorption mass."""
    U = P.shape[0]
    leaks = 1.0 - P.sum(axis=1) > tol
    reach = leaks.copy()
    adj = P > 0
    changed = True
    while changed:
        new = reach | (adj & reach[None, :]).any(axis=1)
        changed = bool((new != reach).any())
        reach = new
    return [k for k in range(U) if not reach[k]]


def solve_absorbing(P: np.ndarray, r: np.ndarray, names=None) -> np.ndarray:
    """Solve ``(I - P) v = r`` by LU with partial pivoting.

    ``r`` may hold several right-hand sides as columns; the factorization is
    shared. Raises :class:`NonAbsorbingChainError` when a pivot falls below
    1e-12 in magnitude.
    """
    U = P.shape[0]
    if U == 0:
        return np.zeros_like(r)
    A = np.eye(U) - P
    with warnings.catch_warnings():
        # singularity is detected below from the pivots
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    if np.min(np.abs(np.diag(lu))) < PIVOT_TOL:
        trapped = _trapped_states(P)
        labels = [names[k] if names is not None else k for k in trapped] if trapped else None
        if labels:
            raise NonAbsorbingChainError(labels)
        raise NonAbsorbingChainError([], "non-absorbing chain: I - P is numerically singular")
    return scipy.linalg.lu_solve((lu, piv), r)


def bellman_residual(chain: InducedChain, values: np.ndarray) -> float:
    """``max |v - (P v + r)|`` over nonterminal rows, for a full ValueTable."""
    v = np.asarray(values)[chain.states]
    if v.size == 0:
        return 0.0
    return float(np.max(np.abs(v - (chain.P @ v + chain.r))))


def evaluate_policy(chain: InducedChain) -> np.ndarray:
    """Total expected reward of every player from every state.

    Returns
    -------
    ndarray, shape (n_states, n_players)
        Full ValueTable; terminal rows hold the terminal payoffs.
    """
    v = solve_absorbing(chain.P, chain.r, chain.state_names)
    table = chain.base.copy()
    table[chain.states] = v
    residual = bellman_residual(chain, table)
    if not residual <= RESIDUAL_TOL:
        raise np.linalg.LinAlgError(f"policy evaluation residual {residual:.3e} exceeds {RESIDUAL_TOL:g}")
    return table


def max_dev(a: np.ndarray, b: np.ndarray) -> float:
    """Largest absolute entrywise difference of two ValueTables."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"value tables differ in shape: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))
