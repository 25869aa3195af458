"""Fictitious play on a single stage game.

A stage game is given by its payoff tensor of shape ``(n_players, A_0, ...,
A_{n-1})``. Players update simultaneously: at round ``t`` each player best
responds to the opponents' averages from round ``t - 1`` and then every
average moves a ``1/t`` step toward the pure best response.

The iteration loop lives in a numba kernel compiled with ``nogil=True`` so
that many stage games can be solved on a thread pool in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numba
import numpy as np

from .game import expected_profile_payoff
from .validation import check_simplex

REGRET_ITERATION_CAP = 10**6


@dataclass(frozen=True)
class FixedIterations:
    """Run exactly ``iterations`` rounds and return the final averages."""

    iterations: int

    def __post_init__(self):
        if int(self.iterations) < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")


@dataclass(frozen=True)
class RegretThreshold:
    """Stop at the first round whose averages are a ``gamma``-equilibrium.

    FP need not converge with more than two players, so the loop is capped at
    ``max_iterations``.
    """

    gamma: float
    max_iterations: int = REGRET_ITERATION_CAP

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if int(self.max_iterations) < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass(frozen=True)
class MinRegretIterations:
    """Run ``iterations`` rounds, return the averages with the lowest regret seen."""

    iterations: int

    def __post_init__(self):
        if int(self.iterations) < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")


StoppingCondition = Union[FixedIterations, RegretThreshold, MinRegretIterations]


@dataclass(frozen=True)
class StageSolution:
    strategies: tuple[np.ndarray, ...]
    regret: float
    iterations_run: int


def _check_tensor(tensor) -> np.ndarray:
    tensor = np.asarray(tensor, dtype=float)
    if tensor.ndim < 2 or tensor.ndim != tensor.shape[0] + 1:
        raise ValueError(f"payoff tensor must have shape (n, A_0, ..., A_(n-1)), got {tensor.shape}")
    return tensor


def action_values(tensor, strategies: Sequence[np.ndarray], player: int) -> np.ndarray:
    """Expected payoff of each of ``player``'s actions against the others' strategies.

    ``strategies[player]`` is ignored.
    """
    tensor = _check_tensor(tensor)
    n = tensor.shape[0]
    if len(strategies) != n:
        raise ValueError(f"{len(strategies)} strategies for a {n}-player tensor")
    out = tensor[player]
    # contract from the last axis down so axis j is still at position j
    for j in reversed(range(n)):
        if j == player:
            continue
        sigma = np.asarray(strategies[j], dtype=float)
        if sigma.shape != (out.shape[j],):
            raise ValueError(f"strategy {j} has shape {sigma.shape}, expected ({out.shape[j]},)")
        out = np.tensordot(out, sigma, axes=([j], [0]))
    return out


def best_response(tensor, strategies: Sequence[np.ndarray], player: int) -> tuple[int, float]:
    """Pure best response of ``player``; ties go to the lowest action index."""
    values = action_values(tensor, strategies, player)
    action = int(np.argmax(values))
    return action, float(values[action])


def fp_update(average, br_action: int, t: int) -> np.ndarray:
    """One fictitious-play averaging step: ``(1 - 1/t) * average + (1/t) * e_br``."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    average = np.asarray(average, dtype=float)
    out = (1.0 - 1.0 / t) * average
    out[br_action] += 1.0 / t
    return out


def max_regret(tensor, strategies: Sequence[np.ndarray]) -> float:
    """Largest gain any single player can get by deviating from ``strategies``."""
    tensor = _check_tensor(tensor)
    current = expected_profile_payoff(tensor, strategies)
    gains = [action_values(tensor, strategies, i).max() - current[i] for i in range(tensor.shape[0])]
    return max(0.0, float(max(gains)))


def uniform_strategies(shape: Sequence[int]) -> tuple[np.ndarray, ...]:
    return tuple(np.full(k, 1.0 / k) for k in shape)


def random_strategies(shape: Sequence[int], rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    """Draw each player's initial strategy uniformly from the simplex."""
    return tuple(rng.dirichlet(np.ones(k)) for k in shape)


# ---------------------------------------------------------------------------
# compiled kernel
# ---------------------------------------------------------------------------

_MODE_FIXED, _MODE_THRESHOLD, _MODE_MIN_REGRET = 0, 1, 2


def _pack(tensor: np.ndarray):
    """Lay out each player's payoffs with opponent axes first, own axis last."""
    n = tensor.shape[0]
    sizes = np.array(tensor.shape[1:], dtype=np.int64)
    blocks, offsets, order = [], np.zeros(n + 1, dtype=np.int64), np.zeros((n, max(n - 1, 1)), dtype=np.int64)
    for i in range(n):
        opponents = [j for j in range(n) if j != i]
        order[i, : n - 1] = opponents
        blocks.append(np.ascontiguousarray(np.transpose(tensor[i], opponents + [i])).ravel())
        offsets[i + 1] = offsets[i] + blocks[-1].size
    return np.concatenate(blocks), offsets, order, sizes


@numba.njit(cache=True, nogil=True)
def _all_action_values(flat, offsets, order, sizes, avg, out, buf_a, buf_b):
    n = sizes.shape[0]
    for i in range(n):
        length = offsets[i + 1] - offsets[i]
        cur = buf_a
        for k in range(length):
            cur[k] = flat[offsets[i] + k]
        nxt = buf_b
        for oi in range(n - 1):
            j = order[i, oi]
            a_j = sizes[j]
            rest = length // a_j
            for k in range(rest):
                nxt[k] = 0.0
            for a in range(a_j):
                w = avg[j, a]
                if w != 0.0:
                    base = a * rest
                    for k in range(rest):
                        nxt[k] += w * cur[base + k]
            length = rest
            cur, nxt = nxt, cur
        for a in range(sizes[i]):
            out[i, a] = cur[a]


@numba.njit(cache=True, nogil=True)
def _profile_regret(avg, values, sizes):
    worst = 0.0
    for i in range(sizes.shape[0]):
        best = values[i, 0]
        current = 0.0
        for a in range(sizes[i]):
            if values[i, a] > best:
                best = values[i, a]
            current += avg[i, a] * values[i, a]
        gain = best - current
        if gain > worst:
            worst = gain
    return worst


@numba.njit(cache=True, nogil=True)
def _fictitious_play(flat, offsets, order, sizes, init, iterations, mode, gamma):
    n = sizes.shape[0]
    width = init.shape[1]
    buf_len = 1
    for i in range(n):
        if offsets[i + 1] - offsets[i] > buf_len:
            buf_len = offsets[i + 1] - offsets[i]
    buf_a = np.empty(buf_len)
    buf_b = np.empty(buf_len)
    values = np.zeros((n, width))
    avg = init.copy()
    best = init.copy()
    best_regret = np.inf
    best_iter = 0
    for t in range(1, iterations + 1):
        _all_action_values(flat, offsets, order, sizes, avg, values, buf_a, buf_b)
        if t > 1:
            regret = _profile_regret(avg, values, sizes)
            if mode == 1 and regret <= gamma:
                return avg, regret, t - 1
            if mode == 2 and regret < best_regret:
                best_regret = regret
                best[:, :] = avg
                best_iter = t - 1
        step = 1.0 / t
        keep = 1.0 - step
        for i in range(n):
            br = 0
            for a in range(1, sizes[i]):
                if values[i, a] > values[i, br]:
                    br = a
            for a in range(sizes[i]):
                avg[i, a] *= keep
            avg[i, br] += step
    _all_action_values(flat, offsets, order, sizes, avg, values, buf_a, buf_b)
    regret = _profile_regret(avg, values, sizes)
    if mode == 2 and best_regret <= regret:
        return best, best_regret, best_iter
    return avg, regret, iterations


def solve_stage_game(tensor, stop: StoppingCondition | None = None, init: Sequence[np.ndarray] | None = None) -> StageSolution:
    """Run simultaneous fictitious play on one stage game.

    Parameters
    ----------
    tensor : ndarray, shape (n_players, A_0, ..., A_{n-1})
    stop : StoppingCondition, default ``FixedIterations(10_000)``
    init : per-player initial strategies, default uniform

    Returns
    -------
    StageSolution
        ``iterations_run`` is the round whose averages are returned. Failing
        to reach a regret threshold is not an error; the returned regret
        shows how far off the profile is.
    """
    tensor = _check_tensor(tensor)
    shape = tensor.shape[1:]
    n = len(shape)
    if stop is None:
        stop = FixedIterations(10_000)
    if init is None:
        init = uniform_strategies(shape)
    if len(init) != n:
        raise ValueError(f"{len(init)} initial strategies for {n} players")
    packed_init = np.zeros((n, max(shape)))
    for i, sigma in enumerate(init):
        sigma = check_simplex(sigma, name=f"initial strategy of player {i}")
        if sigma.shape != (shape[i],):
            raise ValueError(f"initial strategy of player {i} has {sigma.size} weights for {shape[i]} actions")
        packed_init[i, : shape[i]] = sigma

    if isinstance(stop, FixedIterations):
        mode, iterations, gamma = _MODE_FIXED, int(stop.iterations), 0.0
    elif isinstance(stop, RegretThreshold):
        mode, iterations, gamma = _MODE_THRESHOLD, int(stop.max_iterations), float(stop.gamma)
    elif isinstance(stop, MinRegretIterations):
        mode, iterations, gamma = _MODE_MIN_REGRET, int(stop.iterations), 0.0
    else:
        raise TypeError(f"unsupported stopping condition {stop!r}")

    flat, offsets, order, sizes = _pack(tensor)
    avg, regret, run = _fictitious_play(flat, offsets, order, sizes, packed_init, iterations, mode, gamma)
    strategies = tuple(avg[i, : shape[i]].copy() for i in range(n))
    return StageSolution(strategies=strategies, regret=max(0.0, float(regret)), iterations_run=int(run))
