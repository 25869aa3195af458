"""Outer loops: stage solving alternated with value updates.

Every outer iteration solves all nonterminal stage games against a frozen
snapshot of the current values, possibly on several threads, then updates
the values either locally (``vi_fp``) or by exact policy evaluation
(``pi_fp``).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import values as vu
from .expost import ex_post_epsilon
from .game import StochasticGame, StrategyProfile, build_payoff_tensor
from .stage import FixedIterations, StoppingCondition, random_strategies, solve_stage_game
from .validation import check_game, initial_values

ALGORITHMS = ("vi_fp", "pi_fp")


class StageSolveError(RuntimeError):
    """Stage solving failed at a specific state."""

    def __init__(self, state_name: str, cause: BaseException):
        self.state_name = state_name
        super().__init__(f"stage game at state {state_name!r} failed: {cause}")


@dataclass
class SolverConfig:
    """Settings of one solver run.

    Either stopping rule may be ``None`` but not both. ``initial_values``
    accepts ``"zero"``, ``"pessimistic"``, a constant or a full table.
    ``strategy_init="random"`` seeds each stage's initial FP strategies from
    ``(seed, outer iteration, state)``, so runs stay reproducible for any
    worker count.
    """

    algorithm: str = "pi_fp"
    stage_stop: StoppingCondition = field(default_factory=lambda: FixedIterations(10_000))
    max_outer_iterations: int | None = 25
    value_delta: float | None = 1e-4
    workers: int = 1
    seed: int = 0
    initial_values: Any = "zero"
    strategy_init: str = "uniform"
    epsilon_trace: bool = True

    def __post_init__(self):
        self.algorithm = self.algorithm.replace("-", "_").lower()
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.max_outer_iterations is None and self.value_delta is None:
            raise ValueError("need max_outer_iterations, value_delta, or both")
        if self.max_outer_iterations is not None and self.max_outer_iterations < 1:
            raise ValueError(f"max_outer_iterations must be >= 1, got {self.max_outer_iterations}")
        if self.value_delta is not None and not self.value_delta >= 0:
            raise ValueError(f"value_delta must be >= 0, got {self.value_delta}")
        if int(self.workers) < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.strategy_init not in ("uniform", "random"):
            raise ValueError(f"strategy_init must be 'uniform' or 'random', got {self.strategy_init!r}")

    def describe(self) -> dict[str, Any]:
        """JSON-friendly view, used in run manifests."""
        stop = self.stage_stop
        init = self.initial_values
        return {
            "algorithm": self.algorithm,
            "stage_stop": {"kind": type(stop).__name__, **vars(stop)},
            "max_outer_iterations": self.max_outer_iterations,
            "value_delta": self.value_delta,
            "workers": self.workers,
            "seed": self.seed,
            "initial_values": init if isinstance(init, (str, int, float)) else "custom",
            "strategy_init": self.strategy_init,
            "epsilon_trace": self.epsilon_trace,
        }


@dataclass(frozen=True)
class IterationRecord:
    outer_iter: int
    epsilon: float
    max_value_dev: float
    millis: float
    stage_millis: float
    max_stage_regret: float


@dataclass
class ConvergenceReport:
    algorithm: str
    records: list[IterationRecord]
    profile: StrategyProfile
    values: np.ndarray
    converged: bool
    halted_by: str

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([r.epsilon for r in self.records])

    @property
    def final_epsilon(self) -> float:
        return self.records[-1].epsilon if self.records else math.nan

    def trace(self, timings: bool = True) -> list[tuple]:
        """Rows ``(outer_iter, epsilon, max_value_dev[, millis])``."""
        if timings:
            return [(r.outer_iter, r.epsilon, r.max_value_dev, r.millis) for r in self.records]
        return [(r.outer_iter, r.epsilon, r.max_value_dev) for r in self.records]


def partition_states(states: Sequence[int], d: int) -> list[list[int]]:
    """Split ``states`` into ``d`` contiguous chunks whose sizes differ by at most one.

    >>> [len(c) for c in partition_states(range(10), 3)]
    [4, 3, 3]
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    states = list(states)
    base, extra = divmod(len(states), d)
    chunks, start = [], 0
    for k in range(d):
        size = base + (1 if k < extra else 0)
        chunks.append(states[start : start + size])
        start += size
    return chunks


def _solve_chunk(game, values, chunk, stage_stop, inits):
    out = []
    for s in chunk:
        try:
            tensor = build_payoff_tensor(game, s, values)
            out.append((s, solve_stage_game(tensor, stage_stop, inits.get(s) if inits else None)))
        except Exception as exc:
            raise StageSolveError(game.state_names[s], exc) from exc
    return out


def solve_all_stages(
    game: StochasticGame,
    values: np.ndarray,
    stage_stop: StoppingCondition,
    workers: int = 1,
    inits: dict[int, Sequence[np.ndarray]] | None = None,
) -> tuple[StrategyProfile, dict[int, float]]:
    """Solve every nonterminal stage game against one values snapshot.

    The result depends only on ``(game, values, stage_stop, inits)``; the
    worker count changes the schedule, never the answer.
    """
    snapshot = np.array(values, dtype=float)
    snapshot.setflags(write=False)
    states = game.nonterminal_states
    chunks = [c for c in partition_states(states, max(1, min(workers, len(states)))) if c]
    if len(chunks) == 1:
        results = [_solve_chunk(game, snapshot, chunks[0], stage_stop, inits)]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            futures = [pool.submit(_solve_chunk, game, snapshot, c, stage_stop, inits) for c in chunks]
            results = [f.result() for f in futures]
    slots: dict[int, Any] = {}
    for part in results:
        for s, sol in part:
            slots[s] = sol
    profile = {s: slots[s].strategies for s in states}
    regrets = {s: slots[s].regret for s in states}
    return profile, regrets


def _stage_inits(game, config, outer_iter):
    if config.strategy_init == "uniform":
        return None
    return {
        s: random_strategies(game.num_actions(s), np.random.default_rng([config.seed, outer_iter, s]))
        for s in game.nonterminal_states
    }


def _run(game: StochasticGame, config: SolverConfig) -> ConvergenceReport:
    check_game(game)
    values = initial_values(game, config.initial_values)
    records: list[IterationRecord] = []
    profile: StrategyProfile = {}
    converged, halted_by = False, "max_outer_iterations"
    i = 0
    while True:
        i += 1
        start = time.perf_counter()
        profile, regrets = solve_all_stages(
            game, values, config.stage_stop, config.workers, _stage_inits(game, config, i)
        )
        stage_done = time.perf_counter()
        if config.algorithm == "vi_fp":
            new_values = vu.value_iteration_update(game, profile, values)
        else:
            chain = vu.create_transition_matrix(game, profile)
            try:
                new_values = vu.evaluate_policy(chain)
            except vu.NonAbsorbingChainError as exc:
                raise vu.NonAbsorbingChainError(exc.states, f"outer iteration {i}: {exc}") from exc
        diff = vu.max_dev(new_values, values)
        values = new_values
        epsilon = ex_post_epsilon(game, profile, config.workers)[0] if config.epsilon_trace else math.nan
        end = time.perf_counter()
        records.append(
            IterationRecord(
                outer_iter=i,
                epsilon=epsilon,
                max_value_dev=diff,
                millis=(end - start) * 1e3,
                stage_millis=(stage_done - start) * 1e3,
                max_stage_regret=max(regrets.values()),
            )
        )
        if config.value_delta is not None and diff <= config.value_delta:
            converged, halted_by = True, "value_delta"
            break
        if config.max_outer_iterations is not None and i >= config.max_outer_iterations:
            break
    return ConvergenceReport(
        algorithm=config.algorithm,
        records=records,
        profile=profile,
        values=values,
        converged=converged,
        halted_by=halted_by,
    )


def run_vi_fp(game: StochasticGame, config: SolverConfig | None = None) -> ConvergenceReport:
    """VI-FP: fictitious play per state, then one local value backup.

    Reaching the iteration cap without meeting ``value_delta`` is reported
    with ``converged=False``; it is not an error.
    """
    config = config or SolverConfig(algorithm="vi_fp")
    if config.algorithm != "vi_fp":
        raise ValueError(f"run_vi_fp needs algorithm='vi_fp', got {config.algorithm!r}")
    return _run(game, config)


def run_pi_fp(game: StochasticGame, config: SolverConfig | None = None) -> ConvergenceReport:
    """PI-FP: fictitious play per state, then exact evaluation of the induced chain."""
    config = config or SolverConfig(algorithm="pi_fp")
    if config.algorithm != "pi_fp":
        raise ValueError(f"run_pi_fp needs algorithm='pi_fp', got {config.algorithm!r}")
    return _run(game, config)


def solve(game: StochasticGame, config: SolverConfig) -> ConvergenceReport:
    """Dispatch on ``config.algorithm``."""
    return _run(game, config)
