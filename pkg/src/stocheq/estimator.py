"""scikit-learn style front end for the stochastic game solvers."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .expost import ex_post_epsilon
from .hostility import HostilityGameSpec, build_hostility_game
from .solver import SolverConfig, solve
from .stage import FixedIterations, MinRegretIterations, RegretThreshold
from .validation import check_game, check_profile


class StochasticGameSolver(BaseEstimator):
    """Approximate Nash equilibrium of a stochastic game via VI-FP or PI-FP.

    Parameters
    ----------
    algorithm : {"pi_fp", "vi_fp"}, default="pi_fp"
    fp_iters : int, default=10_000
        Fictitious-play rounds per stage game and outer iteration.
    fp_min_regret : bool, default=False
        Return the lowest-regret average seen instead of the last one.
    gamma : float or None, default=None
        If set, stop FP at the first ``gamma``-equilibrium (``fp_iters`` then
        acts as the iteration cap).
    outer_iters : int or None, default=25
    delta : float or None, default=1e-4
        Halt once no value moves by more than ``delta``.
    workers : int, default=1
    seed : int, default=0
    init_values : {"zero", "pessimistic"} or float, default="zero"
    strategy_init : {"uniform", "random"}, default="uniform"
    epsilon_trace : bool, default=True
        Compute the ex-post epsilon after every outer iteration.

    Attributes
    ----------
    game_ : StochasticGame
    profile_ : dict
        State id to a tuple of per-player mixed strategies.
    values_ : ndarray of shape (n_states, n_players)
    report_ : ConvergenceReport
    converged_ : bool
    n_iter_ : int
    """

    def __init__(
        self,
        algorithm="pi_fp",
        fp_iters=10_000,
        fp_min_regret=False,
        gamma=None,
        outer_iters=25,
        delta=1e-4,
        workers=1,
        seed=0,
        init_values="zero",
        strategy_init="uniform",
        epsilon_trace=True,
    ):
        self.algorithm = algorithm
        self.fp_iters = fp_iters
        self.fp_min_regret = fp_min_regret
        self.gamma = gamma
        self.outer_iters = outer_iters
        self.delta = delta
        self.workers = workers
        self.seed = seed
        self.init_values = init_values
        self.strategy_init = strategy_init
        self.epsilon_trace = epsilon_trace

    def _stage_stop(self):
        if self.gamma is not None:
            if self.fp_min_regret:
                raise ValueError("gamma and fp_min_regret are mutually exclusive")
            return RegretThreshold(float(self.gamma), int(self.fp_iters))
        if self.fp_min_regret:
            return MinRegretIterations(int(self.fp_iters))
        return FixedIterations(int(self.fp_iters))

    def get_config(self) -> SolverConfig:
        return SolverConfig(
            algorithm=self.algorithm,
            stage_stop=self._stage_stop(),
            max_outer_iterations=self.outer_iters,
            value_delta=self.delta,
            workers=int(self.workers),
            seed=int(self.seed),
            initial_values=self.init_values,
            strategy_init=self.strategy_init,
            epsilon_trace=self.epsilon_trace,
        )

    def fit(self, game, y=None):
        """Solve ``game`` (a StochasticGame or HostilityGameSpec)."""
        if isinstance(game, HostilityGameSpec):
            game = build_hostility_game(game)
        game = check_game(game)
        report = solve(game, self.get_config())
        self.game_ = game
        self.report_ = report
        self.profile_ = report.profile
        self.values_ = report.values
        self.converged_ = report.converged
        self.n_iter_ = len(report.records)
        return self

    def predict_proba(self, state) -> tuple[np.ndarray, ...]:
        """Mixed strategy of every player at ``state`` (id or name)."""
        check_is_fitted(self, "profile_")
        s = self.game_.state_index(state) if isinstance(state, str) else int(state)
        if s not in self.profile_:
            raise ValueError(f"state {self.game_.state_names[s]!r} is terminal")
        return self.profile_[s]

    def predict(self, states=None) -> np.ndarray:
        """Most likely action of every player, shape ``(len(states), n_players)``."""
        check_is_fitted(self, "profile_")
        if states is None:
            states = self.game_.nonterminal_states
        return np.array([[int(np.argmax(w)) for w in self.predict_proba(s)] for s in states], dtype=np.int64)

    def score(self, game=None, y=None) -> float:
        """Negative ex-post epsilon of the fitted profile (higher is better).

        ``game`` defaults to the fitted game; any game with the same state
        and action structure is accepted.
        """
        check_is_fitted(self, "profile_")
        if game is None:
            game = self.game_
        elif isinstance(game, HostilityGameSpec):
            game = build_hostility_game(game)
        profile = check_profile(check_game(game), self.profile_)
        return -ex_post_epsilon(game, profile, int(self.workers))[0]
