import numpy as np
import pytest

import stocheq.solver as solver_mod
from stocheq.datasets import make_random_game
from stocheq.expost import ex_post_epsilon
from stocheq.game import StochasticGame, build_payoff_tensor
from stocheq.hostility import build_hostility_game
from stocheq.solver import (
    SolverConfig,
    StageSolveError,
    partition_states,
    run_pi_fp,
    run_vi_fp,
    solve,
    solve_all_stages,
)
from stocheq.stage import FixedIterations, RegretThreshold, solve_stage_game
from stocheq.values import NonAbsorbingChainError

from conftest import slow_vi_game, tiny_spec, trap_game


def config(algorithm="pi_fp", fp=200, **kw):
    return SolverConfig(algorithm=algorithm, stage_stop=FixedIterations(fp), **kw)


class TestPartition:
    @pytest.mark.parametrize(
        "n, d, sizes",
        [(10, 3, [4, 3, 3]), (6, 6, [1] * 6), (3, 5, [1, 1, 1, 0, 0]), (7, 1, [7]), (0, 2, [0, 0])],
    )
    def test_sizes(self, n, d, sizes):
        chunks = partition_states(range(n), d)
        assert [len(c) for c in chunks] == sizes
        assert [s for c in chunks for s in c] == list(range(n))

    def test_bad_d(self):
        with pytest.raises(ValueError):
            partition_states(range(3), 0)


class TestConfig:
    def test_algorithm_spelling(self):
        assert SolverConfig(algorithm="VI-FP").algorithm == "vi_fp"

    @pytest.mark.parametrize(
        "kw",
        [
            {"algorithm": "qlearn"},
            {"max_outer_iterations": None, "value_delta": None},
            {"max_outer_iterations": 0},
            {"value_delta": -1.0},
            {"workers": 0},
            {"strategy_init": "biased"},
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_describe(self):
        d = config(fp=50).describe()
        assert d["stage_stop"] == {"kind": "FixedIterations", "iterations": 50}

    def test_wrong_runner(self, game):
        with pytest.raises(ValueError):
            run_vi_fp(game, config("pi_fp"))
        with pytest.raises(ValueError):
            run_pi_fp(game, config("vi_fp"))


class TestSolveAllStages:
    def test_matches_per_state_solve(self):
        g = make_random_game(2, n_players=3, n_nonterminal=4)
        v = g.terminal_value_table()
        profile, regrets = solve_all_stages(g, v, FixedIterations(100), workers=2)
        for s in g.nonterminal_states:
            sol = solve_stage_game(build_payoff_tensor(g, s, v), FixedIterations(100))
            for a, b in zip(profile[s], sol.strategies):
                assert np.array_equal(a, b)
            assert regrets[s] == sol.regret

    @pytest.mark.parametrize("workers", [2, 3, 6, 50])
    def test_worker_count_invariance(self, small_game, workers):
        v = small_game.terminal_value_table()
        ref, ref_r = solve_all_stages(small_game, v, FixedIterations(100), workers=1)
        got, got_r = solve_all_stages(small_game, v, FixedIterations(100), workers=workers)
        assert ref_r == got_r
        for s in ref:
            for a, b in zip(ref[s], got[s]):
                assert np.array_equal(a, b)

    def test_reads_snapshot_not_caller_array(self, monkeypatch, game):
        seen = []
        real = solver_mod.build_payoff_tensor

        def spy(g, s, values):
            seen.append(values.flags.writeable)
            return real(g, s, values)

        monkeypatch.setattr(solver_mod, "build_payoff_tensor", spy)
        v = game.terminal_value_table()
        solve_all_stages(game, v, FixedIterations(5))
        assert seen and not any(seen)
        assert v.flags.writeable

    def test_failure_names_state(self, monkeypatch, game):
        real = solver_mod.solve_stage_game

        def boom(tensor, stop=None, init=None):
            if tensor.shape[1:] == (1, 1):
                raise FloatingPointError("overflow")
            return real(tensor, stop, init)

        monkeypatch.setattr(solver_mod, "solve_stage_game", boom)
        with pytest.raises(StageSolveError, match="'S1'") as info:
            solve_all_stages(game, game.terminal_value_table(), FixedIterations(5), workers=2)
        assert info.value.state_name == "S1"


class TestRuns:
    def test_single_state_game(self):
        # prisoner's dilemma stage leading straight to terminal states
        g = StochasticGame(
            n_players=2,
            state_names=["S", "CC", "CD", "DC", "DD"],
            terminal_payoffs={1: [3.0, 3.0], 2: [0.0, 5.0], 3: [5.0, 0.0], 4: [1.0, 1.0]},
            next_states={0: np.array([[[1], [2]], [[3], [4]]])},
            next_probs={0: np.ones((2, 2, 1))},
        )
        for alg in ("vi_fp", "pi_fp"):
            report = solve(g, config(alg, fp=20))
            assert report.final_epsilon == 0.0
            np.testing.assert_array_equal(report.values[0], [1.0, 1.0])
            assert report.converged and len(report.records) == 2

    def test_deterministic_chain(self):
        # S0 -> S1 -> S2 -> T with one action each: values are exact after 3 backups
        g = StochasticGame(
            n_players=1,
            state_names=["S0", "S1", "S2", "T"],
            terminal_payoffs={3: [7.0]},
            next_states={0: np.array([[1]]), 1: np.array([[2]]), 2: np.array([[3]])},
            next_probs={k: np.ones((1, 1)) for k in range(3)},
        )
        vi = run_vi_fp(g, config("vi_fp", fp=1, value_delta=0.0))
        assert [r.max_value_dev for r in vi.records] == [7.0, 7.0, 7.0, 0.0]
        pi = run_pi_fp(g, config("pi_fp", fp=1, value_delta=0.0))
        assert len(pi.records) == 2
        np.testing.assert_array_equal(pi.values[:3, 0], 7.0)

    def test_iteration_cap_fills_trace(self):
        g = build_hostility_game(tiny_spec())
        report = run_vi_fp(g, config("vi_fp", fp=50, max_outer_iterations=4, value_delta=None))
        assert [r.outer_iter for r in report.records] == [1, 2, 3, 4]
        assert not report.converged and report.halted_by == "max_outer_iterations"
        assert len(report.trace()) == 4 and len(report.trace(timings=False)[0]) == 3

    def test_delta_stop(self):
        g = build_hostility_game(tiny_spec())
        report = run_pi_fp(g, config(fp=2000, max_outer_iterations=None, value_delta=1e-4))
        assert report.converged and report.halted_by == "value_delta"
        assert report.records[-1].max_value_dev <= 1e-4

    def test_recorded_epsilon_is_reproducible(self):
        g = build_hostility_game(tiny_spec())
        report = run_pi_fp(g, config(fp=500, max_outer_iterations=3))
        assert ex_post_epsilon(g, report.profile)[0] == report.final_epsilon

    def test_epsilon_trace_off(self):
        g = build_hostility_game(tiny_spec())
        report = run_pi_fp(g, config(fp=50, max_outer_iterations=2, epsilon_trace=False))
        assert np.isnan(report.epsilons).all()

    def test_random_init_reproducible_across_workers(self, small_game):
        cfg = dict(fp=100, max_outer_iterations=2, strategy_init="random", seed=3)
        a = run_pi_fp(small_game, config(workers=1, **cfg))
        b = run_pi_fp(small_game, config(workers=4, **cfg))
        assert np.array_equal(a.epsilons, b.epsilons)
        assert np.array_equal(a.values, b.values)
        c = run_pi_fp(small_game, config(workers=1, **{**cfg, "seed": 4}))
        assert not np.array_equal(a.values, c.values)

    def test_regret_threshold_stop(self):
        g = build_hostility_game(tiny_spec())
        report = run_pi_fp(g, SolverConfig(stage_stop=RegretThreshold(0.5), max_outer_iterations=3))
        assert all(r.max_stage_regret <= 0.5 for r in report.records)


class TestSlowValueIteration:
    def test_vi_stalls_pi_escapes(self):
        g = slow_vi_game()
        vi = run_vi_fp(g, config("vi_fp", fp=100, initial_values=1000.0))
        pi = run_pi_fp(g, config("pi_fp", fp=100, initial_values=1000.0))
        assert not vi.converged and len(vi.records) == 25
        assert vi.final_epsilon == pytest.approx(45.0)
        assert pi.converged and len(pi.records) <= 3
        assert pi.final_epsilon == 0.0
        assert pi.values[0, 0] == 95.0


class TestNonAbsorbing:
    def test_pi_reports_iteration_and_state(self):
        with pytest.raises(NonAbsorbingChainError, match="outer iteration 1") as info:
            run_pi_fp(trap_game(), config(fp=10))
        assert info.value.states == ["L"]

    def test_vi_runs_on_same_game(self):
        report = run_vi_fp(trap_game(), config("vi_fp", fp=10, max_outer_iterations=3, epsilon_trace=False))
        assert report.converged
        np.testing.assert_array_equal(report.values[0], 0.0)
