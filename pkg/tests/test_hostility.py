import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stocheq.game import validate_game
from stocheq.hostility import (
    SpecError,
    build_hostility_game,
    generate_default_spec,
    hostility_levels,
    parse_spec,
    resolve_outcome,
    serialize_spec,
    spec_hash,
    spec_to_dict,
)

from conftest import make_spec, tiny_spec

SPECS = sorted((Path(__file__).resolve().parents[1] / "specs").glob("*.json"))


def one_red(**probs):
    return make_spec({"Blue": ["b1"], "Red": ["r1"]}, counters={"Red": {"r1": ["b1"]}}, **probs)


class TestResolveOutcome:
    def test_certain_blue_win(self):
        spec = one_red(b_def=1.0, r_def=0.0)
        assert resolve_outcome(spec, ["b1", "r1"]) == (1.0, 0.0, 0.0)

    def test_certain_repeat(self):
        spec = one_red(b_def=0.0, r_def=0.0)
        assert resolve_outcome(spec, ["b1", "r1"]) == (0.0, 0.0, 1.0)

    def test_uncountered_mixture(self):
        # b_undef = 0.6, r_undef = 0.5: blue 0.6 * 0.5, red 0.5 * 0.4
        spec = make_spec({"Blue": ["b1"], "Red": ["r1"]}, b_undef=0.6, r_undef=0.5)
        np.testing.assert_allclose(resolve_outcome(spec, ["b1", "r1"]), [0.3, 0.2, 0.5])

    def test_counter_switches_tables(self):
        spec = make_spec(
            {"Blue": ["b1", "b2"], "Red": ["r1"]},
            counters={"Red": {"r1": ["b2"]}},
            b_def=0.2,
            b_undef=0.6,
            r_def=0.1,
            r_undef=0.5,
        )
        np.testing.assert_allclose(resolve_outcome(spec, ["b1", "r1"]), [0.3, 0.2, 0.5])
        np.testing.assert_allclose(resolve_outcome(spec, ["b2", "r1"]), [0.18, 0.08, 0.74])

    def test_two_reds_aggregate(self):
        # one red countered, one not: q_B = (0.2 + 0.6) / 2, q_R = 1 - 0.9 * 0.5
        spec = make_spec(
            {"Blue": ["b1"], "R1": ["x"], "R2": ["y"]},
            counters={"R1": {"x": ["b1"]}, "R2": {"y": []}},
        )
        q_b, q_r = 0.4, 0.55
        np.testing.assert_allclose(
            resolve_outcome(spec, ["b1", "x", "y"]), [q_b * (1 - q_r), q_r * (1 - q_b), 1 - 0.18 - 0.33]
        )

    def test_unknown_move(self):
        with pytest.raises(ValueError, match="unknown move"):
            resolve_outcome(one_red(), ["b1", "zz"])

    @settings(max_examples=50, deadline=None)
    @given(
        probs=st.lists(st.floats(0, 1), min_size=4, max_size=4),
        countered=st.booleans(),
    )
    def test_outcome_is_distribution(self, probs, countered):
        b_def, b_undef, r_def, r_undef = probs
        spec = make_spec(
            {"Blue": ["b1"], "Red": ["r1"]},
            counters={"Red": {"r1": ["b1"] if countered else []}},
            b_def=b_def,
            b_undef=b_undef,
            r_def=r_def,
            r_undef=r_undef,
        )
        out = np.array(resolve_outcome(spec, ["b1", "r1"]))
        assert (out >= -1e-15).all()
        assert out.sum() == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(b=st.floats(0, 0.99), step=st.floats(0.001, 0.01), r=st.floats(0, 1))
    def test_blue_win_monotone_in_blue_success(self, b, step, r):
        lo = make_spec({"Blue": ["b1"], "Red": ["r1"]}, b_undef=b, r_undef=r)
        hi = make_spec({"Blue": ["b1"], "Red": ["r1"]}, b_undef=min(1.0, b + step), r_undef=r)
        assert resolve_outcome(hi, ["b1", "r1"]).p_blue_win >= resolve_outcome(lo, ["b1", "r1"]).p_blue_win


class TestBuildGame:
    def test_state_count_large_threshold(self):
        spec = make_spec({"Blue": ["b1", "b2"], "Red": ["r1"]}, K=300.0)
        g = build_hostility_game(spec)
        assert g.n_states == 303
        assert g.state_names[:2] == ("G0", "G1") and g.state_names[-3:] == ("G300", "B", "R")

    def test_chain_of_fives(self):
        # all probabilities zero: every round repeats and hostility grows by 5
        spec = make_spec(
            {"Blue": ["b1"], "Red": ["r1"]},
            hostility={"Blue": {"b1": 2.0}, "Red": {"r1": 3.0}},
            K=10.0,
            b_def=0.0,
            b_undef=0.0,
            r_def=0.0,
            r_undef=0.0,
        )
        g = build_hostility_game(spec)
        assert g.outcome(g.state_index("G0"), (0, 0)) == [(g.state_index("G5"), 1.0)]
        assert g.outcome(g.state_index("G5"), (0, 0)) == [(g.state_index("G10"), 1.0)]
        assert g.is_terminal(g.state_index("G10"))

    def test_terminal_payoffs(self, small_spec, small_game):
        g = small_game
        reds = len(small_spec.reds)
        np.testing.assert_array_equal(g.terminal_payoffs[g.state_index("B")], [100.0] + [-100.0] * reds)
        np.testing.assert_array_equal(g.terminal_payoffs[g.state_index("R")], [-100.0] + [100.0] * reds)
        np.testing.assert_array_equal(g.terminal_payoffs[g.state_index(f"G{int(small_spec.K)}")], -200.0)

    def test_win_payoffs_sum_to_zero_head_to_head(self):
        g = build_hostility_game(make_spec({"Blue": ["b1"], "Red": ["r1"]}))
        for name in ("B", "R"):
            assert g.terminal_payoffs[g.state_index(name)].sum() == 0.0

    def test_transitions_only_move_forward(self, small_game):
        for s in small_game.nonterminal_states:
            succ = small_game.next_states[s]
            probs = small_game.next_probs[s]
            assert (succ[probs > 0] > s).all()

    def test_outcome_shared_across_levels(self, small_game):
        first = small_game.next_probs[0]
        assert all(small_game.next_probs[s] is first for s in small_game.nonterminal_states)

    def test_validates(self, small_game):
        assert validate_game(small_game) == []

    def test_fractional_hostility_materializes_reachable_sums(self):
        spec = make_spec(
            {"Blue": ["b1"], "Red": ["r1", "r2"]},
            hostility={"Blue": {"b1": 0.5}, "Red": {"r1": 1.0, "r2": 2.0}},
            K=4.0,
        )
        assert hostility_levels(spec) == [0.0, 1.5, 2.5, 3.0]
        g = build_hostility_game(spec)
        assert g.state_names == ("G0", "G1.5", "G2.5", "G3", "G4", "B", "R")
        assert validate_game(g) == []

    def test_fractional_threshold(self):
        spec = make_spec({"Blue": ["b1"], "Red": ["r1"]}, K=2.5)
        assert build_hostility_game(spec).state_names == ("G0", "G1", "G2", "G2.5", "B", "R")

    def test_nonpositive_hostility_rejected(self):
        spec = make_spec({"Blue": ["b1"], "Red": ["r1"]}, hostility={"Blue": {"b1": 0.0}, "Red": {"r1": 1.0}})
        with pytest.raises(ValueError, match="positive"):
            build_hostility_game(spec)

    def test_tiny_spec_shape(self):
        g = build_hostility_game(tiny_spec())
        assert len(g.nonterminal_states) == 3
        assert g.action_labels(0, 0) == ("b1", "b2")


class TestGenerateSpec:
    def test_deterministic(self):
        assert serialize_spec(generate_default_spec(3)) == serialize_spec(generate_default_spec(3))
        assert spec_hash(generate_default_spec(3)) != spec_hash(generate_default_spec(4))

    @pytest.mark.parametrize("seed", range(3))
    def test_paper_scale_move_counts(self, seed):
        spec = generate_default_spec(seed, "paper_scale")
        assert spec.K == 300.0
        assert len(spec.reds) == 3
        assert all(7 <= len(ms) <= 10 for ms in spec.moves.values())

    @pytest.mark.parametrize("seed", range(5))
    def test_defended_below_undefended(self, seed):
        spec = generate_default_spec(seed)
        for b in spec.b_def:
            for red in spec.reds:
                assert spec.b_def[b][red] <= spec.b_undef[b][red]
        for red in spec.reds:
            for m in spec.moves[red]:
                assert spec.r_def[red][m] <= spec.r_undef[red][m]

    def test_unknown_profile(self):
        with pytest.raises(ValueError, match="size profile"):
            generate_default_spec(0, "huge")


class TestSerialization:
    @pytest.mark.parametrize("seed", range(3))
    def test_round_trip(self, seed):
        spec = generate_default_spec(seed)
        text = serialize_spec(spec)
        again = parse_spec(text)
        assert serialize_spec(again) == text
        assert spec_hash(again) == spec_hash(spec)

    def test_probability_out_of_range_names_field(self):
        data = spec_to_dict(tiny_spec())
        data["probabilities"]["b_undef"]["b2"]["Red"] = 1.5
        with pytest.raises(SpecError) as info:
            parse_spec(json.dumps(data))
        assert info.value.path == "probabilities.b_undef.b2.Red"

    def test_missing_threshold(self):
        data = spec_to_dict(tiny_spec())
        del data["K"]
        with pytest.raises(SpecError, match="missing field K"):
            parse_spec(json.dumps(data))

    def test_bad_json(self):
        with pytest.raises(SpecError):
            parse_spec("{not json")

    def test_counters_only_for_red(self):
        data = spec_to_dict(tiny_spec())
        data["counters"]["Blue"] = {"b1": ["r1"]}
        with pytest.raises(SpecError, match="counters"):
            parse_spec(json.dumps(data))


@pytest.mark.parametrize("path", SPECS, ids=lambda p: p.name)
def test_shipped_specs_match_schema(path):
    schema = json.loads(resources.files("stocheq").joinpath("data/hostility_spec.schema.json").read_text())
    data = json.loads(path.read_text())
    jsonschema.validate(data, schema)
    parse_spec(path.read_text())


def test_generated_spec_matches_schema():
    schema = json.loads(resources.files("stocheq").joinpath("data/hostility_spec.schema.json").read_text())
    jsonschema.validate(spec_to_dict(generate_default_spec(11, "paper_scale")), schema)
