"""The Hostility Game: one blue player against independent red players.

Each round every player picks a move. Counters decide which success
probabilities apply, the round ends in a blue win, a red win, or a repeat,
and a repeat raises the cumulative hostility by the sum of the chosen moves'
hostility levels. Reaching the threshold ``K`` ends the game in kinetic
mode.

Outcome aggregation over several red players
--------------------------------------------
For blue move ``b`` and red moves ``m_j`` let red player j be *countered*
when ``b`` is in ``counters[j][m_j]``. Then

* blue succeeds with ``q_B = mean_j (b_def[b][j] if countered else b_undef[b][j])``
* red succeeds with ``q_R = 1 - prod_j (1 - (r_def[j][m_j] if countered else r_undef[j][m_j]))``

and the round outcome is ``p_blue = q_B (1 - q_R)``, ``p_red = q_R (1 - q_B)``,
``p_repeat = 1 - p_blue - p_red``. With a single red player this is the
plain two-sided rule.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np

from .game import StochasticGame

MAX_MOVES = 64
RED_TYPES = ("Warship", "Security", "Auxiliary")


class SpecError(ValueError):
    """A hostility spec is malformed; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class OutcomeTriple(NamedTuple):
    p_blue_win: float
    p_red_win: float
    p_repeat: float


@dataclass(frozen=True)
class Player:
    name: str
    side: str  # "blue" or "red"
    kind: str = ""


@dataclass
class HostilityGameSpec:
    """Parameters of a Hostility Game.

    Every mapping is keyed by player and move names. ``counters[red][m]``
    lists the blue moves that counter red move ``m``; ``b_def``/``b_undef``
    are indexed ``[blue move][red player]`` and ``r_def``/``r_undef``
    ``[red player][red move]``.
    """

    players: list[Player]
    moves: dict[str, list[str]]
    counters: dict[str, dict[str, list[str]]]
    b_def: dict[str, dict[str, float]]
    b_undef: dict[str, dict[str, float]]
    r_def: dict[str, dict[str, float]]
    r_undef: dict[str, dict[str, float]]
    blue_win: dict[str, float]
    red_win: dict[str, float]
    kinetic: dict[str, float]
    hostility: dict[str, dict[str, float]]
    K: float
    name: str = field(default="")

    @property
    def player_names(self) -> list[str]:
        return [p.name for p in self.players]

    @property
    def blue(self) -> str:
        return next(p.name for p in self.players if p.side == "blue")

    @property
    def reds(self) -> list[str]:
        return [p.name for p in self.players if p.side == "red"]

    def validate(self) -> "HostilityGameSpec":
        """Raise :class:`SpecError` on the first violated constraint."""
        names = self.player_names
        if len(set(names)) != len(names):
            raise SpecError("players", "player names must be unique")
        sides = [p.side for p in self.players]
        if any(s not in ("blue", "red") for s in sides):
            raise SpecError("players", "side must be 'blue' or 'red'")
        if sides.count("blue") != 1 or sides.count("red") < 1:
            raise SpecError("players", "need exactly one blue player and at least one red player")
        for pl in names:
            moves = self.moves.get(pl)
            if moves is None:
                raise SpecError(f"moves.{pl}", "missing field")
            if not 1 <= len(moves) <= MAX_MOVES:
                raise SpecError(f"moves.{pl}", f"need between 1 and {MAX_MOVES} moves, got {len(moves)}")
            if len(set(moves)) != len(moves):
                raise SpecError(f"moves.{pl}", "move names must be unique")
        blue, reds = self.blue, self.reds
        blue_moves = set(self.moves[blue])
        for key in self.counters:
            if key not in reds:
                raise SpecError(f"counters.{key}", "counters are keyed by red player")
        for red in reds:
            for move, blues in self.counters.get(red, {}).items():
                if move not in self.moves[red]:
                    raise SpecError(f"counters.{red}.{move}", f"unknown move of {red!r}")
                for b in blues:
                    if b not in blue_moves:
                        raise SpecError(f"counters.{red}.{move}", f"unknown blue move {b!r}")
        for key in ("b_def", "b_undef"):
            table = getattr(self, key)
            for b in self.moves[blue]:
                for red in reds:
                    _check_prob(table, f"probabilities.{key}", b, red)
        for key in ("r_def", "r_undef"):
            table = getattr(self, key)
            for red in reds:
                for m in self.moves[red]:
                    _check_prob(table, f"probabilities.{key}", red, m)
        for key in ("blue_win", "red_win", "kinetic"):
            table = getattr(self, key)
            for pl in names:
                if pl not in table:
                    raise SpecError(f"payoffs.{key}.{pl}", "missing field")
                if not math.isfinite(table[pl]):
                    raise SpecError(f"payoffs.{key}.{pl}", "payoff must be finite")
        for pl in names:
            for m in self.moves[pl]:
                h = self.hostility.get(pl, {}).get(m)
                if h is None:
                    raise SpecError(f"hostility.{pl}.{m}", "missing field")
                if not math.isfinite(h):
                    raise SpecError(f"hostility.{pl}.{m}", "hostility must be finite")
        if not (math.isfinite(self.K) and self.K > 0):
            raise SpecError("K", f"threshold must be positive, got {self.K}")
        return self

    def is_countered(self, blue_move: str, red: str, red_move: str) -> bool:
        return blue_move in self.counters.get(red, {}).get(red_move, ())


def _check_prob(table, path, outer, inner):
    try:
        p = table[outer][inner]
    except KeyError:
        raise SpecError(f"{path}.{outer}.{inner}", "missing field") from None
    if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0.0 <= p <= 1.0:
        raise SpecError(f"{path}.{outer}.{inner}", f"probability must be in [0, 1], got {p!r}")


def resolve_outcome(spec: HostilityGameSpec, joint_move: Sequence[str]) -> OutcomeTriple:
    """Win/lose/repeat probabilities of one round; moves are given in player order."""
    names = spec.player_names
    if len(joint_move) != len(names):
        raise ValueError(f"expected {len(names)} moves, got {len(joint_move)}")
    chosen = dict(zip(names, joint_move))
    for pl, m in chosen.items():
        if m not in spec.moves[pl]:
            raise ValueError(f"unknown move {m!r} for player {pl!r}")
    b = chosen[spec.blue]
    blue_success, red_fail = [], 1.0
    for red in spec.reds:
        m = chosen[red]
        if spec.is_countered(b, red, m):
            blue_success.append(spec.b_def[b][red])
            red_fail *= 1.0 - spec.r_def[red][m]
        else:
            blue_success.append(spec.b_undef[b][red])
            red_fail *= 1.0 - spec.r_undef[red][m]
    q_b = math.fsum(blue_success) / len(blue_success)
    q_r = 1.0 - red_fail
    p_blue = q_b * (1.0 - q_r)
    p_red = q_r * (1.0 - q_b)
    return OutcomeTriple(p_blue, p_red, 1.0 - p_blue - p_red)


def _outcome_arrays(spec: HostilityGameSpec):
    """Outcome probabilities and hostility sums over all joint profiles."""
    names = spec.player_names
    n = len(names)
    shape = tuple(len(spec.moves[pl]) for pl in names)
    ib = names.index(spec.blue)
    blue_moves = spec.moves[spec.blue]
    q_b = np.zeros(shape)
    red_fail = np.ones(shape)
    for red in spec.reds:
        j = names.index(red)
        red_moves = spec.moves[red]
        countered = np.array([[spec.is_countered(b, red, m) for m in red_moves] for b in blue_moves])
        b_pair = np.where(
            countered,
            np.array([[spec.b_def[b][red]] * len(red_moves) for b in blue_moves]),
            np.array([[spec.b_undef[b][red]] * len(red_moves) for b in blue_moves]),
        )
        r_pair = np.where(
            countered,
            np.array([[spec.r_def[red][m] for m in red_moves]] * len(blue_moves)),
            np.array([[spec.r_undef[red][m] for m in red_moves]] * len(blue_moves)),
        )
        # place the (blue, red_j) table on axes (ib, j)
        view = [1] * n
        view[ib], view[j] = len(blue_moves), len(red_moves)
        if ib > j:
            b_pair, r_pair = b_pair.T, r_pair.T
        q_b = q_b + b_pair.reshape(view)
        red_fail = red_fail * (1.0 - r_pair.reshape(view))
    q_b = q_b / len(spec.reds)
    q_r = 1.0 - red_fail
    p_blue = q_b * (1.0 - q_r)
    p_red = q_r * (1.0 - q_b)
    p_repeat = 1.0 - p_blue - p_red
    hsum = np.zeros(shape)
    for i, pl in enumerate(names):
        h = np.array([spec.hostility[pl][m] for m in spec.moves[pl]], dtype=float)
        view = [1] * n
        view[i] = shape[i]
        hsum = hsum + h.reshape(view)
    return np.stack([p_blue, p_red, p_repeat], axis=-1), hsum


def _format_level(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def hostility_levels(spec: HostilityGameSpec) -> list[float]:
    """Cumulative hostility values that become nonterminal states.

    Integer hostilities give the full lattice ``0 .. ceil(K) - 1``; otherwise
    only the sums reachable from zero below ``K`` are kept.
    """
    all_h = [spec.hostility[pl][m] for pl in spec.player_names for m in spec.moves[pl]]
    if all(float(h).is_integer() for h in all_h):
        return [float(k) for k in range(math.ceil(spec.K))]
    _, hsum = _outcome_arrays(spec)
    steps = np.unique(hsum)
    levels, frontier = {0.0}, [0.0]
    while frontier:
        nxt = []
        for level in frontier:
            for h in steps:
                x = level + float(h)
                if x < spec.K and x not in levels:
                    levels.add(x)
                    nxt.append(x)
        frontier = nxt
    return sorted(levels)


def build_hostility_game(spec: HostilityGameSpec) -> StochasticGame:
    """Stochastic game on states ``G_0 .. G_{K-1}``, kinetic ``G_K``, ``B`` and ``R``."""
    spec.validate()
    for pl in spec.player_names:
        for m in spec.moves[pl]:
            if spec.hostility[pl][m] <= 0:
                raise ValueError(
                    f"hostility of move {m!r} of {pl!r} is {spec.hostility[pl][m]}; only positive levels are supported"
                )
    outcome, hsum = _outcome_arrays(spec)
    levels = hostility_levels(spec)
    index = {level: k for k, level in enumerate(levels)}
    kinetic, blue_win, red_win = len(levels), len(levels) + 1, len(levels) + 2
    names = [f"G{_format_level(x)}" for x in levels] + [f"G{_format_level(spec.K)}", "B", "R"]

    outcome.setflags(write=False)
    next_states, next_probs = {}, {}
    for k, level in enumerate(levels):
        target = level + hsum
        nxt = np.full(hsum.shape, kinetic, dtype=np.int64)
        below = target < spec.K
        if below.any():
            nxt[below] = [index[x] for x in target[below].tolist()]
        succ = np.empty(hsum.shape + (3,), dtype=np.int64)
        succ[..., 0] = blue_win
        succ[..., 1] = red_win
        succ[..., 2] = nxt
        next_states[k] = succ
        next_probs[k] = outcome  # identical at every level; shared read-only

    pnames = spec.player_names
    action_names = tuple(tuple(spec.moves[pl]) for pl in pnames)
    return StochasticGame(
        n_players=len(pnames),
        state_names=names,
        terminal_payoffs={
            kinetic: [spec.kinetic[pl] for pl in pnames],
            blue_win: [spec.blue_win[pl] for pl in pnames],
            red_win: [spec.red_win[pl] for pl in pnames],
        },
        next_states=next_states,
        next_probs=next_probs,
        initial_state=0,
        player_names=tuple(pnames),
        action_names={k: action_names for k in range(len(levels))},
    )


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

_PROFILES = {
    # moves per player, hostility range, K
    "small": ((2, 4), (1, 8), 30.0),
    "paper_scale": ((7, 10), (1, 40), 300.0),
}


def generate_default_spec(seed: int, size_profile: str = "small") -> HostilityGameSpec:
    """Seeded synthetic spec: one blue player against Warship, Security and Auxiliary."""
    if size_profile not in _PROFILES:
        raise ValueError(f"unknown size profile {size_profile!r}; choose from {sorted(_PROFILES)}")
    (lo_m, hi_m), (lo_h, hi_h), K = _PROFILES[size_profile]
    rng = np.random.default_rng(seed)
    players = [Player("Blue", "blue", "Blue")] + [Player(t, "red", t) for t in RED_TYPES]
    moves = {p.name: [f"{p.name[0]}{k + 1}" for k in range(int(rng.integers(lo_m, hi_m + 1)))] for p in players}
    blue, reds = "Blue", list(RED_TYPES)
    nb = len(moves[blue])

    def pair():
        # (defended, undefended) success chances with defended strictly smaller
        hi = round(float(rng.uniform(0.10, 0.95)), 3)
        lo = round(float(rng.uniform(0.05, hi)), 3)
        return (lo, hi) if lo < hi else (round(hi - 0.001, 3), hi)

    counters = {}
    for red in reds:
        counters[red] = {}
        for m in moves[red]:
            k = int(rng.integers(1, max(1, nb // 2) + 1))
            chosen = sorted(rng.choice(nb, size=k, replace=False).tolist())
            counters[red][m] = [moves[blue][c] for c in chosen]
    b_def, b_undef = {}, {}
    for b in moves[blue]:
        b_def[b], b_undef[b] = {}, {}
        for red in reds:
            b_def[b][red], b_undef[b][red] = pair()
    r_def, r_undef = {}, {}
    for red in reds:
        r_def[red], r_undef[red] = {}, {}
        for m in moves[red]:
            r_def[red][m], r_undef[red][m] = pair()
    hostility = {
        p.name: {m: float(rng.integers(lo_h, hi_h + 1)) for m in moves[p.name]} for p in players
    }
    return HostilityGameSpec(
        players=players,
        moves=moves,
        counters=counters,
        b_def=b_def,
        b_undef=b_undef,
        r_def=r_def,
        r_undef=r_undef,
        blue_win={blue: 100.0, **{r: -100.0 for r in reds}},
        red_win={blue: -100.0, **{r: 100.0 for r in reds}},
        kinetic={p.name: -200.0 for p in players},
        hostility=hostility,
        K=K,
        name=f"{size_profile}-seed{seed}",
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def spec_to_dict(spec: HostilityGameSpec) -> dict[str, Any]:
    names = spec.player_names
    return {
        "name": spec.name,
        "players": [asdict(p) for p in spec.players],
        "moves": {pl: list(spec.moves[pl]) for pl in names},
        "counters": {
            red: {m: list(spec.counters.get(red, {}).get(m, [])) for m in spec.moves[red]} for red in spec.reds
        },
        "probabilities": {
            "b_def": spec.b_def,
            "b_undef": spec.b_undef,
            "r_def": spec.r_def,
            "r_undef": spec.r_undef,
        },
        "payoffs": {"blue_win": spec.blue_win, "red_win": spec.red_win, "kinetic": spec.kinetic},
        "hostility": spec.hostility,
        "K": spec.K,
    }


def serialize_spec(spec: HostilityGameSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2) + "\n"


def spec_hash(spec: HostilityGameSpec) -> str:
    """SHA-256 of the canonical JSON form."""
    canonical = json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _require(obj, key, path):
    if not isinstance(obj, dict):
        raise SpecError(path, f"expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise SpecError(f"{path}.{key}" if path else key, f"missing field {key}")
    return obj[key]


def _number(x, path) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SpecError(path, f"expected a number, got {x!r}")
    return float(x)


def _number_table(obj, path) -> dict[str, dict[str, float]]:
    if not isinstance(obj, dict):
        raise SpecError(path, "expected an object")
    out = {}
    for k, row in obj.items():
        if not isinstance(row, dict):
            raise SpecError(f"{path}.{k}", "expected an object")
        out[k] = {kk: _number(v, f"{path}.{k}.{kk}") for kk, v in row.items()}
    return out


def spec_from_dict(data: dict[str, Any]) -> HostilityGameSpec:
    raw_players = _require(data, "players", "")
    if not isinstance(raw_players, list):
        raise SpecError("players", "expected a list")
    players = []
    for k, p in enumerate(raw_players):
        name = _require(p, "name", f"players[{k}]")
        side = _require(p, "side", f"players[{k}]")
        players.append(Player(str(name), str(side), str(p.get("kind", ""))))
    moves_raw = _require(data, "moves", "")
    if not isinstance(moves_raw, dict):
        raise SpecError("moves", "expected an object")
    moves = {}
    for pl, ms in moves_raw.items():
        if not isinstance(ms, list) or not all(isinstance(m, str) for m in ms):
            raise SpecError(f"moves.{pl}", "expected a list of move names")
        moves[pl] = list(ms)
    counters_raw = _require(data, "counters", "")
    if not isinstance(counters_raw, dict):
        raise SpecError("counters", "expected an object")
    counters = {}
    for red, table in counters_raw.items():
        if not isinstance(table, dict):
            raise SpecError(f"counters.{red}", "expected an object")
        counters[red] = {}
        for m, blues in table.items():
            if not isinstance(blues, list):
                raise SpecError(f"counters.{red}.{m}", "expected a list of blue moves")
            counters[red][m] = [str(b) for b in blues]
    probs = _require(data, "probabilities", "")
    tables = {key: _number_table(_require(probs, key, "probabilities"), f"probabilities.{key}")
              for key in ("b_def", "b_undef", "r_def", "r_undef")}
    payoffs = _require(data, "payoffs", "")
    pay = {}
    for key in ("blue_win", "red_win", "kinetic"):
        row = _require(payoffs, key, "payoffs")
        if not isinstance(row, dict):
            raise SpecError(f"payoffs.{key}", "expected an object")
        pay[key] = {pl: _number(v, f"payoffs.{key}.{pl}") for pl, v in row.items()}
    hostility = _number_table(_require(data, "hostility", ""), "hostility")
    K = _number(_require(data, "K", ""), "K")
    spec = HostilityGameSpec(
        players=players,
        moves=moves,
        counters=counters,
        hostility=hostility,
        K=K,
        name=str(data.get("name", "")),
        **tables,
        **pay,
    )
    spec.validate()
    # unlisted red moves have no counters
    for red in spec.reds:
        spec.counters[red] = {m: list(spec.counters.get(red, {}).get(m, [])) for m in spec.moves[red]}
    return spec


def parse_spec(text: str) -> HostilityGameSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("", f"not valid JSON: {exc}") from None
    return spec_from_dict(data)
