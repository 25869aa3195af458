"""Command line interface.

    stocheq generate --seed 7 --profile small --out spec.json
    stocheq solve --spec spec.json --algorithm pi-fp --fp-iters 1000 --out run/
    stocheq check --spec spec.json --strategies run/strategies.json
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .expost import ex_post_epsilon
from .game import StochasticGame, StrategyProfile
from .hostility import SpecError, build_hostility_game, generate_default_spec, parse_spec, serialize_spec, spec_hash
from .solver import ConvergenceReport, SolverConfig, solve
from .stage import FixedIterations, MinRegretIterations
from .validation import check_simplex

log = logging.getLogger("stocheq")

TRACE_HEADER = ("outer_iter", "epsilon", "max_value_dev", "millis")


class CliError(Exception):
    pass


def _fmt(x: float) -> str:
    # shortest round-trip form, so a trace can be compared exactly
    return "nan" if math.isnan(x) else repr(float(x))


def write_trace(path: Path, report: ConvergenceReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in report.records:
            writer.writerow([r.outer_iter, _fmt(r.epsilon), _fmt(r.max_value_dev), f"{r.millis:.3f}"])


def read_trace(path: Path) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_HEADER:
            raise CliError(f"{path}: unexpected header {reader.fieldnames}")
        return [{k: (int(v) if k == "outer_iter" else float(v)) for k, v in row.items()} for row in reader]


def profile_to_json(game: StochasticGame, profile: StrategyProfile) -> dict:
    return {
        game.state_names[s]: {
            game.player_names[i]: {
                label: float(w) for label, w in zip(game.action_labels(s, i), profile[s][i])
            }
            for i in range(game.n_players)
        }
        for s in game.nonterminal_states
    }


def profile_from_json(game: StochasticGame, data: dict) -> StrategyProfile:
    """Inverse of :func:`profile_to_json`; errors name the offending state and player."""
    if not isinstance(data, dict):
        raise CliError("strategies file must hold a JSON object")
    expected = {game.state_names[s] for s in game.nonterminal_states}
    extra = sorted(set(data) - expected)
    if extra:
        raise CliError(f"strategies name unknown or terminal state(s) {extra}")
    profile = {}
    for s in game.nonterminal_states:
        name = game.state_names[s]
        if name not in data:
            raise CliError(f"state {name!r}: missing from strategies")
        per_player = data[name]
        strategies = []
        for i, player in enumerate(game.player_names):
            if player not in per_player:
                raise CliError(f"state {name!r} player {player!r}: missing from strategies")
            weights = per_player[player]
            labels = game.action_labels(s, i)
            if set(weights) != set(labels):
                raise CliError(
                    f"state {name!r} player {player!r}: actions {sorted(weights)} do not match {list(labels)}"
                )
            try:
                sigma = check_simplex(
                    [weights[a] for a in labels], name=f"state {name!r} player {player!r}", normalize=True
                )
            except (ValueError, TypeError) as exc:
                raise CliError(str(exc)) from None
            strategies.append(sigma)
        profile[s] = tuple(strategies)
    return profile


def values_to_json(game: StochasticGame, values) -> dict:
    return {
        game.state_names[s]: {game.player_names[i]: float(values[s, i]) for i in range(game.n_players)}
        for s in range(game.n_states)
    }


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _load_spec(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read spec {path}: {exc}") from None
    try:
        return parse_spec(text)
    except SpecError as exc:
        raise CliError(f"{path}: {exc}") from None


def cmd_generate(args) -> int:
    spec = generate_default_spec(args.seed, args.profile)
    text = serialize_spec(spec)
    if args.out in (None, "-"):
        sys.stdout.write(text)
        return 0
    try:
        Path(args.out).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}") from None
    log.info("wrote %s", args.out)
    return 0


def _initial_values(text: str):
    if text in ("zero", "pessimistic"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'zero', 'pessimistic' or a number, got {text!r}") from None


def cmd_solve(args) -> int:
    spec = _load_spec(args.spec)
    game = build_hostility_game(spec)
    stop = MinRegretIterations(args.fp_iters) if args.fp_min_regret else FixedIterations(args.fp_iters)
    config = SolverConfig(
        algorithm=args.algorithm,
        stage_stop=stop,
        max_outer_iterations=args.outer_iters,
        value_delta=args.delta,
        workers=args.workers,
        seed=args.seed,
        initial_values=args.init_values,
        strategy_init=args.strategy_init,
        epsilon_trace=not args.no_epsilon_trace,
    )
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from None
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    log.info("solving %s: %d states, %d players, %s", args.spec, game.n_states, game.n_players, config.algorithm)
    report = solve(game, config)

    write_trace(out / "trace.csv", report)
    _write_json(out / "strategies.json", profile_to_json(game, report.profile))
    _write_json(out / "values.json", values_to_json(game, report.values))
    _write_json(
        out / "manifest.json",
        {
            "tool": "stocheq",
            "version": __version__,
            "spec": str(args.spec),
            "spec_hash": spec_hash(spec),
            "config": config.describe(),
            "started_at": started,
            "outer_iterations": len(report.records),
            "converged": report.converged,
            "halted_by": report.halted_by,
            "final_epsilon": None if math.isnan(report.final_epsilon) else report.final_epsilon,
        },
    )
    for r in report.records:
        log.info("iter %3d  eps=%s  dev=%s  %.0f ms", r.outer_iter, _fmt(r.epsilon), _fmt(r.max_value_dev), r.millis)
    print(f"converged={str(report.converged).lower()} outer_iterations={len(report.records)} "
          f"epsilon={_fmt(report.final_epsilon)} out={out}")
    return 0


def cmd_check(args) -> int:
    spec = _load_spec(args.spec)
    game = build_hostility_game(spec)
    try:
        data = json.loads(Path(args.strategies).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read strategies {args.strategies}: {exc}") from None
    profile = profile_from_json(game, data)
    epsilon, gains = ex_post_epsilon(game, profile, args.workers)
    for name, gain in zip(game.player_names, gains):
        print(f"{name}\t{gain:.12g}")
    print(f"epsilon\t{epsilon:.12g}")
    return 0


def _default_workers() -> int:
    raw = os.environ.get("STOCHEQ_WORKERS")
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise CliError(f"STOCHEQ_WORKERS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise CliError(f"STOCHEQ_WORKERS must be a positive integer, got {raw!r}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stocheq", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a seeded Hostility Game spec")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--profile", choices=("small", "paper_scale"), default="small")
    gen.add_argument("--out", default=None, help="output path; stdout if omitted")
    gen.set_defaults(func=cmd_generate)

    sol = sub.add_parser("solve", help="run VI-FP or PI-FP on a spec")
    sol.add_argument("--spec", required=True)
    sol.add_argument("--algorithm", choices=("vi-fp", "pi-fp"), default="pi-fp")
    sol.add_argument("--fp-iters", type=_positive_int, default=10_000)
    sol.add_argument("--fp-min-regret", action="store_true",
                     help="return the lowest-regret FP average instead of the last")
    sol.add_argument("--outer-iters", type=_positive_int, default=25)
    sol.add_argument("--delta", type=float, default=1e-4, help="value-change threshold for halting")
    sol.add_argument("--workers", type=_positive_int, default=None,
                     help="stage-solving threads (default: $STOCHEQ_WORKERS or 1)")
    sol.add_argument("--seed", type=int, default=0)
    sol.add_argument("--init-values", type=_initial_values, default="zero")
    sol.add_argument("--strategy-init", choices=("uniform", "random"), default="uniform")
    sol.add_argument("--no-epsilon-trace", action="store_true", help="skip the per-iteration ex-post check")
    sol.add_argument("--out", required=True, help="output directory")
    sol.set_defaults(func=cmd_solve)

    chk = sub.add_parser("check", help="ex-post epsilon of a strategies file")
    chk.add_argument("--spec", required=True)
    chk.add_argument("--strategies", required=True)
    chk.add_argument("--workers", type=_positive_int, default=None)
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if getattr(args, "workers", 1) is None:
            args.workers = _default_workers()
        return args.func(args)
    except CliError as exc:
        print(f"stocheq: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"stocheq: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
