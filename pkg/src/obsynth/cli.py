"""Command-line frontend.

Subcommands: check (parse and validate), synthesize (run the refinement loop
and write a strategy file), reconfigure (sensor feasibility analysis), and
simulate (execute a strategy file against an adversary).

Exit codes: 0 success, 2 usage error, 10 unrealizable or infeasible,
11 inconclusive, 70 a concrete run escaped its abstract strategy.  Parse
errors, failed validation, stale strategy files, and simulated error states
exit 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import refinement, simulate
from .abstraction import Predicate, PredicateSet, build_abstract_game
from .formulas import literals_in, to_nnf, to_sexpr
from .games import ConcretizationFailure, PositionalStrategy
from .model import SystemModel, validate_model
from .specfile import SpecError, parse_model

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_UNREALIZABLE = 10
EXIT_INCONCLUSIVE = 11
EXIT_ESCAPED = 70

VERDICT_EXITS = {
    "realizable": EXIT_OK,
    "unrealizable": EXIT_UNREALIZABLE,
    "inconclusive": EXIT_INCONCLUSIVE,
    "already-realizable": EXIT_OK,
    "reconfigurable": EXIT_OK,
    "infeasible": EXIT_UNREALIZABLE,
}

STRATEGY_FORMAT = "obsynth-strategy"


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_model(path: str, notes: List[str]) -> SystemModel:
    return parse_model(_read_text(path), notes)


def _budget(args) -> refinement.Budget:
    return refinement.Budget(
        max_iterations=args.max_iters,
        max_predicates=args.max_preds,
        timeout_secs=args.timeout_secs,
    )


def _emit(args, payload: dict, lines: List[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


def _strategy_payload(outcome: refinement.RefinementOutcome) -> dict:
    game = outcome.game
    strategy = outcome.strategy
    return {
        "format": STRATEGY_FORMAT,
        "predicates": [to_sexpr(p.formula(True)) for p in outcome.predicates],
        "initial": game.initial,
        "states": game.dump()["states"],
        "moves": {
            str(i): {"output": sigma, "successor": j}
            for i, (sigma, j) in sorted(strategy.moves.items())
        },
    }


def _load_strategy(m: SystemModel, path: str):
    from .specfile import parse_formula_text

    data = json.loads(_read_text(path))
    if data.get("format") != STRATEGY_FORMAT:
        raise SpecError(f"{path} is not a strategy file")
    predicates = []
    for text in data["predicates"]:
        lits = literals_in(to_nnf(parse_formula_text(text, m)))
        if len(lits) != 1:
            raise SpecError(f"predicate {text!r} is not a literal")
        atom, positive = lits[0]
        predicates.append(Predicate(atom, positive))
    pset = PredicateSet(predicates)
    game = build_abstract_game(m, pset)
    stored = [s["members"] for s in data["states"]]
    rebuilt = [s["members"] for s in game.dump()["states"]]
    if stored != rebuilt:
        raise SpecError(
            f"{path} is stale: the abstract game no longer matches the model"
        )
    moves = {
        int(i): (entry["output"], entry["successor"])
        for i, entry in data["moves"].items()
    }
    strategy = PositionalStrategy(1, moves, frozenset(moves))
    return game, strategy


def _cmd_check(args) -> int:
    notes: List[str] = []
    try:
        m = _load_model(args.model, notes)
    except (OSError, SpecError) as exc:
        _emit(args, {"ok": False, "error": str(exc), "notes": notes}, [f"error: {exc}"])
        return EXIT_FAIL
    report = validate_model(m)
    lines = [f"note: {n}" for n in notes]
    if report.ok:
        lines.append(f"{args.model}: ok")
    else:
        lines.extend(f"{v.code}: {v.message}" for v in report.violations)
    _emit(
        args,
        {
            "ok": report.ok,
            "notes": notes,
            "violations": [
                {"code": v.code, "message": v.message} for v in report.violations
            ],
        },
        lines,
    )
    return EXIT_OK if report.ok else EXIT_FAIL


def _prepare(args, notes: List[str]) -> Optional[SystemModel]:
    try:
        m = _load_model(args.model, notes)
    except (OSError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None
    if getattr(args, "full_obs", False):
        m = m.with_full_observation()
    report = validate_model(m)
    if not report.ok:
        for v in report.violations:
            print(f"{v.code}: {v.message}", file=sys.stderr)
        return None
    return m


def _write_log(path: Optional[str], records) -> None:
    if not path:
        return
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.line() + "\n")


def _cmd_synthesize(args) -> int:
    notes: List[str] = []
    m = _prepare(args, notes)
    if m is None:
        return EXIT_FAIL
    outcome = refinement.abstract_and_refine(m, budget=_budget(args))
    _write_log(args.log, outcome.log)
    if args.dump_abstract_game and outcome.game is not None:
        with open(args.dump_abstract_game, "w", encoding="utf-8") as fh:
            json.dump(outcome.game.dump(), fh, indent=2)

    lines = [f"note: {n}" for n in notes]
    lines.extend(rec.line() for rec in outcome.log)
    payload = {
        "verdict": outcome.verdict,
        "reason": outcome.reason,
        "notes": notes,
        "iterations": [
            {
                "iteration": r.iteration,
                "predicates": r.num_predicates,
                "states": r.num_states,
                "verdict": r.verdict,
                "millis": r.millis,
            }
            for r in outcome.log
        ],
        "predicates": [str(p) for p in outcome.predicates],
        "strategy_file": None,
    }
    if outcome.verdict == "realizable":
        out_path = args.output or args.model + ".strategy.json"
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(_strategy_payload(outcome), fh, indent=2)
        payload["strategy_file"] = out_path
        lines.append(f"realizable; strategy written to {out_path}")
    elif outcome.verdict == "unrealizable":
        lines.append("unrealizable: a genuine counterexample tree exists")
    else:
        lines.append(f"inconclusive: {outcome.reason}")
    _emit(args, payload, lines)
    return VERDICT_EXITS[outcome.verdict]


def _cmd_reconfigure(args) -> int:
    notes: List[str] = []
    m = _prepare(args, notes)
    if m is None:
        return EXIT_FAIL
    report = refinement.sensor_reconfigure(m, budget=_budget(args))
    payload = {
        "verdict": report.verdict,
        "notes": notes,
        "modalities": [str(p) for p in report.modalities],
        "precision": [str(p) for p in report.precision],
    }
    _emit(args, payload, [f"note: {n}" for n in notes] + report.lines())
    return VERDICT_EXITS[report.verdict]


def _cmd_simulate(args) -> int:
    notes: List[str] = []
    m = _prepare(args, notes)
    if m is None:
        return EXIT_FAIL
    try:
        game, strategy = _load_strategy(m, args.strategy)
    except (OSError, SpecError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        records = simulate.run_many(
            m,
            game,
            strategy,
            runs=args.runs,
            steps=args.steps,
            seed=args.seed,
            adversary=args.adversary,
        )
    except ConcretizationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESCAPED
    lines = []
    errors = []
    for i, rec in enumerate(records):
        lines.append(f"run {i}: {rec.verdict} ({len(rec.steps) - 1} steps)")
        if not rec.safe:
            errors.append({"run": i, "step": rec.error_step})
    safe = len(records) - len(errors)
    lines.append(f"{safe}/{len(records)} runs safe")
    payload = {
        "runs": len(records),
        "safe": safe,
        "errors": errors,
        "verdict": "safe" if not errors else "error",
    }
    _emit(args, payload, lines)
    return EXIT_OK if not errors else EXIT_FAIL


def _add_budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--max-preds", type=int, default=200)
    p.add_argument("--timeout-secs", type=float, default=600.0)
    p.add_argument("--full-obs", action="store_true", help="make every input observable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obsynth",
        description="Synthesize observation-based safety controllers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate a model file")
    p.add_argument("model")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("synthesize", help="run the abstraction refinement loop")
    p.add_argument("model")
    p.add_argument("-o", "--output", help="strategy file (default MODEL.strategy.json)")
    _add_budget_flags(p)
    p.add_argument("--dump-abstract-game", metavar="PATH")
    p.add_argument("--log", metavar="PATH", help="write iteration log lines to PATH")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("reconfigure", help="report which sensors would make the model realizable")
    p.add_argument("model")
    _add_budget_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_reconfigure)

    p = sub.add_parser("simulate", help="execute a synthesized strategy")
    p.add_argument("model")
    p.add_argument("strategy", help="strategy file from synthesize")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--adversary", choices=simulate.ADVERSARIES, default="random")
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--full-obs", action="store_true", help=argparse.SUPPRESS)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
