"""Command-line frontend: ``sgsolve <subcommand> ...``.

Exit status is 0 on success, 1 when a solver gives up (or ``check`` finds a
disagreement) and 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys
import time
from fractions import Fraction

import jsonschema
import numpy as np

from .game import Game, GameError, ParseError, parse_model, render_model
from .generate import GenConfig, corpus, generate_random_game
from .graph import mec_decomposition, mec_postorder
from .mdp import ViConfig, solve_vi
from .oracle import EnumerationCapExceeded, enumerate_solve
from .qp import build_condon_qp, build_improved_qp, export_lp
from .qp_solver import QpSolverConfig, solve_game_qp
from .result import SolveResult
from .si import SiConfig, solve_si
from .transforms import cnf_violations, to_cnf

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

_STRATEGY = {"type": "object", "additionalProperties": {"type": "string"}}
RESULT_SCHEMA = {
    "type": "object",
    "required": ["method", "guarantee", "success", "initial", "values", "strategies", "stats"],
    "properties": {
        "method": {"type": "string"},
        "guarantee": {"enum": ["exact", "epsilon", "unguaranteed"]},
        "success": {"type": "boolean"},
        "initial": {"type": "string"},
        "values": {"type": "object", "additionalProperties": {"type": "number"}},
        "exact_values": {"type": "object", "additionalProperties": {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}},
        "strategies": {
            "type": "object",
            "required": ["maximizer", "minimizer"],
            "properties": {"maximizer": _STRATEGY, "minimizer": _STRATEGY},
        },
        "stats": {"type": "object"},
    },
}


def _plain(obj):
    """JSON fallback for the odd types that end up in stats."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def result_to_dict(game: Game, result: SolveResult) -> dict:
    out = {
        "method": result.method,
        "guarantee": result.guarantee,
        "success": bool(result.success),
        "initial": game.names[game.initial],
        "values": {n: float(v) for n, v in zip(game.names, result.values)},
        "strategies": {
            "maximizer": result.maximizer_strategy.named(game),
            "minimizer": result.minimizer_strategy.named(game),
        },
        "stats": json.loads(json.dumps(result.stats, default=_plain)),
    }
    if result.exact:
        out["exact_values"] = {n: str(v) for n, v in zip(game.names, result.values)}
    return out


def validate_result(doc: dict) -> None:
    jsonschema.validate(doc, RESULT_SCHEMA)


def _load(path: pathlib.Path) -> Game:
    return parse_model(path.read_text())


def _emit(args, doc, text: str) -> None:
    if args.json:
        print(json.dumps(doc, indent=2, default=_plain))
    else:
        print(text)


def _result_text(game: Game, result: SolveResult) -> str:
    lines = [f"method {result.method} ({result.guarantee})" + ("" if result.success else ": FAILED")]
    for s, n in enumerate(game.names):
        v = result.values[s]
        lines.append(f"  {n} = {v}" + (f" ~ {float(v):.10g}" if isinstance(v, Fraction) else ""))
    return "\n".join(lines)


# -- subcommands -----------------------------------------------------------


def cmd_solve(args) -> int:
    game = _load(args.file)
    if args.method == "si":
        config = SiConfig(
            init=args.init,
            opponent="vi" if args.opponent == "vi" else "policy_iteration",
            opponent_precision=args.precision,
            topological=args.topological,
        )
        result = solve_si(game, config)
    elif args.method == "qp":
        config = QpSolverConfig(restarts=args.restarts, seed=args.seed)
        result = solve_game_qp(game, config, warm_start=args.warm_start)
    else:
        result = solve_vi(game, ViConfig(epsilon=args.precision))
    doc = result_to_dict(game, result)
    validate_result(doc)
    _emit(args, doc, _result_text(game, result))
    return EXIT_OK if result.success else EXIT_FAIL


def cmd_oracle(args) -> int:
    game = _load(args.file)
    res = enumerate_solve(game, cap=args.cap)
    result = SolveResult(res.values, res.sigma, res.tau, "oracle", "exact")
    doc = result_to_dict(game, result)
    validate_result(doc)
    _emit(args, doc, _result_text(game, result))
    return EXIT_OK


def cmd_mec(args) -> int:
    game = _load(args.file)
    mecs = mec_decomposition(game)
    order = mec_postorder(game, mecs)
    docs = []
    for i, m in enumerate(mecs):
        docs.append({
            "index": i,
            "kind": m.classify(game),
            "states": [game.names[s] for s in sorted(m.states)],
            "staying_actions": {game.names[s]: list(a) for s, a in sorted(m.staying_actions.items())},
            "exiting_pairs": [[game.names[s], a] for s, a in m.exiting_pairs],
            "exit_states": [game.names[s] for s in sorted(m.exit_states)],
        })
    doc = {"mecs": docs, "postorder": order}
    lines = []
    for d in docs:
        lines.append(f"MEC {d['index']} [{d['kind']}]: {{{', '.join(d['states'])}}}")
        for s, acts in d["staying_actions"].items():
            lines.append(f"  stay {s}: {', '.join(acts)}")
        for s, a in d["exiting_pairs"]:
            lines.append(f"  exit ({s}, {a})")
        if d["exit_states"]:
            lines.append(f"  exit states: {', '.join(d['exit_states'])}")
    lines.append(f"post-order: {' '.join(map(str, order))}")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_transform(args) -> int:
    if not args.to_cnf:
        raise ValueError("nothing to do: pass --to-cnf")
    game = _load(args.file)
    result = to_cnf(game, args.m, mec_only=args.mec_only)
    out = args.output or args.file.with_suffix(".cnf.sg")
    out.write_text(render_model(result.game))
    origin = {
        result.game.names[i]: (game.names[o] if o is not None else None)
        for i, o in enumerate(result.origin_map)
    }
    map_path = out.with_suffix(".origin.json")
    map_path.write_text(json.dumps(origin, indent=2) + "\n")
    doc = {
        "output": str(out),
        "origin_map": str(map_path),
        "states": result.game.n,
        "original_states": game.n,
        "violations": cnf_violations(result.game),
    }
    _emit(args, doc, f"wrote {out} ({result.game.n} states) and {map_path}")
    return EXIT_OK


def cmd_export_qp(args) -> int:
    game = _load(args.file)
    qp = build_condon_qp(game) if args.variant == "condon" else build_improved_qp(game)
    out = args.output or args.file.with_suffix(".lp")
    out.write_text(export_lp(qp))
    doc = {"output": str(out), "variant": args.variant, "variables": qp.n_vars, "stats": qp.stats}
    _emit(args, doc, f"wrote {out} ({qp.n_vars} variables)")
    return EXIT_OK


def cmd_gen(args) -> int:
    config = GenConfig(
        n_states=args.states,
        max_actions=args.max_actions,
        max_successors=args.max_successors,
        dyadic=args.dyadic,
        back_edge=args.back_edge,
    )
    game = generate_random_game(config, args.seed)
    text = render_model(game)
    if args.output:
        args.output.write_text(text)
        _emit(args, {"output": str(args.output), "states": game.n}, f"wrote {args.output}")
    elif args.json:
        print(json.dumps({"model": text, "states": game.n}, indent=2))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cross_validate(game: Game, tolerance: float = 1e-6, qp_config: QpSolverConfig = QpSolverConfig()) -> dict:
    """Oracle against exact SI, VI-opponent SI and the QP; returns the findings."""
    oracle = enumerate_solve(game)
    ref = np.array([float(v) for v in oracle.values])
    problems = []
    si = solve_si(game)
    if tuple(si.values) != tuple(oracle.values):
        problems.append("si (exact) differs from oracle")
    si_vi = solve_si(game, SiConfig(opponent="vi"))
    if np.max(np.abs(si_vi.float_values() - ref)) > tolerance:
        problems.append("si (vi opponent) differs from oracle")
    qp = solve_game_qp(game, qp_config)
    if not qp.success:
        problems.append("qp did not certify a solution")
    elif np.max(np.abs(qp.float_values() - ref)) > tolerance:
        problems.append("qp reports success with wrong values")
    return {"agree": not problems, "problems": problems, "oracle": [str(v) for v in oracle.values]}


def cmd_check(args) -> int:
    if args.files:
        items = [(str(p), _load(p)) for p in args.files]
    else:
        items = [(f"corpus[{i}]", g) for i, g in enumerate(corpus(args.count, args.seed))]
    t0 = time.perf_counter()
    reports = []
    for name, game in items:
        rep = cross_validate(game, args.tolerance)
        rep["model"] = name
        reports.append(rep)
    bad = [r for r in reports if not r["agree"]]
    doc = {"models": len(reports), "disagreements": bad, "wall_time": time.perf_counter() - t0}
    lines = [f"{r['model']}: {'; '.join(r['problems'])}" for r in bad]
    lines.append(f"{len(reports) - len(bad)}/{len(reports)} models agree")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK if not bad else EXIT_FAIL


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgsolve", description="Solve simple stochastic games.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="compute values and strategies")
    p.add_argument("file", type=pathlib.Path)
    p.add_argument("--method", choices=["si", "qp", "vi"], default="si")
    p.add_argument("--init", choices=["attractor", "vi"], default="vi", help="SI initial strategy")
    p.add_argument("--opponent", choices=["pi", "vi"], default="pi", help="SI best-response solver")
    p.add_argument("--topological", action="store_true", help="SI one MEC at a time")
    p.add_argument("--warm-start", choices=["vi"], default=None, help="QP starting point")
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", type=float, default=1e-8, help="VI stopping threshold")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", parents=[common], help="exact values by strategy enumeration")
    p.add_argument("file", type=pathlib.Path)
    p.add_argument("--cap", type=int, default=2**22, help="max strategy pairs")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("mec", parents=[common], help="maximal end components")
    p.add_argument("file", type=pathlib.Path)
    p.set_defaults(func=cmd_mec)

    p = sub.add_parser("transform", parents=[common], help="rewrite into normal form")
    p.add_argument("file", type=pathlib.Path)
    p.add_argument("--to-cnf", action="store_true")
    p.add_argument("--m", type=int, default=None, help="stopping chain length (default 2|S|-1)")
    scope = p.add_mutually_exclusive_group()
    scope.add_argument("--mec-only", dest="mec_only", action="store_true", default=True,
                       help="only route actions of MEC states through the chain (default)")
    scope.add_argument("--all-states", dest="mec_only", action="store_false")
    p.add_argument("-o", "--output", type=pathlib.Path)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("export-qp", parents=[common], help="write the quadratic program")
    p.add_argument("file", type=pathlib.Path)
    p.add_argument("--variant", choices=["condon", "improved"], default="improved")
    p.add_argument("--format", choices=["lp"], default="lp")
    p.add_argument("-o", "--output", type=pathlib.Path)
    p.set_defaults(func=cmd_export_qp)

    p = sub.add_parser("gen", parents=[common], help="random game")
    p.add_argument("--states", type=int, default=6, help="including one target and one sink")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-actions", type=int, default=2)
    p.add_argument("--max-successors", type=int, default=3)
    p.add_argument("--back-edge", type=float, default=0.6)
    p.add_argument("--no-dyadic", dest="dyadic", action="store_false")
    p.add_argument("-o", "--output", type=pathlib.Path)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check", parents=[common], help="cross-validate solvers against the oracle")
    p.add_argument("files", nargs="*", type=pathlib.Path, help="models (default: generated corpus)")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "transform" and args.m is None:
            args.m = 2 * _load(args.file).n - 1
        return args.func(args)
    except ParseError as exc:
        print(f"error: {getattr(args, 'file', '')}:{exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GameError, ValueError, OSError, EnumerationCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
