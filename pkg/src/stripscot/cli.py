"""Command-line entry point.

Exit codes: 0 success, 1 a domain-level failure (invalid plan or no plan
found), 2 usage, parse or configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import datagen
from .config import load_config
from .errors import ConfigError, LimitExceeded, ParseError, PlanningError, Unsolvable

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2

DEFAULT_MIX = {
    datagen.CORRECT: 0.5,
    datagen.PRECONDITION_UNSATISFIED: 0.125,
    datagen.EFFECT_MISAPPLIED: 0.125,
    datagen.FRAME_VIOLATION: 0.125,
    datagen.GOAL_NOT_REACHED: 0.125,
}
ALL_KINDS = ("blocksworld", "mystery_blocksworld", "logistics")


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, output) -> None:
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _looks_like_trace(text: str) -> bool:
    import re

    return re.search(r"^\s*ACTION\s*:", text, re.MULTILINE | re.IGNORECASE) is not None


def cmd_validate(args, cfg) -> int:
    from .pddl import parse_domain, parse_plan, parse_problem
    from .trace import parse_trace
    from .validator import render_feedback, validate_plan, validate_trace

    d = parse_domain(_read(args.domain))
    p = parse_problem(_read(args.problem), d)
    text = _read(args.plan)
    if args.trace or _looks_like_trace(text):
        verdict = validate_trace(d, p, parse_trace(text, d))
    else:
        verdict = validate_plan(d, p, parse_plan(text, d, p, strict=False))
    print(render_feedback(verdict, args.feedback).text)
    return EXIT_OK if verdict.valid else EXIT_INVALID


def cmd_plan(args, cfg) -> int:
    from .pddl import parse_domain, parse_problem, print_plan
    from .planner import SearchLimits, solve

    d = parse_domain(_read(args.domain))
    p = parse_problem(_read(args.problem), d)
    limits = SearchLimits(args.max_expanded, args.max_length, args.timeout)
    try:
        plan = solve(d, p, limits)
    except (Unsolvable, LimitExceeded) as exc:
        print(f"no plan: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(print_plan(plan), args.output)
    return EXIT_OK


def _parse_mix(text: str) -> dict:
    mix = {}
    for part in text.split(","):
        label, _, share = part.partition("=")
        mix[label.strip()] = float(share)
    return mix


def cmd_gen_data(args, cfg) -> int:
    kinds = args.kinds or list(ALL_KINDS)
    if args.what == "phase1":
        mix = _parse_mix(args.mix) if args.mix else DEFAULT_MIX
        records = datagen.make_phase1_dataset(kinds, args.count, mix, cfg.seed, cfg.generator)
    else:
        records = datagen.make_problem_pool(kinds, args.count, cfg.seed, cfg.generator)
    out = args.output or f"{args.what}.jsonl"
    n = datagen.write_jsonl(out, records)
    print(f"wrote {n} records to {out}")
    return EXIT_OK


def cmd_split(args, cfg) -> int:
    records = datagen.read_jsonl(args.input)
    parts = datagen.split_dataset(records, datagen.SplitSpec(tuple(args.ratios), cfg.seed))
    out = Path(args.output or ".")
    for name, part in zip(("d1", "d2", "test"), parts):
        n = datagen.write_jsonl(out / f"{name}.jsonl", part)
        print(f"{name}: {n} records")
    return EXIT_OK


def _load_problems(path) -> list:
    return datagen.read_jsonl(path, datagen.ProblemRecord)


def _backend(args, cfg, problems):
    from .backends import OracleBackend, ScriptedBackend, http_backend

    kind = args.backend or cfg.backend.kind
    if kind == "scripted":
        if not args.script:
            raise ConfigError("backend", "the scripted backend needs --script")
        return ScriptedBackend.from_file(args.script)
    if kind == "oracle":
        return OracleBackend({r.problem_id: r.load() for r in problems})
    # the loop owns retries (loop.max_retries), so the client does not retry itself
    return http_backend(cfg.backend.url, cfg.backend.api_key, cfg.backend.model,
                        cfg.loop.timeout, retries=0)


def _loop_config(args, cfg):
    changes = {}
    if getattr(args, "eta", None) is not None:
        changes["eta"] = args.eta
    if getattr(args, "mode", None) is not None:
        changes["feedback_mode"] = args.mode
    if getattr(args, "temperature", None) is not None:
        changes["temperature"] = args.temperature
    try:
        return dataclasses.replace(cfg.loop, **changes)
    except ValueError as exc:
        msg = str(exc)
        raise ConfigError(f"loop.{msg.split()[0]}", msg) from None


def cmd_run_loop(args, cfg) -> int:
    from .loop import run_campaign

    problems = _load_problems(args.problems)
    loop_cfg = _loop_config(args, cfg)
    report = run_campaign(_backend(args, cfg, problems), problems, loop_cfg,
                          args.output or "campaign", cfg.weights)
    for it in report.iterations:
        lr = "-" if it.loss_reasoning is None else f"{it.loss_reasoning:.4f}"
        lf = "-" if it.loss_final is None else f"{it.loss_final:.4f}"
        print(f"iteration {it.iteration}: {it.valid}/{it.attempted} valid, "
              f"L_reasoning {lr}, L_final {lf}")
    print(f"solved {report.solved}/{report.problems} ({report.accuracy:.1f}%)")
    return EXIT_OK


def cmd_evaluate(args, cfg) -> int:
    from .evaluation import evaluate, format_breakdown

    problems = _load_problems(args.problems)
    by_kind: dict = {}
    for r in problems:
        by_kind.setdefault(r.domain_kind, []).append(r)
    backend = _backend(args, cfg, problems)
    loop_cfg = _loop_config(args, cfg)
    results = [evaluate(backend, rs, loop_cfg, kind) for kind, rs in sorted(by_kind.items())]
    sys.stdout.write(format_breakdown(results))
    if args.output:
        _emit(json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True) + "\n",
              args.output)
    return EXIT_OK


def cmd_losses(args, cfg) -> int:
    from .losses import loss_report

    reasoning = datagen.read_jsonl(args.reasoning, datagen.ReasoningRecord) if args.reasoning else []
    final = datagen.read_jsonl(args.final, datagen.FinalRecord) if args.final else []
    if not reasoning and not final:
        print("losses: give --reasoning and/or --final", file=sys.stderr)
        return EXIT_USAGE
    rep = loss_report(reasoning, final, cfg.weights)
    summary = {"loss_reasoning": rep.loss_reasoning, "loss_final": rep.loss_final,
               "reasoning_records": len(reasoning), "final_records": len(final),
               "step_status_counts": rep.step_status_counts,
               "error_class_counts": rep.error_class_counts}
    _emit(json.dumps(summary, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    # global options are accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--output", "-o", default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--verbose", "-v", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="stripscot", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--output", "-o", default=None, help="output file or directory")
    parser.add_argument("--config", default=None, help="YAML run configuration")
    parser.add_argument("--verbose", "-v", action="store_true", default=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", parents=[common], help="validate a plan or trace")
    p.add_argument("domain")
    p.add_argument("problem")
    p.add_argument("plan", help="plan file, or a STATE/ACTION/RESULT trace")
    p.add_argument("--trace", action="store_true", help="force trace parsing")
    p.add_argument("--feedback", choices=("binary", "detailed"), default="detailed")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plan", parents=[common], help="find a shortest plan")
    p.add_argument("domain")
    p.add_argument("problem")
    p.add_argument("--max-expanded", type=int, default=2_000_000)
    p.add_argument("--max-length", type=int, default=100)
    p.add_argument("--timeout", type=float, default=120.0)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("gen-data", parents=[common], help="generate datasets")
    p.add_argument("what", choices=("phase1", "problems"))
    p.add_argument("--kinds", nargs="+", choices=ALL_KINDS)
    p.add_argument("--count", type=int, default=20, help="records per domain kind")
    p.add_argument("--mix", help="label shares, e.g. correct=0.5,goal_not_reached=0.5")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("split", parents=[common], help="split records by problem")
    p.add_argument("input")
    p.add_argument("--ratios", type=float, nargs=3, default=(0.5, 0.3, 0.2))
    p.set_defaults(func=cmd_split)

    for name, func, help_ in (("run-loop", cmd_run_loop, "run the feedback loop"),
                              ("evaluate", cmd_evaluate, "measure plan accuracy")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("problems", help="JSONL problem records (gen-data problems)")
        p.add_argument("--backend", choices=("http", "scripted", "oracle"))
        p.add_argument("--script", help="JSON script for the scripted backend")
        p.add_argument("--temperature", type=float)
        if name == "run-loop":
            p.add_argument("--eta", type=int)
            p.add_argument("--mode", choices=("binary", "detailed"))
        p.set_defaults(func=func)

    p = sub.add_parser("losses", parents=[common], help="loss metrics over dataset files")
    p.add_argument("--reasoning", help="reasoning.jsonl")
    p.add_argument("--final", help="final.jsonl")
    p.set_defaults(func=cmd_losses)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        return args.func(args, cfg)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlanningError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
