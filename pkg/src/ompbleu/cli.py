"""Command-line interface.

Exit codes: 0 on success, 1 when any evaluation error occurred,
2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .compile_check import CompileError, compile_score
from .config import ConfigError, EvalConfig, load_config
from .metrics import ompbleu_score
from .pretrain import NoiseSchedule, TagVocabulary, corrupt, render_tokens, ssa_annotate
from .report import (
    DatasetError,
    DatasetRecord,
    Report,
    evaluate_dataset,
    load_dataset,
    rank_candidates,
)
from .syntax import parse_source, strip_openmp

_SOURCE_SUFFIXES = (".c", ".cc", ".cpp", ".cxx", ".h", ".hpp")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ompbleu",
        description="Score candidate OpenMP parallelizations against references.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", metavar="FILE", help="JSON configuration file")
    parser.add_argument("--jobs", type=int, default=1, help="worker pool size")
    parser.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
    parser.add_argument(
        "--emit", choices=("json", "csv", "table"), default="json", help="report format"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score one candidate against one reference")
    p.add_argument("reference")
    p.add_argument("generated")

    p = sub.add_parser("rank", help="rank several candidates against one reference")
    p.add_argument("reference")
    p.add_argument("generated", nargs="+")

    p = sub.add_parser("dataset", help="evaluate a whole dataset")
    p.add_argument("path")
    p.add_argument("--format", choices=("jsonl", "dirs"), default="jsonl")

    p = sub.add_parser("classify", help="clause classification report for a dataset")
    p.add_argument("path")
    p.add_argument("--format", choices=("jsonl", "dirs"), default="jsonl")

    p = sub.add_parser("strip", help="remove all OpenMP pragmas from a file")
    p.add_argument("path")

    p = sub.add_parser("annotate", help="emit syntax-role tag ids for source files")
    p.add_argument("path")

    p = sub.add_parser("corrupt", help="apply seeded corruption to a source file")
    p.add_argument("path")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--step", type=int, default=0)
    p.add_argument("--modes", default="mask", help="comma-separated corruption modes")
    p.add_argument("--r0", type=float, default=0.05)
    p.add_argument("--r1", type=float, default=0.3)
    p.add_argument("--ramp-steps", type=int, default=10000)

    p = sub.add_parser("compile-check", help="compilation score for a source file")
    p.add_argument("path")
    return parser


def _write_out(args: argparse.Namespace, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_report(args: argparse.Namespace, report: Report) -> None:
    if args.emit == "csv":
        _write_out(args, report.to_csv())
    elif args.emit == "table":
        _write_out(args, report.to_table())
    else:
        _write_out(args, report.to_json())


def _source_files(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.rglob("*") if p.suffix in _SOURCE_SUFFIXES)
    return [path]


def _cmd_score(args: argparse.Namespace, config: EvalConfig) -> int:
    reference = Path(args.reference).read_text()
    generated = Path(args.generated).read_text()
    breakdown = ompbleu_score(reference, generated, config)
    _write_out(args, json.dumps(breakdown.as_dict(), sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_rank(args: argparse.Namespace, config: EvalConfig) -> int:
    record = DatasetRecord(
        id=args.reference,
        reference=Path(args.reference).read_text(),
        candidates=tuple(Path(g).read_text() for g in args.generated),
    )
    ranked = rank_candidates(record, config)
    payload = {
        "reference": args.reference,
        "candidates": [
            {"path": args.generated[rc.candidate_index], **rc.as_dict()} for rc in ranked
        ],
    }
    _write_out(args, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return 1 if any(rc.error for rc in ranked) else 0


def _cmd_dataset(args: argparse.Namespace, config: EvalConfig) -> int:
    records, load_errors = load_dataset(args.path, args.format)
    report = evaluate_dataset(records, config, jobs=args.jobs, load_errors=load_errors)
    _emit_report(args, report)
    return 1 if report.errors else 0


def _cmd_classify(args: argparse.Namespace, config: EvalConfig) -> int:
    records, load_errors = load_dataset(args.path, args.format)
    report = evaluate_dataset(records, config, jobs=args.jobs, load_errors=load_errors)
    if report.classification is None:
        _write_out(args, json.dumps({"error": "no scorable records"}) + "\n")
        return 1
    if args.emit == "csv":
        _write_out(args, report.per_clause_csv())
    else:
        _write_out(
            args, json.dumps(report.classification.as_dict(), sort_keys=True, indent=2) + "\n"
        )
    return 1 if report.errors else 0


def _cmd_strip(args: argparse.Namespace) -> int:
    unit = parse_source(Path(args.path).read_text())
    _write_out(args, strip_openmp(unit).text)
    return 0


def _cmd_annotate(args: argparse.Namespace, config: EvalConfig) -> int:
    vocab = (
        TagVocabulary.load(config.tag_vocabulary_path)
        if config.tag_vocabulary_path
        else TagVocabulary.default()
    )
    lines = []
    for path in _source_files(Path(args.path)):
        unit = parse_source(path.read_text())
        tags = ssa_annotate(unit, vocab)
        lines.append(", ".join(str(t) for t in tags))
    _write_out(args, "\n".join(lines) + "\n")
    return 0


def _cmd_corrupt(args: argparse.Namespace) -> int:
    modes = frozenset(m.strip() for m in args.modes.split(",") if m.strip())
    try:
        schedule = NoiseSchedule(
            r0=args.r0, r1=args.r1, ramp_steps=args.ramp_steps, modes=modes
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    unit = parse_source(Path(args.path).read_text())
    corrupted = corrupt(list(unit.tokens), schedule, step=args.step, seed=args.seed)
    _write_out(args, render_tokens(corrupted))
    return 0


def _cmd_compile_check(args: argparse.Namespace, config: EvalConfig) -> int:
    result = compile_score(Path(args.path).read_text(), config.compile)
    payload = {
        "score": result.score,
        "cached": result.cached,
        "duration": result.duration,
        "command": list(result.command),
        "diagnostics": result.diagnostics,
    }
    _write_out(args, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "score":
            return _cmd_score(args, config)
        if args.command == "rank":
            return _cmd_rank(args, config)
        if args.command == "dataset":
            return _cmd_dataset(args, config)
        if args.command == "classify":
            return _cmd_classify(args, config)
        if args.command == "strip":
            return _cmd_strip(args)
        if args.command == "annotate":
            return _cmd_annotate(args, config)
        if args.command == "corrupt":
            return _cmd_corrupt(args)
        if args.command == "compile-check":
            return _cmd_compile_check(args, config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (DatasetError, CompileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
