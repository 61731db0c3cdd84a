"""Command line entry point."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .frontend import LexError, LinkError, ParseError
from .graphs import CfgError


def _positive(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="leakscan", description="Memory leak detection for Mini-C programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="analyze a project manifest")
    an.add_argument("manifest")
    an.add_argument("--report", choices=("json", "html"), default="json")
    an.add_argument("--out", help="write the report here instead of stdout")
    an.add_argument("--summaries-out")
    an.add_argument("--summaries-in")
    an.add_argument("--emit-callgraph", metavar="PATH", help="write the call graph as DOT")
    an.add_argument("--no-candidate-filter", action="store_true",
                    help="symbolically execute every function, not only allocator callers")
    an.add_argument("--loop-bound", type=_positive)
    an.add_argument("--inline-bb-limit", type=_positive)
    an.add_argument("--max-call-depth", type=_positive)
    an.add_argument("--path-budget", type=_positive)
    an.add_argument("--dump-traces", action="store_true", help="include ownership traces in the report")

    orc = sub.add_parser("oracle", help="enumerate concrete runs of one function (debugging aid)")
    orc.add_argument("file", nargs="+")
    orc.add_argument("--entry", required=True)
    orc.add_argument("--bound", type=int, default=12)
    return ap


def _analyze(args) -> int:
    from .driver import ManifestError, emit_report, ingest_manifest, run_pipeline
    from .summaries import DecodeError, encode_summaries

    try:
        manifest = ingest_manifest(args.manifest)
        config = manifest.analysis_config(loop_bound=args.loop_bound, inline_bb_limit=args.inline_bb_limit,
                                          max_call_depth=args.max_call_depth, path_budget=args.path_budget)
        summaries_in = Path(args.summaries_in).read_text(encoding="utf-8") if args.summaries_in else None
        result = run_pipeline(manifest, config, candidate_filter=not args.no_candidate_filter,
                              summaries_in=summaries_in, dump_traces=args.dump_traces)
        if args.summaries_out:
            Path(args.summaries_out).write_text(encode_summaries(result.store) + "\n", encoding="utf-8")
        if args.emit_callgraph:
            Path(args.emit_callgraph).write_text(result.callgraph.to_dot(), encoding="utf-8")
        emit_report(result.report, args.report, args.out)
    except (ManifestError, DecodeError, LexError, ParseError, LinkError, CfgError) as exc:
        print(f"leakscan: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"leakscan: error: {exc}", file=sys.stderr)
        return 2
    return 1 if result.findings else 0


def _oracle(args) -> int:
    from .frontend import load_program
    from .oracle import enumerate_runs

    try:
        program = load_program(args.file)
    except (OSError, LexError, ParseError, LinkError) as exc:
        print(f"leakscan: error: {exc}", file=sys.stderr)
        return 2
    if args.entry not in program.functions:
        print(f"leakscan: error: no function {args.entry!r}", file=sys.stderr)
        return 2
    runs = enumerate_runs(program, args.entry, args.bound)
    print(json.dumps([r.to_json() for r in runs], indent=2))
    return 1 if any(r.leaks for r in runs) else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "analyze":
        return _analyze(args)
    return _oracle(args)


if __name__ == "__main__":
    sys.exit(main())
