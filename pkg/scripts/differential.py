"""Differential run of the analyzer against the concrete oracle on generated programs."""
import argparse
import json
import sys
import time

from leakscan.config import AnalysisConfig
from leakscan.frontend import program_from_sources
from leakscan.graphs import build_call_graph
from leakscan.oracle import compare, enumerate_runs, generate
from leakscan.summaries import generate_summaries
from leakscan.symex.engine import Executor
from leakscan.checker import check_function


def check_seed(seed: int, config: AnalysisConfig):
    g = generate(seed)
    program = program_from_sources({f"gen{seed}.mc": g.source})
    store = generate_summaries(program, build_call_graph(program), config)
    states = Executor(program, store, config, "detect").run(g.entry)
    findings = check_function(states, g.entry, program)
    return compare(findings, enumerate_runs(program, g.entry), g.entry)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--start", type=int, default=0)
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--show", action="store_true", help="print the source of disagreeing programs")
    args = ap.parse_args(argv)
    config = AnalysisConfig()
    t0 = time.perf_counter()
    fn = fp = low = agree = 0
    for seed in range(args.start, args.start + args.count):
        rep = check_seed(seed, config)
        fn += len(rep.false_negatives)
        fp += len(rep.sat_false_positives)
        low += len(rep.false_positives) - len(rep.sat_false_positives)
        agree += len(rep.agree)
        if not rep.ok:
            print(json.dumps({"seed": seed, **rep.to_json()}))
            if args.show:
                print(generate(seed).source)
    secs = time.perf_counter() - t0
    print(f"programs {args.count}  agree {agree}  fn {fn}  sat_fp {fp}  unknown_fp {low}  {secs:.1f}s")
    return 0 if fn == 0 and fp == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
