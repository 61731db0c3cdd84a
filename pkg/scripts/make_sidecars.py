"""Write <case>.json manifests and <case>.expected.json ground truth for the corpus.

Ground truth comes from the concrete oracle, never from the analyzer.  Every
function whose name ends in _leak or _ok is an entry point.
"""
import argparse
import json
import sys
from pathlib import Path

from leakscan.frontend import load_program
from leakscan.oracle import enumerate_runs, leaking_sites

ROOT = Path(__file__).resolve().parent.parent / "corpus"


def entries(program):
    return sorted(n for n in program.functions if n.endswith("_leak") or n.endswith("_ok"))


def sidecar(path: Path) -> dict:
    program = load_program([path])
    out = {"file": path.name, "entries": {}}
    for name in entries(program):
        sites = sorted(leaking_sites(enumerate_runs(program, name)))
        out["entries"][name] = [
            {"offset": s.offset, "length": s.length, "line": program.line_of(s), "excerpt": program.excerpt(s)}
            for s in sites
        ]
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default=str(ROOT))
    ap.add_argument("--check", action="store_true", help="fail if a sidecar is stale instead of writing")
    args = ap.parse_args(argv)
    stale = 0
    for src in sorted(Path(args.root).glob("*/*.mc")):
        if src.parent.name == "figures":
            continue
        manifest = src.with_suffix(".json")
        mtext = json.dumps({"name": src.stem, "files": [src.name]}, indent=2) + "\n"
        text = json.dumps(sidecar(src), indent=2) + "\n"
        target = src.with_suffix(".expected.json")
        if args.check:
            if not target.exists() or target.read_text() != text:
                print(f"stale: {target}")
                stale += 1
            continue
        manifest.write_text(mtext)
        target.write_text(text)
        d = json.loads(text)["entries"]
        print(f"{src.parent.name}/{src.name}: " + ", ".join(f"{k}={len(v)}" for k, v in d.items()))
    return 1 if stale else 0


if __name__ == "__main__":
    sys.exit(main())
