"""Analyze every manifest under corpus/ and score findings against the sidecars.

--json prints the reports themselves (timing removed) so two runs can be
compared byte for byte.
"""
import argparse
import json
import sys
from pathlib import Path

from leakscan.driver import ingest_manifest, run_pipeline

ROOT = Path(__file__).resolve().parent.parent / "corpus"


def manifests(root: Path) -> list[Path]:
    return sorted(m for m in root.glob("*/*.json") if not m.name.endswith(".expected.json"))


def score(root: Path, no_filter: bool = False) -> dict:
    tally = {"leak_sites": 0, "found": 0, "sat_fp": 0, "low_fp": 0, "pairs": 0}
    for m in manifests(root):
        sidecar = m.with_suffix(".expected.json")
        if not sidecar.exists():
            continue
        expected = json.loads(sidecar.read_text())["entries"]
        got: dict = {}
        for f in run_pipeline(ingest_manifest(m), candidate_filter=not no_filter).findings:
            got.setdefault(f.function, {})[f.alloc_site.offset] = f.confidence
        tally["pairs"] += sum(n.endswith("_leak") for n in expected)
        for fn, sites in expected.items():
            want = {s["offset"] for s in sites}
            have = got.get(fn, {})
            tally["leak_sites"] += len(want)
            tally["found"] += len(want & set(have))
            for off, conf in have.items():
                if off not in want:
                    tally["sat_fp" if conf == "high" else "low_fp"] += 1
                    print(f"extra: {m.parent.name}/{fn} at offset {off} ({conf})")
            for off in sorted(want - set(have)):
                print(f"missed: {m.parent.name}/{fn} at offset {off}")
    tally["recall"] = tally["found"] / tally["leak_sites"] if tally["leak_sites"] else 1.0
    return tally


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default=str(ROOT))
    ap.add_argument("--json", action="store_true", help="print reports without timing")
    ap.add_argument("--no-candidate-filter", action="store_true")
    args = ap.parse_args(argv)
    root = Path(args.root)
    if args.json:
        out = []
        for m in manifests(root):
            d = run_pipeline(ingest_manifest(m), candidate_filter=not args.no_candidate_filter).report.to_json()
            d.pop("timing_ms")
            out.append(d)
        print(json.dumps(out, indent=1, sort_keys=True))
        return 0
    t = score(root, args.no_candidate_filter)
    print(json.dumps(t, indent=2))
    return 0 if t["sat_fp"] == 0 and t["recall"] >= 0.95 else 1


if __name__ == "__main__":
    sys.exit(main())
