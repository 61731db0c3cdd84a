"""Manifest ingestion, the four-phase pipeline, and report assembly."""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .. import __version__
from ..checker import Finding, check_function
from ..config import AnalysisConfig
from ..frontend import load_program
from ..frontend.lexer import Span
from ..frontend.program import Program
from ..graphs import build_call_graph, identify_candidates
from ..summaries import SummaryStore, decode_summaries, generate_summaries, seed_summaries
from ..symex.engine import Executor

PHASES = ("preprocessing", "modeling", "identifying", "detecting")


class ManifestError(ValueError):
    pass


@dataclass
class Manifest:
    name: str
    files: list[Path]
    config: dict = field(default_factory=dict)
    origin: Optional[Path] = None

    def analysis_config(self, **overrides) -> AnalysisConfig:
        merged = {**self.config, **{k: v for k, v in overrides.items() if v is not None}}
        try:
            return AnalysisConfig(**merged)
        except ValueError as exc:
            raise ManifestError(str(exc)) from None


def ingest_manifest(path) -> Manifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return manifest_from_dict(raw, path.parent, path)


def manifest_from_dict(raw, base: Path = Path("."), origin: Optional[Path] = None) -> Manifest:
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")
    unknown = set(raw) - {"name", "files", "config"}
    if unknown:
        raise ManifestError(f"unknown manifest keys: {', '.join(sorted(unknown))}")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ManifestError("manifest needs a non-empty string 'name'")
    files = raw.get("files")
    if not isinstance(files, list) or not files or not all(isinstance(f, str) for f in files):
        raise ManifestError("manifest needs a non-empty list of file paths in 'files'")
    config = raw.get("config", {})
    if not isinstance(config, dict):
        raise ManifestError("'config' must be an object")
    bad = sorted(set(config) - set(AnalysisConfig.keys()))
    if bad:
        raise ManifestError(f"unknown config key: {', '.join(bad)}")
    paths = [Path(f) if Path(f).is_absolute() else base / f for f in files]
    missing = [str(p) for p in paths if not p.is_file()]
    if missing:
        raise ManifestError(f"missing source files: {', '.join(missing)}")
    m = Manifest(name, paths, dict(config), origin)
    m.analysis_config()  # validate values early
    return m


@dataclass
class Report:
    version: str
    manifest: dict
    config: dict
    timing_ms: dict
    statistics: dict
    findings: list
    diagnostics: list
    digest: str = ""
    traces: Optional[dict] = None

    def body(self) -> dict:
        d = {
            "version": self.version,
            "manifest": self.manifest,
            "config": self.config,
            "statistics": self.statistics,
            "findings": self.findings,
            "diagnostics": self.diagnostics,
        }
        if self.traces is not None:
            d["traces"] = self.traces
        return d

    def to_json(self) -> dict:
        d = self.body()
        d["digest"] = self.digest
        d["timing_ms"] = self.timing_ms
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, d: dict) -> "Report":
        return cls(d["version"], d["manifest"], d["config"], d["timing_ms"], d["statistics"],
                   d["findings"], d["diagnostics"], d.get("digest", ""), d.get("traces"))

    def __eq__(self, other):
        return isinstance(other, Report) and self.to_json() == other.to_json()


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


@dataclass
class PipelineResult:
    program: Program
    store: SummaryStore
    candidates: list[str]
    findings: list[Finding]
    report: Report
    callgraph: object


def _finding_json(f: Finding, program: Program) -> dict:
    d = f.to_json()
    d["alloc_site"]["line"] = program.line_of(f.alloc_site)
    for w in d["witness"]:
        sp = Span(w["file"], w["offset"], w["length"])
        w["line"] = program.line_of(sp)
        w["excerpt"] = program.excerpt(sp)
    return d


def run_pipeline(manifest: Manifest, config: Optional[AnalysisConfig] = None, *,
                 candidate_filter: bool = True, summaries_in: Optional[str] = None,
                 dump_traces: bool = False) -> PipelineResult:
    config = config or manifest.analysis_config()
    times = {}
    t0 = time.perf_counter()
    program = load_program(manifest.files)
    callgraph = build_call_graph(program)
    t1 = time.perf_counter()
    times["preprocessing"] = (t1 - t0) * 1000
    if summaries_in is not None:
        params = {n: fn.param_names for n, fn in program.functions.items()}
        params.update({n: fn.param_names for n, fn in program.prototypes.items() if n not in params})
        store = decode_summaries(summaries_in, params)
        seeds = seed_summaries()
        for name in sorted(seeds.entries):
            if name not in store.entries:
                store.entries[name] = seeds.entries[name]
                store.seeds.add(name)
    else:
        store = generate_summaries(program, callgraph, config)
    t2 = time.perf_counter()
    times["modeling"] = (t2 - t1) * 1000
    if candidate_filter:
        candidates = sorted(identify_candidates(callgraph, store))
    else:
        candidates = sorted(program.functions)
    t3 = time.perf_counter()
    times["identifying"] = (t3 - t2) * 1000
    findings: list[Finding] = []
    diagnostics = list(store.diagnostics)
    paths = 0
    traces = {} if dump_traces else None
    for name in candidates:
        ex = Executor(program, store, config, "detect")
        states = ex.run(name)
        paths += len(states)
        diagnostics += [f"{name}: {d}" for d in ex.diagnostics]
        findings += check_function(states, name, program)
        if traces is not None:
            traces[name] = [[e.to_json() for e in st.heap.trace] for st in states]
    findings.sort(key=Finding.sort_key)
    t4 = time.perf_counter()
    times["detecting"] = (t4 - t3) * 1000
    times = {k: round(v, 3) for k, v in times.items()}
    times["total"] = round(sum(times[p] for p in PHASES), 3)

    sources = {str(p): program.sources.get(str(p), "") for p in manifest.files}
    mjson = {"name": manifest.name, "files": [str(p) for p in manifest.files],
             "digest": _digest({"name": manifest.name, "config": config.to_json(), "sources": sources})}
    stats = {
        "functions": len(program.functions),
        "candidates": len(candidates),
        "paths": paths,
        "findings": len(findings),
        **{f"summary_{k}": v for k, v in store.stats().items()},
    }
    report = Report(__version__, mjson, config.to_json(), times, stats,
                    [_finding_json(f, program) for f in findings], diagnostics, traces=traces)
    report.digest = _digest(report.body())
    return PipelineResult(program, store, candidates, findings, report, callgraph)
