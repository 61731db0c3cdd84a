from pathlib import Path

import pytest

from leakscan.checker import check_function
from leakscan.config import AnalysisConfig
from leakscan.frontend import program_from_sources
from leakscan.graphs import build_call_graph, identify_candidates
from leakscan.summaries import generate_summaries
from leakscan.symex.engine import Executor

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
FIGURES = CORPUS / "figures"

# one line per acceptance criterion, echoed after the run
ACCEPTANCE: list[str] = []


def analyze(source: str, config: AnalysisConfig = None, name: str = "t.mc", candidates=None):
    """Program, summary store and findings for one in-memory source."""
    config = config or AnalysisConfig()
    program = program_from_sources({name: source})
    cg = build_call_graph(program)
    store = generate_summaries(program, cg, config)
    names = sorted(identify_candidates(cg, store)) if candidates is None else candidates
    findings = []
    for fn in names:
        states = Executor(program, store, config, "detect").run(fn)
        findings += check_function(states, fn, program)
    return program, store, findings


def run_states(source: str, fn: str, config: AnalysisConfig = None, mode: str = "detect"):
    config = config or AnalysisConfig()
    program = program_from_sources({"t.mc": source})
    store = generate_summaries(program, build_call_graph(program), config)
    ex = Executor(program, store, config, mode)
    return ex.run(fn), ex


@pytest.fixture
def figures():
    return FIGURES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
