"""Concrete ground truth for differential testing."""
from .diff import DiffReport, compare
from .generator import GeneratedProgram, generate
from .interp import ConcreteRun, DecisionBoundExceeded, Diverged, enumerate_runs, leaking_sites

__all__ = [
    "ConcreteRun", "DecisionBoundExceeded", "DiffReport", "Diverged", "GeneratedProgram",
    "compare", "enumerate_runs", "generate", "leaking_sites",
]
