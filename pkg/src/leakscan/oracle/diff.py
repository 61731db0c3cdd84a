"""Differential comparison of analyzer findings against concrete runs."""
from __future__ import annotations

from dataclasses import dataclass, field

from .interp import ConcreteRun, leaking_sites


@dataclass
class DiffReport:
    entry: str
    agree: list = field(default_factory=list)
    false_positives: list = field(default_factory=list)  # (site, confidence)
    false_negatives: list = field(default_factory=list)

    @property
    def sat_false_positives(self) -> list:
        return [s for s, conf in self.false_positives if conf == "high"]

    @property
    def ok(self) -> bool:
        return not self.false_negatives and not self.sat_false_positives

    def to_json(self) -> dict:
        sp = lambda s: [s.file, s.offset, s.length]
        return {
            "entry": self.entry,
            "agree": [sp(s) for s in self.agree],
            "false_positives": [{"site": sp(s), "confidence": c} for s, c in self.false_positives],
            "false_negatives": [sp(s) for s in self.false_negatives],
        }


def compare(findings, runs: list[ConcreteRun], entry: str) -> DiffReport:
    """Findings are analyzer Finding objects; only those in `entry` count."""
    reported = {}
    for f in findings:
        if f.function == entry:
            reported[f.alloc_site] = f.confidence
    truth = leaking_sites(runs)
    rep = DiffReport(entry)
    for site in sorted(set(reported) | truth):
        if site in reported and site in truth:
            rep.agree.append(site)
        elif site in reported:
            rep.false_positives.append((site, reported[site]))
        else:
            rep.false_negatives.append(site)
    return rep
