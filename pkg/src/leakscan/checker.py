"""Leak verdicts over terminal path states."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .frontend.lexer import Span
from .heapmodel import EventKind, MemoryObject
from .symex.engine import PathState
from .symex.solver import Verdict, render_constraint
from .symex.values import HeapRef


@dataclass(frozen=True)
class Escaped:
    reason: str  # ReturnedValue | StoredToParam | StoredToGlobal | GlobalCollectionCall
    function: str = ""

    def __str__(self):
        return f"{self.reason}({self.function})" if self.function else self.reason


@dataclass(frozen=True)
class Local:
    def __str__(self):
        return "Local"


LOCAL = Local()
EscapeVerdict = Escaped | Local

_PRIORITY = [
    (EventKind.RETURN, "ReturnedValue"),
    (EventKind.STORE_PARAM, "StoredToParam"),
    (EventKind.STORE_GLOBAL, "StoredToGlobal"),
    (EventKind.COLLECTION, "GlobalCollectionCall"),
]


@dataclass
class Finding:
    function: str
    alloc_site: Span
    leaked_path: str
    trigger: str
    witness: list
    status: str = "Leak"
    confidence: str = "high"
    alternates: list = field(default_factory=list)
    verdict: Verdict = Verdict.SAT
    origin: Optional[Span] = None

    def key(self):
        return (self.function, self.alloc_site)

    def sort_key(self):
        return (self.alloc_site.file, self.alloc_site.offset, self.alloc_site.length, self.function)

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "alloc_site": {"file": self.alloc_site.file, "offset": self.alloc_site.offset,
                           "length": self.alloc_site.length},
            "leaked_path": self.leaked_path,
            "trigger": self.trigger,
            "alternates": list(self.alternates),
            "witness": [{"file": s.file, "offset": s.offset, "length": s.length} for s in self.witness],
            "status": self.status,
            "confidence": self.confidence,
        }


def _events_of(state: PathState, oid: int):
    return [e for e in state.heap.trace if e.obj == oid]


def escape_analysis(obj: MemoryObject, state: PathState, program=None) -> EscapeVerdict:
    chain = [obj.id] + state.heap.ancestors(obj.id)
    events = [e for oid in chain for e in _events_of(state, oid)]
    for kind, reason in _PRIORITY:
        for e in events:
            if e.kind is kind:
                return Escaped(reason, e.detail if kind is EventKind.COLLECTION else "")
    return LOCAL


def _global_held(state: PathState, oid: int) -> bool:
    """Some global cell written with this object (or an ancestor) still holds it."""
    for a in [oid] + state.heap.ancestors(oid):
        for e in _events_of(state, a):
            if e.kind is EventKind.STORE_GLOBAL:
                v = state.mem.get(e.cell)
                if isinstance(v, HeapRef) and v.obj == a:
                    return True
    return False


def _only_global(state: PathState, oid: int) -> bool:
    kinds = {e.kind for a in [oid] + state.heap.ancestors(oid) for e in _events_of(state, a)}
    return EventKind.STORE_GLOBAL in kinds and not kinds & {
        EventKind.RETURN, EventKind.STORE_PARAM, EventKind.COLLECTION}


def _label(obj: MemoryObject, program) -> str:
    if program is not None and obj.alloc_site is not None:
        text = program.excerpt(obj.alloc_site)
        if text:
            return text
    return obj.label or f"obj{obj.id}"


def _candidate(state: PathState, obj: MemoryObject, function: str, program) -> Finding:
    return Finding(
        function=function,
        alloc_site=obj.alloc_site,
        leaked_path=_label(obj, program),
        trigger=render_constraint(state.pc),
        witness=list(state.witness),
        verdict=state.verdict,
        confidence="high" if state.verdict is Verdict.SAT else "low",
        origin=obj.origin,
    )


def _leakable(state: PathState):
    for obj in state.heap.objects.values():
        if obj.allocated and obj.refcount > 0 and not obj.internal and obj.alloc_site is not None:
            yield obj


def check_path(state: PathState, function: str = "", program=None) -> list[Finding]:
    return [_candidate(state, o, function, program) for o in _leakable(state)
            if escape_analysis(o, state, program) == LOCAL]


def global_slot_check(state: PathState, function: str = "", program=None) -> list[Finding]:
    return [_candidate(state, o, function, program) for o in _leakable(state)
            if _only_global(state, o.id) and not _global_held(state, o.id)]


def _witness_key(f: Finding):
    return tuple((s.file, s.offset, s.length) for s in f.witness)


def dedupe(candidates: list[Finding]) -> list[Finding]:
    groups: dict = {}
    for c in candidates:
        groups.setdefault(c.key(), []).append(c)
    out = []
    for key, members in groups.items():
        # Sat witnesses first, then the earliest path
        members = sorted(members, key=lambda m: (m.confidence != "high", _witness_key(m)))
        first = members[0]
        triggers = []
        for m in members:
            for t in [m.trigger] + list(m.alternates):
                if t not in triggers:
                    triggers.append(t)
        any_sat = any(m.confidence == "high" for m in members)
        out.append(Finding(first.function, first.alloc_site, first.leaked_path, first.trigger,
                           list(first.witness), first.status, "high" if any_sat else "low",
                           triggers, Verdict.SAT if any_sat else first.verdict, first.origin))
    out.sort(key=Finding.sort_key)
    return out


def check_function(states: list[PathState], function: str, program=None) -> list[Finding]:
    cands = []
    for st in states:
        cands += check_path(st, function, program)
        cands += global_slot_check(st, function, program)
    return dedupe(cands)
