"""Function summaries and the bottom-up fixpoint that builds them."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .config import AnalysisConfig
from .graphs import CallGraph
from .paths import AccessPath, FunctionType, PathError, parse_path

SEED_ALLOCATORS = ("calloc", "malloc", "realloc", "strdup")
SEED_DEALLOCATORS = ("free",)


class DecodeError(ValueError):
    def __init__(self, message: str, location: str):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass
class FunctionSummary:
    name: str
    ret_objects: list[AccessPath] = field(default_factory=list)
    para_objects: list[AccessPath] = field(default_factory=list)
    freed_params: list[AccessPath] = field(default_factory=list)
    global_objects: list[AccessPath] = field(default_factory=list)
    conditional: bool = False
    # parameters whose pointee the callee keeps (global, other param, collection)
    escaped_params: list[AccessPath] = field(default_factory=list)

    @property
    def function_type(self) -> FunctionType:
        alloc = bool(self.ret_objects or self.para_objects or self.global_objects)
        if alloc and self.freed_params:
            return FunctionType.BOTH
        if alloc:
            return FunctionType.ALLOCATOR
        if self.freed_params:
            return FunctionType.DEALLOCATOR
        return FunctionType.NONE

    @property
    def allocates(self) -> bool:
        return self.function_type in (FunctionType.ALLOCATOR, FunctionType.BOTH)

    @property
    def frees(self) -> bool:
        return self.function_type in (FunctionType.DEALLOCATOR, FunctionType.BOTH)

    def objects(self) -> frozenset:
        return frozenset(self.ret_objects) | frozenset(self.para_objects) | frozenset(
            self.global_objects) | frozenset(("free", p) for p in self.freed_params) | frozenset(
            ("escape", p) for p in self.escaped_params)

    def normalized(self) -> "FunctionSummary":
        return FunctionSummary(self.name, sorted(set(self.ret_objects)), sorted(set(self.para_objects)),
                               sorted(set(self.freed_params)), sorted(set(self.global_objects)),
                               self.conditional, sorted(set(self.escaped_params)))

    def to_json(self) -> dict:
        d = {
            "name": self.name,
            "function_type": self.function_type.value,
            "ret_objects": [p.render() for p in sorted(self.ret_objects)],
            "para_objects": [p.render() for p in sorted(self.para_objects)],
        }
        if self.global_objects:
            d["global_objects"] = [p.render() for p in sorted(self.global_objects)]
        d["freed_params"] = [p.render() for p in sorted(self.freed_params)]
        if self.escaped_params:
            d["escaped_params"] = [p.render() for p in sorted(self.escaped_params)]
        d["conditional"] = self.conditional
        return d


def merge(old: Optional[FunctionSummary], new: FunctionSummary) -> FunctionSummary:
    if old is None:
        return new.normalized()
    # a fresh analysis that sees at least the old objects has the better
    # view of conditionality; otherwise keep the conservative answer
    covers = old.objects() <= new.objects()
    return FunctionSummary(
        new.name,
        sorted(set(old.ret_objects) | set(new.ret_objects)),
        sorted(set(old.para_objects) | set(new.para_objects)),
        sorted(set(old.freed_params) | set(new.freed_params)),
        sorted(set(old.global_objects) | set(new.global_objects)),
        new.conditional if covers else (old.conditional or new.conditional),
        sorted(set(old.escaped_params) | set(new.escaped_params)),
    )


class SummaryStore:
    def __init__(self):
        self.entries: dict[str, FunctionSummary] = {}
        self.generation: dict[str, int] = {}
        self.seeds: set[str] = set()
        self.params: dict[str, tuple[str, ...]] = {}
        self.diagnostics: list[str] = []
        self.history: list[dict[str, FunctionSummary]] = []
        self.rounds = 0

    def get(self, name: str) -> Optional[FunctionSummary]:
        return self.entries.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __eq__(self, other) -> bool:
        return isinstance(other, SummaryStore) and self.entries == other.entries

    def is_seed(self, name: str) -> bool:
        return name in self.seeds

    def is_allocator(self, name: str) -> bool:
        s = self.entries.get(name)
        return s is not None and s.allocates

    def is_deallocator(self, name: str) -> bool:
        s = self.entries.get(name)
        return s is not None and s.frees

    def update(self, summary: FunctionSummary, generation: int) -> bool:
        """Merge `summary` in; True when the stored entry grew."""
        if summary.name in self.seeds:
            return False
        old = self.entries.get(summary.name)
        merged = merge(old, summary)
        if old is not None and merged == old:
            return False
        self.entries[summary.name] = merged
        self.generation[summary.name] = generation
        return True

    def snapshot(self) -> dict[str, FunctionSummary]:
        return {k: v.normalized() for k, v in self.entries.items()}

    def copy(self) -> "SummaryStore":
        s = SummaryStore()
        s.entries = self.snapshot()
        s.generation = dict(self.generation)
        s.seeds = set(self.seeds)
        s.params = dict(self.params)
        return s

    def stats(self) -> dict:
        custom = [s for n, s in self.entries.items() if n not in self.seeds]
        return {
            "allocators": sum(s.allocates for s in custom),
            "deallocators": sum(s.frees for s in custom),
            "conditional": sum(s.conditional for s in custom),
            "seeds": len(self.seeds),
            "rounds": self.rounds,
        }


def seed_summaries() -> SummaryStore:
    store = SummaryStore()
    for name in SEED_ALLOCATORS:
        s = FunctionSummary(name, ret_objects=[AccessPath.ret()])
        if name == "realloc":
            s.freed_params = [AccessPath.param(0, "ptr")]
        store.entries[name] = s
        store.generation[name] = 0
        store.seeds.add(name)
    store.entries["free"] = FunctionSummary("free", freed_params=[AccessPath.param(0, "ptr")])
    store.generation["free"] = 0
    store.seeds.add("free")
    store.params.update({"malloc": ("size",), "calloc": ("n", "size"), "strdup": ("s",),
                         "realloc": ("ptr", "size"), "free": ("ptr",)})
    return store


def summarize_function(name: str, program, store: SummaryStore,
                       config: AnalysisConfig) -> Optional[FunctionSummary]:
    """Summary of one function against the current store; None if it neither allocates nor frees.

    Raises BudgetExceeded when exploration trips the per-function budget.
    """
    from .symex.engine import Executor

    fn = program.functions[name]
    ex = Executor(program, store, config, "summary")
    terminals = ex.run(name)
    per_path = []
    for st in terminals:
        allocs, freed = ex.summary_facts(st, fn)
        per_path.append((allocs, freed, ex.escaped_params(st, fn)))
    all_allocs = set().union(*(a for a, _, _ in per_path))
    all_freed = set().union(*(f for _, f, _ in per_path))
    all_esc = set().union(*(x for _, _, x in per_path))
    if not all_allocs and not all_freed and not all_esc:
        return None
    conditional = any(a != all_allocs or f != all_freed or x != all_esc for a, f, x in per_path)
    summary = FunctionSummary(name, conditional=conditional, escaped_params=sorted(all_esc))
    for p in sorted(all_allocs):
        {"return": summary.ret_objects, "param": summary.para_objects,
         "global": summary.global_objects}[p.base].append(p)
    summary.freed_params = sorted(all_freed)
    return summary


def generate_summaries(program, callgraph: CallGraph, config: AnalysisConfig,
                       store: Optional[SummaryStore] = None, keep_history: bool = False) -> SummaryStore:
    from .symex.engine import BudgetExceeded

    store = store or seed_summaries()
    for name, fn in program.functions.items():
        store.params[name] = fn.param_names
    defined = set(program.functions)
    # every defined function gets one pass: escape-only summaries have no MAD callee
    worklist = sorted(defined - store.seeds)
    rnd = 0
    while worklist:
        rnd += 1
        if rnd > config.max_rounds:
            store.diagnostics.append(f"summary fixpoint stopped after {config.max_rounds} rounds")
            break
        snapshot = store.copy()
        results = {}
        for name in worklist:
            if name in store.seeds:
                continue
            try:
                results[name] = summarize_function(name, program, snapshot, config)
            except BudgetExceeded as exc:
                store.diagnostics.append(f"summary budget exceeded: {exc}")
        changed = [n for n in worklist if results.get(n) is not None and store.update(results[n], rnd)]
        if keep_history:
            store.history.append(store.snapshot())
        worklist = sorted({c for n in changed for c in callgraph.callers(n)} & defined)
    store.rounds = rnd
    return store


# ------------------------------------------------------------------ JSON


def encode_summaries(store: SummaryStore) -> str:
    rows = [store.entries[n].to_json() for n in sorted(store.entries)]
    return json.dumps(rows, indent=2)


def _paths(raw, key, where, names, base) -> list[AccessPath]:
    val = raw.get(key, [])
    if not isinstance(val, list) or not all(isinstance(x, str) for x in val):
        raise DecodeError(f"{key} must be a list of strings", where)
    out = []
    for i, text in enumerate(val):
        try:
            p = parse_path(text, names)
        except PathError as exc:
            raise DecodeError(str(exc), f"{where}.{key}[{i}]") from None
        if p.base != base:
            raise DecodeError(f"{text!r} is not a {base} path", f"{where}.{key}[{i}]")
        out.append(p)
    return out


def decode_summaries(text: str, params: Optional[dict[str, Iterable[str]]] = None) -> SummaryStore:
    """Parse summary JSON; `params` maps function names to parameter names."""
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(rows, list):
        raise DecodeError("expected a list of summaries", "$")
    base = seed_summaries()
    params = {**base.params, **{k: tuple(v) for k, v in (params or {}).items()}}
    store = SummaryStore()
    for i, raw in enumerate(rows):
        where = f"$[{i}]"
        if not isinstance(raw, dict) or not isinstance(raw.get("name"), str):
            raise DecodeError("summary must be an object with a string name", where)
        name = raw["name"]
        known = {"name", "function_type", "ret_objects", "para_objects", "global_objects",
                 "freed_params", "escaped_params", "conditional"}
        extra = set(raw) - known
        if extra:
            raise DecodeError(f"unknown keys {sorted(extra)}", where)
        names = tuple(params.get(name, ()))
        s = FunctionSummary(
            name,
            _paths(raw, "ret_objects", where, names, "return"),
            _paths(raw, "para_objects", where, names, "param"),
            _paths(raw, "freed_params", where, names, "param"),
            _paths(raw, "global_objects", where, names, "global"),
            bool(raw.get("conditional", False)),
            _paths(raw, "escaped_params", where, names, "param"),
        )
        if not isinstance(raw.get("conditional", False), bool):
            raise DecodeError("conditional must be a boolean", where)
        ft = raw.get("function_type")
        if ft is not None and ft != s.function_type.value:
            raise DecodeError(f"function_type {ft!r} disagrees with object lists", where)
        if name in store.entries:
            raise DecodeError(f"duplicate summary for {name!r}", where)
        store.entries[name] = s.normalized()
        store.generation[name] = 0
        store.params[name] = names
        if name in base.seeds and store.entries[name] == base.entries[name].normalized():
            store.seeds.add(name)
    return store
