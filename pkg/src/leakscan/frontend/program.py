"""Cross-unit linking: symbol table, function table, external set."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from . import ast as A
from .lexer import line_col, tokenize
from .parser import parse_unit

SEED_FUNCTIONS = ("calloc", "free", "malloc", "realloc", "strdup")


class LinkError(Exception):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class Program:
    units: list[A.Unit]
    functions: dict[str, A.FunctionDef]
    prototypes: dict[str, A.FunctionDef]
    globals: dict[str, A.GlobalDecl]
    records: dict[str, A.RecordDecl]
    externals: set[str]
    symbols: dict[str, int]
    sources: dict[str, str] = field(default_factory=dict)

    def unit_of(self, fname: str) -> Optional[str]:
        fn = self.functions.get(fname)
        return fn.span.file if fn else None

    def params_of(self, fname: str) -> Optional[tuple[str, ...]]:
        fn = self.functions.get(fname) or self.prototypes.get(fname)
        return fn.param_names if fn else None

    def line_of(self, span) -> int:
        src = self.sources.get(span.file)
        if src is None:
            return 0
        return line_col(src, span.offset)[0]

    def excerpt(self, span) -> str:
        src = self.sources.get(span.file)
        if src is None:
            return ""
        lo = src.rfind("\n", 0, span.offset) + 1
        hi = src.find("\n", span.offset)
        return src[lo : hi if hi >= 0 else len(src)].strip()


def _check_function(fn: A.FunctionDef, globals_: dict, fields: set[str],
                    functions: set[str]) -> list[str]:
    problems = []
    locals_ = set(fn.param_names)
    labels = set()
    gotos = []
    for s in A.walk_stmts(fn.body):
        if isinstance(s, A.VarDecl):
            locals_.add(s.name)
        elif isinstance(s, A.Labeled):
            if s.label in labels:
                problems.append(f"{fn.name}: duplicate label {s.label!r}")
            labels.add(s.label)
        elif isinstance(s, A.Goto):
            gotos.append(s.label)
    for g in gotos:
        if g not in labels:
            problems.append(f"{fn.name}: goto to undefined label {g!r}")
    for e in A.walk_exprs(fn.body):
        if isinstance(e, A.Name) and e.id not in locals_ and e.id not in globals_:
            if e.id in functions:
                problems.append(f"{fn.name}: function {e.id!r} used as a value")
            else:
                problems.append(f"{fn.name}: unresolved identifier {e.id!r}")
        elif isinstance(e, A.Member) and e.field not in fields:
            problems.append(f"{fn.name}: no record declares field {e.field!r}")
    return problems


def link_program(units: Iterable[A.Unit], sources: Optional[dict[str, str]] = None) -> Program:
    units = list(units)
    problems: list[str] = []
    functions: dict[str, A.FunctionDef] = {}
    prototypes: dict[str, A.FunctionDef] = {}
    globals_: dict[str, A.GlobalDecl] = {}
    records: dict[str, A.RecordDecl] = {}
    for u in units:
        for d in u.decls:
            if isinstance(d, A.FunctionDef):
                if d.body is not None:
                    if d.name in functions:
                        problems.append(f"duplicate definition of function {d.name!r}")
                    else:
                        functions[d.name] = d
                else:
                    prev = prototypes.get(d.name)
                    if prev is not None and len(prev.params) != len(d.params):
                        problems.append(f"conflicting declarations of {d.name!r}")
                    prototypes.setdefault(d.name, d)
            elif isinstance(d, A.GlobalDecl):
                prev = globals_.get(d.name)
                if prev is None:
                    globals_[d.name] = d
                elif prev.type != d.type:
                    problems.append(f"conflicting types for global {d.name!r}")
                elif prev.init is not None and d.init is not None:
                    problems.append(f"duplicate definition of global {d.name!r}")
                elif d.init is not None:
                    globals_[d.name] = d
            elif isinstance(d, A.RecordDecl):
                prev = records.get(d.name)
                if prev is not None and prev.fields != d.fields:
                    problems.append(f"conflicting definitions of record {d.name!r}")
                records.setdefault(d.name, d)
    for name, proto in prototypes.items():
        fn = functions.get(name)
        if fn is not None and len(fn.params) != len(proto.params):
            problems.append(f"conflicting declarations of {name!r}")
    for name in functions:
        if name in globals_:
            problems.append(f"{name!r} declared as both function and global")
    fields = {f.name for r in records.values() for f in r.fields}
    callees: set[str] = set()
    for fn in functions.values():
        problems += _check_function(fn, globals_, fields, set(functions) | set(prototypes))
        callees.update(c.func for c in A.calls_in(fn))
    if problems:
        raise LinkError(problems)
    externals = {c for c in callees if c not in functions and c not in SEED_FUNCTIONS}
    names = sorted(set(functions) | set(globals_) | set(prototypes) | callees)
    symbols = {n: i for i, n in enumerate(names)}
    return Program(units, functions, prototypes, globals_, records, externals, symbols,
                   dict(sources or {}))


def load_program(paths: Iterable[str | Path]) -> Program:
    units = []
    sources = {}
    for p in paths:
        p = Path(p)
        text = p.read_text(encoding="utf-8")
        sources[str(p)] = text
        units.append(parse_unit(tokenize(text, str(p))))
    return link_program(units, sources)


def program_from_sources(named: dict[str, str]) -> Program:
    """Parse and link in-memory sources keyed by file id."""
    units = [parse_unit(tokenize(text, fid)) for fid, text in named.items()]
    return link_program(units, named)
