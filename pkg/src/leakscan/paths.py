"""Field-sensitive access paths naming heap objects relative to a function boundary.

A path is a base plus a chain of steps over C lvalues:

* ``("->", f)`` loads the current lvalue as a pointer and selects field ``f``
  of its pointee;
* ``(".", f)`` selects field ``f`` of the current lvalue;
* ``("*", "")`` loads the current lvalue and dereferences it.

The base lvalue depends on the list a path sits in.  For allocation paths of
a parameter (``para_objects``) the base is ``*param``: the slot the callee
writes through, so ``pdec`` names the object stored in ``*pdec`` and
``pdec->frame`` its ``frame`` member.  For ``freed_params`` the base is the
parameter itself, so ``q`` names the object ``q`` points to.  ``return`` is
the returned pointer, and ``::g`` is the global ``g``.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

MAX_STEPS = 8


class PathError(ValueError):
    pass


class FunctionType(enum.Enum):
    ALLOCATOR = "Allocator"
    DEALLOCATOR = "Deallocator"
    BOTH = "Both"
    NONE = "None"


@dataclass(frozen=True)
class AccessPath:
    base: str  # "return" | "param" | "global"
    index: int = -1
    name: str = field(default="", compare=False)
    steps: tuple[tuple[str, str], ...] = ()
    gname: str = ""  # global name; part of identity

    @staticmethod
    def ret(steps=()) -> "AccessPath":
        return AccessPath("return", steps=tuple(steps))

    @staticmethod
    def param(index: int, name: str = "", steps=()) -> "AccessPath":
        return AccessPath("param", index, name, tuple(steps))

    @staticmethod
    def glob(name: str, steps=()) -> "AccessPath":
        return AccessPath("global", -1, name, tuple(steps), name)

    @property
    def fields(self) -> tuple[str, ...]:
        return tuple(f for _, f in self.steps if f)

    def extend(self, kind: str, fname: str = "") -> "AccessPath":
        return AccessPath(self.base, self.index, self.name, self.steps + ((kind, fname),), self.gname)

    def sort_key(self):
        order = {"return": 0, "param": 1, "global": 2}[self.base]
        return (order, self.index, self.gname, len(self.steps), self.steps)

    def __lt__(self, other: "AccessPath") -> bool:
        return self.sort_key() < other.sort_key()

    def render(self) -> str:
        if self.base == "return":
            cur = "return"
        elif self.base == "global":
            cur = "::" + self.gname
        else:
            cur = self.name or f"${self.index}"
        for kind, f in self.steps:
            if kind == "*":
                cur = f"(*{cur})"
            else:
                cur += kind + f
        if cur.startswith("(*") and _outer_paren(cur):
            cur = cur[1:-1]
        return cur

    def __str__(self) -> str:
        return self.render()


def _outer_paren(s: str) -> bool:
    depth = 0
    for i, ch in enumerate(s):
        depth += ch == "("
        depth -= ch == ")"
        if depth == 0 and i < len(s) - 1:
            return False
    return True


_TOKEN = re.compile(r"\s*(->|::|\.|\*|\(|\)|\$\d+|[A-Za-z_]\w*)")


def parse_path(text: str, param_names: Sequence[str] = ()) -> AccessPath:
    """Inverse of :meth:`AccessPath.render`; parameter names resolve by position."""
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PathError(f"bad access path {text!r} at column {pos}")
        toks.append(m.group(1))
        pos = m.end()
    i = 0

    def peek():
        return toks[i] if i < len(toks) else None

    def take():
        nonlocal i
        if i >= len(toks):
            raise PathError(f"truncated access path {text!r}")
        i += 1
        return toks[i - 1]

    def unary():
        if peek() == "*":
            take()
            inner = unary()
            return inner.extend("*")
        return postfix()

    def primary():
        t = take() if peek() is not None else None
        if t == "(":
            p = unary()
            if take() != ")":
                raise PathError(f"unbalanced parenthesis in {text!r}")
            return p
        if t == "return":
            return AccessPath.ret()
        if t == "::":
            return AccessPath.glob(take())
        if t is not None and t.startswith("$"):
            idx = int(t[1:])
            nm = param_names[idx] if idx < len(param_names) else ""
            return AccessPath.param(idx, nm)
        if t is not None and re.fullmatch(r"[A-Za-z_]\w*", t):
            if t not in param_names:
                raise PathError(f"unknown parameter {t!r} in {text!r}")
            return AccessPath.param(list(param_names).index(t), t)
        raise PathError(f"bad access path {text!r}")

    def postfix():
        p = primary()
        while peek() in ("->", "."):
            kind = take()
            p = p.extend(kind, take())
        return p

    result = unary()
    if i != len(toks):
        raise PathError(f"trailing tokens in access path {text!r}")
    return result


def rebase(path: AccessPath, names: Mapping[int, str]) -> AccessPath:
    if path.base != "param":
        return path
    return AccessPath.param(path.index, names.get(path.index, path.name), path.steps)


def short(path: Optional[AccessPath]) -> str:
    return path.render() if path is not None else "?"
