"""Feasibility checks for path constraints over integer difference bounds.

Atoms are ``(term, positive)`` pairs.  Each atom is linearised; atoms that
reduce to ``x op c`` or ``x - y op c`` (scaled by any nonzero factor) feed a
difference-bound graph, and everything else is set aside.  A negative cycle
refutes the conjunction.  Disequalities are handled by splitting.
"""
from __future__ import annotations

import enum
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

from .values import NEGATE, Arith, Cmp, Const, Not, Sym, Value, is_pointer

MAX_SPLITS = 12
INF = float("inf")


class Verdict(enum.Enum):
    SAT = "Sat"
    UNSAT = "Unsat"
    UNKNOWN = "Unknown"


Atom = tuple  # (Value, bool)


def _linear(v: Value) -> Optional[tuple[dict, int]]:
    if isinstance(v, Const):
        return {}, v.value
    if isinstance(v, Sym):
        return {v.id: 1}, 0
    if isinstance(v, Arith) and v.op in ("+", "-"):
        a, b = _linear(v.left), _linear(v.right)
        if a is None or b is None:
            return None
        sign = 1 if v.op == "+" else -1
        coefs = dict(a[0])
        for k, c in b[0].items():
            coefs[k] = coefs.get(k, 0) + sign * c
        return {k: c for k, c in coefs.items() if c}, a[1] + sign * b[1]
    if isinstance(v, Arith) and v.op == "*":
        a, b = _linear(v.left), _linear(v.right)
        if a is None or b is None:
            return None
        if not a[0]:
            a, b = b, a
        if b[0]:
            return None  # nonlinear
        k = b[1]
        return {s: c * k for s, c in a[0].items() if c * k}, a[1] * k
    return None


def _normalize(atom: Atom) -> Optional[tuple[str, Value, Value]]:
    term, positive = atom
    while isinstance(term, Not):
        term, positive = term.operand, not positive
    if isinstance(term, Cmp):
        op, a, b = term.op, term.left, term.right
    else:
        op, a, b = "!=", term, Const(0)
    if not positive:
        op = NEGATE[op]
    return op, a, b


# facts: ("le", x, y, c) for x - y <= c; ("ne", x, y, c) for x - y != c.
# node 0 is the constant zero; symbols map to ids shifted by one.


def _facts(atom: Atom) -> Optional[list]:
    norm = _normalize(atom)
    if norm is None:
        return None
    op, a, b = norm
    if is_pointer(a) or is_pointer(b):
        return None
    la, lb = _linear(a), _linear(b)
    if la is None or lb is None:
        return None
    coefs = dict(la[0])
    for k, c in lb[0].items():
        coefs[k] = coefs.get(k, 0) - c
    coefs = {k: c for k, c in coefs.items() if c}
    k = la[1] - lb[1]  # sum(coefs*x) + k  op  0
    if not coefs:
        holds = {"==": k == 0, "!=": k != 0, "<": k < 0, "<=": k <= 0, ">": k > 0, ">=": k >= 0}[op]
        return [] if holds else [("false",)]
    if len(coefs) == 1:
        (x, ax), = coefs.items()
        pos, neg_ = x + 1, 0
    elif len(coefs) == 2:
        (x, ax), (y, ay) = sorted(coefs.items())
        if ax != -ay:
            return None
        pos, neg_ = x + 1, y + 1
    else:
        return None
    # ax * (pos - neg) + k op 0
    if ax < 0:
        ax = -ax
        pos, neg_ = neg_, pos
    r = Fraction(-k, ax)  # (pos - neg) op r
    if op == "<=":
        return [("le", pos, neg_, math.floor(r))]
    if op == "<":
        return [("le", pos, neg_, math.ceil(r) - 1)]
    if op == ">=":
        return [("le", neg_, pos, -math.ceil(r))]
    if op == ">":
        return [("le", neg_, pos, -(math.floor(r) + 1))]
    if op == "==":
        if r.denominator != 1:
            return [("false",)]
        c = int(r)
        return [("le", pos, neg_, c), ("le", neg_, pos, -c)]
    if r.denominator != 1:
        return []
    return [("ne", pos, neg_, int(r))]


def _consistent(nodes: int, edges: list[tuple[int, int, int]]) -> bool:
    dist = [[INF] * nodes for _ in range(nodes)]
    for i in range(nodes):
        dist[i][i] = 0
    for x, y, c in edges:  # x - y <= c  is an edge y -> x of weight c
        if c < dist[y][x]:
            dist[y][x] = c
    for m in range(nodes):
        dm = dist[m]
        for i in range(nodes):
            dim = dist[i][m]
            if dim == INF:
                continue
            di = dist[i]
            for j in range(nodes):
                nd = dim + dm[j]
                if nd < di[j]:
                    di[j] = nd
        if any(dist[i][i] < 0 for i in range(nodes)):
            return False
    return all(dist[i][i] >= 0 for i in range(nodes))


def _split(nodes, edges, nes) -> bool:
    if not nes:
        return _consistent(nodes, edges)
    (x, y, c), rest = nes[0], nes[1:]
    return (_split(nodes, edges + [(x, y, c - 1)], rest)
            or _split(nodes, edges + [(y, x, -(c + 1))], rest))


@lru_cache(maxsize=65536)
def _solve(atoms: tuple, limit: int) -> Verdict:
    if len(atoms) > limit:
        return Verdict.UNKNOWN
    complete = True
    le: list[tuple[int, int, int]] = []
    ne: list[tuple[int, int, int]] = []
    for atom in atoms:
        fs = _facts(atom)
        if fs is None:
            complete = False
            continue
        for f in fs:
            if f[0] == "false":
                return Verdict.UNSAT
            (le if f[0] == "le" else ne).append(f[1:])
    ids = sorted({n for e in le + ne for n in e[:2]} - {0})
    remap = {0: 0, **{n: i + 1 for i, n in enumerate(ids)}}
    le = [(remap[x], remap[y], c) for x, y, c in le]
    ne = [(remap[x], remap[y], c) for x, y, c in ne]
    if len(ne) > MAX_SPLITS:
        ne, complete = ne[:MAX_SPLITS], False
    if not _split(len(ids) + 1, le, ne):
        return Verdict.UNSAT
    return Verdict.SAT if complete else Verdict.UNKNOWN


def solve(constraint: Iterable[Atom], max_atoms: int = 256) -> Verdict:
    atoms = []
    seen = set()
    for term, positive in constraint:
        if isinstance(term, Const):
            if (term.value != 0) != positive:
                return Verdict.UNSAT
            continue
        if (term, positive) not in seen:
            seen.add((term, positive))
            atoms.append((term, positive))
    return _solve(tuple(atoms), max_atoms)


def feasible(constraint: Iterable[Atom], max_atoms: int = 256) -> bool:
    return solve(constraint, max_atoms) is not Verdict.UNSAT


def render_atom(atom: Atom) -> str:
    term, positive = atom
    while isinstance(term, Not):
        term, positive = term.operand, not positive
    if isinstance(term, Cmp):
        op = term.op if positive else NEGATE[term.op]
        return str(Cmp(op, term.left, term.right))
    return f"{term} {'!=' if positive else '=='} 0"


def render_constraint(constraint: Iterable[Atom]) -> str:
    parts = [render_atom(a) for a in constraint]
    return " && ".join(parts) if parts else "true"
