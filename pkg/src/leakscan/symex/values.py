"""Symbolic values and the folding rules used by the executor."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self):
        return str(self.value)


NULL = Const(0)


@dataclass(frozen=True)
class Sym:
    id: int
    name: str = field(default="", compare=False)
    kind: str = field(default="int", compare=False)  # "int" | "ref"
    origin: Any = field(default=None, compare=False)

    def __str__(self):
        return self.name or f"s{self.id}"


@dataclass(frozen=True)
class Arith:
    op: str  # + - * / % & | ^ << >> ~ neg
    left: "Value"
    right: "Value"

    def __str__(self):
        if self.op == "neg":
            return f"-{_paren(self.left)}"
        if self.op == "~":
            return f"~{_paren(self.left)}"
        return f"{_paren(self.left)} {self.op} {_paren(self.right)}"


@dataclass(frozen=True)
class Cmp:
    op: str  # == != < <= > >=
    left: "Value"
    right: "Value"

    def __str__(self):
        return f"{_paren(self.left)} {self.op} {_paren(self.right)}"


@dataclass(frozen=True)
class Not:
    operand: "Value"

    def __str__(self):
        return f"!{_paren(self.operand)}"


@dataclass(frozen=True)
class HeapRef:
    """Pointer to (a field of) a heap object."""

    obj: int
    fields: tuple = ()

    def __str__(self):
        return f"&obj{self.obj}" + "".join("." + f for f in self.fields)


@dataclass(frozen=True)
class AddrOf:
    """Pointer to a memory cell that is not a heap object (a local or global)."""

    cell: tuple

    def __str__(self):
        return "&" + cell_name(self.cell)


Value = Union[Const, Sym, Arith, Cmp, Not, HeapRef, AddrOf]

NEGATE = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
SWAP = {"==": "==", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}
_PYCMP = {
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


def _paren(v: Value) -> str:
    s = str(v)
    return f"({s})" if isinstance(v, (Arith, Cmp)) else s


def cell_name(cell: tuple) -> str:
    kind = cell[0]
    if kind == "var":
        base, rest = cell[2], cell[3:]
    elif kind == "glob":
        base, rest = cell[1], cell[2:]
    elif kind == "heap":
        base, rest = f"obj{cell[1]}", cell[2:]
    elif kind == "ext":
        base, rest = f"*{cell[1]}", cell[2:]
    else:
        base, rest = kind, cell[1:]
    return base + "".join(f".{f}" for f in rest)


def is_pointer(v: Value) -> bool:
    return isinstance(v, (HeapRef, AddrOf))


def is_bool(v: Value) -> bool:
    return isinstance(v, (Cmp, Not))


def c_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def c_mod(a: int, b: int) -> int:
    return a - b * c_div(a, b)


def _concrete_arith(op: str, a: int, b: int):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op in ("/", "%"):
        if b == 0:
            return None
        return c_div(a, b) if op == "/" else c_mod(a, b)
    if op == "&":
        return a & b
    if op == "|":
        return a | b
    if op == "^":
        return a ^ b
    if op == "<<":
        return a << b if 0 <= b < 64 else None
    if op == ">>":
        return a >> b if 0 <= b < 64 else None
    return None


def arith(op: str, a: Value, b: Value) -> Value:
    if isinstance(a, Const) and isinstance(b, Const):
        r = _concrete_arith(op, a.value, b.value)
        if r is not None:
            return Const(r)
    if is_pointer(a) and isinstance(b, Const) and op in ("+", "-") and b.value == 0:
        return a
    if op in ("+", "-") and isinstance(b, Const) and b.value == 0:
        return a
    if op == "+" and isinstance(a, Const) and a.value == 0:
        return b
    if op == "*" and isinstance(b, Const) and b.value == 1:
        return a
    if op == "*" and isinstance(a, Const) and a.value == 1:
        return b
    return Arith(op, a, b)


def neg(a: Value) -> Value:
    if isinstance(a, Const):
        return Const(-a.value)
    return Arith("-", Const(0), a)


def bitnot(a: Value) -> Value:
    if isinstance(a, Const):
        return Const(~a.value)
    return Arith("~", a, Const(0))


def compare(op: str, a: Value, b: Value) -> Value:
    """Fold what can be decided without the solver.

    Distinct allocations and addresses of distinct cells never compare equal,
    and neither equals null or a symbol that existed before them.
    """
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(int(_PYCMP[op](a.value, b.value)))
    if is_pointer(a) or is_pointer(b):
        if op not in ("==", "!="):
            return Cmp(op, a, b)
        same = a == b
        return Const(int(same if op == "==" else not same))
    # (cond) == 0 and friends on boolean-valued terms
    if is_bool(a) and isinstance(b, Const) and op in ("==", "!="):
        if b.value == 0:
            return logical_not(a) if op == "==" else a
        if b.value == 1:
            return a if op == "==" else logical_not(a)
    if is_bool(b) and isinstance(a, Const):
        return compare(SWAP[op], b, a)
    return Cmp(op, a, b)


def logical_not(a: Value) -> Value:
    if isinstance(a, Const):
        return Const(int(a.value == 0))
    if is_pointer(a):
        return Const(0)
    if isinstance(a, Cmp):
        return Cmp(NEGATE[a.op], a.left, a.right)
    if isinstance(a, Not):
        return truthy(a.operand)
    return Cmp("==", a, Const(0))


def truthy(a: Value) -> Value:
    """The boolean value of `a` used as a condition."""
    if isinstance(a, Const):
        return Const(int(a.value != 0))
    if is_pointer(a):
        return Const(1)
    if is_bool(a):
        return a
    return Cmp("!=", a, Const(0))


def symbols_of(v: Value) -> set[Sym]:
    if isinstance(v, Sym):
        return {v}
    if isinstance(v, (Arith, Cmp)):
        return symbols_of(v.left) | symbols_of(v.right)
    if isinstance(v, Not):
        return symbols_of(v.operand)
    return set()


def evaluate(v: Value, env: dict[int, int]) -> int:
    """Concrete value of `v` under an assignment of symbol ids; pointers are 1."""
    if isinstance(v, Const):
        return v.value
    if isinstance(v, Sym):
        return env[v.id]
    if is_pointer(v):
        return 1
    if isinstance(v, Not):
        return int(evaluate(v.operand, env) == 0)
    if isinstance(v, Cmp):
        return int(_PYCMP[v.op](evaluate(v.left, env), evaluate(v.right, env)))
    if isinstance(v, Arith):
        a = evaluate(v.left, env)
        if v.op == "~":
            return ~a
        r = _concrete_arith(v.op, a, evaluate(v.right, env))
        if r is None:
            raise ZeroDivisionError(str(v))
        return r
    raise TypeError(v)
