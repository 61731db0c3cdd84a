"""Mini-C abstract syntax tree.

Spans are carried on every node but excluded from equality, so two trees
compare equal when they are structurally identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .lexer import Span

NOSPAN = Span("<none>", 0, 0)


def _span():
    return field(default=NOSPAN, compare=False, repr=False)


@dataclass(frozen=True)
class TypeRef:
    base: str  # scalar name or record name
    pointer: int = 0
    record: bool = False  # written with the `struct` keyword

    def deref(self) -> "TypeRef":
        return TypeRef(self.base, max(self.pointer - 1, 0), self.record)


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Name:
    id: str
    span: Span = _span()


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class StrLit:
    text: str
    span: Span = _span()


@dataclass(frozen=True)
class NullLit:
    span: Span = _span()


@dataclass(frozen=True)
class Member:
    obj: "Expr"
    field: str
    arrow: bool
    span: Span = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # & * - ! ~
    operand: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Cast:
    type: TypeRef
    expr: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class SizeOf:
    """`sizeof(T)` or `sizeof expr`; the operand is kept only for printing."""

    operand: Union[TypeRef, "Expr"]
    span: Span = _span()


Expr = Union[Name, IntLit, StrLit, NullLit, Member, Unary, Binary, Call, Cast, SizeOf]

# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Block:
    stmts: tuple["Stmt", ...]
    span: Span = _span()


@dataclass(frozen=True)
class VarDecl:
    type: TypeRef
    name: str
    init: Optional[Expr] = None
    span: Span = _span()


@dataclass(frozen=True)
class Assign:
    target: Expr
    value: Expr
    span: Span = _span()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    orelse: Optional["Stmt"] = None
    span: Span = _span()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class For:
    init: Optional["Stmt"]
    cond: Optional[Expr]
    step: Optional["Stmt"]
    body: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class Switch:
    expr: Expr
    body: Block
    span: Span = _span()


@dataclass(frozen=True)
class Case:
    value: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Default:
    span: Span = _span()


@dataclass(frozen=True)
class Break:
    span: Span = _span()


@dataclass(frozen=True)
class Continue:
    span: Span = _span()


@dataclass(frozen=True)
class Goto:
    label: str
    span: Span = _span()


@dataclass(frozen=True)
class Labeled:
    label: str
    stmt: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None
    span: Span = _span()


@dataclass(frozen=True)
class Empty:
    span: Span = _span()


Stmt = Union[Block, VarDecl, Assign, ExprStmt, If, While, For, Switch, Case, Default,
             Break, Continue, Goto, Labeled, Return, Empty]

# --------------------------------------------------------------- declarations


@dataclass(frozen=True)
class FieldDecl:
    type: TypeRef
    name: str


@dataclass(frozen=True)
class RecordDecl:
    name: str
    fields: tuple[FieldDecl, ...]
    span: Span = _span()

    def field_type(self, name: str) -> Optional[TypeRef]:
        for f in self.fields:
            if f.name == name:
                return f.type
        return None


@dataclass(frozen=True)
class TypedefDecl:
    name: str
    type: TypeRef
    span: Span = _span()


@dataclass(frozen=True)
class GlobalDecl:
    type: TypeRef
    name: str
    init: Optional[Expr] = None
    const: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class Param:
    type: TypeRef
    name: str


@dataclass(frozen=True)
class FunctionDef:
    ret: TypeRef
    name: str
    params: tuple[Param, ...]
    body: Optional[Block]  # None for a prototype
    static: bool = False
    span: Span = _span()

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)


Decl = Union[RecordDecl, TypedefDecl, GlobalDecl, FunctionDef]


@dataclass(frozen=True)
class Unit:
    file: str
    decls: tuple[Decl, ...]

    @property
    def functions(self) -> list[FunctionDef]:
        return [d for d in self.decls if isinstance(d, FunctionDef) and d.body is not None]


def walk_exprs(node):
    """Yield every expression reachable from a statement or expression, preorder."""
    if node is None:
        return
    if isinstance(node, (Name, IntLit, StrLit, NullLit)):
        yield node
    elif isinstance(node, Member):
        yield node
        yield from walk_exprs(node.obj)
    elif isinstance(node, Unary):
        yield node
        yield from walk_exprs(node.operand)
    elif isinstance(node, Binary):
        yield node
        yield from walk_exprs(node.left)
        yield from walk_exprs(node.right)
    elif isinstance(node, Call):
        yield node
        for a in node.args:
            yield from walk_exprs(a)
    elif isinstance(node, Cast):
        yield node
        yield from walk_exprs(node.expr)
    elif isinstance(node, SizeOf):
        yield node
        if not isinstance(node.operand, TypeRef):
            yield from walk_exprs(node.operand)
    elif isinstance(node, Block):
        for s in node.stmts:
            yield from walk_exprs(s)
    elif isinstance(node, VarDecl):
        yield from walk_exprs(node.init)
    elif isinstance(node, Assign):
        yield from walk_exprs(node.target)
        yield from walk_exprs(node.value)
    elif isinstance(node, ExprStmt):
        yield from walk_exprs(node.expr)
    elif isinstance(node, If):
        yield from walk_exprs(node.cond)
        yield from walk_exprs(node.then)
        yield from walk_exprs(node.orelse)
    elif isinstance(node, While):
        yield from walk_exprs(node.cond)
        yield from walk_exprs(node.body)
    elif isinstance(node, For):
        yield from walk_exprs(node.init)
        yield from walk_exprs(node.cond)
        yield from walk_exprs(node.step)
        yield from walk_exprs(node.body)
    elif isinstance(node, Switch):
        yield from walk_exprs(node.expr)
        yield from walk_exprs(node.body)
    elif isinstance(node, Case):
        yield from walk_exprs(node.value)
    elif isinstance(node, Labeled):
        yield from walk_exprs(node.stmt)
    elif isinstance(node, Return):
        yield from walk_exprs(node.value)


def walk_stmts(node):
    """Yield every statement nested in `node`, preorder."""
    if node is None:
        return
    yield node
    if isinstance(node, Block):
        for s in node.stmts:
            yield from walk_stmts(s)
    elif isinstance(node, If):
        yield from walk_stmts(node.then)
        yield from walk_stmts(node.orelse)
    elif isinstance(node, (While,)):
        yield from walk_stmts(node.body)
    elif isinstance(node, For):
        yield from walk_stmts(node.init)
        yield from walk_stmts(node.step)
        yield from walk_stmts(node.body)
    elif isinstance(node, Switch):
        yield from walk_stmts(node.body)
    elif isinstance(node, Labeled):
        yield from walk_stmts(node.stmt)


def calls_in(fn: FunctionDef) -> list[Call]:
    """All direct call expressions of a function body in source order."""
    out = [e for e in walk_exprs(fn.body) if isinstance(e, Call)]
    out.sort(key=lambda c: c.span.offset)
    return out
