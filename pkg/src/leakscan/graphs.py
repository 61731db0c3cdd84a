"""Control-flow graphs, the direct call graph, and candidate filtering."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Union

from .frontend import ast as A
from .frontend.lexer import Span

if TYPE_CHECKING:
    from .frontend.program import Program
    from .summaries import SummaryStore

ENTRY, EXIT = 0, 1


class CfgError(Exception):
    pass


@dataclass(frozen=True)
class Jump:
    target: int


@dataclass(frozen=True)
class Branch:
    cond: A.Expr
    true: int
    false: int


@dataclass(frozen=True)
class SwitchJump:
    expr: A.Expr
    cases: tuple[tuple[A.Expr, int], ...]
    default: int
    span: Span


@dataclass(frozen=True)
class Ret:
    value: Optional[A.Expr]
    span: Span


Terminator = Union[Jump, Branch, SwitchJump, Ret]


@dataclass
class BasicBlock:
    id: int
    stmts: list = field(default_factory=list)  # VarDecl / Assign / ExprStmt
    term: Optional[Terminator] = None


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    kind: str  # unconditional|true|false|case|default|goto|return|loop-back
    label: Optional[A.Expr] = None


@dataclass
class Cfg:
    function: str
    blocks: dict[int, BasicBlock]
    edges: list[Edge]
    entry: int = ENTRY
    exit: int = EXIT

    @property
    def interior(self) -> list[int]:
        return [b for b in self.blocks if b not in (self.entry, self.exit)]

    @property
    def back_edges(self) -> set[tuple[int, int]]:
        return {(e.src, e.dst) for e in self.edges if e.kind == "loop-back"}

    def succs(self, b: int) -> list[Edge]:
        return [e for e in self.edges if e.src == b]

    def reachable(self) -> set[int]:
        seen = {self.entry}
        todo = [self.entry]
        while todo:
            b = todo.pop()
            for e in self.succs(b):
                if e.dst not in seen:
                    seen.add(e.dst)
                    todo.append(e.dst)
        return seen

    def dead_blocks(self) -> list[int]:
        live = self.reachable()
        return sorted(b for b in self.interior if b not in live)


class _Builder:
    def __init__(self, name: str):
        self.cfg = Cfg(name, {ENTRY: BasicBlock(ENTRY), EXIT: BasicBlock(EXIT)}, [])
        self.cur: Optional[BasicBlock] = None
        self.labels: dict[str, int] = {}
        self.loops: list[tuple[int, Optional[int]]] = []  # (break, continue)

    def new(self) -> BasicBlock:
        b = BasicBlock(len(self.cfg.blocks))
        self.cfg.blocks[b.id] = b
        return b

    def edge(self, src: int, dst: int, kind: str, label=None):
        self.cfg.edges.append(Edge(src, dst, kind, label))

    def current(self) -> BasicBlock:
        if self.cur is None:  # code after a jump: a fresh, unreachable block
            self.cur = self.new()
        return self.cur

    def jump(self, target: int, kind: str = "unconditional"):
        if self.cur is None:
            return
        self.cur.term = Jump(target)
        self.edge(self.cur.id, target, kind)
        self.cur = None

    def start(self, b: BasicBlock):
        if self.cur is not None and self.cur is not b:
            self.jump(b.id)
        self.cur = b

    def label_block(self, name: str) -> BasicBlock:
        if name not in self.labels:
            self.labels[name] = self.new().id
        return self.cfg.blocks[self.labels[name]]

    def header(self) -> BasicBlock:
        c = self.cur
        if c is not None and not c.stmts and c.id not in self.labels.values():
            return c
        b = self.new()
        self.start(b)
        return b

    # ------------------------------------------------------------------

    def cond(self, e: A.Expr, t: int, f: int):
        if isinstance(e, A.Binary) and e.op == "&&":
            mid = self.new()
            self.cond(e.left, mid.id, f)
            self.cur = mid
            self.cond(e.right, t, f)
        elif isinstance(e, A.Binary) and e.op == "||":
            mid = self.new()
            self.cond(e.left, t, mid.id)
            self.cur = mid
            self.cond(e.right, t, f)
        elif isinstance(e, A.Unary) and e.op == "!":
            self.cond(e.operand, f, t)
        else:
            b = self.current()
            b.term = Branch(e, t, f)
            self.edge(b.id, f, "false", e)
            self.edge(b.id, t, "true", e)
            self.cur = None

    def stmt(self, s: A.Stmt):
        if isinstance(s, A.Block):
            for x in s.stmts:
                self.stmt(x)
        elif isinstance(s, (A.VarDecl, A.Assign, A.ExprStmt)):
            self.current().stmts.append(s)
        elif isinstance(s, A.Empty):
            pass
        elif isinstance(s, A.If):
            then_b, join = self.new(), self.new()
            else_b = self.new() if s.orelse is not None else join
            self.cond(s.cond, then_b.id, else_b.id)
            self.cur = then_b
            self.stmt(s.then)
            self.jump(join.id)
            if s.orelse is not None:
                self.cur = else_b
                self.stmt(s.orelse)
                self.jump(join.id)
            self.cur = join
        elif isinstance(s, A.While):
            head = self.header()
            body, after = self.new(), self.new()
            self.cond(s.cond, body.id, after.id)
            self.loops.append((after.id, head.id))
            self.cur = body
            self.stmt(s.body)
            self.jump(head.id)
            self.loops.pop()
            self.cur = after
        elif isinstance(s, A.For):
            if s.init is not None:
                self.stmt(s.init)
            head = self.header()
            body, after = self.new(), self.new()
            step = self.new() if s.step is not None else head
            if s.cond is not None:
                self.cond(s.cond, body.id, after.id)
            else:
                self.jump(body.id)
            self.loops.append((after.id, step.id))
            self.cur = body
            self.stmt(s.body)
            self.loops.pop()
            if s.step is not None:
                self.start(step)
                self.stmt(s.step)
            self.jump(head.id)
            self.cur = after
        elif isinstance(s, A.Switch):
            head = self.current()
            after = self.new()
            cases: list[tuple[A.Expr, int]] = []
            default: Optional[int] = None
            self.cur = None
            self.loops.append((after.id, None))
            for x in s.body.stmts:
                if isinstance(x, A.Case):
                    b = self.new()
                    self.start(b)
                    cases.append((x.value, b.id))
                elif isinstance(x, A.Default):
                    b = self.new()
                    self.start(b)
                    default = b.id
                else:
                    if self.cur is None and not cases and default is None:
                        # statements before the first label are unreachable
                        self.cur = self.new()
                    self.stmt(x)
            self.loops.pop()
            self.jump(after.id)
            dflt = after.id if default is None else default
            head.term = SwitchJump(s.expr, tuple(cases), dflt, s.span)
            for value, b in cases:
                self.edge(head.id, b, "case", value)
            self.edge(head.id, dflt, "default")
            self.cur = after
        elif isinstance(s, (A.Case, A.Default)):
            raise CfgError(f"{self.cfg.function}: case label outside switch body")
        elif isinstance(s, A.Break):
            if not self.loops:
                raise CfgError(f"{self.cfg.function}: break outside loop or switch")
            self.current()
            self.jump(self.loops[-1][0])
        elif isinstance(s, A.Continue):
            targets = [c for _, c in self.loops if c is not None]
            if not targets:
                raise CfgError(f"{self.cfg.function}: continue outside loop")
            self.current()
            self.jump(targets[-1])
        elif isinstance(s, A.Goto):
            self.current()
            self.jump(self.label_block(s.label).id, "goto")
        elif isinstance(s, A.Labeled):
            self.start(self.label_block(s.label))
            self.stmt(s.stmt)
        elif isinstance(s, A.Return):
            b = self.current()
            b.term = Ret(s.value, s.span)
            self.edge(b.id, EXIT, "return")
            self.cur = None
        else:
            raise CfgError(f"unsupported statement {type(s).__name__}")

    def finish(self, fn: A.FunctionDef) -> Cfg:
        if self.cur is not None:
            self.cur.term = Ret(None, Span(fn.span.file, fn.span.end, 0))
            self.edge(self.cur.id, EXIT, "return")
        self._tag_back_edges()
        return self.cfg

    def _tag_back_edges(self):
        cfg = self.cfg
        succ: dict[int, list[int]] = {}
        for i, e in enumerate(cfg.edges):
            succ.setdefault(e.src, []).append(i)
        on_stack, done = set(), set()
        back = set()
        stack = [(ENTRY, iter(succ.get(ENTRY, [])))]
        on_stack.add(ENTRY)
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                on_stack.discard(node)
                done.add(node)
                continue
            dst = cfg.edges[nxt].dst
            if dst in on_stack:
                back.add(nxt)
            elif dst not in done:
                on_stack.add(dst)
                stack.append((dst, iter(succ.get(dst, []))))
        for i in back:
            e = cfg.edges[i]
            cfg.edges[i] = Edge(e.src, e.dst, "loop-back", e.label)


def build_cfg(fn: A.FunctionDef) -> Cfg:
    if fn.body is None:
        raise CfgError(f"{fn.name} has no body")
    b = _Builder(fn.name)
    if fn.body.stmts:
        first = b.new()
        b.edge(ENTRY, first.id, "unconditional")
        b.cfg.blocks[ENTRY].term = Jump(first.id)
        b.cur = first
        b.stmt(fn.body)
    else:
        b.edge(ENTRY, EXIT, "unconditional")
        b.cfg.blocks[ENTRY].term = Jump(EXIT)
    return b.finish(fn)


# ----------------------------------------------------------------- call graph


@dataclass(frozen=True)
class CallEdge:
    caller: str
    callee: str
    span: Span


@dataclass
class CallGraph:
    nodes: list[str]
    edges: list[CallEdge]
    external: set[str] = field(default_factory=set)

    def callees(self, f: str) -> list[str]:
        return sorted({e.callee for e in self.edges if e.caller == f})

    def callers(self, f: str) -> list[str]:
        return sorted({e.caller for e in self.edges if e.callee == f})

    def to_dot(self) -> str:
        lines = ["digraph callgraph {"]
        for n in self.nodes:
            shape = "box" if n in self.external else "ellipse"
            lines.append(f'  "{n}" [shape={shape}];')
        for e in self.edges:
            lines.append(f'  "{e.caller}" -> "{e.callee}" [label="{e.span.file}:{e.span.offset}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_call_graph(program: "Program") -> CallGraph:
    edges = []
    for name in sorted(program.functions):
        for c in A.calls_in(program.functions[name]):
            edges.append(CallEdge(name, c.func, c.span))
    edges.sort(key=lambda e: (e.span.file, e.span.offset, e.caller))
    defined = set(program.functions)
    external = {e.callee for e in edges if e.callee not in defined}
    nodes = sorted(defined | external)
    return CallGraph(nodes, edges, external)


def identify_candidates(callgraph: CallGraph, store: "SummaryStore") -> set[str]:
    """Functions that directly call an allocator (seed or custom)."""
    defined = set(callgraph.nodes) - callgraph.external
    return {e.caller for e in callgraph.edges
            if e.caller in defined and store.is_allocator(e.callee)}
