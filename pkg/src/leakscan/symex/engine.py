"""Under-constrained symbolic execution over Mini-C control-flow graphs.

One :class:`Executor` explores one function.  In ``detect`` mode the
terminal states feed the leak checker; in ``summary`` mode they are mined
for the access paths the function allocates into or frees.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from .. import graphs
from ..config import AnalysisConfig
from ..frontend import ast as A
from ..frontend.lexer import Span
from ..heapmodel import ForestViolation, Heap
from ..paths import MAX_STEPS, AccessPath, FunctionType
from . import values as V
from .solver import Verdict, solve
from .values import NULL, AddrOf, Const, HeapRef, Sym, Value

if TYPE_CHECKING:
    from ..frontend.program import Program
    from ..summaries import FunctionSummary, SummaryStore

COLLECTION_TERMS = ("add", "insert", "create")


class BudgetExceeded(Exception):
    pass


class SummaryShapeError(Exception):
    pass


@dataclass
class PathState:
    mem: dict = field(default_factory=dict)
    heap: Heap = field(default_factory=Heap)
    pc: tuple = ()
    witness: list = field(default_factory=list)
    loops: dict = field(default_factory=dict)
    calls: tuple = ()  # call-site spans of the inlining stack
    next_sym: int = 0
    next_frame: int = 0
    freed: list = field(default_factory=list)  # non-heap values handed to a deallocator
    escaped: list = field(default_factory=list)  # non-heap values handed to an escaping position
    diagnostics: list = field(default_factory=list)
    ret: Optional[Value] = None
    verdict: Verdict = Verdict.SAT

    @property
    def depth(self) -> int:
        return len(self.calls)

    def fork(self) -> "PathState":
        return PathState(dict(self.mem), self.heap.copy(), self.pc, list(self.witness),
                         dict(self.loops), self.calls, self.next_sym, self.next_frame,
                         list(self.freed), list(self.escaped), list(self.diagnostics), self.ret,
                         self.verdict)

    def fresh(self, name: str, origin, kind: str = "int") -> Sym:
        s = Sym(self.next_sym, name, kind, origin)
        self.next_sym += 1
        return s


@dataclass
class Frame:
    fid: int
    function: str
    locals: frozenset


def deref_cell(v: Value) -> Optional[tuple]:
    if isinstance(v, HeapRef):
        return ("heap", v.obj) + v.fields
    if isinstance(v, AddrOf):
        return v.cell
    if isinstance(v, Const):
        return None
    return ("ext", v)


def addr_of(cell: tuple) -> Value:
    if cell[0] == "heap":
        return HeapRef(cell[1], cell[2:])
    if cell[0] == "ext" and len(cell) == 2:
        return cell[1]
    return AddrOf(cell)


def cell_root(cell: tuple) -> str:
    """'local', 'global', 'heap', 'param' (external memory) or 'scratch'."""
    kind = cell[0]
    if kind == "var":
        return "local"
    if kind == "glob":
        return "global"
    if kind == "heap":
        return "heap"
    if kind == "ext":
        return "param"
    return "scratch"


def _lazy_name(cell: tuple) -> str:
    kind = cell[0]
    if kind == "var":
        return cell[2] + "".join("." + f for f in cell[3:])
    if kind == "glob":
        return cell[1] + "".join("." + f for f in cell[2:])
    if kind == "heap":
        return f"obj{cell[1]}" + "".join("." + f for f in cell[2:])
    if kind == "ext":
        base, fs = cell[1], cell[2:]
        b = str(base)
        if isinstance(base, (V.Arith, V.Cmp)):
            b = f"({b})"
        if not fs:
            return f"*{b}"
        return f"{b}->{fs[0]}" + "".join("." + f for f in fs[1:])
    return V.cell_name(cell)


def global_rooted(e: A.Expr, fr: Frame, program: "Program") -> bool:
    while True:
        if isinstance(e, A.Cast):
            e = e.expr
        elif isinstance(e, A.Unary) and e.op in ("&", "*"):
            e = e.operand
        elif isinstance(e, A.Member):
            e = e.obj
        else:
            break
    return isinstance(e, A.Name) and e.id not in fr.locals and e.id in program.globals


class Executor:
    def __init__(self, program: "Program", store: "SummaryStore", config: AnalysisConfig,
                 mode: str = "detect"):
        self.program = program
        self.store = store
        self.config = config
        self.mode = mode
        self.cfgs: dict[str, graphs.Cfg] = {}
        self.locals: dict[str, frozenset] = {}
        self.blocks = 0
        self.terminals = 0
        self.truncated = False
        self.diagnostics: list[str] = []
        self._notes: set[str] = set()
        if mode == "summary":
            self.path_budget = config.summary_path_budget
            self.block_budget = config.summary_block_budget
        else:
            self.path_budget = config.path_budget
            self.block_budget = config.path_budget * 64

    # ----------------------------------------------------------- plumbing

    def note(self, msg: str) -> None:
        if msg not in self._notes:
            self._notes.add(msg)
            self.diagnostics.append(msg)

    def cfg(self, name: str) -> graphs.Cfg:
        if name not in self.cfgs:
            self.cfgs[name] = graphs.build_cfg(self.program.functions[name])
        return self.cfgs[name]

    def frame(self, st: PathState, name: str) -> Frame:
        if name not in self.locals:
            fn = self.program.functions[name]
            names = set(fn.param_names)
            names.update(s.name for s in A.walk_stmts(fn.body) if isinstance(s, A.VarDecl))
            self.locals[name] = frozenset(names)
        fid = st.next_frame
        st.next_frame += 1
        return Frame(fid, name, self.locals[name])

    def feasible(self, pc: tuple) -> Optional[Verdict]:
        v = solve(pc, self.config.solver_timeout_atoms)
        return None if v is Verdict.UNSAT else v

    # ------------------------------------------------------------- memory

    def load(self, st: PathState, cell: tuple) -> Value:
        if cell in st.mem:
            return st.mem[cell]
        if cell[0] == "heap":
            o = st.heap.objects.get(cell[1])
            if o is not None and not o.allocated:
                st.heap.diagnostics.append(f"use after free: read of object {o.id}")
        if cell[0] == "glob" and len(cell) == 2:
            decl = self.program.globals.get(cell[1])
            if decl is not None and decl.const and decl.init is not None:
                val = self._const_init(decl.init)
                st.mem[cell] = val
                return val
        v = st.fresh(_lazy_name(cell), ("cell", cell))
        st.mem[cell] = v
        return v

    def _const_init(self, e: A.Expr) -> Value:
        scratch = PathState()
        fr = Frame(-1, "", frozenset())
        res = self.eval(scratch, e, fr)
        return res[0][1] if res else NULL

    def store_value(self, st: PathState, cell: tuple, v: Value, site: Optional[Span]) -> None:
        old = st.mem.get(cell)
        st.mem[cell] = v
        if old == v:
            return
        root = cell_root(cell)
        heap = st.heap
        if isinstance(old, HeapRef) and old.obj in heap.objects:
            o = heap[old.obj]
            if root == "global" and len(cell) == 2:
                heap.release_global(old.obj, cell[1], site)
            elif root == "heap" and o.allocated:
                key = cell[2:]
                parent = heap.objects.get(cell[1])
                if parent is not None and parent.children.get(key) == old.obj:
                    heap.detach(cell[1], key)
                elif o.refcount > 1:
                    heap.drop_ref(old.obj, site)
        if not isinstance(v, HeapRef) or v.obj not in heap.objects:
            return
        oid = v.obj
        if root == "global":
            heap.store_global(oid, V.cell_name(cell), site, cell)
        elif root == "param":
            heap.store_param(oid, _lazy_name(cell).lstrip("*") if len(cell) == 2 else _lazy_name(cell),
                             site, cell)
        elif root == "heap":
            parent = cell[1]
            if not heap[oid].allocated:
                return
            child = heap[oid]
            if child.parent is None and parent != oid:
                try:
                    heap.attach_inner(parent, cell[2:], oid, site)
                    return
                except ForestViolation:
                    pass
            heap.copy_ref(oid, site, V.cell_name(cell))

    # --------------------------------------------------------- lvalues

    def lval(self, st: PathState, e: A.Expr, fr: Frame) -> list[tuple[PathState, tuple]]:
        if isinstance(e, A.Name):
            if e.id in fr.locals:
                return [(st, ("var", fr.fid, e.id))]
            return [(st, ("glob", e.id))]
        if isinstance(e, A.Member):
            if not e.arrow:
                return [(s, c + (e.field,)) for s, c in self.lval(st, e.obj, fr)]
            out = []
            for s, v in self.eval(st, e.obj, fr):
                c = self._deref(s, v, e)
                if c is not None:
                    out.append((s, c + (e.field,)))
            return out
        if isinstance(e, A.Unary) and e.op == "*":
            out = []
            for s, v in self.eval(st, e.operand, fr):
                c = self._deref(s, v, e)
                if c is not None:
                    out.append((s, c))
            return out
        if isinstance(e, A.Cast):
            return self.lval(st, e.expr, fr)
        raise TypeError(f"not an lvalue: {type(e).__name__}")

    def _deref(self, st: PathState, v: Value, e) -> Optional[tuple]:
        c = deref_cell(v)
        if c is None:
            st.heap.diagnostics.append(f"null dereference at offset {e.span.offset}")
        elif c[0] == "heap" and not st.heap[c[1]].allocated:
            st.heap.diagnostics.append(f"use after free of object {c[1]}")
        return c

    # ------------------------------------------------------- expressions

    def eval(self, st: PathState, e: A.Expr, fr: Frame) -> list[tuple[PathState, Value]]:
        if isinstance(e, A.IntLit):
            return [(st, Const(e.value))]
        if isinstance(e, A.NullLit):
            return [(st, NULL)]
        if isinstance(e, A.StrLit):
            return [(st, AddrOf(("str", e.span.file, e.span.offset)))]
        if isinstance(e, A.SizeOf):
            return [(st, Const(8))]
        if isinstance(e, A.Cast):
            return self.eval(st, e.expr, fr)
        if isinstance(e, (A.Name, A.Member)):
            return [(s, self.load(s, c)) for s, c in self.lval(st, e, fr)]
        if isinstance(e, A.Unary):
            if e.op == "&":
                return [(s, addr_of(c)) for s, c in self.lval(st, e.operand, fr)]
            if e.op == "*":
                return [(s, self.load(s, c)) for s, c in self.lval(st, e, fr)]
            fn = {"-": V.neg, "~": V.bitnot, "!": V.logical_not, "+": lambda x: x}[e.op]
            return [(s, fn(v)) for s, v in self.eval(st, e.operand, fr)]
        if isinstance(e, A.Binary):
            if e.op in ("&&", "||"):
                return self._short_circuit(st, e, fr)
            out = []
            for s, a in self.eval(st, e.left, fr):
                for s2, b in self.eval(s, e.right, fr):
                    if e.op in V.NEGATE:
                        out.append((s2, V.compare(e.op, a, b)))
                    else:
                        out.append((s2, V.arith(e.op, a, b)))
            return out
        if isinstance(e, A.Call):
            return self.call(st, e, fr)
        raise TypeError(f"cannot evaluate {type(e).__name__}")

    def _short_circuit(self, st, e: A.Binary, fr):
        out = []
        stop = 0 if e.op == "&&" else 1
        for s, a in self.eval(st, e.left, fr):
            for s1, t in self.split(s, V.truthy(a)):
                if t == stop:
                    out.append((s1, Const(stop)))
                    continue
                for s2, b in self.eval(s1, e.right, fr):
                    for s3, t2 in self.split(s2, V.truthy(b)):
                        out.append((s3, Const(t2)))
        return out

    def split(self, st: PathState, cond: Value) -> list[tuple[PathState, int]]:
        """Fork on a condition: feasible (state, outcome) pairs, false arm first."""
        if isinstance(cond, Const):
            return [(st, int(cond.value != 0))]
        out = []
        for outcome in (0, 1):
            pc = st.pc + ((cond, bool(outcome)),)
            verdict = self.feasible(pc)
            if verdict is not None:
                out.append((pc, outcome, verdict))
        res = []
        for i, (pc, outcome, verdict) in enumerate(out):
            s = st if i == len(out) - 1 else st.fork()
            s.pc = pc
            if verdict is Verdict.UNKNOWN:
                s.verdict = Verdict.UNKNOWN
            res.append((s, outcome))
        return res

    def assume(self, st: PathState, atoms: list) -> Optional[PathState]:
        pc = st.pc
        for a in atoms:
            if isinstance(a[0], Const):
                if (a[0].value != 0) != a[1]:
                    return None
                continue
            pc = pc + (a,)
        verdict = self.feasible(pc)
        if verdict is None:
            return None
        st.pc = pc
        if verdict is Verdict.UNKNOWN:
            st.verdict = Verdict.UNKNOWN
        return st

    def eval_args(self, st, args, fr) -> list[tuple[PathState, list]]:
        acc = [(st, [])]
        for a in args:
            nxt = []
            for s, vals in acc:
                for s2, v in self.eval(s, a, fr):
                    nxt.append((s2, vals + [v]))
            acc = nxt
        return acc

    # -------------------------------------------------------------- calls

    def call(self, st: PathState, e: A.Call, fr: Frame) -> list[tuple[PathState, Value]]:
        out = []
        lname = e.func.lower()
        collection = any(t in lname for t in COLLECTION_TERMS)
        for s, args in self.eval_args(st, e.args, fr):
            s.witness.append(e.span)
            if collection:
                rooted = [global_rooted(a, fr, self.program) for a in e.args]
                if any(rooted):
                    for a, v, g in zip(e.args, args, rooted):
                        if not g and isinstance(v, HeapRef) and v.obj in s.heap.objects:
                            s.heap.collection_call(v.obj, e.func, e.span)
                        elif not g:
                            s.escaped.append(v)
            out.extend(self.dispatch(s, e, args, fr))
        return out

    def dispatch(self, st: PathState, e: A.Call, args: list, fr: Frame):
        summary = self.store.get(e.func)
        if summary is None or (summary.function_type is FunctionType.NONE and not summary.escaped_params):
            return [(st, st.fresh(f"{e.func}()", ("call", e.func)))]
        if summary.conditional and e.func in self.program.functions and not self.store.is_seed(e.func):
            cfg = self.cfg(e.func)
            on_stack = e.func == fr.function or e.func in self._active
            if (st.depth < self.config.max_call_depth and len(cfg.interior) <= self.config.inline_bb_limit
                    and not on_stack):
                return self.deepen_conditional(st, e, e.func, args)
            self.note(f"precision loss: {e.func} applied coarsely at {e.span.file}:{e.span.offset}")
        return [self.apply_summary(st, e, summary, args)]

    _active: tuple = ()

    def apply_summary(self, st: PathState, e: A.Call, summary: "FunctionSummary",
                      args: list) -> tuple[PathState, Value]:
        for p in list(summary.freed_params) + list(summary.para_objects) + list(summary.escaped_params):
            if p.index >= len(args):
                raise SummaryShapeError(
                    f"summary of {summary.name} uses parameter {p.index} but the call passes {len(args)}")
        heap = st.heap
        for p in sorted(summary.escaped_params):
            v = args[p.index]
            if isinstance(v, HeapRef) and v.obj in heap.objects:
                heap.store_param(v.obj, f"{summary.name}:{p.render()}", e.span)
            elif not isinstance(v, (Const, AddrOf)):
                st.escaped.append(v)
        for p in sorted(summary.freed_params):
            v = args[p.index]
            for kind, f in p.steps:
                c = self._deref(st, v, e)
                if c is None:
                    v = None
                    break
                if kind == "->":
                    v = self.load(st, c + (f,))
                elif kind == "*":
                    v = self.load(st, c)
                else:  # a '.' on a value selects inside the same object
                    v = addr_of(c + (f,))
            if v is None:
                continue
            if isinstance(v, HeapRef) and v.obj in heap.objects:
                if heap[v.obj].allocated:
                    if p.steps:
                        heap.drop_ref(v.obj, e.span)
                    else:
                        heap.free_object(v.obj, e.span)
                else:
                    heap.diagnostics.append(f"double free of object {v.obj}")
            elif not isinstance(v, (Const, AddrOf)):
                st.freed.append(v)
        site = st.calls[0] if st.calls else e.span
        allocs = sorted(summary.ret_objects) + sorted(summary.para_objects) + sorted(summary.global_objects)
        allocs.sort(key=lambda p: len(p.steps))
        ret_cell = ("ret", st.next_frame)
        st.next_frame += 1
        for p in allocs:
            if p.base == "return":
                cell = ret_cell
            elif p.base == "param":
                cell = deref_cell(args[p.index])
            else:
                cell = ("glob", p.gname)
            for kind, f in p.steps:
                if cell is None:
                    break
                if kind == ".":
                    cell = cell + (f,)
                else:
                    nxt = deref_cell(self.load(st, cell))
                    cell = None if nxt is None else (nxt + (f,) if kind == "->" else nxt)
            if cell is None:
                continue
            oid = heap.allocate(site, st.pc)
            heap[oid].origin = e.span
            heap[oid].label = p.render()
            self.store_value(st, cell, HeapRef(oid), e.span)
        result = st.mem.pop(ret_cell, None)
        if result is None:
            result = st.fresh(f"{e.func}()", ("call", e.func))
        return st, result

    def deepen_conditional(self, st: PathState, e: A.Call, callee: str, args: list):
        fr = self.frame(st, callee)
        fn = self.program.functions[callee]
        for p, v in zip(fn.param_names, args):
            st.mem[("var", fr.fid, p)] = v
        mark = st.heap.next_id
        st.calls = st.calls + (e.span,)
        saved = self._active
        self._active = saved + (callee,)
        try:
            results = self.run_cfg(st, callee, fr)
        finally:
            self._active = saved
        out = []
        for s, v in results:
            s.calls = s.calls[:-1]
            for k in [k for k in s.mem if k[0] == "var" and k[1] == fr.fid]:
                del s.mem[k]
            self._mark_internal(s, mark, v)
            out.append((s, v if v is not None else s.fresh(f"{callee}()", ("call", callee))))
        return out

    def _mark_internal(self, st: PathState, mark: int, ret: Optional[Value]) -> None:
        heap = st.heap
        if heap.next_id == mark:
            return
        held = {v.obj for c, v in st.mem.items() if isinstance(v, HeapRef)
                and not (c[0] == "heap" and not heap[c[1]].allocated)}
        if isinstance(ret, HeapRef):
            held.add(ret.obj)
        for oid in range(mark, heap.next_id):
            o = heap[oid]
            if o.allocated and oid not in held and not o.escaped and o.parent is None:
                o.internal = True

    # --------------------------------------------------------- statements

    def exec_stmt(self, st: PathState, s, fr: Frame) -> list[PathState]:
        st.witness.append(s.span)
        if isinstance(s, A.VarDecl):
            cell = ("var", fr.fid, s.name)
            if s.init is None:
                for k in [k for k in st.mem if k[:3] == cell]:
                    del st.mem[k]
                return [st]
            return [self._assign(x, cell, v, s.span) for x, v in self.eval(st, s.init, fr)]
        if isinstance(s, A.Assign):
            out = []
            for x, v in self.eval(st, s.value, fr):
                for y, cell in self.lval(x, s.target, fr):
                    out.append(self._assign(y, cell, v, s.span))
            return out
        if isinstance(s, A.ExprStmt):
            return [x for x, _ in self.eval(st, s.expr, fr)]
        raise TypeError(type(s).__name__)

    def _assign(self, st, cell, v, site):
        self.store_value(st, cell, v, site)
        return st

    def _edge(self, st: PathState, cfg: graphs.Cfg, fr: Frame, src: int, dst: int) -> bool:
        if (src, dst) in cfg.back_edges:
            key = (fr.fid, src, dst)
            n = st.loops.get(key, 0) + 1
            if n > self.config.loop_bound:
                self.note(f"loop bound reached in {fr.function}")
                return False
            st.loops[key] = n
        return True

    def run_cfg(self, st: PathState, name: str, fr: Frame) -> list[tuple[PathState, Optional[Value]]]:
        cfg = self.cfg(name)
        out = []
        stack = [(st, cfg.entry)]
        while stack:
            s, b = stack.pop()
            self.blocks += 1
            if self.blocks > self.block_budget:
                if self.mode == "summary":
                    raise BudgetExceeded(f"{name}: block budget exhausted")
                self.truncated = True
                self.note(f"block budget exhausted in {fr.function}")
                break
            blk = cfg.blocks[b]
            states = [s]
            for stmt in blk.stmts:
                nxt = []
                for x in states:
                    nxt.extend(self.exec_stmt(x, stmt, fr))
                states = nxt
            succ: list[tuple[PathState, int]] = []
            term = blk.term
            for x in states:
                if isinstance(term, graphs.Jump):
                    succ.append((x, term.target))
                elif isinstance(term, graphs.Ret):
                    x.witness.append(term.span)
                    if term.value is None:
                        out.append((x, None))
                    else:
                        out.extend(self.eval(x, term.value, fr))
                elif isinstance(term, graphs.Branch):
                    for y, c in self.eval(x, term.cond, fr):
                        for z, outcome in self.split(y, V.truthy(c)):
                            succ.append((z, term.true if outcome else term.false))
                elif isinstance(term, graphs.SwitchJump):
                    succ.extend(self._switch(x, term, fr))
            live = [(x, t) for x, t in succ if self._edge(x, cfg, fr, b, t)]
            for item in reversed(live):
                stack.append(item)
        return out

    def _switch(self, st: PathState, term: graphs.SwitchJump, fr: Frame):
        out = []
        for x, v in self.eval(st, term.expr, fr):
            labels = []
            for expr, target in term.cases:
                lv = self.eval(PathState(), expr, fr)[0][1]
                labels.append((lv, target))
            arms = [([(V.compare("==", v, lv), True)], t) for lv, t in labels]
            arms.append(([(V.compare("!=", v, lv), True) for lv, _ in labels], term.default))
            feasible = []
            for atoms, target in arms:
                y = self.assume(x.fork(), atoms)
                if y is not None:
                    feasible.append((y, target))
            out.extend(feasible)
        return out

    # --------------------------------------------------------- top level

    def run(self, name: str) -> list[PathState]:
        st = PathState()
        fr = self.frame(st, name)
        fn = self.program.functions[name]
        self.param_syms = []
        for i, p in enumerate(fn.params):
            kind = "ref" if p.type.pointer else "int"
            sym = st.fresh(p.name, ("param", i), kind)
            self.param_syms.append(sym)
            st.mem[("var", fr.fid, p.name)] = sym
        self._active = (name,)
        terminals = []
        for s, v in self.run_cfg(st, name, fr):
            self.terminals += 1
            if self.terminals > self.path_budget:
                if self.mode == "summary":
                    raise BudgetExceeded(f"{name}: path budget exhausted")
                self.truncated = True
                self.note(f"path budget exhausted in {name}")
                break
            s.ret = v
            if isinstance(v, HeapRef) and v.obj in s.heap.objects:
                s.heap.record_return(v.obj, s.witness[-1] if s.witness else None)
            s.diagnostics = list(s.heap.diagnostics)
            terminals.append(s)
        return terminals

    # ------------------------------------------------------ summary facts

    def param_sym_path(self, v: Value, names) -> Optional[AccessPath]:
        if not isinstance(v, Sym) or v.origin is None:
            return None
        if v.origin[0] == "param":
            i = v.origin[1]
            return AccessPath.param(i, names[i] if i < len(names) else "")
        if v.origin[0] == "cell":
            cell = v.origin[1]
            if cell[0] != "ext":
                return None
            base = self.param_sym_path(cell[1], names)
            if base is None:
                return None
            fs = cell[2:]
            if not fs:
                p = base.extend("*")
            else:
                p = base.extend("->", fs[0])
                for f in fs[1:]:
                    p = p.extend(".", f)
            return p if len(p.steps) <= MAX_STEPS else None
        return None

    def summary_facts(self, st: PathState, fn: A.FunctionDef) -> tuple[set, set]:
        """(allocation paths, freed parameter paths) visible at one terminal.

        An object reachable from several roots is recorded once, preferring a
        global root, then a parameter, then the return value, so applying the
        summary never splits one object in two.
        """
        names = fn.param_names
        heap = st.heap
        found: dict[int, AccessPath] = {}
        by_prefix: dict = {}
        for c in st.mem:
            by_prefix.setdefault(c[:2], []).append(c)
        stages = [
            [(("glob", g), None, AccessPath.glob(g)) for g in sorted({c[1] for c in st.mem if c[0] == "glob"})],
            [(("ext", self.param_syms[i]), None, AccessPath.param(i, p.name)) for i, p in enumerate(fn.params)],
            [(None, st.ret, AccessPath.ret())] if st.ret is not None else [],
        ]
        for queue in stages:
            seen_cells: set = set()
            while queue:
                cell, v, path = queue.pop(0)
                if len(path.steps) > MAX_STEPS:
                    continue
                if cell is not None:
                    if cell in seen_cells:
                        continue
                    seen_cells.add(cell)
                    v = st.mem.get(cell)
                    # sub-cells of this lvalue
                    for c in sorted((c for c in by_prefix.get(cell[:2], []) if len(c) == len(cell) + 1
                                     and c[:len(cell)] == cell), key=lambda c: str(c[-1])):
                        queue.append((c, None, path.extend(".", c[-1])))
                if v is None:
                    continue
                if isinstance(v, HeapRef) and not v.fields and v.obj in heap.objects:
                    o = heap[v.obj]
                    if o.allocated and v.obj not in found:
                        found[v.obj] = path
                target = deref_cell(v)
                if target is None or target[0] in ("str", "ret"):
                    continue
                for c in sorted((c for c in by_prefix.get(target[:2], []) if c[:len(target)] == target),
                                key=lambda c: (len(c), [str(x) for x in c[2:]])):
                    rest = c[len(target):]
                    if not rest:
                        queue.append((c, None, path.extend("*")))
                    elif len(rest) == 1:
                        queue.append((c, None, path.extend("->", rest[0])))
        allocs = set(found.values())
        freed = set()
        for v in st.freed:
            p = self.param_sym_path(v, names)
            if p is not None:
                freed.add(p)
        return allocs, freed

    def escaped_params(self, st: PathState, fn: A.FunctionDef) -> set:
        """Parameters whose pointer value outlives the call in a global, in
        memory reached through another parameter, or in a collection."""
        out = set()
        others = set(self.param_syms)
        for i, p in enumerate(fn.params):
            if not p.type.pointer:
                continue
            sym = self.param_syms[i]
            stored = any(v == sym and (c[0] == "glob" or (c[0] == "ext" and c[1] in others and c[1] != sym))
                         for c, v in st.mem.items())
            if stored or any(v == sym for v in st.escaped):
                out.add(AccessPath.param(i, p.name))
        return out


def execute_candidate(name: str, program: "Program", store: "SummaryStore",
                      config: AnalysisConfig) -> tuple[list[PathState], list[str]]:
    ex = Executor(program, store, config, "detect")
    states = ex.run(name)
    return states, ex.diagnostics
