"""Brute-force concrete interpreter used as ground truth in differential tests.

Nothing here touches the symbolic engine, the heap model or the checker.
Unknown inputs (parameters, external call results, uninitialised memory)
range over a small integer domain.  A comparison of an unknown against a
constant splits its remaining candidate set in two; any other use commits it
to one value.  Every combination of such decisions is replayed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..frontend import ast as A
from ..frontend.lexer import Span
from ..graphs import Branch, Jump, Ret, SwitchJump, build_cfg

DOMAIN = (-1, 0, 1, 2, 3)
SEED_ALLOC = {"malloc", "calloc", "strdup"}
COLLECTION_WORDS = ("add", "insert", "create")


class Diverged(Exception):
    pass


class DecisionBoundExceeded(Exception):
    pass


class _Dead(Exception):
    """The run hit a null dereference; it has no verdict."""


@dataclass(frozen=True)
class Unknown:
    id: int


@dataclass(frozen=True)
class Ptr:
    region: tuple
    fields: tuple = ()


@dataclass
class Obj:
    id: int
    site: Span
    freed: bool = False
    returned: bool = False
    ext_stored: bool = False
    global_stored: bool = False
    collected: bool = False
    internal: bool = False


@dataclass
class ConcreteRun:
    decisions: tuple
    objects: dict
    escapes: dict  # object id -> reason or None
    leaks: list  # allocation-site spans leaking in this run
    dead: bool = False

    def to_json(self) -> dict:
        return {
            "decisions": list(self.decisions),
            "objects": {str(k): ("Freed" if o.freed else "Allocated") for k, o in self.objects.items()},
            "escapes": {str(k): v for k, v in self.escapes.items()},
            "leaks": [[s.file, s.offset, s.length] for s in self.leaks],
            "dead": self.dead,
        }


class _Chooser:
    def __init__(self, prefix: list[int], bound: int):
        self.prefix = prefix
        self.taken: list[int] = []
        self.widths: list[int] = []
        self.bound = bound

    def pick(self, n: int) -> int:
        if n == 1:
            return 0
        pos = len(self.taken)
        if pos >= self.bound:
            raise DecisionBoundExceeded(f"more than {self.bound} decisions")
        c = self.prefix[pos] if pos < len(self.prefix) else 0
        self.taken.append(c)
        self.widths.append(n)
        return c

    def next_prefix(self) -> Optional[list[int]]:
        for i in range(len(self.taken) - 1, -1, -1):
            if self.taken[i] + 1 < self.widths[i]:
                return self.taken[:i] + [self.taken[i] + 1]
        return None


_CMP = {
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b, "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b, ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}
_FLIP = {"==": "==", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


def _c_div(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


class _Run:
    def __init__(self, program, chooser: _Chooser, step_budget: int):
        self.program = program
        self.ch = chooser
        self.mem: dict = {}
        self.dom: dict[int, tuple] = {}  # unknown id -> remaining candidates
        self.objects: dict[int, Obj] = {}
        self.next_unknown = 0
        self.next_frame = 0
        self.steps = 0
        self.step_budget = step_budget
        self.top_site: Optional[Span] = None
        self.cfgs: dict = {}
        self.scopes: dict = {}

    # values -----------------------------------------------------------

    def unknown(self) -> Unknown:
        u = Unknown(self.next_unknown)
        self.next_unknown += 1
        self.dom[u.id] = DOMAIN
        return u

    def commit(self, v):
        if isinstance(v, Unknown):
            cands = self.dom[v.id]
            if len(cands) > 1:
                cands = (cands[self.ch.pick(len(cands))],)
                self.dom[v.id] = cands
            return cands[0]
        return v

    def compare(self, op, a, b) -> int:
        if isinstance(a, Ptr) or isinstance(b, Ptr):
            if op not in ("==", "!="):
                raise Diverged("ordered pointer comparison")
            if isinstance(a, Ptr) and isinstance(b, Ptr):
                eq = a == b
            else:
                eq = False
            return int(eq if op == "==" else not eq)
        if isinstance(b, Unknown) and not isinstance(a, Unknown):
            a, b, op = b, a, _FLIP[op]
        if isinstance(a, Unknown) and isinstance(b, int):
            cands = self.dom[a.id]
            yes = tuple(x for x in cands if _CMP[op](x, b))
            no = tuple(x for x in cands if not _CMP[op](x, b))
            options = [s for s in (no, yes) if s]
            chosen = options[self.ch.pick(len(options))]
            self.dom[a.id] = chosen
            return int(chosen is yes)
        return int(_CMP[op](self.commit(a), self.commit(b)))

    def truth(self, v) -> bool:
        if isinstance(v, Ptr):
            return True
        return bool(self.compare("!=", v, 0))

    # memory -----------------------------------------------------------

    def target(self, v) -> tuple:
        if isinstance(v, Ptr):
            return v.region + v.fields
        if isinstance(v, Unknown):
            cands = tuple(x for x in self.dom[v.id] if x != 0)
            if not cands:
                raise _Dead()
            self.dom[v.id] = cands
            return ("x", v.id)
        if v == 0:
            raise _Dead()
        raise Diverged("dereference of an integer")

    def load(self, cell):
        if cell not in self.mem:
            if cell[0] == "g" and len(cell) == 2:
                d = self.program.globals.get(cell[1])
                if d is not None and d.const and d.init is not None:
                    self.mem[cell] = self.eval(d.init, None)
                    return self.mem[cell]
            self.mem[cell] = self.unknown()
        return self.mem[cell]

    def store(self, cell, v):
        self.mem[cell] = v
        if isinstance(v, Ptr) and v.region[0] == "h":
            o = self.objects[v.region[1]]
            if cell[0] == "x":
                o.ext_stored = True
            elif cell[0] == "g":
                o.global_stored = True

    def allocate(self, span: Span) -> Ptr:
        oid = len(self.objects)
        self.objects[oid] = Obj(oid, self.top_site or span)
        return Ptr(("h", oid))

    def holders(self, oid: int) -> list[tuple]:
        out = []
        for c, v in self.mem.items():
            if isinstance(v, Ptr) and v.region == ("h", oid):
                if c[0] == "h" and self.objects[c[1]].freed:
                    continue
                out.append(c)
        return out

    def free(self, v):
        if not isinstance(v, Ptr) or v.region[0] != "h":
            return
        o = self.objects[v.region[1]]
        if o.freed:
            return
        o.freed = True
        for c, w in sorted(self.mem.items(), key=lambda kv: repr(kv[0])):
            if c[0] == "h" and c[1] == o.id and isinstance(w, Ptr) and w.region[0] == "h":
                child = self.objects[w.region[1]]
                if child.freed:
                    continue
                if any(h[0] == "g" for h in self.holders(child.id)):
                    continue
                self.free(w)

    # expressions ------------------------------------------------------

    def scope(self, fname):
        if fname not in self.scopes:
            fn = self.program.functions[fname]
            names = set(fn.param_names)
            names |= {s.name for s in A.walk_stmts(fn.body) if isinstance(s, A.VarDecl)}
            self.scopes[fname] = names
        return self.scopes[fname]

    def lval(self, e, fr) -> tuple:
        if isinstance(e, A.Name):
            if fr is not None and e.id in self.scope(fr[1]):
                return ("v", fr[0], e.id)
            return ("g", e.id)
        if isinstance(e, A.Member):
            if e.arrow:
                return self.target(self.eval(e.obj, fr)) + (e.field,)
            return self.lval(e.obj, fr) + (e.field,)
        if isinstance(e, A.Unary) and e.op == "*":
            return self.target(self.eval(e.operand, fr))
        if isinstance(e, A.Cast):
            return self.lval(e.expr, fr)
        raise Diverged("unsupported lvalue")

    def address(self, cell: tuple):
        if cell[0] == "h":
            return Ptr(cell[:2], cell[2:])
        if cell[0] == "x" and len(cell) == 2:
            return Unknown(cell[1])
        return Ptr(cell, ())

    def arith(self, op, a, b):
        if isinstance(a, Ptr) or isinstance(b, Ptr):
            if op in ("+", "-") and (b == 0 or a == 0):
                return a if isinstance(a, Ptr) else b
            raise Diverged("pointer arithmetic")
        a, b = self.commit(a), self.commit(b)
        if op in ("/", "%"):
            if b == 0:
                raise Diverged("division by zero")
            q = _c_div(a, b)
            return q if op == "/" else a - b * q
        return {"+": a + b, "-": a - b, "*": a * b, "&": a & b, "|": a | b, "^": a ^ b,
                "<<": a << b if 0 <= b < 64 else 0, ">>": a >> b if 0 <= b < 64 else 0}[op]

    def eval(self, e, fr):
        self.tick()
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.NullLit):
            return 0
        if isinstance(e, A.StrLit):
            return Ptr(("s", e.span.file, e.span.offset))
        if isinstance(e, A.SizeOf):
            return 8
        if isinstance(e, A.Cast):
            return self.eval(e.expr, fr)
        if isinstance(e, (A.Name, A.Member)):
            return self.load(self.lval(e, fr))
        if isinstance(e, A.Unary):
            if e.op == "&":
                return self.address(self.lval(e.operand, fr))
            if e.op == "*":
                return self.load(self.lval(e, fr))
            v = self.eval(e.operand, fr)
            if e.op == "!":
                return int(not self.truth(v))
            if e.op == "+":
                return v
            v = self.commit(v)
            if isinstance(v, Ptr):
                raise Diverged("arithmetic on a pointer")
            return -v if e.op == "-" else ~v
        if isinstance(e, A.Binary):
            if e.op == "&&":
                return int(self.truth(self.eval(e.left, fr)) and self.truth(self.eval(e.right, fr)))
            if e.op == "||":
                return int(self.truth(self.eval(e.left, fr)) or self.truth(self.eval(e.right, fr)))
            a = self.eval(e.left, fr)
            b = self.eval(e.right, fr)
            if e.op in _CMP:
                return self.compare(e.op, a, b)
            return self.arith(e.op, a, b)
        if isinstance(e, A.Call):
            return self.call(e, fr)
        raise Diverged(f"cannot evaluate {type(e).__name__}")

    def _global_arg(self, e, fr) -> bool:
        while isinstance(e, (A.Cast, A.Unary, A.Member)):
            if isinstance(e, A.Unary) and e.op not in ("&", "*"):
                return False
            e = e.expr if isinstance(e, A.Cast) else (e.operand if isinstance(e, A.Unary) else e.obj)
        if not isinstance(e, A.Name):
            return False
        local = fr is not None and e.id in self.scope(fr[1])
        return not local and e.id in self.program.globals

    def call(self, e: A.Call, fr):
        args = [self.eval(a, fr) for a in e.args]
        outermost = fr is not None and fr[2] == 0
        if outermost:
            self.top_site = e.span
        try:
            name = e.func
            low = name.lower()
            if any(w in low for w in COLLECTION_WORDS):
                flags = [self._global_arg(a, fr) for a in e.args]
                if any(flags):
                    for v, g in zip(args, flags):
                        if not g and isinstance(v, Ptr) and v.region[0] == "h":
                            self.objects[v.region[1]].collected = True
            if name in SEED_ALLOC:
                return self.allocate(e.span)
            if name == "free":
                self.free(args[0] if args else 0)
                return self.unknown()
            if name == "realloc":
                self.free(args[0] if args else 0)
                return self.allocate(e.span)
            if name in self.program.functions:
                return self.invoke(name, args, fr[2] + 1 if fr is not None else 1)
            return self.unknown()
        finally:
            if outermost:
                self.top_site = None

    # statements -------------------------------------------------------

    def tick(self):
        self.steps += 1
        if self.steps > self.step_budget:
            raise Diverged("step budget exhausted")

    def invoke(self, name: str, args: list, depth: int):
        fn = self.program.functions[name]
        fid = self.next_frame
        self.next_frame += 1
        fr = (fid, name, depth)
        for p, v in zip(fn.param_names, args):
            self.mem[("v", fid, p)] = v
        first = len(self.objects)
        if name not in self.cfgs:
            self.cfgs[name] = build_cfg(fn)
        cfg = self.cfgs[name]
        b = cfg.entry
        result = None
        while True:
            self.tick()
            blk = cfg.blocks[b]
            for s in blk.stmts:
                self.exec(s, fr)
            t = blk.term
            if isinstance(t, Jump):
                b = t.target
            elif isinstance(t, Branch):
                b = t.true if self.truth(self.eval(t.cond, fr)) else t.false
            elif isinstance(t, SwitchJump):
                v = self.eval(t.expr, fr)
                b = t.default
                for expr, target in t.cases:
                    if self.compare("==", v, self.eval(expr, fr)):
                        b = target
                        break
            elif isinstance(t, Ret):
                result = self.eval(t.value, fr) if t.value is not None else None
                break
        for k in [k for k in self.mem if k[0] == "v" and k[1] == fid]:
            del self.mem[k]
        if depth > 0:
            self._internal(first, result)
        elif result is None:
            result = self.unknown()
        return result if result is not None else self.unknown()

    def _internal(self, first: int, result):
        held = set()
        for c, v in self.mem.items():
            if isinstance(v, Ptr) and v.region[0] == "h":
                if c[0] == "h" and self.objects[c[1]].freed:
                    continue
                held.add(v.region[1])
        if isinstance(result, Ptr) and result.region[0] == "h":
            held.add(result.region[1])
        for oid in range(first, len(self.objects)):
            o = self.objects[oid]
            if not o.freed and oid not in held and not (
                    o.ext_stored or o.global_stored or o.collected or o.returned):
                o.internal = True

    def exec(self, s, fr):
        self.tick()
        if isinstance(s, A.VarDecl):
            cell = ("v", fr[0], s.name)
            if s.init is None:
                for k in [k for k in self.mem if k[:3] == cell]:
                    del self.mem[k]
            else:
                v = self.eval(s.init, fr)
                self.store(cell, v)
        elif isinstance(s, A.Assign):
            v = self.eval(s.value, fr)
            self.store(self.lval(s.target, fr), v)
        elif isinstance(s, A.ExprStmt):
            self.eval(s.expr, fr)

    # verdicts ---------------------------------------------------------

    def escape_reason(self, oid: int, seen=None) -> Optional[str]:
        seen = seen or set()
        if oid in seen:
            return None
        seen.add(oid)
        o = self.objects[oid]
        if o.returned:
            return "returned"
        if o.ext_stored:
            return "stored through a parameter"
        if o.collected:
            return "collection"
        holders = self.holders(oid)
        if any(c[0] == "g" for c in holders):
            return "global"
        for c in holders:
            if c[0] == "h" and self.escape_reason(c[1], seen):
                return "via parent"
        return None


def _one_run(program, entry, prefix, bound, step_budget):
    ch = _Chooser(prefix, bound)
    r = _Run(program, ch, step_budget)
    fn = program.functions[entry]
    args = [r.unknown() for _ in fn.params]
    dead = False
    try:
        ret = r.invoke(entry, args, 0)
        if isinstance(ret, Ptr) and ret.region[0] == "h":
            r.objects[ret.region[1]].returned = True
    except _Dead:
        dead = True
    escapes, leaks = {}, []
    if not dead:
        for oid, o in r.objects.items():
            if o.freed or o.internal:
                escapes[oid] = None
                continue
            reason = r.escape_reason(oid)
            escapes[oid] = reason
            if reason is None and o.site not in leaks:
                leaks.append(o.site)
    leaks.sort()
    return ConcreteRun(tuple(ch.taken), dict(r.objects), escapes, leaks, dead), ch.next_prefix()


def enumerate_runs(program, entry: str, bound: int = 16, step_budget: int = 20000) -> list[ConcreteRun]:
    """Every decision vector of `entry`, executed concretely."""
    runs = []
    prefix: Optional[list[int]] = []
    while prefix is not None:
        run, prefix = _one_run(program, entry, prefix, bound, step_budget)
        runs.append(run)
    return runs


def leaking_sites(runs: list[ConcreteRun]) -> set[Span]:
    return {s for r in runs for s in r.leaks}
