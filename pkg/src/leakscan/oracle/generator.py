"""Random Mini-C programs for differential testing.

Programs have at most three functions and four branch points.  Guards are
unary comparisons of an unknown integer against a small constant, so every
path condition stays inside the decidable fragment.  Shapes that would make
the concrete and symbolic models disagree for reasons unrelated to leaks
(field writes through maybe-null pointers, objects stored into two fields,
branching on helper return values) are never produced.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

OPS = ("==", "!=", "<", "<=", ">", ">=")

PRELUDE = """struct Node {
    struct Node *next;
    int v;
};

struct Node *gslot;
struct Node *glist;

int ext_get(void);
void list_add(struct Node **head, struct Node *item);
"""


@dataclass
class GeneratedProgram:
    seed: int
    source: str
    entry: str = "entry"


def _guard(rng: random.Random, ints: list[str]) -> str:
    v = rng.choice(ints)
    op = rng.choice(OPS)
    k = rng.randint(0, 2)
    if rng.random() < 0.15:
        return f"!{v}" if rng.random() < 0.5 else v
    return f"{v} {op} {k}"


def _helpers(rng: random.Random) -> list[tuple[str, str, str]]:
    """(kind, name, source) for zero to two helpers."""
    out = []
    kinds = ["alloc", "alloc_cond", "out", "out_cond", "free_cond", "free_all", "wrap"]
    for i in range(rng.randint(0, 2)):
        kind = rng.choice(kinds)
        if kind == "wrap" and not any(k.startswith("alloc") for k, _, _ in out):
            kind = "alloc"
        name = f"h{i}_{kind}"
        op, k = rng.choice(OPS), rng.randint(0, 2)
        if kind == "alloc":
            src = (f"struct Node *{name}(int k)\n{{\n    struct Node *p = malloc(sizeof(struct Node));\n"
                   f"    p->next = NULL;\n    return p;\n}}\n")
        elif kind == "alloc_cond":
            src = (f"struct Node *{name}(int k)\n{{\n    struct Node *p = malloc(sizeof(struct Node));\n"
                   f"    if (k {op} {k}) {{\n        free(p);\n        return NULL;\n    }}\n    return p;\n}}\n")
        elif kind == "out":
            src = f"void {name}(struct Node **out, int k)\n{{\n    *out = malloc(16);\n}}\n"
        elif kind == "out_cond":
            src = (f"void {name}(struct Node **out, int k)\n{{\n    if (k {op} {k})\n"
                   f"        *out = malloc(16);\n}}\n")
        elif kind == "free_cond":
            src = f"void {name}(struct Node *p, int k)\n{{\n    if (k {op} {k})\n        free(p);\n}}\n"
        elif kind == "free_all":
            src = f"void {name}(struct Node *p)\n{{\n    free(p->next);\n    free(p);\n}}\n"
        else:
            inner = next(n for kd, n, _ in out if kd.startswith("alloc"))
            src = f"struct Node *{name}(int k)\n{{\n    return {inner}(k + 0);\n}}\n"
            kind = "alloc_cond" if inner.endswith("cond") else "alloc"
        out.append((kind, name, src))
    return out


def generate(seed: int) -> GeneratedProgram:
    rng = random.Random(seed)
    helpers = _helpers(rng)
    ints = ["a", "b"]
    body: list[str] = []
    objs: list[str] = []  # every object variable
    solid: list[str] = []  # never null, fields writable
    has_child: set[str] = set()
    for i in range(rng.randint(1, 3)):
        x = f"x{i}"
        objs.append(x)
        allocs = [k for k in helpers if k[0] in ("alloc", "alloc_cond", "out", "out_cond")]
        if allocs and rng.random() < 0.5:
            kind, name, _ = rng.choice(allocs)
            arg = rng.choice(ints)
            if kind.startswith("out"):
                body.append(f"    struct Node *{x} = NULL;")
                body.append(f"    {name}(&{x}, {arg});")
            else:
                body.append(f"    struct Node *{x} = {name}({arg});")
                if kind == "alloc":
                    solid.append(x)
        else:
            body.append(f"    struct Node *{x} = malloc(sizeof(struct Node));")
            body.append(f"    {x}->next = NULL;")
            solid.append(x)
        if rng.random() < 0.3:
            body.append(f"    int k{i} = ext_get();")
            ints.append(f"k{i}")
    # link a few objects into parents before any branching
    children: set[str] = set()
    for p in solid:
        if rng.random() < 0.3:
            cands = [c for c in objs if c != p and c not in children and c not in has_child]
            if cands:
                c = rng.choice(cands)
                body.append(f"    {p}->next = {c};")
                has_child.add(p)
                children.add(c)

    frees = [k for k in helpers if k[0] in ("free_cond", "free_all")]
    uses_fail = False

    def action() -> str:
        x = rng.choice(objs)
        r = rng.random()
        if r < 0.28:
            if frees and rng.random() < 0.5:
                kind, name, _ = rng.choice(frees)
                if kind == "free_all":
                    if x in solid:
                        return f"{name}({x});"
                    return f"free({x});"
                return f"{name}({x}, {rng.choice(ints)});"
            return f"free({x});"
        if r < 0.40:
            return f"gslot = {x};"
        if r < 0.48:
            return "gslot = NULL;"
        if r < 0.58:
            return f"*out = {x};"
        if r < 0.64:
            return f"if (out)\n            *out = {x};"
        if r < 0.72:
            return f"list_add(&glist, {x});"
        if x in solid:
            solid.remove(x)  # later helpers must not read its fields
        return f"{x} = NULL;"

    def exit_stmt() -> str:
        nonlocal uses_fail
        if rng.random() < 0.6:
            return "return -1;"
        uses_fail = True
        return "goto fail;"

    for _ in range(rng.randint(1, 4)):
        g = _guard(rng, ints)
        stmts = [action() for _ in range(rng.randint(0, 2))]
        if not stmts or rng.random() < 0.4:
            stmts.append(exit_stmt())
        body.append(f"    if ({g}) {{")
        body += [f"        {s}" for s in stmts]
        body.append("    }")
    for _ in range(rng.randint(0, 2)):
        body.append(f"    {action()}".replace("\n        ", "\n    "))
    body.append("    return 0;")
    if uses_fail:
        body.append("fail:")
        for x in objs:
            if rng.random() < 0.6:
                body.append(f"    free({x});")
        body.append("    return -2;")
    src = PRELUDE + "\n" + "\n".join(h[2] for h in helpers)
    src += "\nint entry(int a, int b, struct Node **out)\n{\n" + "\n".join(body) + "\n}\n"
    return GeneratedProgram(seed, src)
