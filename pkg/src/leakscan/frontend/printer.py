"""Pretty-printer emitting Mini-C that re-parses to the same tree."""
from __future__ import annotations

from . import ast as A


def fmt_type(t: A.TypeRef) -> str:
    base = f"struct {t.base}" if t.record else t.base
    return base + (" " + "*" * t.pointer if t.pointer else "")


def _decl(t: A.TypeRef, name: str) -> str:
    base = f"struct {t.base}" if t.record else t.base
    return f"{base} {'*' * t.pointer}{name}"


def fmt_expr(e: A.Expr) -> str:
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.IntLit):
        return str(e.value) if e.value >= 0 else f"(-{-e.value})"
    if isinstance(e, A.StrLit):
        return e.text
    if isinstance(e, A.NullLit):
        return "NULL"
    if isinstance(e, A.Member):
        return f"{fmt_expr(e.obj)}{'->' if e.arrow else '.'}{e.field}"
    if isinstance(e, A.Unary):
        return f"({e.op}{fmt_expr(e.operand)})"
    if isinstance(e, A.Binary):
        return f"({fmt_expr(e.left)} {e.op} {fmt_expr(e.right)})"
    if isinstance(e, A.Call):
        return f"{e.func}({', '.join(fmt_expr(a) for a in e.args)})"
    if isinstance(e, A.Cast):
        return f"(({fmt_type(e.type)}){fmt_expr(e.expr)})"
    if isinstance(e, A.SizeOf):
        if isinstance(e.operand, A.TypeRef):
            return f"sizeof({fmt_type(e.operand)})"
        return f"(sizeof {fmt_expr(e.operand)})"
    raise TypeError(f"not an expression: {e!r}")


def _simple(s: A.Stmt) -> str:
    if isinstance(s, A.Assign):
        return f"{fmt_expr(s.target)} = {fmt_expr(s.value)}"
    if isinstance(s, A.ExprStmt):
        return fmt_expr(s.expr)
    if isinstance(s, A.VarDecl):
        init = f" = {fmt_expr(s.init)}" if s.init is not None else ""
        return _decl(s.type, s.name) + init
    raise TypeError(f"not a simple statement: {s!r}")


def fmt_stmt(s: A.Stmt, indent: int = 0) -> list[str]:
    pad = "    " * indent
    if isinstance(s, A.Block):
        lines = [pad + "{"]
        for x in s.stmts:
            lines += fmt_stmt(x, indent + 1)
        return lines + [pad + "}"]
    if isinstance(s, (A.Assign, A.ExprStmt, A.VarDecl)):
        return [pad + _simple(s) + ";"]
    if isinstance(s, A.If):
        then = s.then
        if s.orelse is not None and isinstance(then, A.If) and then.orelse is None:
            then = A.Block((then,))  # dangling else; the only lossy case
        lines = [pad + f"if ({fmt_expr(s.cond)})"] + _sub(then, indent)
        if s.orelse is not None:
            lines += [pad + "else"] + _sub(s.orelse, indent)
        return lines
    if isinstance(s, A.While):
        return [pad + f"while ({fmt_expr(s.cond)})"] + _sub(s.body, indent)
    if isinstance(s, A.For):
        init = _simple(s.init) if s.init is not None else ""
        cond = fmt_expr(s.cond) if s.cond is not None else ""
        step = _simple(s.step) if s.step is not None else ""
        return [pad + f"for ({init}; {cond}; {step})"] + _sub(s.body, indent)
    if isinstance(s, A.Switch):
        return [pad + f"switch ({fmt_expr(s.expr)})"] + fmt_stmt(s.body, indent)
    if isinstance(s, A.Case):
        return [pad + f"case {fmt_expr(s.value)}:"]
    if isinstance(s, A.Default):
        return [pad + "default:"]
    if isinstance(s, A.Break):
        return [pad + "break;"]
    if isinstance(s, A.Continue):
        return [pad + "continue;"]
    if isinstance(s, A.Goto):
        return [pad + f"goto {s.label};"]
    if isinstance(s, A.Labeled):
        return [pad + f"{s.label}:"] + fmt_stmt(s.stmt, indent)
    if isinstance(s, A.Return):
        return [pad + ("return;" if s.value is None else f"return {fmt_expr(s.value)};")]
    if isinstance(s, A.Empty):
        return [pad + ";"]
    raise TypeError(f"not a statement: {s!r}")


def _sub(s: A.Stmt, indent: int) -> list[str]:
    if isinstance(s, A.Block):
        return fmt_stmt(s, indent)
    return fmt_stmt(s, indent + 1)


def fmt_unit(u: A.Unit) -> str:
    out: list[str] = []
    for d in u.decls:
        if isinstance(d, A.RecordDecl):
            out.append(f"struct {d.name} {{")
            for f in d.fields:
                out.append(f"    {_decl(f.type, f.name)};")
            out.append("};")
        elif isinstance(d, A.TypedefDecl):
            out.append(f"typedef {_decl(d.type, d.name)};")
        elif isinstance(d, A.GlobalDecl):
            init = f" = {fmt_expr(d.init)}" if d.init is not None else ""
            out.append(("const " if d.const else "") + _decl(d.type, d.name) + init + ";")
        elif isinstance(d, A.FunctionDef):
            params = ", ".join(_decl(p.type, p.name) for p in d.params) or "void"
            head = ("static " if d.static else "") + _decl(d.ret, d.name) + f"({params})"
            if d.body is None:
                out.append(head + ";")
            else:
                out.append(head)
                out += fmt_stmt(d.body)
        out.append("")
    return "\n".join(out)
