"""Recursive-descent parser for Mini-C."""
from __future__ import annotations

from typing import Optional

from . import ast as A
from .lexer import Span, Token, TokenKind as T, tokenize


class ParseError(Exception):
    def __init__(self, message: str, span: Span):
        super().__init__(f"{message} at {span.file}:{span.offset}")
        self.span = span


SCALAR_KEYWORDS = {"int", "char", "void", "long", "short", "unsigned", "signed"}
# common typedef names, accepted without headers
BUILTIN_TYPEDEFS = {"size_t", "uint64_t", "uint32_t", "uint8_t", "int64_t", "int32_t", "bool"}

_BINARY_LEVELS: list[dict[T, str]] = [
    {T.OR_OR: "||"},
    {T.AND_AND: "&&"},
    {T.PIPE: "|"},
    {T.CARET: "^"},
    {T.AMP: "&"},
    {T.EQ: "==", T.NE: "!="},
    {T.LT: "<", T.GT: ">", T.LE: "<=", T.GE: ">="},
    {T.SHL: "<<", T.SHR: ">>"},
    {T.PLUS: "+", T.MINUS: "-"},
    {T.STAR: "*", T.SLASH: "/", T.PERCENT: "%"},
]


def _int_value(text: str) -> int:
    if text.startswith("'"):
        body = text[1:-1]
        if body.startswith("\\"):
            return {"n": 10, "t": 9, "0": 0, "\\": 92, "'": 39}.get(body[1:2], ord(body[1:2] or "\0"))
        return ord(body) if body else 0
    return int(text.rstrip("uUlL"), 0)


class Parser:
    def __init__(self, tokens: list[Token]):
        if not tokens or tokens[-1].kind is not T.END:
            raise ValueError("token stream must end with the End marker")
        self.toks = tokens
        self.pos = 0
        self.typenames: set[str] = set(BUILTIN_TYPEDEFS)

    # -------------------------------------------------------------- helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, kind: T, text: Optional[str] = None) -> bool:
        t = self.tok
        return t.kind is kind and (text is None or t.text == text)

    def at_kw(self, *words: str) -> bool:
        return self.tok.kind is T.KW and self.tok.text in words

    def advance(self) -> Token:
        t = self.tok
        if t.kind is not T.END:
            self.pos += 1
        return t

    def expect(self, kind: T, text: Optional[str] = None) -> Token:
        if not self.at(kind, text):
            want = text or kind.value
            got = self.tok.text or self.tok.kind.value
            raise ParseError(f"expected {want!r}, found {got!r}", self.tok.span)
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        return self.expect(T.KW, word)

    def span_from(self, start: Span) -> Span:
        prev = self.toks[self.pos - 1].span if self.pos > 0 else start
        return Span(start.file, start.offset, max(prev.end - start.offset, 0))

    # ---------------------------------------------------------------- types

    def starts_type(self, k: int = 0) -> bool:
        t = self.peek(k) if k else self.tok
        if t.kind is T.KW and (t.text in SCALAR_KEYWORDS or t.text in ("struct", "const")):
            return True
        return t.kind is T.IDENT and t.text in self.typenames

    def parse_specifiers(self) -> tuple[A.TypeRef, bool, bool, Optional[A.RecordDecl]]:
        """Parse storage/qualifier/base specifiers. Returns (type, static, const, inline record)."""
        static = const = False
        record: Optional[A.RecordDecl] = None
        while self.at_kw("static", "extern", "const"):
            w = self.advance().text
            static |= w == "static"
            const |= w == "const"
        if self.at_kw("struct"):
            start = self.advance().span
            name = self.expect(T.IDENT).text
            self.typenames.add(name)
            if self.at(T.LBRACE):
                record = self.parse_record_body(name, start)
            base = A.TypeRef(name, 0, True)
        elif self.tok.kind is T.KW and self.tok.text in SCALAR_KEYWORDS:
            words = []
            while self.tok.kind is T.KW and self.tok.text in SCALAR_KEYWORDS:
                words.append(self.advance().text)
            base = A.TypeRef(" ".join(words))
        elif self.tok.kind is T.IDENT and self.tok.text in self.typenames:
            base = A.TypeRef(self.advance().text)
        else:
            raise ParseError(f"expected a type, found {self.tok.text!r}", self.tok.span)
        while self.at_kw("const"):
            self.advance()
            const = True
        return base, static, const, record

    def parse_pointers(self, base: A.TypeRef) -> A.TypeRef:
        n = 0
        while self.at(T.STAR) or self.at_kw("const"):
            if self.advance().kind is T.STAR:
                n += 1
        return A.TypeRef(base.base, base.pointer + n, base.record)

    def parse_type_name(self) -> A.TypeRef:
        base, _, _, _ = self.parse_specifiers()
        return self.parse_pointers(base)

    def parse_record_body(self, name: str, start: Span) -> A.RecordDecl:
        self.expect(T.LBRACE)
        fields = []
        while not self.at(T.RBRACE):
            base, _, _, _ = self.parse_specifiers()
            while True:
                ty = self.parse_pointers(base)
                fname = self.expect(T.IDENT).text
                fields.append(A.FieldDecl(ty, fname))
                if not self.at(T.COMMA):
                    break
                self.advance()
            self.expect(T.SEMI)
        self.expect(T.RBRACE)
        return A.RecordDecl(name, tuple(fields), self.span_from(start))

    # ---------------------------------------------------------- top level

    def parse_unit(self) -> A.Unit:
        decls: list[A.Decl] = []
        file = self.tok.span.file
        while not self.at(T.END):
            decls.extend(self.parse_external())
        return A.Unit(file, tuple(decls))

    def parse_external(self) -> list[A.Decl]:
        start = self.tok.span
        if self.at_kw("typedef"):
            self.advance()
            base, _, _, record = self.parse_specifiers()
            ty = self.parse_pointers(base)
            name = self.expect(T.IDENT).text
            self.expect(T.SEMI)
            self.typenames.add(name)
            out: list[A.Decl] = [record] if record else []
            out.append(A.TypedefDecl(name, ty, self.span_from(start)))
            return out
        base, static, const, record = self.parse_specifiers()
        if record is not None and self.at(T.SEMI):
            self.advance()
            return [record]
        out = [record] if record else []
        ty = self.parse_pointers(base)
        name_tok = self.expect(T.IDENT)
        if self.at(T.LPAREN):
            params = self.parse_params()
            if self.at(T.SEMI):
                self.advance()
                body = None
            else:
                body = self.parse_block()
            out.append(A.FunctionDef(ty, name_tok.text, params, body, static, self.span_from(start)))
            return out
        while True:
            init = None
            if self.at(T.ASSIGN):
                self.advance()
                init = self.parse_expr()
            out.append(A.GlobalDecl(ty, name_tok.text, init, const, self.span_from(start)))
            if not self.at(T.COMMA):
                break
            self.advance()
            ty = self.parse_pointers(base)
            name_tok = self.expect(T.IDENT)
        self.expect(T.SEMI)
        return out

    def parse_params(self) -> tuple[A.Param, ...]:
        self.expect(T.LPAREN)
        params: list[A.Param] = []
        if self.at_kw("void") and self.peek().kind is T.RPAREN:
            self.advance()
        while not self.at(T.RPAREN):
            ty = self.parse_type_name()
            if self.at(T.IDENT):
                name = self.advance().text
            else:
                name = f"arg{len(params)}"
            params.append(A.Param(ty, name))
            if not self.at(T.COMMA):
                break
            self.advance()
        self.expect(T.RPAREN)
        return tuple(params)

    # ----------------------------------------------------------- statements

    def parse_block(self) -> A.Block:
        start = self.expect(T.LBRACE).span
        stmts: list[A.Stmt] = []
        while not self.at(T.RBRACE):
            if self.at(T.END):
                raise ParseError("unterminated block", self.tok.span)
            stmts.extend(self.parse_stmt_list())
        self.expect(T.RBRACE)
        return A.Block(tuple(stmts), self.span_from(start))

    def parse_stmt_list(self) -> list[A.Stmt]:
        """A statement, or several declarations from one declaration line."""
        if self.starts_type() and not (self.tok.kind is T.IDENT and self.peek().kind is T.COLON):
            decls = self.parse_local_decls()
            self.expect(T.SEMI)
            return decls
        return [self.parse_stmt()]

    def parse_local_decls(self) -> list[A.Stmt]:
        start = self.tok.span
        base, _, _, _ = self.parse_specifiers()
        out: list[A.Stmt] = []
        while True:
            ty = self.parse_pointers(base)
            name = self.expect(T.IDENT).text
            init = None
            if self.at(T.ASSIGN):
                self.advance()
                init = self.parse_expr()
            out.append(A.VarDecl(ty, name, init, self.span_from(start)))
            if not self.at(T.COMMA):
                return out
            self.advance()

    def parse_stmt(self) -> A.Stmt:
        start = self.tok.span
        t = self.tok
        if t.kind is T.LBRACE:
            return self.parse_block()
        if t.kind is T.SEMI:
            self.advance()
            return A.Empty(start)
        if t.kind is T.IDENT and self.peek().kind is T.COLON:
            self.advance()
            self.advance()
            if self.at(T.RBRACE):
                inner: A.Stmt = A.Empty(self.tok.span)
            else:
                inner = self.parse_stmt()
            return A.Labeled(t.text, inner, self.span_from(start))
        if t.kind is T.KW:
            kw = t.text
            if kw == "if":
                self.advance()
                self.expect(T.LPAREN)
                cond = self.parse_expr()
                self.expect(T.RPAREN)
                then = self.parse_sub_stmt()
                orelse = None
                if self.at_kw("else"):
                    self.advance()
                    orelse = self.parse_sub_stmt()
                return A.If(cond, then, orelse, self.span_from(start))
            if kw == "while":
                self.advance()
                self.expect(T.LPAREN)
                cond = self.parse_expr()
                self.expect(T.RPAREN)
                body = self.parse_sub_stmt()
                return A.While(cond, body, self.span_from(start))
            if kw == "for":
                self.advance()
                self.expect(T.LPAREN)
                init: Optional[A.Stmt] = None
                if not self.at(T.SEMI):
                    if self.starts_type():
                        decls = self.parse_local_decls()
                        if len(decls) != 1:
                            raise ParseError("one declaration allowed in for-init", start)
                        init = decls[0]
                    else:
                        init = self.parse_simple_stmt()
                self.expect(T.SEMI)
                cond = None if self.at(T.SEMI) else self.parse_expr()
                self.expect(T.SEMI)
                step = None if self.at(T.RPAREN) else self.parse_simple_stmt()
                self.expect(T.RPAREN)
                body = self.parse_sub_stmt()
                return A.For(init, cond, step, body, self.span_from(start))
            if kw == "switch":
                self.advance()
                self.expect(T.LPAREN)
                e = self.parse_expr()
                self.expect(T.RPAREN)
                body = self.parse_block()
                return A.Switch(e, body, self.span_from(start))
            if kw == "case":
                self.advance()
                v = self.parse_expr()
                self.expect(T.COLON)
                return A.Case(v, self.span_from(start))
            if kw == "default":
                self.advance()
                self.expect(T.COLON)
                return A.Default(self.span_from(start))
            if kw == "break":
                self.advance()
                self.expect(T.SEMI)
                return A.Break(self.span_from(start))
            if kw == "continue":
                self.advance()
                self.expect(T.SEMI)
                return A.Continue(self.span_from(start))
            if kw == "goto":
                self.advance()
                label = self.expect(T.IDENT).text
                self.expect(T.SEMI)
                return A.Goto(label, self.span_from(start))
            if kw == "return":
                self.advance()
                value = None if self.at(T.SEMI) else self.parse_expr()
                self.expect(T.SEMI)
                return A.Return(value, self.span_from(start))
        s = self.parse_simple_stmt()
        self.expect(T.SEMI)
        return s

    def parse_sub_stmt(self) -> A.Stmt:
        if self.starts_type():
            raise ParseError("declaration not allowed here", self.tok.span)
        return self.parse_stmt()

    def parse_simple_stmt(self) -> A.Stmt:
        """Assignment, compound assignment, increment, or expression statement."""
        start = self.tok.span
        if self.at(T.INC) or self.at(T.DEC):
            op = "+" if self.advance().kind is T.INC else "-"
            target = self.parse_unary()
            return A.Assign(target, A.Binary(op, target, A.IntLit(1)), self.span_from(start))
        e = self.parse_expr()
        if self.at(T.ASSIGN):
            self.advance()
            v = self.parse_expr()
            return A.Assign(e, v, self.span_from(start))
        if self.at(T.PLUS_ASSIGN) or self.at(T.MINUS_ASSIGN):
            op = "+" if self.advance().kind is T.PLUS_ASSIGN else "-"
            v = self.parse_expr()
            return A.Assign(e, A.Binary(op, e, v), self.span_from(start))
        if self.at(T.INC) or self.at(T.DEC):
            op = "+" if self.advance().kind is T.INC else "-"
            return A.Assign(e, A.Binary(op, e, A.IntLit(1)), self.span_from(start))
        return A.ExprStmt(e, self.span_from(start))

    # ---------------------------------------------------------- expressions

    def parse_expr(self) -> A.Expr:
        return self.parse_binary(0)

    def parse_binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        start = self.tok.span
        left = self.parse_binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind in ops:
            op = ops[self.advance().kind]
            right = self.parse_binary(level + 1)
            left = A.Binary(op, left, right, self.span_from(start))
        return left

    def parse_unary(self) -> A.Expr:
        start = self.tok.span
        k = self.tok.kind
        if k in (T.AMP, T.STAR, T.MINUS, T.BANG, T.TILDE):
            self.advance()
            operand = self.parse_unary()
            return A.Unary(k.value, operand, self.span_from(start))
        if k is T.PLUS:
            self.advance()
            return self.parse_unary()
        if self.at_kw("sizeof"):
            self.advance()
            if self.at(T.LPAREN) and self.starts_type(1):
                self.advance()
                ty = self.parse_type_name()
                self.expect(T.RPAREN)
                return A.SizeOf(ty, self.span_from(start))
            operand = self.parse_unary()
            return A.SizeOf(operand, self.span_from(start))
        if k is T.LPAREN and self.starts_type(1):
            self.advance()
            ty = self.parse_type_name()
            self.expect(T.RPAREN)
            e = self.parse_unary()
            return A.Cast(ty, e, self.span_from(start))
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        start = self.tok.span
        e = self.parse_primary()
        while True:
            if self.at(T.LPAREN):
                if not isinstance(e, A.Name):
                    raise ParseError("indirect calls are not supported", self.tok.span)
                self.advance()
                args: list[A.Expr] = []
                while not self.at(T.RPAREN):
                    args.append(self.parse_expr())
                    if not self.at(T.COMMA):
                        break
                    self.advance()
                self.expect(T.RPAREN)
                e = A.Call(e.id, tuple(args), self.span_from(start))
            elif self.at(T.ARROW) or self.at(T.DOT):
                arrow = self.advance().kind is T.ARROW
                name = self.expect(T.IDENT).text
                e = A.Member(e, name, arrow, self.span_from(start))
            else:
                return e

    def parse_primary(self) -> A.Expr:
        t = self.tok
        if t.kind is T.IDENT:
            self.advance()
            return A.Name(t.text, t.span)
        if t.kind is T.INT:
            self.advance()
            return A.IntLit(_int_value(t.text), t.span)
        if t.kind is T.STR:
            self.advance()
            return A.StrLit(t.text, t.span)
        if t.kind is T.KW and t.text == "NULL":
            self.advance()
            return A.NullLit(t.span)
        if t.kind is T.LPAREN:
            self.advance()
            e = self.parse_expr()
            self.expect(T.RPAREN)
            return e
        raise ParseError(f"unexpected {t.text or t.kind.value!r}", t.span)


def parse_unit(tokens: list[Token]) -> A.Unit:
    return Parser(tokens).parse_unit()


def parse_source(source: str, file_id: str = "<input>") -> A.Unit:
    return parse_unit(tokenize(source, file_id))
