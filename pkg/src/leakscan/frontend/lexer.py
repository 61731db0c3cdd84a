"""Tokenizer for Mini-C source text."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class LexError(Exception):
    def __init__(self, message: str, span: "Span"):
        super().__init__(f"{message} at {span.file}:{span.offset}")
        self.span = span


@dataclass(frozen=True, order=True)
class Span:
    file: str
    offset: int
    length: int

    @property
    def end(self) -> int:
        return self.offset + self.length

    def cover(self, other: "Span") -> "Span":
        lo = min(self.offset, other.offset)
        hi = max(self.end, other.end)
        return Span(self.file, lo, hi - lo)


class TokenKind(enum.Enum):
    KW = "Kw"
    IDENT = "Ident"
    INT = "Int"
    STR = "Str"
    # punctuators
    ARROW = "->"
    INC = "++"
    DEC = "--"
    AND_AND = "&&"
    OR_OR = "||"
    EQ = "=="
    NE = "!="
    LE = "<="
    GE = ">="
    SHL = "<<"
    SHR = ">>"
    PLUS_ASSIGN = "+="
    MINUS_ASSIGN = "-="
    PLUS = "+"
    MINUS = "-"
    STAR = "*"
    SLASH = "/"
    PERCENT = "%"
    LT = "<"
    GT = ">"
    ASSIGN = "="
    BANG = "!"
    AMP = "&"
    PIPE = "|"
    CARET = "^"
    TILDE = "~"
    QUESTION = "?"
    COLON = ":"
    SEMI = ";"
    COMMA = ","
    DOT = "."
    LPAREN = "("
    RPAREN = ")"
    LBRACE = "{"
    RBRACE = "}"
    LBRACKET = "["
    RBRACKET = "]"
    END = "End"


KEYWORDS = frozenset(
    """int char void long short unsigned signed struct typedef const static
    extern if else while for switch case default break continue goto return
    sizeof NULL""".split()
)

# longest first, so maximal munch falls out of the scan order
_PUNCT = sorted(
    (k for k in TokenKind if k not in (TokenKind.KW, TokenKind.IDENT, TokenKind.INT,
                                       TokenKind.STR, TokenKind.END)),
    key=lambda k: -len(k.value),
)


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: Span

    def __repr__(self) -> str:
        if self.kind in (TokenKind.KW, TokenKind.IDENT, TokenKind.INT, TokenKind.STR):
            return f"{self.kind.value}({self.text})"
        return self.kind.name.title().replace("_", "")


def tokenize(source: str, file_id: str = "<input>") -> list[Token]:
    toks: list[Token] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise LexError("unterminated comment", Span(file_id, i, n - i))
            i = j + 2
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = TokenKind.KW if word in KEYWORDS else TokenKind.IDENT
            toks.append(Token(kind, word, Span(file_id, i, j - i)))
            i = j
            continue
        if c.isdigit():
            j = i + 1
            if source.startswith(("0x", "0X"), i):
                j = i + 2
                while j < n and source[j] in "0123456789abcdefABCDEF":
                    j += 1
            else:
                while j < n and source[j].isdigit():
                    j += 1
            # integer suffixes are accepted and dropped by the parser
            while j < n and source[j] in "uUlL":
                j += 1
            toks.append(Token(TokenKind.INT, source[i:j], Span(file_id, i, j - i)))
            i = j
            continue
        if c in "\"'":
            j = i + 1
            while j < n and source[j] != c:
                if source[j] == "\\":
                    j += 1
                if j < n and source[j] == "\n":
                    break
                j += 1
            if j >= n or source[j] != c:
                raise LexError("unterminated literal", Span(file_id, i, 1))
            text = source[i : j + 1]
            kind = TokenKind.STR if c == '"' else TokenKind.INT
            toks.append(Token(kind, text, Span(file_id, i, j + 1 - i)))
            i = j + 1
            continue
        for k in _PUNCT:
            if source.startswith(k.value, i):
                toks.append(Token(k, k.value, Span(file_id, i, len(k.value))))
                i += len(k.value)
                break
        else:
            raise LexError(f"illegal character {c!r}", Span(file_id, i, 1))
    toks.append(Token(TokenKind.END, "", Span(file_id, n, 0)))
    return toks


def line_col(source: str, offset: int) -> tuple[int, int]:
    line = source.count("\n", 0, offset) + 1
    col = offset - (source.rfind("\n", 0, offset) + 1) + 1
    return line, col
