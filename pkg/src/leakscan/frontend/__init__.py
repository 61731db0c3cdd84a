"""Mini-C frontend: lexing, parsing, printing, linking."""
from .lexer import LexError, Span, Token, TokenKind, tokenize
from .parser import ParseError, parse_source, parse_unit
from .printer import fmt_unit
from .program import LinkError, Program, link_program, load_program, program_from_sources

__all__ = [
    "LexError", "LinkError", "ParseError", "Program", "Span", "Token", "TokenKind",
    "fmt_unit", "link_program", "load_program", "parse_source", "parse_unit",
    "program_from_sources", "tokenize",
]
