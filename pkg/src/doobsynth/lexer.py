"""Shared tokenizer for the program DSL and the symbolic expression syntax."""

from __future__ import annotations

import re
from dataclasses import dataclass


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        super().__init__(f"{line}:{col}: {msg}" if line else msg)


@dataclass(frozen=True)
class Token:
    kind: str  # NUM, NAME, STR, OP, EOF
    text: str
    line: int
    col: int


_UNICODE = {
    "≠": "!=", "≤": "<=", "≥": ">=", "∧": "/\\", "∨": "\\/", "¬": "not",
    "⟹": "->", "⇒": "->", "→": "->", "−": "-", "·": "*", "∼": "~",
}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"[^"\n]*")
  | (?P<op>:=|\.\.|/\\|\\/|<=|>=|!=|==|<>|->|=>|&&|\|\||~~|[-+*/^()\[\]{},;:<>=~|@!])
""", re.VERBOSE)


def tokenize(text: str, *, keep_comments: bool = False) -> list[Token]:
    for u, a in _UNICODE.items():
        if u in text:
            text = text.replace(u, f" {a} " if a.isalpha() else a)
    out: list[Token] = []
    pos, line, col0 = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - col0 + 1)
        kind = m.lastgroup
        col = pos - col0 + 1
        if kind == "nl":
            line += 1
            col0 = m.end()
        elif kind == "comment":
            if keep_comments:
                out.append(Token("COMMENT", m.group(), line, col))
        elif kind != "ws":
            tk = {"num": "NUM", "name": "NAME", "str": "STR", "op": "OP"}[kind]
            txt = m.group()
            if tk == "OP":
                txt = {"==": "=", "<>": "!=", "=>": "->", "&&": "/\\", "||": "\\/",
                       "~~": "~", "!": "not"}.get(txt, txt)
                if txt == "not":
                    tk = "NAME"
            out.append(Token(tk, txt, line, col))
        pos = m.end()
    out.append(Token("EOF", "", line, pos - col0 + 1))
    return out


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0

    @property
    def peek(self) -> Token:
        return self.toks[self.pos]

    def ahead(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek
        return t.kind in ("OP", "NAME") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.peek.text or 'end of input'!r}")
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.peek.kind != kind:
            self.error(f"expected {what}, found {self.peek.text or 'end of input'!r}")
        return self.next()

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek
        raise ParseError(msg, tok.line, tok.col)
