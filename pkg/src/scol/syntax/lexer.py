"""Tokenizer for ``.scol`` sources."""

from __future__ import annotations

import re
from dataclasses import dataclass

from scol.diagnostics import SourceError
from scol.syntax.ast import Loc

KEYWORDS = frozenset("""
    class end feature create require ensure modify do local invariant ghost
    guard function read is note explicit if then elseif else across as all
    some in and or not implies old True False Void Current Result entry
    wrap_all unwrap_all
""".split())

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|/=|<=|>=|<<|>>|=>|[=<>+\-*(){}\[\].,;:])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "ident" | "kw" | "op" | "eof"
    text: str
    line: int
    column: int

    @property
    def loc(self):
        return Loc(self.line, self.column)

    def is_(self, kind, text=None):
        return self.kind == kind and (text is None or self.text == text)

    def __str__(self):
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(source, filename="<input>"):
    """Return the token list for ``source``, ending with an ``eof`` token."""
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            col = pos - line_start + 1
            raise SourceError("PARSE", f"unexpected character {source[pos]!r}",
                              filename, line, col)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        elif kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, line, col))
        else:
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens
