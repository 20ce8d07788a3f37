"""S-expression reader and writer.

The surface syntax is a small Lisp: integers, symbols, and parenthesized
lists, with ' as sugar for (quote ...) and ; line comments. Symbols are
plain Python strings, integers Python ints, lists Python lists.
"""

from __future__ import annotations

from dataclasses import dataclass

Sexpr = int | str | list


class SexprError(Exception):
    """Raised on malformed input, with line/column context."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # "(" | ")" | "'" | "atom"
    text: str
    line: int
    col: int


_DELIMS = "()';"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
        elif ch.isspace():
            i += 1
            col += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()'":
            tokens.append(Token(ch, ch, line, col))
            i += 1
            col += 1
        elif ch == '"':
            raise SexprError("string literals are not part of the language", line, col)
        else:
            start = i
            start_col = col
            while i < n and not text[i].isspace() and text[i] not in _DELIMS and text[i] != '"':
                i += 1
                col += 1
            tokens.append(Token("atom", text[start:i], line, start_col))
    return tokens


def _parse_atom(tok: Token) -> Sexpr:
    s = tok.text
    if s == "-" or s == "+":
        return s
    body = s[1:] if s[0] in "+-" else s
    if body.isdigit():
        return int(s)
    return s


class _Reader:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else Token("atom", "", 1, 1)
            raise SexprError("unexpected end of input", last.line, last.col)
        self.pos += 1
        return tok

    def read(self) -> Sexpr:
        tok = self.next()
        if tok.kind == "atom":
            return _parse_atom(tok)
        if tok.kind == "'":
            return ["quote", self.read()]
        if tok.kind == "(":
            items: list[Sexpr] = []
            while True:
                nxt = self.peek()
                if nxt is None:
                    raise SexprError("unclosed parenthesis", tok.line, tok.col)
                if nxt.kind == ")":
                    self.next()
                    return items
                items.append(self.read())
        raise SexprError(f"unexpected {tok.text!r}", tok.line, tok.col)


def read_all(text: str) -> list[Sexpr]:
    """Read every top-level form in text."""
    reader = _Reader(tokenize(text))
    forms: list[Sexpr] = []
    while reader.peek() is not None:
        tok = reader.peek()
        if tok.kind == ")":
            raise SexprError("unbalanced close parenthesis", tok.line, tok.col)
        forms.append(reader.read())
    return forms


def read_one(text: str) -> Sexpr:
    forms = read_all(text)
    if len(forms) != 1:
        raise SexprError(f"expected exactly one form, got {len(forms)}", 1, 1)
    return forms[0]


def write_sexpr(form: Sexpr) -> str:
    if isinstance(form, bool):
        raise TypeError("booleans are not s-expressions")
    if isinstance(form, int):
        return str(form)
    if isinstance(form, str):
        return form
    if len(form) == 2 and form[0] == "quote":
        return "'" + write_sexpr(form[1])
    return "(" + " ".join(write_sexpr(x) for x in form) + ")"
