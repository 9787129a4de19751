"""Minimal s-expression reader/writer shared by the file formats.

Values map to Python as: lists -> Python lists, symbols/keywords -> ``str``,
unsigned integers -> ``int``, double-quoted strings -> ``QStr`` (a ``str``
subclass that serializes back with quotes).  Comments run from ``;`` to end of
line.  Parse errors carry 1-based line/column information; ``parse_all`` can
also record the source location of every parsed list for later error
reporting.
"""

from __future__ import annotations

from dataclasses import dataclass


class ParseError(Exception):
    """Raised on malformed input; carries 1-based line and column."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class QStr(str):
    """A string that round-trips as a double-quoted literal."""


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int
    quoted: bool = False


_DELIMS = {"(", ")", ";", '"'}


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line = 1
    col = 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            out: list[str] = []
            while True:
                if i >= n:
                    raise ParseError("unterminated string", start_line, start_col)
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise ParseError("unterminated escape", line, col)
                    esc = text[i + 1]
                    out.append({"n": "\n", "t": "\t"}.get(esc, esc))
                    i += 2
                    col += 2
                elif c == "\n":
                    out.append(c)
                    i += 1
                    line += 1
                    col = 1
                else:
                    out.append(c)
                    i += 1
                    col += 1
            tokens.append(_Token("".join(out), start_line, start_col, quoted=True))
        elif ch in "()":
            tokens.append(_Token(ch, line, col))
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and not text[i].isspace() and text[i] not in _DELIMS:
                i += 1
                col += 1
            tokens.append(_Token(text[start:i], line, start_col))
    return tokens


def parse_all(
    text: str, locations: dict[int, tuple[int, int]] | None = None
) -> list[object]:
    """Parse every top-level s-expression in ``text``.

    When ``locations`` is given, the (line, column) of every parsed list is
    recorded under ``id(list)``.
    """
    tokens = _tokenize(text)
    forms: list[object] = []
    pos = 0

    def parse_one_at(idx: int) -> tuple[object, int]:
        if idx >= len(tokens):
            last = tokens[-1] if tokens else _Token("", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.column)
        tok = tokens[idx]
        if not tok.quoted and tok.text == "(":
            items: list[object] = []
            if locations is not None:
                locations[id(items)] = (tok.line, tok.column)
            idx += 1
            while True:
                if idx >= len(tokens):
                    raise ParseError("unclosed '('", tok.line, tok.column)
                nxt = tokens[idx]
                if not nxt.quoted and nxt.text == ")":
                    return items, idx + 1
                item, idx = parse_one_at(idx)
                items.append(item)
        if not tok.quoted and tok.text == ")":
            raise ParseError("unbalanced ')'", tok.line, tok.column)
        if tok.quoted:
            return QStr(tok.text), idx + 1
        if tok.text.isdigit():
            return int(tok.text), idx + 1
        return tok.text, idx + 1

    while pos < len(tokens):
        form, pos = parse_one_at(pos)
        forms.append(form)
    return forms


def parse_one(text: str) -> object:
    """Parse exactly one top-level s-expression."""
    forms = parse_all(text)
    if not forms:
        raise ParseError("empty input", 1, 1)
    if len(forms) > 1:
        raise ParseError("expected a single expression", 1, 1)
    return forms[0]


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def dump(value: object) -> str:
    """Render a nested list/str/int value as a canonical s-expression."""
    if isinstance(value, list):
        return "(" + " ".join(dump(v) for v in value) + ")"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, QStr):
        return _quote(value)
    if isinstance(value, str):
        return value
    raise TypeError(f"cannot serialize {type(value)!r}")
