"""Formula language: tokenizer, recursive-descent parser, AST and printer.

Grammar, lowest precedence first::

    formula    := compare
    compare    := concat [ cmpop concat ]          (no chaining)
    concat     := additive { "&" additive }
    additive   := term { ("+" | "-") term }
    term       := unary { ("*" | "/") unary }
    unary      := ("-" | "+") unary | power
    power      := postfix [ "^" exponent ]         (right-associative)
    exponent   := ("-" | "+") exponent | power
    postfix    := primary { "%" }
    primary    := NUMBER | STRING | TRUE | FALSE
                | REF [ ":" REF ]
                | NAME "(" [ compare { "," compare } ] ")"
                | "(" compare ")"
    cmpop      := "=" | "<>" | "<" | "<=" | ">" | ">="

References are ``A1``, ``$A$1``, ``Sheet2!B3`` or ``'My Sheet'!B3``. Function
names are case-insensitive and stored uppercase. Whitespace may appear
between any two tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .errors import ParseError
from .refs import CellRef, normalize_corners, parse_cellref, split_sheet
from .values import format_number, quote_text

# --------------------------------------------------------------------- tokens


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int
    value: object = None


_PUNCT2 = {"<=": "le", ">=": "ge", "<>": "ne"}
_PUNCT1 = {
    "(": "lparen",
    ")": "rparen",
    ",": "comma",
    ":": "colon",
    "&": "amp",
    "%": "percent",
    "^": "caret",
    "*": "star",
    "/": "slash",
    "+": "plus",
    "-": "minus",
    "=": "eq",
    "<": "lt",
    ">": "gt",
}
_NUMBER = re.compile(r"(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_WORD = re.compile(r"[A-Za-z_$][A-Za-z0-9_.$]*")
_REF_BODY = re.compile(r"\$?[A-Za-z]{1,3}\$?[0-9]+\Z")


def tokenize(src: str) -> list[Token]:
    """Split a formula body (without the leading ``=``) into tokens."""
    tokens = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        start = i
        if ch == '"':
            i += 1
            chunks = []
            while True:
                j = src.find('"', i)
                if j < 0:
                    raise ParseError("unterminated string", pos=start)
                chunks.append(src[i:j])
                if src.startswith('""', j):
                    chunks.append('"')
                    i = j + 2
                    continue
                i = j + 1
                break
            tokens.append(Token("str", src[start:i], start, "".join(chunks)))
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            m = _NUMBER.match(src, i)
            i = m.end()
            tokens.append(Token("num", m.group(), start, float(m.group())))
            continue
        if ch == "'" or _WORD.match(src, i):
            i = _lex_word(src, i, tokens)
            continue
        two = src[i : i + 2]
        if two in _PUNCT2:
            tokens.append(Token(_PUNCT2[two], two, start))
            i += 2
            continue
        if ch in _PUNCT1:
            tokens.append(Token(_PUNCT1[ch], ch, start))
            i += 1
            continue
        raise ParseError(f"illegal character {ch!r}", pos=start)
    return tokens


def _next_nonspace(src: str, i: int) -> str:
    while i < len(src) and src[i].isspace():
        i += 1
    return src[i] if i < len(src) else ""


def _lex_word(src: str, i: int, tokens: list) -> int:
    start = i
    if src[i] == "'":
        end = src.find("'!", i + 1)
        if end < 0:
            raise ParseError("unterminated quoted sheet name", pos=start)
        i = end + 2
        m = _WORD.match(src, i)
        if not m:
            raise ParseError("expected a cell reference after sheet name", pos=i)
        i = m.end()
    else:
        m = _WORD.match(src, i)
        i = m.end()
        if i < len(src) and src[i] == "!":
            m = _WORD.match(src, i + 1)
            if not m:
                raise ParseError("expected a cell reference after sheet name", pos=i + 1)
            i = m.end()
        elif _REF_BODY.match(m.group()) is None or _next_nonspace(src, i) == "(":
            word = m.group()
            if "$" in word:
                raise ParseError(f"malformed reference {word!r}", pos=start)
            tokens.append(Token("ident", word, start, word.upper()))
            return i
    text = src[start:i]
    sheet, body = split_sheet(text)
    if not _REF_BODY.match(body):
        raise ParseError(f"malformed reference {text!r}", pos=start)
    try:
        ref = parse_cellref(text, default_sheet=None)
    except ParseError as exc:
        raise ParseError(exc.message, pos=start) from None
    tokens.append(Token("ref", text, start, ref))
    return i


# ------------------------------------------------------------------------ AST


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Text:
    value: str


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Ref:
    ref: CellRef


@dataclass(frozen=True)
class Range:
    """A rectangular block; construct through :func:`make_range`."""

    start: CellRef
    end: CellRef

    def __str__(self):
        return self.start.a1() + ":" + self.end.a1(sheet=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "%"
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Number, Text, Bool, Ref, Range, Unary, Binary, Call]

COMPARISONS = ("=", "<>", "<", "<=", ">", ">=")


def make_range(a: CellRef, b: CellRef) -> Range:
    if b.sheet is None and a.sheet is not None:
        b = b.with_sheet(a.sheet)
    return Range(*normalize_corners(a, b))


# --------------------------------------------------------------------- parser

_CMP_KINDS = {"eq": "=", "ne": "<>", "lt": "<", "le": "<=", "gt": ">", "ge": ">="}


_END = Token("end", "", -1)


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = tokenize(src)
        self.tokens.append(_END)
        self.i = 0

    def peek(self) -> Optional[Token]:
        tok = self.tokens[self.i]
        return None if tok is _END else tok

    def at(self, *kinds) -> bool:
        return self.tokens[self.i].kind in kinds

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        if not self.at(kind):
            self.fail(f"expected {what}")
        return self.advance()

    def fail(self, message: str):
        tok = self.peek()
        if tok is None:
            raise ParseError(f"{message}, found end of formula", pos=len(self.src))
        raise ParseError(f"{message}, found {tok.text!r}", pos=tok.pos)

    def parse(self) -> Node:
        if len(self.tokens) == 1:
            raise ParseError("empty formula", pos=0)
        node = self.compare()
        if self.peek() is not None:
            self.fail("unexpected token")
        return node

    def compare(self) -> Node:
        left = self.concat()
        if self.at(*_CMP_KINDS):
            op = _CMP_KINDS[self.advance().kind]
            right = self.concat()
            if self.at(*_CMP_KINDS):
                self.fail("comparison operators cannot be chained")
            return Binary(op, left, right)
        return left

    def concat(self) -> Node:
        node = self.additive()
        while self.at("amp"):
            self.advance()
            node = Binary("&", node, self.additive())
        return node

    def additive(self) -> Node:
        node = self.term()
        while self.at("plus", "minus"):
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.at("star", "slash"):
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.at("minus"):
            self.advance()
            return Unary("-", self.unary())
        if self.at("plus"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.postfix()
        if self.at("caret"):
            self.advance()
            return Binary("^", base, self.exponent())
        return base

    def exponent(self) -> Node:
        if self.at("minus"):
            self.advance()
            return Unary("-", self.exponent())
        if self.at("plus"):
            self.advance()
            return self.exponent()
        return self.power()

    def postfix(self) -> Node:
        node = self.primary()
        while self.at("percent"):
            self.advance()
            node = Unary("%", node)
        return node

    def primary(self) -> Node:
        tok = self.peek()
        if tok is None:
            self.fail("expected an operand")
        if tok.kind == "num":
            self.advance()
            return Number(tok.value)
        if tok.kind == "str":
            self.advance()
            return Text(tok.value)
        if tok.kind == "ref":
            self.advance()
            if self.at("colon"):
                self.advance()
                end = self.expect("ref", "a cell reference after ':'")
                if end.value.sheet is not None and (
                    tok.value.sheet is None
                    or end.value.sheet.casefold() != tok.value.sheet.casefold()
                ):
                    raise ParseError("range endpoints must be on one sheet", pos=end.pos)
                return make_range(tok.value, end.value.with_sheet(tok.value.sheet))
            return Ref(tok.value)
        if tok.kind == "ident":
            self.advance()
            if self.at("lparen"):
                self.advance()
                args = []
                if not self.at("rparen"):
                    args.append(self.compare())
                    while self.at("comma"):
                        self.advance()
                        args.append(self.compare())
                self.expect("rparen", "',' or ')' in argument list")
                return Call(tok.value, tuple(args))
            if tok.value in ("TRUE", "FALSE"):
                return Bool(tok.value == "TRUE")
            raise ParseError(f"unknown name {tok.text!r}", pos=tok.pos)
        if tok.kind == "lparen":
            self.advance()
            node = self.compare()
            self.expect("rparen", "')'")
            return node
        self.fail("expected an operand")


def parse_formula(src: str) -> Node:
    """Parse a formula body (the text after ``=``) into an AST."""
    return _Parser(src).parse()


# -------------------------------------------------------------------- printer

_CMP, _CONCAT, _ADD, _MUL, _NEG, _POW, _PCT, _ATOM = range(1, 9)
_BINARY_PREC = {"&": _CONCAT, "+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL, "^": _POW}
_BINARY_PREC.update((op, _CMP) for op in COMPARISONS)


def _prec(node: Node) -> int:
    if isinstance(node, Binary):
        return _BINARY_PREC[node.op]
    if isinstance(node, Unary):
        return _NEG if node.op == "-" else _PCT
    return _ATOM


def _wrap(node: Node, parens: bool) -> str:
    text = print_formula(node)
    return f"({text})" if parens else text


def print_formula(node: Node) -> str:
    """Render an AST with the fewest parentheses that re-parse to it."""
    if isinstance(node, Number):
        return format_number(node.value)
    if isinstance(node, Text):
        return quote_text(node.value)
    if isinstance(node, Bool):
        return "TRUE" if node.value else "FALSE"
    if isinstance(node, Ref):
        return node.ref.a1()
    if isinstance(node, Range):
        return str(node)
    if isinstance(node, Call):
        return node.name + "(" + ",".join(print_formula(a) for a in node.args) + ")"
    if isinstance(node, Unary):
        if node.op == "-":
            return "-" + _wrap(node.operand, _prec(node.operand) < _NEG)
        return _wrap(node.operand, _prec(node.operand) < _PCT) + "%"
    if isinstance(node, Binary):
        p = _BINARY_PREC[node.op]
        lp, rp = _prec(node.left), _prec(node.right)
        if p == _CMP:
            left, right = lp <= p, rp <= p
        elif node.op == "^":
            left = lp <= p
            right = rp < p and not (isinstance(node.right, Unary) and node.right.op == "-")
        else:
            left, right = lp < p, rp <= p
        return _wrap(node.left, left) + node.op + _wrap(node.right, right)
    raise TypeError(f"not a formula node: {node!r}")


# -------------------------------------------------------- reference utilities


def walk(node: Node):
    """Yield every node, parents before children, left to right."""
    yield node
    if isinstance(node, Unary):
        yield from walk(node.operand)
    elif isinstance(node, Binary):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Call):
        for arg in node.args:
            yield from walk(arg)


def collect_refs(node: Node) -> list:
    """References in source order: a CellRef per Ref, the node per Range."""
    out = []
    for n in walk(node):
        if isinstance(n, Ref):
            out.append(n.ref)
        elif isinstance(n, Range):
            out.append(n)
    return out


def calls(node: Node, name: str) -> bool:
    return any(isinstance(n, Call) and n.name == name for n in walk(node))


def translate_refs(node: Node, drow: int, dcol: int) -> Node:
    """Shift every relative axis by (drow, dcol), as a fill or copy would.

    Raises TranslationError if any reference would leave the grid.
    """
    if drow == 0 and dcol == 0:
        return node
    if isinstance(node, Ref):
        return Ref(node.ref.shifted(drow, dcol))
    if isinstance(node, Range):
        return make_range(node.start.shifted(drow, dcol), node.end.shifted(drow, dcol))
    if isinstance(node, Unary):
        return Unary(node.op, translate_refs(node.operand, drow, dcol))
    if isinstance(node, Binary):
        return Binary(
            node.op,
            translate_refs(node.left, drow, dcol),
            translate_refs(node.right, drow, dcol),
        )
    if isinstance(node, Call):
        return Call(node.name, tuple(translate_refs(a, drow, dcol) for a in node.args))
    return node


def _rel(ref: CellRef, row: int, col: int) -> tuple:
    return (
        ref.sheet.casefold() if ref.sheet is not None else None,
        ref.col_abs,
        ref.col if ref.col_abs else ref.col - col,
        ref.row_abs,
        ref.row if ref.row_abs else ref.row - row,
    )


def relative_key(node: Node, row: int, col: int):
    """A hashable form of ``node`` written at (row, col) that ignores position.

    Two formula cells get equal keys exactly when one is a fill-copy of the
    other: relative axes become offsets from the host cell.
    """
    if isinstance(node, Ref):
        return ("ref", _rel(node.ref, row, col))
    if isinstance(node, Range):
        return ("range", _rel(node.start, row, col), _rel(node.end, row, col))
    if isinstance(node, Unary):
        return ("u", node.op, relative_key(node.operand, row, col))
    if isinstance(node, Binary):
        return (
            "b",
            node.op,
            relative_key(node.left, row, col),
            relative_key(node.right, row, col),
        )
    if isinstance(node, Call):
        return ("call", node.name) + tuple(relative_key(a, row, col) for a in node.args)
    return node
