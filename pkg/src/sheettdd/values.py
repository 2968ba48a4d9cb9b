"""Cell values and the literal syntax shared by ``.grid`` and ``.sst`` files.

A cell value is one of: ``float`` (Number), ``str`` (Text), ``bool``
(Boolean), :data:`BLANK`, or a :class:`CellError`. Plain Python equality
conflates ``True`` with ``1.0``; use :func:`same_value` when the variant
matters.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import Union

NUMBER_RE = re.compile(r"[+-]?(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?\Z")


class _Blank:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BLANK"

    def __reduce__(self):
        return (_Blank, ())


BLANK = _Blank()


class ErrorKind(enum.Enum):
    DIV0 = "#DIV/0!"
    VALUE = "#VALUE!"
    NAME = "#NAME?"
    REF = "#REF!"
    CYCLE = "#CYCLE!"


@dataclass(frozen=True)
class CellError:
    kind: ErrorKind

    def __str__(self):
        return self.kind.value


DIV0 = CellError(ErrorKind.DIV0)
VALUE = CellError(ErrorKind.VALUE)
NAME = CellError(ErrorKind.NAME)
REF = CellError(ErrorKind.REF)
CYCLE = CellError(ErrorKind.CYCLE)

_ERROR_TOKENS = {k.value: CellError(k) for k in ErrorKind}

CellValue = Union[float, str, bool, _Blank, CellError]


def same_value(a, b) -> bool:
    """Variant-aware structural equality of two cell values."""
    return type(a) is type(b) and a == b


def number(x) -> CellValue:
    """Store ``x`` as a Number, or #VALUE! when it is not finite."""
    x = float(x)
    return x if math.isfinite(x) else VALUE


def format_number(x: float) -> str:
    """Shortest text that parses back to exactly ``x``."""
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def quote_text(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def _unquote(text: str):
    """Return the decoded string if ``text`` is exactly one quoted string."""
    if len(text) < 2 or text[0] != '"' or text[-1] != '"':
        return None
    body = text[1:-1]
    if body.replace('""', "").count('"'):
        return None
    return body.replace('""', '"')


def parse_literal(text: str, errors: bool = False) -> CellValue:
    """Classify entered text: number, then TRUE/FALSE, then quoted, then bare text.

    With ``errors=True`` the error tokens (``#DIV/0!`` and friends) are also
    recognized, ahead of quoted text; test files need them, workbooks do not.
    """
    if NUMBER_RE.match(text):
        value = float(text)
        if math.isfinite(value):
            return value
    upper = text.upper()
    if upper == "TRUE":
        return True
    if upper == "FALSE":
        return False
    if errors and upper in _ERROR_TOKENS:
        return _ERROR_TOKENS[upper]
    quoted = _unquote(text)
    if quoted is not None:
        return quoted
    return text


def format_literal(value: CellValue, bare_text: bool = True) -> str:
    """Inverse of :func:`parse_literal` for non-blank values."""
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, float):
        return format_number(value)
    if isinstance(value, CellError):
        return value.kind.value
    if isinstance(value, str):
        if (
            bare_text
            and value
            and value == value.strip()
            and value[0] not in '"=#'
            and parse_literal(value, errors=True) == value
        ):
            return value
        return quote_text(value)
    raise ValueError(f"{value!r} has no literal form")


def display(value: CellValue) -> str:
    """Human-readable rendering used in reports."""
    if value is BLANK:
        return "<blank>"
    if isinstance(value, str):
        return quote_text(value)
    return format_literal(value)


def check_literal(value) -> CellValue:
    """Validate a value that is about to be stored in a cell."""
    if isinstance(value, bool) or isinstance(value, str):
        if isinstance(value, str) and ("\n" in value or "\r" in value):
            raise ValueError("text cells cannot contain line breaks")
        return value
    if isinstance(value, (int, float)):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError("numbers must be finite")
        return value
    raise TypeError(f"cannot store {value!r} as a literal")
