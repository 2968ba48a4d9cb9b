"""A1-style cell references."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ParseError, TranslationError

MAX_ROWS = 1_048_576
MAX_COLS = 16_384
DEFAULT_SHEET = "Sheet1"

_PLAIN_SHEET = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*\Z")
_BAD_SHEET_CHARS = set("[]!'\n\r")
_A1 = re.compile(r"(\$?)([A-Za-z]+)(\$?)([0-9]+)\Z")


def col_to_letters(col: int) -> str:
    """Convert a 1-based column number to letters (1 -> A, 27 -> AA)."""
    if col < 1:
        raise ValueError(f"column must be >= 1, got {col}")
    out = ""
    while col > 0:
        col, rem = divmod(col - 1, 26)
        out = chr(65 + rem) + out
    return out


def letters_to_col(letters: str) -> int:
    """Convert column letters to a 1-based number (A -> 1, AA -> 27)."""
    n = 0
    for ch in letters.upper():
        if not "A" <= ch <= "Z":
            raise ValueError(f"bad column letter {ch!r}")
        n = n * 26 + ord(ch) - 64
    return n


def check_sheet_name(name: str) -> str:
    if not name or name != name.strip() or _BAD_SHEET_CHARS & set(name):
        raise ValueError(f"invalid sheet name {name!r}")
    return name


def quote_sheet(name: str) -> str:
    """Render a sheet name the way it must appear before ``!``."""
    if _PLAIN_SHEET.match(name):
        return name
    return "'" + name + "'"


@dataclass(frozen=True)
class CellRef:
    """A single cell address.

    ``sheet`` is None for references inside a formula that did not name a
    sheet; those resolve against the sheet hosting the formula.
    """

    sheet: Optional[str]
    col: int
    row: int
    col_abs: bool = False
    row_abs: bool = False
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (1 <= self.col <= MAX_COLS and 1 <= self.row <= MAX_ROWS):
            raise ValueError(f"cell ({self.col}, {self.row}) is outside the grid")
        # refs are dict keys on every hot path; hash once
        object.__setattr__(self, "_hash", hash((self.sheet, self.col, self.row, self.col_abs, self.row_abs)))

    def __hash__(self):
        return self._hash

    def a1(self, sheet: bool = True) -> str:
        text = (
            ("$" if self.col_abs else "")
            + col_to_letters(self.col)
            + ("$" if self.row_abs else "")
            + str(self.row)
        )
        if sheet and self.sheet is not None:
            return quote_sheet(self.sheet) + "!" + text
        return text

    def __str__(self):
        return self.a1()

    def bare(self) -> CellRef:
        """The same cell with both absolute flags cleared."""
        if not (self.col_abs or self.row_abs):
            return self
        return replace(self, col_abs=False, row_abs=False)

    def with_sheet(self, sheet: Optional[str]) -> CellRef:
        return replace(self, sheet=sheet)

    def shifted(self, drow: int, dcol: int) -> CellRef:
        """Shift the relative axes; absolute axes stay put."""
        row = self.row if self.row_abs else self.row + drow
        col = self.col if self.col_abs else self.col + dcol
        if not (1 <= row <= MAX_ROWS and 1 <= col <= MAX_COLS):
            raise TranslationError(
                f"shifting {self.a1()} by ({drow:+d} rows, {dcol:+d} cols) leaves the grid"
            )
        if row == self.row and col == self.col:
            return self
        return replace(self, row=row, col=col)


def split_sheet(text: str) -> tuple[Optional[str], str]:
    """Split ``Sheet!A1`` / ``'My Sheet'!A1`` into (sheet, rest)."""
    if text.startswith("'"):
        end = text.find("'!", 1)
        if end < 0:
            raise ParseError("unterminated quoted sheet name", pos=0)
        return check_sheet_name(text[1:end]), text[end + 2 :]
    if "!" in text:
        sheet, _, rest = text.rpartition("!")
        try:
            return check_sheet_name(sheet), rest
        except ValueError as exc:
            raise ParseError(str(exc), pos=0) from None
    return None, text


def parse_cellref(text: str, default_sheet: Optional[str] = DEFAULT_SHEET) -> CellRef:
    """Parse A1 notation with optional ``$`` markers and ``Sheet!`` prefix.

    >>> parse_cellref("Tracking!$AA10")
    CellRef(sheet='Tracking', col=27, row=10, col_abs=True, row_abs=False)
    """
    if not text:
        raise ParseError("empty cell reference", pos=0)
    try:
        sheet, body = split_sheet(text)
    except ValueError as exc:
        raise ParseError(str(exc), pos=0) from None
    offset = len(text) - len(body)
    m = _A1.match(body)
    if m is None:
        bad = next(
            (i for i, ch in enumerate(body) if not (ch.isalnum() or ch == "$")),
            0,
        )
        if not body or not any(c.isalpha() for c in body):
            raise ParseError(f"missing column in {text!r}", pos=offset)
        raise ParseError(f"malformed cell reference {text!r}", pos=offset + bad)
    col_abs, letters, row_abs, digits = m.groups()
    col = letters_to_col(letters)
    row = int(digits)
    if row < 1 or row > MAX_ROWS:
        raise ParseError(f"row out of range in {text!r}", pos=offset + m.start(4))
    if col > MAX_COLS:
        raise ParseError(f"column out of range in {text!r}", pos=offset + m.start(2))
    return CellRef(
        sheet if sheet is not None else default_sheet,
        col,
        row,
        col_abs=bool(col_abs),
        row_abs=bool(row_abs),
    )


def parse_range(text: str, default_sheet: Optional[str] = DEFAULT_SHEET) -> tuple[CellRef, CellRef]:
    """Parse ``A1:B3`` (or a single cell) into normalized corners."""
    if ":" not in text:
        ref = parse_cellref(text, default_sheet)
        return ref, ref
    left, _, right = text.partition(":")
    a = parse_cellref(left, default_sheet)
    b = parse_cellref(right, None)
    if b.sheet is None:
        b = b.with_sheet(a.sheet)
    elif a.sheet is None or a.sheet.casefold() != b.sheet.casefold():
        raise ParseError(f"range {text!r} spans two sheets", pos=len(left) + 1)
    return normalize_corners(a, b)


def normalize_corners(a: CellRef, b: CellRef) -> tuple[CellRef, CellRef]:
    """Reorder two corners so the first is top-left, keeping each axis's flag."""
    if a.col > b.col:
        (c1, ca1), (c2, ca2) = (b.col, b.col_abs), (a.col, a.col_abs)
    else:
        (c1, ca1), (c2, ca2) = (a.col, a.col_abs), (b.col, b.col_abs)
    if a.row > b.row:
        (r1, ra1), (r2, ra2) = (b.row, b.row_abs), (a.row, a.row_abs)
    else:
        (r1, ra1), (r2, ra2) = (a.row, a.row_abs), (b.row, b.row_abs)
    return (
        CellRef(a.sheet, c1, r1, ca1, ra1),
        CellRef(a.sheet, c2, r2, ca2, ra2),
    )


def iter_range(start: CellRef, end: CellRef):
    """Yield every cell of a normalized range, row-major."""
    for row in range(start.row, end.row + 1):
        for col in range(start.col, end.col + 1):
            yield CellRef(start.sheet, col, row)
