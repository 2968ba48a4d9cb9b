"""Multi-sheet workbook model and the line-oriented ``.grid`` file format.

Format (UTF-8, LF)::

    # comment
    [sheet Sheet1]
    A2 20.5
    B2 =IF(A2<40,"FAIL","PASS")

A cell line is ``<A1><space><content>``. Content starting with ``=`` is a
formula, kept verbatim; anything else is a literal classified by
:func:`sheettdd.values.parse_literal`. Cells before the first header belong
to an implied ``Sheet1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .errors import FormulaCellError, ParseError, UnknownNameError
from .formula import Node, parse_formula
from .refs import DEFAULT_SHEET, CellRef, check_sheet_name, iter_range, parse_cellref
from .values import BLANK, CellValue, check_literal, format_literal, parse_literal, same_value


@dataclass(frozen=True, eq=False)
class Literal:
    value: CellValue

    def __eq__(self, other):
        return isinstance(other, Literal) and same_value(self.value, other.value)

    def __hash__(self):
        return hash((type(self.value), self.value))


@dataclass(frozen=True)
class Formula:
    source: str  # formula body without the leading "="
    ast: Node = field(compare=False, repr=False)

    @classmethod
    def parse(cls, source: str) -> Formula:
        return cls(source, parse_formula(source))

    def __eq__(self, other):
        return isinstance(other, Formula) and self.source == other.source

    def __hash__(self):
        return hash(self.source)


class Sheet:
    def __init__(self, name: str):
        self.name = check_sheet_name(name)
        self.cells: dict[tuple[int, int], object] = {}

    def __eq__(self, other):
        return isinstance(other, Sheet) and self.name == other.name and self.cells == other.cells

    def __repr__(self):
        return f"Sheet({self.name!r}, {len(self.cells)} cells)"

    def ordered(self):
        """(row, col), cell pairs in row-major order."""
        return sorted(self.cells.items())


class Workbook:
    """Ordered sheets of sparse cells.

    Sheet lookup is case-insensitive; names keep their declared case.
    Unset cells read as blank and are never stored.
    """

    def __init__(self, sheet_names=(DEFAULT_SHEET,)):
        self.sheets: list[Sheet] = []
        self._index: dict[str, Sheet] = {}
        self._resolved: dict = {}  # memo for resolve() and block(); reset when sheets change
        for name in sheet_names:
            self.add_sheet(name)
        if not self.sheets:
            raise ValueError("a workbook needs at least one sheet")

    def add_sheet(self, name: str) -> Sheet:
        key = name.casefold()
        if key in self._index:
            raise ValueError(f"duplicate sheet name {name!r}")
        sheet = Sheet(name)
        self._resolved.clear()
        self.sheets.append(sheet)
        self._index[key] = sheet
        return sheet

    def sheet(self, name: str) -> Sheet:
        try:
            return self._index[name.casefold()]
        except KeyError:
            raise UnknownNameError(f"no sheet named {name!r}") from None

    def has_sheet(self, name: str) -> bool:
        return name.casefold() in self._index

    def sheet_position(self, name: str) -> int:
        return self.sheets.index(self.sheet(name))

    def resolve(self, ref: CellRef, host: Optional[str] = None) -> Optional[CellRef]:
        """Canonical key for ``ref``: declared sheet name, no ``$`` flags.

        Sheet-less references resolve against ``host`` (default: first
        sheet). Returns None when the sheet does not exist.
        """
        memo = (ref, host)
        try:
            return self._resolved[memo]
        except KeyError:
            pass
        name = ref.sheet if ref.sheet is not None else host
        if name is None:
            sheet = self.sheets[0]
        else:
            sheet = self._index.get(name.casefold())
            if sheet is None:
                self._resolved[memo] = None
                return None
        if ref.sheet == sheet.name and not (ref.col_abs or ref.row_abs):
            key = ref
        else:
            key = CellRef(sheet.name, ref.col, ref.row)
        self._resolved[memo] = key
        return key

    def block(self, start: CellRef, end: CellRef, host: Optional[str] = None):
        """Canonical keys of every cell in a range, row-major, or None when
        the sheet does not exist."""
        memo = ("block", start, end, host)
        try:
            return self._resolved[memo]
        except KeyError:
            pass
        first = self.resolve(start, host)
        keys = None if first is None else tuple(iter_range(first, end))
        self._resolved[memo] = keys
        return keys

    def get(self, ref: CellRef):
        """The stored cell at ``ref`` (Literal, Formula or None)."""
        sheet = self.sheet(ref.sheet if ref.sheet is not None else self.sheets[0].name)
        return sheet.cells.get((ref.row, ref.col))

    def put(self, ref: CellRef, cell) -> None:
        """Store a cell verbatim; ``None`` clears it."""
        sheet = self.sheet(ref.sheet if ref.sheet is not None else self.sheets[0].name)
        if cell is None:
            sheet.cells.pop((ref.row, ref.col), None)
        else:
            sheet.cells[(ref.row, ref.col)] = cell

    def read(self, ref: CellRef) -> CellValue:
        """Stored literal value, BLANK for empty cells, None for formulas."""
        cell = self.get(ref)
        if cell is None:
            return BLANK
        return cell.value if isinstance(cell, Literal) else None

    def cells(self) -> Iterator[tuple[CellRef, object]]:
        """Every stored cell, sheet order then row-major."""
        for sheet in self.sheets:
            for (row, col), cell in sheet.ordered():
                yield CellRef(sheet.name, col, row), cell

    def formula_cells(self) -> Iterator[tuple[CellRef, Formula]]:
        return ((ref, c) for ref, c in self.cells() if isinstance(c, Formula))

    def copy(self) -> Workbook:
        wb = Workbook([s.name for s in self.sheets])
        for src, dst in zip(self.sheets, wb.sheets):
            dst.cells = dict(src.cells)
        return wb

    def __eq__(self, other):
        return isinstance(other, Workbook) and self.sheets == other.sheets

    def __repr__(self):
        return f"Workbook({self.sheets!r})"


def set_literal(wb: Workbook, ref: CellRef, value: CellValue, force: bool = False) -> Workbook:
    """Write a literal into ``ref`` in place and return the workbook.

    The caller reads the previous content with ``wb.get(ref)`` first if it
    needs to restore it. Refuses to overwrite a formula unless ``force``.
    """
    value = check_literal(value)
    if not force and isinstance(wb.get(ref), Formula):
        raise FormulaCellError(f"substituting over a formula cell at {ref}")
    wb.put(ref, Literal(value))
    return wb


def clear_cell(wb: Workbook, ref: CellRef) -> Workbook:
    wb.put(ref, None)
    return wb


# ------------------------------------------------------------------ .grid I/O

_HEADER = re.compile(r"\[sheet (.+)\]\Z")
_CELL_LINE = re.compile(r"([A-Za-z]+[0-9]+) (.*)\Z")


def parse_workbook(text: str) -> Workbook:
    """Parse ``.grid`` text into a Workbook."""
    wb = None
    current = None
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _HEADER.match(stripped)
        if m:
            name = m.group(1)
            try:
                if wb is None:
                    wb = Workbook([name])
                    current = wb.sheets[0]
                else:
                    current = wb.add_sheet(name)
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            continue
        m = _CELL_LINE.match(line.lstrip())
        if not m:
            raise ParseError(f"malformed line {line!r}", line=lineno)
        if wb is None:
            wb = Workbook()
            current = wb.sheets[0]
        ref_text, content = m.groups()
        try:
            ref = parse_cellref(ref_text, current.name)
        except ParseError as exc:
            raise ParseError(exc.message, pos=exc.pos, line=lineno) from None
        key = (ref.row, ref.col)
        if key in current.cells:
            raise ParseError(f"duplicate cell {current.name}!{ref.a1(sheet=False)}", line=lineno)
        if content.startswith("="):
            try:
                cell = Formula.parse(content[1:])
            except ParseError as exc:
                raise ParseError(
                    f"cell {ref.a1(sheet=False)}: {exc.message}",
                    pos=exc.pos,
                    line=lineno,
                ) from None
        else:
            cell = Literal(parse_literal(content))
        current.cells[key] = cell
    return wb if wb is not None else Workbook()


def serialize_workbook(wb: Workbook) -> str:
    """Canonical ``.grid`` text: sheets in order, cells row-major."""
    chunks = []
    for sheet in wb.sheets:
        lines = [f"[sheet {sheet.name}]"]
        for (row, col), cell in sheet.ordered():
            a1 = CellRef(None, col, row).a1()
            if isinstance(cell, Formula):
                lines.append(f"{a1} ={cell.source}")
            else:
                lines.append(f"{a1} {format_literal(cell.value)}")
        chunks.append("\n".join(lines) + "\n")
    return "\n".join(chunks)


def load_workbook(path) -> Workbook:
    with open(path, encoding="utf-8") as fh:
        return parse_workbook(fh.read())


def save_workbook(wb: Workbook, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_workbook(wb))
