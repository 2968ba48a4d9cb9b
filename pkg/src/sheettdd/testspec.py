"""Test cases for workbooks and the ``.sst`` test-file format.

A suite file looks like::

    suite "Grades"
      tolerance atol=1e-6
      test "fail 20.5"
        set A2 = 20.5
        expect B2 = "FAIL"
      end
      test "stock pinned"
        assert C10 = 2900
      end
    endsuite

``set`` substitutes an input, ``expect`` checks a cell after recalculation
(``tol <x>`` overrides the absolute tolerance) and ``assert`` pins the
value a cell holds before anything is substituted. Values follow the
``.grid`` literal rules, plus error tokens such as ``#DIV/0!``.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .errors import ParseError
from .formula import COMPARISONS, Binary, Number, Ref, Unary, walk
from .refs import DEFAULT_SHEET, CellRef, parse_cellref
from .values import CellValue, format_literal, format_number, parse_literal, same_value
from .workbook import Formula, Workbook

DEFAULT_ATOL = 1e-9
DEFAULT_RTOL = 0.0


def cell_key(ref: CellRef) -> tuple:
    """Identity of a cell regardless of sheet-name case and ``$`` flags."""
    return (ref.sheet.casefold() if ref.sheet else None, ref.row, ref.col)


@dataclass(eq=False)
class Substitution:
    target: CellRef
    value: CellValue

    def __eq__(self, other):
        return (
            isinstance(other, Substitution)
            and self.target == other.target
            and same_value(self.value, other.value)
        )


@dataclass(eq=False)
class Expectation:
    """Expected value of ``target``; tolerances of None defer to the suite."""

    target: CellRef
    expected: CellValue
    atol: Optional[float] = None
    rtol: Optional[float] = None

    def __eq__(self, other):
        return (
            isinstance(other, Expectation)
            and self.target == other.target
            and same_value(self.expected, other.expected)
            and self.atol == other.atol
            and self.rtol == other.rtol
        )


@dataclass(eq=False)
class Lock:
    target: CellRef
    expected: CellValue

    def __eq__(self, other):
        return (
            isinstance(other, Lock)
            and self.target == other.target
            and same_value(self.expected, other.expected)
        )


@dataclass
class TestCase:
    __test__ = False

    name: str
    sets: list = field(default_factory=list)
    expects: list = field(default_factory=list)
    locks: list = field(default_factory=list)

    def __post_init__(self):
        if not self.expects and not self.locks:
            raise ValueError(f"test {self.name!r} has no expect or assert lines")
        seen = set()
        for sub in self.sets:
            key = cell_key(sub.target)
            if key in seen:
                raise ValueError(f"test {self.name!r} sets {sub.target} twice")
            seen.add(key)


@dataclass
class TestSuite:
    __test__ = False

    name: str
    tests: list = field(default_factory=list)
    atol: float = DEFAULT_ATOL
    rtol: float = DEFAULT_RTOL

    def test(self, name: str) -> TestCase:
        for t in self.tests:
            if t.name == name:
                return t
        raise KeyError(name)


# ------------------------------------------------------------------- parsing

_LINE = re.compile(r"(\w+)\s*(.*)\Z")
_QUOTED = re.compile(r'"((?:[^"]|"")*)"\Z')
_ASSIGN = re.compile(r"('(?:[^']|'')*'!\S+?|[^\s=]+)\s*=\s*(.*)\Z")
_TOL = re.compile(r"(.*?)\s+tol\s+(\S+)\Z")


def _quoted_name(rest: str, lineno: int) -> str:
    m = _QUOTED.match(rest)
    if not m:
        raise ParseError(f"expected a double-quoted name, got {rest!r}", line=lineno)
    return m.group(1).replace('""', '"')


def _nonneg(text: str, lineno: int) -> float:
    value = parse_literal(text)
    if not isinstance(value, float) or value < 0:
        raise ParseError(f"expected a non-negative number, got {text!r}", line=lineno)
    return value


def _split_tol(literal: str, lineno: int):
    if literal.startswith('"'):
        i = 1
        while True:
            j = literal.find('"', i)
            if j < 0:
                raise ParseError("unterminated string", line=lineno)
            if literal.startswith('""', j):
                i = j + 2
                continue
            break
        head, tail = literal[: j + 1], literal[j + 1 :].strip()
        if not tail:
            return head, None
        m = re.fullmatch(r"tol\s+(\S+)", tail)
        if not m:
            raise ParseError(f"unexpected text after value: {tail!r}", line=lineno)
        return head, _nonneg(m.group(1), lineno)
    m = _TOL.match(literal)
    if m:
        return m.group(1), _nonneg(m.group(2), lineno)
    return literal, None


def parse_testfile(text: str) -> list[TestSuite]:
    """Parse ``.sst`` text. Unqualified cell references mean ``Sheet1``."""
    suites: list[TestSuite] = []
    suite: Optional[TestSuite] = None
    test: Optional[dict] = None
    suite_names = set()
    suite_line = 0

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _LINE.match(line)
        if not m:
            raise ParseError(f"malformed line {line!r}", line=lineno)
        keyword, rest = m.group(1), m.group(2).strip()

        if keyword == "suite":
            if suite is not None:
                raise ParseError("suite inside a suite (missing endsuite?)", line=lineno)
            name = _quoted_name(rest, lineno)
            if name in suite_names:
                raise ParseError(f"duplicate suite name {name!r}", line=lineno)
            suite_names.add(name)
            suite = TestSuite(name)
            suite_line = lineno
        elif keyword == "endsuite":
            if suite is None or test is not None:
                raise ParseError("endsuite without an open suite, or inside a test", line=lineno)
            suites.append(suite)
            suite = None
        elif keyword == "tolerance":
            if suite is None or test is not None:
                raise ParseError("tolerance belongs at suite level", line=lineno)
            for item in rest.split():
                key, eq, val = item.partition("=")
                if not eq or key not in ("atol", "rtol"):
                    raise ParseError(f"bad tolerance setting {item!r}", line=lineno)
                setattr(suite, key, _nonneg(val, lineno))
        elif keyword == "test":
            if suite is None or test is not None:
                raise ParseError("test must sit directly inside a suite", line=lineno)
            name = _quoted_name(rest, lineno)
            if any(t.name == name for t in suite.tests):
                raise ParseError(f"duplicate test name {name!r}", line=lineno)
            test = {"name": name, "sets": [], "expects": [], "locks": [], "line": lineno}
        elif keyword == "end":
            if test is None:
                raise ParseError("end without an open test", line=lineno)
            line_of_test = test.pop("line")
            try:
                suite.tests.append(TestCase(**test))
            except ValueError as exc:
                raise ParseError(str(exc), line=line_of_test) from None
            test = None
        elif keyword in ("set", "expect", "assert"):
            if test is None:
                raise ParseError(f"{keyword} outside a test", line=lineno)
            m = _ASSIGN.match(rest)
            if not m or not m.group(2):
                raise ParseError(f"expected '<cell> = <value>' after {keyword}", line=lineno)
            try:
                ref = parse_cellref(m.group(1), DEFAULT_SHEET)
            except ParseError as exc:
                raise ParseError(exc.message, line=lineno) from None
            literal, tol = m.group(2), None
            if keyword == "expect":
                literal, tol = _split_tol(literal, lineno)
            value = parse_literal(literal, errors=True)
            if keyword == "set":
                if not isinstance(value, (float, str, bool)):
                    raise ParseError("only numbers, text and booleans can be set", line=lineno)
                test["sets"].append(Substitution(ref, value))
            elif keyword == "expect":
                test["expects"].append(Expectation(ref, value, atol=tol))
            else:
                test["locks"].append(Lock(ref, value))
        else:
            raise ParseError(f"unknown keyword {keyword!r}", line=lineno)

    if test is not None:
        raise ParseError(f"test {test['name']!r} is never closed with 'end'", line=test["line"])
    if suite is not None:
        raise ParseError(f"suite {suite.name!r} is never closed with 'endsuite'", line=suite_line)
    return suites


# ------------------------------------------------------------- serialization


def ref_text(ref: CellRef) -> str:
    return ref.a1(sheet=ref.sheet != DEFAULT_SHEET)


def _name(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def serialize_test(t: TestCase, indent: str = "  ") -> str:
    lines = [f"{indent}test {_name(t.name)}"]
    inner = indent + "  "
    for lock in t.locks:
        lines.append(f"{inner}assert {ref_text(lock.target)} = {format_literal(lock.expected, bare_text=False)}")
    for sub in t.sets:
        lines.append(f"{inner}set {ref_text(sub.target)} = {format_literal(sub.value, bare_text=False)}")
    for exp in t.expects:
        line = f"{inner}expect {ref_text(exp.target)} = {format_literal(exp.expected, bare_text=False)}"
        if exp.atol is not None:
            line += f" tol {format_number(exp.atol)}"
        lines.append(line)
    lines.append(f"{indent}end")
    return "\n".join(lines) + "\n"


def serialize_testfile(suites) -> str:
    """Canonical ``.sst`` text; tolerance lines only when non-default."""
    chunks = []
    for suite in suites:
        lines = [f"suite {_name(suite.name)}\n"]
        tol = []
        if suite.atol != DEFAULT_ATOL:
            tol.append(f"atol={format_number(suite.atol)}")
        if suite.rtol != DEFAULT_RTOL:
            tol.append(f"rtol={format_number(suite.rtol)}")
        if tol:
            lines.append("  tolerance " + " ".join(tol) + "\n")
        lines.extend(serialize_test(t) for t in suite.tests)
        lines.append("endsuite\n")
        chunks.append("".join(lines))
    return "\n".join(chunks)


def load_testfile(path) -> list[TestSuite]:
    with open(path, encoding="utf-8") as fh:
        return parse_testfile(fh.read())


# --------------------------------------------------------------- operations


def translate_test(t: TestCase, anchor: CellRef, target: CellRef, cross_sheet: bool = False) -> TestCase:
    """Copy a test the way a fill copies a formula.

    Every relative axis of every reference moves by ``target - anchor``,
    where ``anchor`` must be one of the test's expectation targets. With
    ``cross_sheet`` the references on the anchor's sheet also move to the
    target's sheet.
    """
    if not any(cell_key(e.target) == cell_key(anchor) for e in t.expects):
        raise ValueError(f"{anchor} is not an expectation target of test {t.name!r}")
    same_sheet = cell_key(anchor)[0] == cell_key(target)[0]
    if not same_sheet and not cross_sheet:
        raise ValueError(f"cannot copy test {t.name!r} from {anchor} to another sheet ({target})")
    drow, dcol = target.row - anchor.row, target.col - anchor.col
    anchor_sheet = cell_key(anchor)[0]

    def move(ref: CellRef) -> CellRef:
        moved = ref.shifted(drow, dcol)
        if not same_sheet and cell_key(ref)[0] == anchor_sheet:
            moved = moved.with_sheet(target.sheet)
        return moved

    return TestCase(
        name=f"{t.name}@{ref_text(target.bare())}",
        sets=[Substitution(move(s.target), s.value) for s in t.sets],
        expects=[Expectation(move(e.target), e.expected, e.atol, e.rtol) for e in t.expects],
        locks=[Lock(move(k.target), k.expected) for k in t.locks],
    )


def capture_test(wb: Workbook, values, inputs, output: CellRef, name: str) -> TestCase:
    """Build a regression test from the workbook's current state.

    Inputs take their stored literal values (a blank input is captured as 0
    with a warning) and the output is expected to keep its computed value.
    """
    out_key = wb.resolve(output)
    if out_key is None or not isinstance(wb.get(out_key), Formula):
        raise ValueError(f"output {output} is not a formula cell")
    sets = []
    for ref in inputs:
        key = wb.resolve(ref)
        if key is None:
            raise ValueError(f"no sheet for input {ref}")
        cell = wb.get(key)
        if isinstance(cell, Formula):
            raise ValueError(f"input {key} holds a formula")
        if cell is None:
            warnings.warn(f"input {key} is blank; capturing it as 0", stacklevel=2)
            value = 0.0
        else:
            value = cell.value
        sets.append(Substitution(key, value))
    return TestCase(name, sets=sets, expects=[Expectation(out_key, values[out_key])])


def _constant(node) -> Optional[float]:
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Unary):
        inner = _constant(node.operand)
        if inner is None:
            return None
        return -inner if node.op == "-" else inner / 100
    return None


def suggest_boundaries(wb: Workbook, cell: CellRef, delta: float) -> list[tuple[CellRef, float]]:
    """Boundary inputs for every ``ref <op> constant`` comparison in a formula.

    Each constant c yields c - delta, c and c + delta for the compared cell.
    Expected outputs are left for the developer to decide.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    key = wb.resolve(cell)
    formula = wb.get(key) if key is not None else None
    if not isinstance(formula, Formula):
        raise ValueError(f"{cell} does not hold a formula")
    found = set()
    for node in walk(formula.ast):
        if not (isinstance(node, Binary) and node.op in COMPARISONS):
            continue
        for side, other in ((node.left, node.right), (node.right, node.left)):
            c = _constant(other)
            if isinstance(side, Ref) and c is not None:
                ref = wb.resolve(side.ref, key.sheet)
                if ref is not None:
                    found.update((ref, v) for v in (c - delta, c, c + delta))
    position = {s.name: i for i, s in enumerate(wb.sheets)}
    return sorted(found, key=lambda rv: (position[rv[0].sheet], rv[0].row, rv[0].col, rv[1]))
