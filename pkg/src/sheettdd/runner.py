"""Run tests against a workbook, collect red/green results and coverage."""

from __future__ import annotations

import json
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .engine import EngineConfig, build_dep_graph, recalc, recalc_dirty
from .errors import FormulaCellError, UnknownNameError
from .refs import CellRef
from .testspec import DEFAULT_ATOL, DEFAULT_RTOL, TestCase, TestSuite, ref_text
from .values import BLANK, CellError, display
from .workbook import Formula, Workbook, set_literal


@dataclass
class AssertionResult:
    target: CellRef
    expected: object
    actual: object
    kind: str  # "expect" or "lock"
    passed: bool
    error: Optional[str] = None


@dataclass
class TestResult:
    __test__ = False

    suite: str
    name: str
    assertions: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def status(self) -> str:
        if self.error is not None or any(a.error is not None for a in self.assertions):
            return "error"
        if all(a.passed for a in self.assertions):
            return "green"
        return "red"


@dataclass
class SuiteResult:
    name: str
    tests: list = field(default_factory=list)


@dataclass
class RunReport:
    suites: list = field(default_factory=list)
    wall_time: float = 0.0

    def tests(self):
        for suite in self.suites:
            yield from suite.tests

    def _count(self, status):
        return sum(1 for t in self.tests() if t.status == status)

    @property
    def passed(self) -> int:
        return self._count("green")

    @property
    def failed(self) -> int:
        return self._count("red")

    @property
    def errored(self) -> int:
        return self._count("error")

    @property
    def total(self) -> int:
        return sum(len(s.tests) for s in self.suites)


@dataclass
class CoverageEntry:
    cell: CellRef
    status: str  # "green", "red" or "untested"
    tests: list = field(default_factory=list)


@dataclass
class CoverageReport:
    entries: list = field(default_factory=list)

    def count(self, status: str) -> int:
        return sum(1 for e in self.entries if e.status == status)

    @property
    def green(self) -> int:
        return self.count("green")

    @property
    def red(self) -> int:
        return self.count("red")

    @property
    def untested(self) -> int:
        return self.count("untested")

    def status_of(self, cell: CellRef) -> str:
        for e in self.entries:
            if e.cell == cell:
                return e.status
        raise KeyError(cell)


def values_equal(expected, actual, atol: float = DEFAULT_ATOL, rtol: float = DEFAULT_RTOL) -> bool:
    """Assertion equality: tolerant for numbers, case-insensitive for text,
    strict otherwise, and never across variants (40 does not match "40")."""
    if type(expected) is not type(actual):
        return False
    if isinstance(expected, float):
        return abs(actual - expected) <= atol + rtol * abs(expected)
    if isinstance(expected, str):
        return expected.casefold() == actual.casefold()
    return expected == actual


# ----------------------------------------------------------------- execution


def run_test(
    wb: Workbook,
    test: TestCase,
    cfg: Optional[EngineConfig] = None,
    *,
    atol: float = DEFAULT_ATOL,
    rtol: float = DEFAULT_RTOL,
    suite: str = "",
    baseline=None,
    graph=None,
    force: bool = False,
) -> TestResult:
    """Run one test: check locks, substitute, recalculate, check, restore.

    The workbook is modified in place while the test runs and is always
    restored before returning, whatever the outcome. ``baseline`` and
    ``graph`` may be passed in to share a full recalculation between tests.
    """
    result = TestResult(suite, test.name)
    targets = []
    for sub in test.sets:
        key = wb.resolve(sub.target)
        if key is None:
            result.error = f"set {sub.target}: no such sheet"
            return result
        if not force and isinstance(wb.get(key), Formula):
            result.error = f"substituting over a formula cell at {ref_text(key)}"
            return result
        targets.append((key, sub.value))

    if graph is None:
        graph = build_dep_graph(wb)
    if baseline is None:
        baseline = recalc(wb, cfg, graph)

    for lock in test.locks:
        result.assertions.append(_check(wb, baseline, lock.target, lock.expected, "lock", atol, rtol))

    originals = [(key, wb.get(key)) for key, _ in targets]
    try:
        for key, value in targets:
            set_literal(wb, key, value, force=force)
        values = recalc_dirty(wb, [k for k, _ in targets], baseline, cfg, graph) if targets else baseline
        for exp in test.expects:
            result.assertions.append(
                _check(
                    wb,
                    values,
                    exp.target,
                    exp.expected,
                    "expect",
                    atol if exp.atol is None else exp.atol,
                    rtol if exp.rtol is None else exp.rtol,
                )
            )
    except FormulaCellError as exc:
        result.error = str(exc)
    finally:
        for key, cell in reversed(originals):
            wb.put(key, cell)
    return result


def _check(wb, values, target, expected, kind, atol, rtol) -> AssertionResult:
    key = wb.resolve(target)
    if key is None:
        return AssertionResult(target, expected, BLANK, kind, False, error=f"no sheet for {target}")
    actual = values[key]
    return AssertionResult(key, expected, actual, kind, values_equal(expected, actual, atol, rtol))


def select_tests(suites, suite: Optional[str] = None, test: Optional[str] = None):
    """(suite, test) pairs in file order, narrowed by the optional filters."""
    chosen = list(suites)
    if suite is not None:
        chosen = [s for s in suites if s.name == suite]
        if not chosen:
            raise UnknownNameError(f"no suite named {suite!r}")
    pairs = [(s, t) for s in chosen for t in s.tests if test is None or t.name == test]
    if test is not None and not pairs:
        raise UnknownNameError(f"no test named {test!r}")
    return pairs


def run_suites(
    wb: Workbook,
    suites: list[TestSuite],
    suite: Optional[str] = None,
    test: Optional[str] = None,
    cfg: Optional[EngineConfig] = None,
    force: bool = False,
) -> RunReport:
    """Run tests in file order, each against the pristine workbook."""
    started = time.perf_counter()
    pairs = select_tests(suites, suite, test)
    graph = build_dep_graph(wb)
    baseline = recalc(wb, cfg, graph)
    report = RunReport()
    by_name = {}
    for s, t in pairs:
        if s.name not in by_name:
            by_name[s.name] = SuiteResult(s.name)
            report.suites.append(by_name[s.name])
        by_name[s.name].tests.append(
            run_test(
                wb,
                t,
                cfg,
                atol=s.atol,
                rtol=s.rtol,
                suite=s.name,
                baseline=baseline,
                graph=graph,
                force=force,
            )
        )
    report.wall_time = time.perf_counter() - started
    return report


def coverage(wb: Workbook, suites: list[TestSuite], report: RunReport) -> CoverageReport:
    """Mark each formula cell green, red or untested.

    A cell is covered by every test in the report that has an ``expect`` on
    it; it is green only if all of those tests are green.
    """
    status = {(t.suite, t.name): t.status for t in report.tests()}
    covering = defaultdict(list)
    for s in suites:
        for t in s.tests:
            if (s.name, t.name) not in status:
                continue
            for exp in t.expects:
                key = wb.resolve(exp.target)
                if key is not None and (s.name, t.name) not in covering[key]:
                    covering[key].append((s.name, t.name))
    out = CoverageReport()
    for ref, _ in wb.formula_cells():
        tests = covering.get(ref, [])
        if not tests:
            state = "untested"
        elif all(status[k] == "green" for k in tests):
            state = "green"
        else:
            state = "red"
        out.entries.append(CoverageEntry(ref, state, [f"{s}/{n}" for s, n in tests]))
    return out


# ----------------------------------------------------------------- rendering

_ANSI = {"green": "\x1b[32m", "red": "\x1b[31m", "error": "\x1b[33m", "untested": "\x1b[90m"}
_RESET = "\x1b[0m"
_LABEL = {"green": "GREEN", "red": "RED", "error": "ERROR", "untested": "UNTESTED"}


def _label(status: str, color: bool) -> str:
    text = f"{_LABEL[status]:<8}"
    return f"{_ANSI[status]}{text}{_RESET}" if color else text


def json_value(v):
    if isinstance(v, bool) or isinstance(v, str):
        return v
    if isinstance(v, float):
        return int(v) if v.is_integer() and abs(v) < 2**53 else v
    if isinstance(v, CellError):
        return v.kind.value
    return None


def summary_line(r) -> str:
    if isinstance(r, CoverageReport):
        return f"{r.green} green, {r.red} red, {r.untested} untested"
    return f"{r.passed} passed, {r.failed} failed, {r.errored} errored"


def report_json(r) -> dict:
    if isinstance(r, CoverageReport):
        return {
            "cells": [
                {"cell": ref_text(e.cell), "status": e.status, "tests": list(e.tests)}
                for e in r.entries
            ],
            "summary": {"green": r.green, "red": r.red, "untested": r.untested},
        }
    return {
        "suites": [
            {
                "name": s.name,
                "tests": [
                    {
                        "name": t.name,
                        "status": t.status,
                        **({"error": t.error} if t.error else {}),
                        "assertions": [
                            {
                                "cell": ref_text(a.target),
                                "kind": a.kind,
                                "expected": json_value(a.expected),
                                "actual": json_value(a.actual),
                                "passed": a.passed,
                            }
                            for a in t.assertions
                        ],
                    }
                    for t in s.tests
                ],
            }
            for s in r.suites
        ],
        "summary": {"passed": r.passed, "failed": r.failed, "errored": r.errored},
    }


def render_report(r, mode: str = "text", color: bool = False) -> str:
    """Render a RunReport or CoverageReport as ``text``, ``json`` or ``quiet``."""
    if mode == "json":
        return json.dumps(report_json(r), indent=2) + "\n"
    if mode == "quiet":
        return summary_line(r) + "\n"
    if mode != "text":
        raise ValueError(f"unknown report mode {mode!r}")
    lines = []
    if isinstance(r, CoverageReport):
        width = max((len(ref_text(e.cell)) for e in r.entries), default=0)
        for e in r.entries:
            tests = ", ".join(e.tests) if e.tests else "-"
            lines.append(f"{ref_text(e.cell):<{width}}  {_label(e.status, color)}  {tests}")
    else:
        for t in r.tests():
            lines.append(f"{_label(t.status, color)} {t.suite}: {t.name}")
            if t.error:
                lines.append(f"         {t.error}")
            for a in t.assertions:
                if a.error:
                    lines.append(f"         {ref_text(a.target)}: {a.error}")
                elif not a.passed:
                    what = "expected" if a.kind == "expect" else "locked at"
                    lines.append(
                        f"         {ref_text(a.target)}: {what} {display(a.expected)}, got {display(a.actual)}"
                    )
    lines.append(summary_line(r))
    return "\n".join(lines) + "\n"
