"""Command-line interface.

Exit status for run/coverage/watch: 0 when every test is green, 1 when
some are red and none errored, 2 for errored tests or unreadable input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
import warnings
from datetime import datetime

from . import __version__
from .engine import EngineConfig, build_dep_graph, fill_formula, find_cycles, recalc
from .errors import SheetTddError
from .formula import relative_key
from .refs import CellRef, iter_range, parse_cellref, parse_range
from .runner import coverage, render_report, run_suites
from .testspec import (
    TestSuite,
    capture_test,
    cell_key,
    load_testfile,
    parse_testfile,
    ref_text,
    serialize_test,
    serialize_testfile,
    suggest_boundaries,
    translate_test,
)
from .values import format_literal
from .workbook import Literal, load_workbook, save_workbook


class CommandError(Exception):
    """Reported on stderr; the command exits with status 2."""


def _plural(n: int, word: str) -> str:
    return f"{n} {word}" if n == 1 else f"{n} {word}s"


def _exit_status(report) -> int:
    if report.errored:
        return 2
    return 1 if report.failed else 0


def _use_color(mode: str, stream) -> bool:
    if mode == "always":
        return True
    if mode == "never":
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _mode(args) -> str:
    if args.json:
        return "json"
    return "quiet" if args.quiet else "text"


def _cells(text: str, wb) -> list[CellRef]:
    """Comma-separated cells and ranges, resolved against the workbook."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        start, end = parse_range(part, None)
        key = wb.resolve(start)
        if key is None:
            raise CommandError(f"no sheet for {part}")
        out.extend(iter_range(key, end))
    return out


def _cell(text: str, wb) -> CellRef:
    key = wb.resolve(parse_cellref(text, None))
    if key is None:
        raise CommandError(f"no sheet for {text}")
    return key


# ------------------------------------------------------------------ commands


def cmd_run(args, out, err) -> int:
    wb = load_workbook(args.workbook)
    suites = load_testfile(args.tests)
    report = run_suites(wb, suites, suite=args.suite, test=args.test, cfg=EngineConfig(args.seed), force=args.force)
    out.write(render_report(report, _mode(args), _use_color(args.color, out)))
    return _exit_status(report)


def cmd_check(args, out, err) -> int:
    wb = load_workbook(args.workbook)
    graph = build_dep_graph(wb)
    cycles = find_cycles(graph)
    formulas = list(wb.formula_cells())
    distinct = {relative_key(f.ast, ref.row, ref.col) for ref, f in formulas}
    sheets = []
    for sheet in wb.sheets:
        n_formula = sum(1 for c in sheet.cells.values() if not isinstance(c, Literal))
        sheets.append((sheet.name, len(sheet.cells) - n_formula, n_formula))
    if args.json:
        payload = {
            "sheets": [{"name": n, "literal_cells": lit, "formula_cells": f} for n, lit, f in sheets],
            "formula_cells": len(formulas),
            "distinct_formulas": len(distinct),
            "cycles": [[ref_text(r) for r in cyc] for cyc in cycles],
        }
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        for name, lit, f in sheets:
            out.write(f"sheet {name}: {_plural(lit, 'literal cell')}, {_plural(f, 'formula cell')}\n")
        for cyc in cycles:
            out.write("cycle: " + " -> ".join(ref_text(r) for r in cyc) + "\n")
        out.write(
            f"{_plural(len(formulas), 'formula cell')}, "
            f"{_plural(len(distinct), 'distinct formula')}, "
            f"{_plural(len(cycles), 'cycle')}\n"
        )
    return 2 if cycles else 0


def cmd_coverage(args, out, err) -> int:
    wb = load_workbook(args.workbook)
    suites = load_testfile(args.tests)
    report = run_suites(wb, suites, suite=args.suite, test=args.test, cfg=EngineConfig(args.seed))
    cov = coverage(wb, suites, report)
    out.write(render_report(cov, _mode(args), _use_color(args.color, out)))
    if args.plot:
        from .plotting import plot_coverage

        plot_coverage(wb, cov, args.plot)
        err.write(f"coverage map written to {args.plot}\n")
    return _exit_status(report)


def _find_test(suites, name, suite_name):
    hits = [(s, t) for s in suites if suite_name in (None, s.name) for t in s.tests if t.name == name]
    if not hits:
        raise CommandError(f"no test named {name!r}")
    if len(hits) > 1:
        raise CommandError(f"test name {name!r} is in several suites; pass --suite")
    return hits[0]


def _suite_end(lines, name) -> int:
    """Index of the ``endsuite`` line closing suite ``name``."""
    inside = False
    for i, line in enumerate(lines):
        stripped = line.strip()
        if stripped.startswith("suite ") and parse_testfile(stripped + "\nendsuite\n")[0].name == name:
            inside = True
        elif inside and stripped == "endsuite":
            return i
    raise CommandError(f"could not locate the end of suite {name!r}")


def cmd_copy_test(args, out, err) -> int:
    with open(args.tests, encoding="utf-8") as fh:
        text = fh.read()
    suites = parse_testfile(text)
    suite, test = _find_test(suites, args.test, args.suite)
    anchor = parse_cellref(args.anchor) if args.anchor else test.expects[0].target
    start, end = parse_range(args.to, None)
    if start.sheet is None:
        start = start.with_sheet(anchor.sheet)
    copies = []
    for target in iter_range(start, end):
        if cell_key(target) == cell_key(anchor):
            continue
        copies.append(translate_test(test, anchor, target, cross_sheet=args.cross_sheet))
    taken = {t.name for t in suite.tests}
    clash = [c.name for c in copies if c.name in taken]
    if clash:
        raise CommandError(f"suite {suite.name!r} already has test {clash[0]!r}")
    block = "".join(serialize_test(c) for c in copies)
    if args.append:
        lines = text.split("\n")
        at = _suite_end(lines, suite.name)
        new_text = "\n".join(lines[:at]) + "\n" + block + "\n".join(lines[at:])
        parse_testfile(new_text)
        with open(args.tests, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(new_text)
        err.write(f"appended {_plural(len(copies), 'test')} to suite {suite.name!r}\n")
    else:
        out.write(block)
    return 0


def cmd_capture(args, out, err) -> int:
    wb = load_workbook(args.workbook)
    inputs = _cells(args.inputs, wb) if args.inputs else []
    output = _cell(args.output, wb)
    values = recalc(wb, EngineConfig(args.seed))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            test = capture_test(wb, values, inputs, output, args.name)
        except ValueError as exc:
            raise CommandError(str(exc)) from None
    for w in caught:
        err.write(f"warning: {w.message}\n")
    if args.suite:
        out.write(serialize_testfile([TestSuite(args.suite, [test])]))
    else:
        out.write(serialize_test(test))
    return 0


def cmd_suggest(args, out, err) -> int:
    wb = load_workbook(args.workbook)
    cell = _cell(args.cell, wb)
    try:
        pairs = suggest_boundaries(wb, cell, args.delta)
    except ValueError as exc:
        raise CommandError(str(exc)) from None
    if args.json:
        rows = [{"cell": ref_text(r), "value": v} for r, v in pairs]
        out.write(json.dumps(rows, indent=2) + "\n")
        return 0
    out.write(f"# boundary inputs for {ref_text(cell)} (delta {format_literal(float(args.delta))})\n")
    current = None
    for ref, value in pairs:
        if ref != current:
            out.write(f"# {ref_text(ref)}\n")
            current = ref
        out.write(f"set {ref_text(ref)} = {format_literal(value)}\n")
    out.write("# expected outputs are not suggested: supply each one from the requirements\n")
    return 0


def cmd_fill(args, out, err) -> int:
    if not args.out and not args.in_place:
        raise CommandError("fill needs --out PATH or --in-place")
    wb = load_workbook(args.workbook)
    src = _cell(args.src, wb)
    before = sum(1 for _ in wb.formula_cells())
    try:
        fill_formula(wb, src, args.to)
    except ValueError as exc:
        raise CommandError(str(exc)) from None
    after = sum(1 for _ in wb.formula_cells())
    save_workbook(wb, args.workbook if args.in_place else args.out)
    err.write(f"filled {args.to} from {ref_text(src)}; workbook now has {_plural(after, 'formula cell')} (was {before})\n")
    return 0


def _signature(path):
    try:
        st = os.stat(path)
        with open(path, "rb") as fh:
            digest = hashlib.sha1(fh.read()).hexdigest()
    except OSError:
        return None
    return (st.st_mtime_ns, st.st_size, digest)


def watch_loop(run_once, paths, interval=0.5, max_runs=None, sleep=time.sleep, out=None):
    """Call ``run_once`` now and after every change to any of ``paths``.

    Returns the last status once ``max_runs`` runs have happened, or when
    interrupted.
    """
    out = out or sys.stdout
    last, runs, status = None, 0, 0
    try:
        while True:
            sig = tuple(_signature(p) for p in paths)
            if sig != last:
                last = sig
                out.write(f"--- {datetime.now():%Y-%m-%d %H:%M:%S} ---\n")
                status = run_once()
                out.flush()
                runs += 1
                if max_runs is not None and runs >= max_runs:
                    return status
            sleep(interval)
    except KeyboardInterrupt:
        return status


def cmd_watch(args, out, err) -> int:
    def once():
        return _guarded(cmd_run, args, out, err)

    return watch_loop(once, [args.workbook, args.tests], args.interval, args.max_runs, out=out)


COMMANDS = {
    "run": cmd_run,
    "check": cmd_check,
    "coverage": cmd_coverage,
    "copy-test": cmd_copy_test,
    "capture": cmd_capture,
    "suggest": cmd_suggest,
    "fill": cmd_fill,
    "watch": cmd_watch,
}


def _guarded(fn, args, out, err) -> int:
    try:
        return fn(args, out, err)
    except (OSError, SheetTddError, CommandError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 2


# -------------------------------------------------------------------- parser


def _add_globals(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(0), help="RAND seed (default 0)")
    parser.add_argument(
        "--color", choices=("auto", "always", "never"), default=default("auto"), help="colour output"
    )
    parser.add_argument("--json", action="store_true", default=default(False), help="machine-readable output")
    parser.add_argument("--quiet", action="store_true", default=default(False), help="summary line only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sheettdd", description="Test-driven development for spreadsheets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _add_globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    for name, help in (
        ("run", "run tests and report red/green"),
        ("coverage", "show which formula cells are tested"),
        ("watch", "re-run tests whenever the files change"),
    ):
        p = add(name, help)
        p.add_argument("workbook")
        p.add_argument("tests")
        p.add_argument("--suite", help="only this suite")
        p.add_argument("--test", help="only this test")
        if name in ("run", "watch"):
            p.add_argument("--force", action="store_true", help="allow substituting over formula cells")
        if name == "coverage":
            p.add_argument("--plot", metavar="FILE", help="also draw a coverage map to FILE")
        if name == "watch":
            p.add_argument("--interval", type=float, default=0.5, help="polling period in seconds")
            p.add_argument("--max-runs", type=int, default=None, help=argparse.SUPPRESS)

    p = add("check", "summarize a workbook and report cycles")
    p.add_argument("workbook")

    p = add("copy-test", "copy a test across a range, like a fill")
    p.add_argument("tests")
    p.add_argument("--test", required=True)
    p.add_argument("--suite")
    p.add_argument("--anchor", help="expectation cell the copy is relative to (default: first expect)")
    p.add_argument("--to", required=True, metavar="RANGE")
    p.add_argument("--append", action="store_true", help="write the copies into the test file")
    p.add_argument("--cross-sheet", action="store_true", help="allow a target on another sheet")

    p = add("capture", "build a test from the workbook's current values")
    p.add_argument("workbook")
    p.add_argument("--inputs", default="", metavar="CELLS", help="cells or ranges, comma-separated")
    p.add_argument("--output", required=True, metavar="CELL")
    p.add_argument("--name", required=True)
    p.add_argument("--suite", help="wrap the test in a suite of this name")

    p = add("suggest", "suggest boundary inputs for a formula cell")
    p.add_argument("workbook")
    p.add_argument("--cell", required=True)
    p.add_argument("--delta", type=float, default=0.01)

    p = add("fill", "fill a formula across a range")
    p.add_argument("workbook")
    p.add_argument("--from", dest="src", required=True, metavar="CELL")
    p.add_argument("--to", required=True, metavar="RANGE")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--in-place", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _guarded(COMMANDS[args.command], args, sys.stdout, sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
