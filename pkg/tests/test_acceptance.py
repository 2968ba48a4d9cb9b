"""Acceptance criteria 1-8, one test each.

Every test records a one-line PASS/FAIL verdict; the lines are printed in
the pytest summary (and directly when this file is run as a script).
"""

import itertools
import json
import random
import re
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE, FIXTURES  # noqa: E402
from gen import fixpoint_values, literal_cells, random_literal, random_workbook, same_values  # noqa: E402
from scale_fixture import N_DISTINCT, N_FORMULAS, build_scale  # noqa: E402
from sheettdd.cli import main  # noqa: E402
from sheettdd.engine import EngineConfig, recalc, recalc_dirty  # noqa: E402
from sheettdd.errors import TranslationError  # noqa: E402
from sheettdd.formula import parse_formula, print_formula, translate_refs  # noqa: E402
from sheettdd.functions import compare, compare_op  # noqa: E402
from sheettdd.refs import CellRef  # noqa: E402
from sheettdd.runner import render_report, run_suites  # noqa: E402
from sheettdd.testspec import (  # noqa: E402
    Expectation,
    Lock,
    Substitution,
    TestCase,
    TestSuite,
    load_testfile,
    parse_testfile,
    serialize_testfile,
    translate_test,
)
from sheettdd.values import BLANK, DIV0, VALUE  # noqa: E402
from sheettdd.workbook import load_workbook, parse_workbook, serialize_workbook, set_literal  # noqa: E402


def record(n, ok, detail):
    ACCEPTANCE[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE[n])
    assert ok, ACCEPTANCE[n]


def grade_run(workbook, tests):
    report = run_suites(load_workbook(FIXTURES / workbook), load_testfile(FIXTURES / tests))
    return report


def test_criterion_1_first_formula():
    report = grade_run("grades_first.grid", "grades_first3.sst")
    red = [t.name for t in report.tests() if t.status == "red"]
    ok = (report.passed, report.failed, report.errored) == (2, 1, 0) and red == ["honor"]
    record(1, ok, f"{report.passed} green, {report.failed} red {red} (want 2 green, 1 red [honor])")


def test_criterion_2_nested_if():
    seven = grade_run("grades_nested.grid", "grades_first7.sst")
    ten = grade_run("grades_nested.grid", "grades.sst")
    ok = (seven.passed, seven.failed) == (7, 0) and (ten.passed, ten.failed, ten.errored) == (7, 3, 0)
    record(2, ok, f"7 tests: {seven.passed} green; 10 tests: {ten.passed} green, {ten.failed} red (want 7/0 then 7/3)")


def test_criterion_3_intermediate_formula():
    report = grade_run("grades_refactor.grid", "grades.sst")
    ok = (report.passed, report.failed, report.errored) == (7, 3, 0)
    record(3, ok, f"{report.passed} green, {report.failed} red (want 7/3)")


def test_criterion_4_final_formula(capsys):
    code = main(["--quiet", "run", str(FIXTURES / "grades_final.grid"), str(FIXTURES / "grades.sst")])
    out = capsys.readouterr().out
    ok = code == 0 and out == "10 passed, 0 failed, 0 errored\n"
    record(4, ok, f"exit {code}, {out.strip()!r} (want exit 0, 10 passed)")


def test_criterion_5_reorder_level():
    wb = load_workbook(FIXTURES / "reorder.grid")
    before = serialize_workbook(wb)
    report = run_suites(wb, load_testfile(FIXTURES / "reorder.sst"))
    (t,) = report.tests()
    after = serialize_workbook(wb)
    ok = t.status == "green" and t.assertions[0].actual == 8100.0 and before.encode() == after.encode()
    record(5, ok, f"reordLvl {t.status}, G11={t.assertions[0].actual:g}, workbook bytes unchanged: {before == after}")


def test_criterion_6_scale(tmp_path, capsys):
    grid, sst = build_scale(tmp_path)
    capsys.readouterr()
    main(["check", str(grid)])
    check = capsys.readouterr().out
    counts = re.search(r"(\d+) formula cells, (\d+) distinct formulas", check)
    formulas, distinct = (int(counts[1]), int(counts[2])) if counts else (None, None)
    n_tests = sum(len(s.tests) for s in load_testfile(sst))

    started = time.perf_counter()
    code = main(["--json", "run", str(grid), str(sst)])
    elapsed = time.perf_counter() - started
    first = capsys.readouterr().out
    main(["--json", "run", str(grid), str(sst)])
    second = capsys.readouterr().out
    passed = json.loads(first)["summary"]["passed"]
    ok = (
        formulas == N_FORMULAS == 246
        and distinct == N_DISTINCT == 18
        and n_tests > 500
        and elapsed < 1.0
        and first == second
        and code == 0
    )
    record(
        6,
        ok,
        f"{formulas} formula cells, {distinct} distinct, {n_tests} tests ({passed} green), "
        f"run {elapsed:.3f}s, deterministic: {first == second}",
    )


# ------------------------------------------------------- 7: property suites

_SST_TEXTS = ["x", "Mark", "", 'say "hi"', "40", "TRUE", " pad "]


def _random_suite(rng):
    tests = []
    for i in range(rng.randint(1, 4)):
        cells = rng.sample([CellRef(rng.choice(["Sheet1", "Data"]), c, r) for c in range(1, 6) for r in range(1, 6)], 4)
        pick = lambda: rng.choice([float(rng.randint(-9, 99)), rng.random() * 100, rng.choice(_SST_TEXTS), rng.choice([True, False])])  # noqa: E731
        tests.append(
            TestCase(
                f"t{i} {rng.choice(_SST_TEXTS)}",
                sets=[Substitution(cells[0], pick())],
                expects=[Expectation(cells[1], rng.choice([pick(), DIV0]), atol=rng.choice([None, 0.5]))],
                locks=[Lock(cells[2], pick())] if rng.random() < 0.5 else [],
            )
        )
    return TestSuite(f"suite {rng.randint(0, 99)}", tests, atol=rng.choice([1e-9, 0.01]))


def test_criterion_7_properties():
    rng = random.Random(20240607)
    stats = {}

    # (a) incremental == full
    n, corpus = 0, []
    while n < 1000:
        wb = random_workbook(rng)
        corpus.append(wb)
        lits = literal_cells(wb)
        if not lits:
            continue
        prev = recalc(wb)
        changed = rng.sample(lits, min(len(lits), rng.randint(1, 3)))
        for ref in changed:
            set_literal(wb, ref, random_literal(rng))
        assert recalc_dirty(wb, changed, prev) == recalc(wb), serialize_workbook(wb)
        n += 1
    stats["a"] = n

    # (b) full == fixpoint oracle on acyclic workbooks of at most 50 cells
    for i in range(200):
        wb = random_workbook(rng, max_cells=50)
        assert sum(1 for _ in wb.cells()) <= 50
        oracle = fixpoint_values(wb)
        assert same_values(recalc(wb), oracle, oracle), serialize_workbook(wb)
    stats["b"] = 200

    # (c) round-trips: formulas, .grid, .sst
    n_formula = n_grid = 0
    for wb in corpus[:300]:
        text = serialize_workbook(wb)
        assert parse_workbook(text) == wb and serialize_workbook(parse_workbook(text)) == text
        n_grid += 1
        for _, f in wb.formula_cells():
            printed = print_formula(f.ast)
            assert parse_formula(printed) == f.ast and print_formula(parse_formula(printed)) == printed
            n_formula += 1
    n_sst = 0
    for _ in range(300):
        suites = [_random_suite(rng)]
        text = serialize_testfile(suites)
        assert parse_testfile(text) == suites and serialize_testfile(parse_testfile(text)) == text
        n_sst += 1
    stats["c"] = (n_formula, n_grid, n_sst)

    # (d) inverse shifts
    n_shift = 0
    for wb in corpus[300:600]:
        for _, f in wb.formula_cells():
            dr, dc = rng.randint(-4, 4), rng.randint(-3, 3)
            try:
                moved = translate_refs(f.ast, dr, dc)
            except TranslationError:
                continue
            assert translate_refs(moved, -dr, -dc) == f.ast
            n_shift += 1
    base = TestCase("t", sets=[Substitution(CellRef("Sheet1", 1, 2), 1.0)], expects=[Expectation(CellRef("Sheet1", 2, 2), 2.0)], locks=[Lock(CellRef("Sheet1", 3, 1, True, True), 3.0)])
    anchor = CellRef("Sheet1", 2, 2)
    n_test_shift = 0
    for row, col in itertools.product(range(2, 40), range(2, 12)):
        target = CellRef("Sheet1", col, row)
        back = translate_test(translate_test(base, anchor, target), target, anchor)
        assert (back.sets, back.expects, back.locks) == (base.sets, base.expects, base.locks)
        n_test_shift += 1
    stats["d"] = (n_shift, n_test_shift)

    # (e) comparison order is a total preorder on a small exhaustive set
    small = [-2.0, 0.0, 0.5, 3.0, "", "a", "A", "b", "TEST", False, True, BLANK]
    for a, b in itertools.product(small, repeat=2):
        assert compare(a, b) == -compare(b, a)
        assert sum(compare_op(op, a, b) is True for op in ("<", "=", ">")) == 1
        if BLANK in (a, b):
            continue  # Blank adapts to the other operand, so it sits outside the chain
        for c in small[:-1]:
            if compare(a, b) <= 0 and compare(b, c) <= 0:
                assert compare(a, c) <= 0
    assert compare_op("<", VALUE, 1.0) == VALUE
    stats["e"] = len(small) ** 3

    # (f) same seed, same bytes
    wb = parse_workbook("A1 =RAND()\nA2 =RAND()*100\nB1 =A1<0.5\nB2 =ROUND(A2,0)\n")
    suites = parse_testfile('suite "r"\n test "t"\n  expect B1 = TRUE\n  expect B2 = 50\n end\nendsuite\n')
    runs = [render_report(run_suites(wb, suites, cfg=EngineConfig(11)), "json") for _ in range(2)]
    assert runs[0] == runs[1]
    stats["f"] = runs[0] == runs[1]

    record(
        7,
        True,
        f"(a) {stats['a']} incremental pairs, (b) {stats['b']} fixpoint workbooks, "
        f"(c) {stats['c'][0]} formulas/{stats['c'][1]} grids/{stats['c'][2]} suites round-tripped, "
        f"(d) {stats['d'][0]} formula + {stats['d'][1]} test inverse shifts, (e) {stats['e']} triples, (f) identical JSON",
    )


def test_criterion_8_boundaries(capsys):
    code = main(["suggest", str(FIXTURES / "grades_final.grid"), "--cell", "B2", "--delta", "0.01"])
    out = capsys.readouterr().out
    sets = re.findall(r"^set (\S+) = (\S+)$", out, re.M)
    cells = {c for c, _ in sets}
    got = sorted(float(v) for _, v in sets)
    want = sorted(k + d for k in (0, 40, 70, 100) for d in (-0.01, 0, 0.01))
    ok = code == 0 and cells == {"A2"} and got == want
    record(8, ok, f"A2 suggestions {[f'{v:g}' for v in got]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
