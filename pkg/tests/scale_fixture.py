"""Synthetic two-sheet workbook at the size of a mid-sized business model.

18 seed formulas: 12 on row 2 are filled down to row 21 with the `fill`
command (240 cells), 6 column summaries sit on row 25 (246 formula cells).
Hand-written tests for each row-2 seed are copied down the filled range
with `copy-test --append`, giving 543 tests.
"""

from pathlib import Path

from sheettdd.cli import main

ROWS = range(2, 22)

DATA_SEEDS = {
    "D": "=A2+B2",
    "E": "=A2*C2",
    "F": "=IF(D2>E2,D2-E2,0)",
    "G": "=ROUND(E2/(B2+1),2)",
    "H": "=AND(A2>0,B2<50)",
    "I": "=MAX(A2,B2,C2)",
}
CALC_SEEDS = {
    "A": "=Data!D2*2",
    "B": "=Data!F2+Data!G2",
    "C": '=IF(Data!H2,"ok","check")',
    "D": "=A2-B2",
    "E": "=ABS(D2)",
    "F": '=COUNTIF(Data!A2:C2,">10")',
}
SUMMARIES = {
    "A25": "=SUM(A2:A21)",
    "B25": "=AVERAGE(B2:B21)",
    "C25": '=COUNTIF(C2:C21,"ok")',
    "D25": "=MIN(D2:D21)",
    "E25": "=MAX(E2:E21)",
    "F25": "=SUM(Data!D2:D21)",
}


def _inputs(a, b, c):
    return [f"Data!A2 = {a}", f"Data!B2 = {b}", f"Data!C2 = {c}"]


# (sheet, column, sets, expected literal); expected values worked by hand
SEED_TESTS = [
    ("Data", "D", ["Data!A2 = 5", "Data!B2 = 7"], "12"),
    ("Data", "D", ["Data!A2 = -1", "Data!B2 = 1"], "0"),
    ("Data", "D", ["Data!A2 = 0.5", "Data!B2 = 0.25"], "0.75"),
    ("Data", "E", ["Data!A2 = 3", "Data!C2 = 4"], "12"),
    ("Data", "E", ["Data!A2 = 0", "Data!C2 = 9"], "0"),
    ("Data", "F", _inputs(1, 10, 2), "9"),
    ("Data", "F", _inputs(5, 0, 5), "0"),
    ("Data", "F", _inputs(2, 2, 2), "0"),
    ("Data", "G", _inputs(1, 2, 1), "0.33"),
    ("Data", "G", _inputs(2, -1, 1), "#DIV/0!"),
    ("Data", "H", ["Data!A2 = 1", "Data!B2 = 10"], "TRUE"),
    ("Data", "H", ["Data!A2 = 0", "Data!B2 = 10"], "FALSE"),
    ("Data", "I", _inputs(1, 2, 3), "3"),
    ("Data", "I", _inputs(-1, -2, -3), "-1"),
    ("Data", "I", _inputs(10, 0, 0), "10"),
    ("Calc", "A", ["Data!A2 = 1", "Data!B2 = 2"], "6"),
    ("Calc", "A", ["Data!A2 = 0", "Data!B2 = 0"], "0"),
    ("Calc", "B", _inputs(1, 10, 2), "9.18"),
    ("Calc", "B", _inputs(5, 0, 5), "25"),
    ("Calc", "C", ["Data!A2 = 1", "Data!B2 = 1"], '"ok"'),
    ("Calc", "C", ["Data!A2 = -1", "Data!B2 = 1"], '"check"'),
    ("Calc", "D", _inputs(1, 10, 2), "12.82"),
    ("Calc", "D", _inputs(5, 0, 5), "-15"),
    ("Calc", "E", _inputs(1, 10, 2), "12.82"),
    ("Calc", "E", _inputs(5, 0, 5), "15"),
    ("Calc", "F", _inputs(11, 10, 12), "2"),
    ("Calc", "F", _inputs(1, 2, 3), "0"),
]

# row i holds A=i, B=2i+1, C=25-i
SUMMARY_TESTS = [
    ("Calc!A25", str(sum(2 * (3 * i + 1) for i in ROWS))),
    ("Calc!C25", str(sum(1 for i in ROWS if 2 * i + 1 < 50))),
    ("Calc!F25", str(sum(3 * i + 1 for i in ROWS))),
]

N_FORMULAS = 246
N_DISTINCT = 18
N_TESTS = len(SEED_TESTS) * len(ROWS) + len(SUMMARY_TESTS)


def seed_workbook_text() -> str:
    lines = ["[sheet Data]", "A1 a", "B1 b", "C1 c"]
    for i in ROWS:
        lines += [f"A{i} {i}", f"B{i} {2 * i + 1}", f"C{i} {25 - i}"]
    lines += [f"{col}2 {src}" for col, src in DATA_SEEDS.items()]
    lines += ["", "[sheet Calc]"]
    lines += [f"{col}2 {src}" for col, src in CALC_SEEDS.items()]
    lines += [f"{cell} {src}" for cell, src in SUMMARIES.items()]
    return "\n".join(lines) + "\n"


def seed_tests_text() -> str:
    out = ['suite "scale"']
    for n, (sheet, col, sets, expected) in enumerate(SEED_TESTS, start=1):
        out.append(f'  test "{sheet}!{col} #{n}"')
        out += [f"    set {s}" for s in sets]
        out.append(f"    expect {sheet}!{col}2 = {expected}")
        out.append("  end")
    for n, (cell, expected) in enumerate(SUMMARY_TESTS, start=1):
        out += [f'  test "summary #{n}"', f"    expect {cell} = {expected}", "  end"]
    out.append("endsuite")
    return "\n".join(out) + "\n"


def build_scale(directory) -> tuple[Path, Path]:
    """Write scale.grid and scale.sst into ``directory`` using the CLI."""
    directory = Path(directory)
    grid = directory / "scale.grid"
    sst = directory / "scale.sst"
    grid.write_text(seed_workbook_text(), encoding="utf-8")
    sst.write_text(seed_tests_text(), encoding="utf-8")
    for sheet, seeds in (("Data", DATA_SEEDS), ("Calc", CALC_SEEDS)):
        for col in seeds:
            rc = main(["fill", str(grid), "--from", f"{sheet}!{col}2", "--to", f"{sheet}!{col}3:{col}21", "--in-place"])
            assert rc == 0
    for n, (sheet, col, _, _) in enumerate(SEED_TESTS, start=1):
        rc = main(["copy-test", str(sst), "--test", f"{sheet}!{col} #{n}", "--to", f"{sheet}!{col}2:{col}21", "--append"])
        assert rc == 0
    return grid, sst
