"""Random workbooks for property tests, plus a naive fixpoint oracle.

Workbooks are acyclic by construction: a formula only refers to cells that
come earlier in (sheet, row, col) order.
"""

import random

from sheettdd.engine import eval_formula
from sheettdd.refs import CellRef, col_to_letters, quote_sheet
from sheettdd.values import BLANK, REF, same_value
from sheettdd.workbook import Formula, Literal, Workbook

SHEETS = ["Sheet1", "Data"]
ROWS, COLS = 8, 4


def _a1(sheet, row, col, host):
    text = f"{col_to_letters(col)}{row}"
    return text if sheet == host else f"{quote_sheet(sheet)}!{text}"


class _Builder:
    def __init__(self, rng, host, earlier):
        self.rng = rng
        self.host = host
        self.earlier = earlier  # (sheet, row, col) strictly before the host cell

    def ref(self):
        if not self.earlier:
            return self.const()
        s, r, c = self.rng.choice(self.earlier)
        return _a1(s, r, c, self.host[0])

    def block(self):
        """A range lying entirely in rows above the host (or an earlier sheet)."""
        hs, hr, _ = self.host
        rng = self.rng
        sheet = rng.choice([s for s in SHEETS if SHEETS.index(s) <= SHEETS.index(hs)])
        top_limit = hr - 1 if sheet == hs else ROWS
        if top_limit < 1:
            return None
        r1, r2 = sorted(rng.randint(1, top_limit) for _ in range(2))
        c1, c2 = sorted(rng.randint(1, COLS) for _ in range(2))
        start = _a1(sheet, r1, c1, hs)
        return f"{start}:{col_to_letters(c2)}{r2}"

    def const(self):
        return self.rng.choice(["0", "1", "2.5", "40", "-3", '"a"', '""', "TRUE", "FALSE", '"7"'])

    def expr(self, depth):
        rng = self.rng
        if depth == 0 or rng.random() < 0.3:
            return self.ref() if rng.random() < 0.7 else self.const()
        pick = rng.random()
        if pick < 0.45:
            op = rng.choice(["+", "-", "*", "/", "^", "&", "=", "<>", "<", "<=", ">", ">="])
            return f"({self.expr(depth - 1)}){op}({self.expr(depth - 1)})"
        if pick < 0.55:
            return f"IF({self.expr(depth - 1)},{self.expr(depth - 1)},{self.expr(depth - 1)})"
        if pick < 0.6:
            return f"-({self.expr(depth - 1)})"
        block = self.block()
        if block is None:
            return self.ref()
        fn = rng.choice(["SUM", "AVERAGE", "MIN", "MAX", "COUNT", "AND", "OR", "COUNTIF"])
        if fn == "COUNTIF":
            crit = rng.choice(['"<40"', '">=1"', '"a"', "2.5", '"<>0"'])
            return f"COUNTIF({block},{crit})"
        return f"{fn}({block},{self.expr(depth - 1)})"


def random_workbook(rng: random.Random, max_cells: int = 50, p_formula: float = 0.45) -> Workbook:
    wb = Workbook(SHEETS)
    slots = [(s, r, c) for s in SHEETS for r in range(1, ROWS + 1) for c in range(1, COLS + 1)]
    chosen = sorted(rng.sample(slots, rng.randint(1, min(max_cells, len(slots)))), key=lambda t: (SHEETS.index(t[0]), t[1], t[2]))
    earlier = []
    for slot in chosen:
        s, r, c = slot
        ref = CellRef(s, c, r)
        if earlier and rng.random() < p_formula:
            src = _Builder(rng, slot, earlier).expr(rng.randint(1, 3))
            wb.put(ref, Formula.parse(src))
        else:
            wb.put(ref, Literal(random_literal(rng)))
        earlier.append(slot)
    return wb


def random_literal(rng: random.Random):
    return rng.choice(
        [
            float(rng.randint(-5, 50)),
            rng.choice([0.0, 39.99, 40.0, 70.0, 2.5]),
            rng.choice(["a", "A", "", "7", "TEST"]),
            rng.choice([True, False]),
        ]
    )


def literal_cells(wb):
    return [ref for ref, cell in wb.cells() if isinstance(cell, Literal)]


def fixpoint_values(wb: Workbook, max_rounds: int = 200) -> dict:
    """Evaluate every formula over and over until nothing changes."""
    values = {ref: cell.value for ref, cell in wb.cells() if isinstance(cell, Literal)}
    formulas = list(wb.formula_cells())
    for ref, _ in formulas:
        values[ref] = BLANK

    def env_for(host):
        def env(r):
            key = wb.resolve(r, host)
            return REF if key is None else values.get(key, BLANK)

        return env

    for _ in range(max_rounds):
        changed = False
        for ref, f in formulas:
            v = eval_formula(f.ast, env_for(ref.sheet))
            if not same_value(v, values[ref]):
                values[ref] = v
                changed = True
        if not changed:
            return values
    raise AssertionError("no fixpoint reached")


def same_values(a, b, keys) -> bool:
    return all(same_value(a[k], b[k]) for k in keys)
