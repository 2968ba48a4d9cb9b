"""Dependency graph, full and incremental recalculation, and formula fill."""

from __future__ import annotations

import heapq
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .errors import ParseError
from .formula import (
    COMPARISONS,
    Binary,
    Bool,
    Call,
    Node,
    Number,
    Range,
    Ref,
    Text,
    Unary,
    calls,
    collect_refs,
    print_formula,
    translate_refs,
)
from .functions import (
    BUILTINS,
    RangeArg,
    compare_op,
    scalar,
    to_bool,
    to_number,
    to_text,
)
from .refs import CellRef, iter_range, parse_cellref, parse_range
from .values import BLANK, CYCLE, DIV0, NAME, REF, VALUE, CellError, CellValue, number, same_value
from .workbook import Formula, Literal, Workbook


@dataclass(frozen=True)
class EngineConfig:
    rand_seed: int = 0


@dataclass
class DepGraph:
    """Precedents of every formula cell, an evaluation order, and the cells
    that cannot be ordered because they sit on or below a cycle.

    Keys are canonical refs as returned by :meth:`Workbook.resolve`.
    """

    edges: dict = field(default_factory=dict)
    topo_order: list = field(default_factory=list)
    cyclic: frozenset = frozenset()
    dependents: dict = field(default_factory=dict)
    formulas: dict = field(default_factory=dict)
    uses_rand: bool = False

    def __post_init__(self):
        self.rank = {ref: i for i, ref in enumerate(self.topo_order)}


class ValueMap(dict):
    """Computed value of every non-blank cell.

    Lookups accept any spelling of a cell (sheet case, ``$`` flags, or an A1
    string for the first sheet); unset cells read as BLANK. ``recomputed``
    lists the formula cells the producing call actually evaluated.
    """

    def __init__(self, data=(), sheets=None, recomputed=()):
        super().__init__(data)
        self.sheets = dict(sheets or {})
        self.recomputed = frozenset(recomputed)

    def canonical(self, ref) -> Optional[CellRef]:
        if isinstance(ref, str):
            default = next(iter(self.sheets.values()), None)
            ref = parse_cellref(ref, default)
        if ref.sheet is None:
            return None
        name = self.sheets.get(ref.sheet.casefold())
        return CellRef(name, ref.col, ref.row) if name is not None else None

    def __missing__(self, ref):
        key = self.canonical(ref)
        if key is not None and key != ref and dict.__contains__(self, key):
            return dict.__getitem__(self, key)
        return BLANK

    def __contains__(self, ref):
        if dict.__contains__(self, ref):
            return True
        key = self.canonical(ref)
        return key is not None and dict.__contains__(self, key)

    def __eq__(self, other):
        if not isinstance(other, dict) or self.keys() != other.keys():
            return False
        return all(same_value(v, dict.__getitem__(other, k)) for k, v in self.items())

    def __ne__(self, other):
        return not self == other

    __hash__ = None

    def copy(self) -> ValueMap:
        return ValueMap(self, self.sheets)


def _sheet_index(wb: Workbook) -> dict:
    return {s.name.casefold(): s.name for s in wb.sheets}


# ----------------------------------------------------------------- the graph


def _precedents(wb: Workbook, host: CellRef, ast: Node) -> set:
    found = set()
    for item in collect_refs(ast):
        if isinstance(item, CellRef):
            key = wb.resolve(item, host.sheet)
            if key is not None:
                found.add(key)
        else:
            keys = wb.block(item.start, item.end, host.sheet)
            if keys is not None:
                found.update(keys)
    return found


def build_dep_graph(wb: Workbook) -> DepGraph:
    """Order formula cells so precedents come first.

    Ties are broken by sheet order then row-major position, which fixes the
    order RAND draws from its stream. Cells never released by the ordering
    are exactly those on a cycle or downstream of one.
    """
    position = {s.name: i for i, s in enumerate(wb.sheets)}
    edges, formulas = {}, {}
    uses_rand = False
    for ref, cell in wb.formula_cells():
        formulas[ref] = cell.ast
        edges[ref] = frozenset(_precedents(wb, ref, cell.ast))
        uses_rand = uses_rand or calls(cell.ast, "RAND")

    dependents = defaultdict(set)
    waiting = {}
    for ref, pre in edges.items():
        waiting[ref] = sum(1 for p in pre if p in edges)
        for p in pre:
            dependents[p].add(ref)

    def key(ref):
        return (position[ref.sheet], ref.row, ref.col)

    heap = [(key(r), r) for r, n in waiting.items() if n == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, ref = heapq.heappop(heap)
        order.append(ref)
        for dep in dependents.get(ref, ()):
            waiting[dep] -= 1
            if waiting[dep] == 0:
                heapq.heappush(heap, (key(dep), dep))
    cyclic = frozenset(edges) - frozenset(order)
    return DepGraph(
        edges=edges,
        topo_order=order,
        cyclic=cyclic,
        dependents=dict(dependents),
        formulas=formulas,
        uses_rand=uses_rand,
    )


def _cell_order(ref: CellRef):
    return (ref.sheet, ref.row, ref.col)


def find_cycles(graph: DepGraph) -> list[list[CellRef]]:
    """Strongly connected components that form actual cycles.

    Only cells in ``graph.cyclic`` are searched; cells that are merely
    downstream of a cycle are not reported.
    """
    nodes = graph.cyclic
    index, low, on_stack = {}, {}, set()
    stack, cycles = [], []
    counter = 0
    for root in sorted(nodes, key=_cell_order):
        if root in index:
            continue
        work = [(root, iter(sorted((p for p in graph.edges[root] if p in nodes), key=_cell_order)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted((p for p in graph.edges[nxt] if p in nodes), key=_cell_order))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp.append(member)
                    if member == node:
                        break
                if len(comp) > 1 or node in graph.edges[node]:
                    cycles.append(sorted(comp, key=_cell_order))
    return cycles


# ---------------------------------------------------------------- evaluation


class _Evaluator:
    def __init__(self, env: Callable, rng: Optional[random.Random]):
        self.env = env
        self.rng = rng

    def value(self, node):
        kind = type(node)
        if kind is Number or kind is Text or kind is Bool:
            return node.value
        if kind is Ref:
            return self.env(node.ref)
        if kind is Binary:
            return self.binary(node)
        if kind is Call:
            return self.call(node)
        if kind is Unary:
            v = to_number(self.value(node.operand))
            if isinstance(v, CellError):
                return v
            return -v if node.op == "-" else number(v / 100)
        if kind is Range:
            return VALUE
        raise TypeError(f"not a formula node: {node!r}")

    def arg(self, node):
        if type(node) is Ref:
            return RangeArg((self.env(node.ref),))
        if type(node) is Range:
            block = getattr(self.env, "block", None)
            if block is not None:
                return RangeArg(block(node.start, node.end))
            return RangeArg(self.env(m) for m in iter_range(node.start, node.end))
        return self.value(node)

    def binary(self, node: Binary):
        a = self.value(node.left)
        b = self.value(node.right)
        op = node.op
        if op in COMPARISONS:
            return compare_op(op, a, b)
        if op == "&":
            a, b = to_text(a), to_text(b)
            if isinstance(a, CellError):
                return a
            if isinstance(b, CellError):
                return b
            return a + b
        a = to_number(a)
        if isinstance(a, CellError):
            return a
        b = to_number(b)
        if isinstance(b, CellError):
            return b
        if op == "+":
            return number(a + b)
        if op == "-":
            return number(a - b)
        if op == "*":
            return number(a * b)
        if op == "/":
            return DIV0 if b == 0 else number(a / b)
        if a == 0 and b < 0:
            return DIV0
        try:
            return number(math.pow(a, b))
        except (ValueError, OverflowError):
            return VALUE

    def call(self, node: Call):
        name, args = node.name, node.args
        if name == "IF":
            if not 2 <= len(args) <= 3:
                return VALUE
            cond = to_bool(self.value(args[0]))
            if isinstance(cond, CellError):
                return cond
            if cond:
                return self.value(args[1])
            return self.value(args[2]) if len(args) == 3 else False
        if name == "RAND":
            if args:
                return VALUE
            if self.rng is None:
                self.rng = random.Random(0)
            return self.rng.random()
        spec = BUILTINS.get(name)
        if spec is None:
            return NAME
        lo, hi, impl = spec
        if len(args) < lo or (hi is not None and len(args) > hi):
            return VALUE
        return impl(*(self.arg(a) for a in args))


def eval_formula(ast: Node, env: Callable[[CellRef], CellValue], rng: Optional[random.Random] = None) -> CellValue:
    """Evaluate an AST.

    ``env`` maps a reference (whose sheet may be None, meaning the hosting
    sheet) to a value. Failures come back as CellError values, never as
    exceptions. A formula never yields BLANK; an empty result reads as 0.
    """
    result = scalar(_Evaluator(env, rng).value(ast))
    return 0.0 if result is BLANK else result


class _Env:
    """Cell lookup for formulas hosted on one sheet."""

    __slots__ = ("wb", "values", "host")

    def __init__(self, wb: Workbook, values: dict, host: str):
        self.wb, self.values, self.host = wb, values, host

    def __call__(self, ref):
        key = self.wb.resolve(ref, self.host)
        if key is None:
            return REF
        return self.values.get(key, BLANK)

    def block(self, start, end):
        keys = self.wb.block(start, end, self.host)
        if keys is None:
            return (REF,) * ((end.row - start.row + 1) * (end.col - start.col + 1))
        get = self.values.get
        return [get(k, BLANK) for k in keys]



def recalc(wb: Workbook, cfg: Optional[EngineConfig] = None, graph: Optional[DepGraph] = None) -> ValueMap:
    """Evaluate every formula cell from scratch."""
    cfg = cfg or EngineConfig()
    graph = graph if graph is not None else build_dep_graph(wb)
    values = ValueMap(sheets=_sheet_index(wb))
    for ref, cell in wb.cells():
        if isinstance(cell, Literal):
            values[ref] = cell.value
    ev = _Evaluator(None, random.Random(cfg.rand_seed))
    for ref in graph.topo_order:
        ev.env = _Env(wb, values, ref.sheet)
        values[ref] = _evaluate(ev, graph.formulas[ref])
    for ref in graph.cyclic:
        values[ref] = CYCLE
    values.recomputed = frozenset(graph.topo_order)
    return values


def _evaluate(ev: _Evaluator, ast: Node) -> CellValue:
    result = scalar(ev.value(ast))
    return 0.0 if result is BLANK else result


def transitive_dependents(graph: DepGraph, cells: Iterable[CellRef]) -> set:
    seen = set()
    stack = list(cells)
    while stack:
        for dep in graph.dependents.get(stack.pop(), ()):
            if dep not in seen:
                seen.add(dep)
                stack.append(dep)
    return seen


def recalc_dirty(
    wb: Workbook,
    changed: Iterable[CellRef],
    prev: ValueMap,
    cfg: Optional[EngineConfig] = None,
    graph: Optional[DepGraph] = None,
) -> ValueMap:
    """Update ``prev`` after literal edits to ``changed``.

    Only the transitive dependents of the edited cells are re-evaluated.
    Workbooks calling RAND are recalculated in full so every draw keeps its
    place in the stream; so are edits that touch formula cells, since those
    change the graph itself.
    """
    keys = [k for k in (wb.resolve(r) for r in changed) if k is not None]
    if graph is None:
        graph = build_dep_graph(wb)
    if any(isinstance(wb.get(k), Formula) or k in graph.formulas for k in keys):
        return recalc(wb, cfg)
    if graph.uses_rand:
        return recalc(wb, cfg, graph)

    values = prev.copy()
    for key in keys:
        v = wb.read(key)
        if v is BLANK:
            values.pop(key, None)
        else:
            values[key] = v
    dirty = transitive_dependents(graph, keys)
    order = sorted((d for d in dirty if d in graph.rank), key=graph.rank.__getitem__)
    ev = _Evaluator(None, None)
    for ref in order:
        ev.env = _Env(wb, values, ref.sheet)
        values[ref] = _evaluate(ev, graph.formulas[ref])
    values.recomputed = frozenset(order)
    return values


# ---------------------------------------------------------------------- fill


def fill_formula(wb: Workbook, src: CellRef, dst) -> Workbook:
    """Copy the formula at ``src`` into every cell of ``dst``, shifting
    relative references by each cell's offset from ``src``.

    ``dst`` is an ``"A1:B2"`` string or a (start, end) pair. All-or-nothing:
    if any copy would reference outside the grid the workbook is left
    untouched and TranslationError is raised.
    """
    src_key = wb.resolve(src)
    if src_key is None:
        raise ParseError(f"no sheet for {src}")
    cell = wb.get(src_key)
    if not isinstance(cell, Formula):
        raise ValueError(f"{src_key} does not hold a formula")
    if isinstance(dst, str):
        start, end = parse_range(dst, None)
    else:
        start, end = dst
    if start.sheet is None:
        start = start.with_sheet(src_key.sheet)
    target_sheet = wb.resolve(start)
    if target_sheet is None:
        raise ParseError(f"no sheet for {start}")
    pending = []
    for target in iter_range(target_sheet, end):
        if target == src_key:
            continue
        ast = translate_refs(cell.ast, target.row - src_key.row, target.col - src_key.col)
        text = print_formula(ast)
        pending.append((target, Formula(text, ast)))
    for target, formula in pending:
        wb.put(target, formula)
    return wb
