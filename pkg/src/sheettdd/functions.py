"""Value coercion, comparison order and the builtin function table.

Functions receive already-evaluated arguments. A range argument (or a bare
cell reference) arrives as a :class:`RangeArg` so that aggregate functions
can treat referenced cells differently from direct scalars, the way
desktop spreadsheets do.
"""

from __future__ import annotations

import math
import random
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation

from .values import (
    BLANK,
    DIV0,
    NAME,
    NUMBER_RE,
    VALUE,
    CellError,
    CellValue,
    number,
    parse_literal,
)


class RangeArg(tuple):
    """Member values of a referenced block, row-major."""


def scalar(arg) -> CellValue:
    """Collapse a one-cell range to its value; wider ranges are #VALUE!."""
    if isinstance(arg, RangeArg):
        return arg[0] if len(arg) == 1 else VALUE
    return arg


def to_number(v) -> CellValue:
    """Arithmetic coercion; returns a float or a CellError."""
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, float):
        return v
    if v is BLANK:
        return 0.0
    if isinstance(v, str):
        text = v.strip()
        if NUMBER_RE.match(text):
            return number(text)
        return VALUE
    if isinstance(v, CellError):
        return v
    return VALUE


def to_bool(v) -> CellValue:
    if isinstance(v, bool):
        return v
    if isinstance(v, float):
        return v != 0
    if v is BLANK:
        return False
    if isinstance(v, str):
        upper = v.strip().upper()
        if upper in ("TRUE", "FALSE"):
            return upper == "TRUE"
        return VALUE
    if isinstance(v, CellError):
        return v
    return VALUE


def format_general(x: float) -> str:
    """Number to text for ``&``: up to 15 significant digits."""
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    text = f"{x:.15g}"
    if "e" in text:
        mant, _, exp = text.partition("e")
        if "." in mant:
            mant = mant.rstrip("0").rstrip(".")
        return f"{mant}e{exp}"
    return text


def to_text(v) -> CellValue:
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        return format_general(v)
    if v is BLANK:
        return ""
    return v


# Numbers < Texts < FALSE < TRUE
def _rank(v) -> int:
    if isinstance(v, bool):
        return 2
    if isinstance(v, str):
        return 1
    return 0


def compare(a, b) -> int:
    """Three-way comparison under the spreadsheet total order.

    Blank stands in as 0, "" or FALSE depending on the other operand; two
    blanks are equal. Text compares case-insensitively. Errors must be
    filtered out by the caller.
    """
    if a is BLANK and b is BLANK:
        return 0
    if a is BLANK:
        a = _blank_like(b)
    elif b is BLANK:
        b = _blank_like(a)
    ra, rb = _rank(a), _rank(b)
    if ra != rb:
        return -1 if ra < rb else 1
    if ra == 1:
        a, b = a.casefold(), b.casefold()
    return (a > b) - (a < b)


def _blank_like(v):
    if isinstance(v, bool):
        return False
    if isinstance(v, str):
        return ""
    return 0.0


_CMP = {
    "=": lambda c: c == 0,
    "<>": lambda c: c != 0,
    "<": lambda c: c < 0,
    "<=": lambda c: c <= 0,
    ">": lambda c: c > 0,
    ">=": lambda c: c >= 0,
}


def compare_op(op: str, a, b) -> CellValue:
    if isinstance(a, CellError):
        return a
    if isinstance(b, CellError):
        return b
    return _CMP[op](compare(a, b))


# ------------------------------------------------------------------ builtins


def _numbers(args):
    """Numbers for SUM-style aggregates, or the first error met.

    Range members contribute only when they are Numbers; direct scalars are
    coerced, and non-numeric direct text is #VALUE!.
    """
    out = []
    for arg in args:
        if isinstance(arg, RangeArg):
            for v in arg:
                if isinstance(v, CellError):
                    return v
                if isinstance(v, float):
                    out.append(v)
        else:
            if isinstance(arg, CellError):
                return arg
            if arg is BLANK:
                continue
            n = to_number(arg)
            if isinstance(n, CellError):
                return n
            out.append(n)
    return out


def fn_sum(*args):
    nums = _numbers(args)
    if isinstance(nums, CellError):
        return nums
    return number(math.fsum(nums))


def fn_average(*args):
    nums = _numbers(args)
    if isinstance(nums, CellError):
        return nums
    if not nums:
        return DIV0
    return number(math.fsum(nums) / len(nums))


def fn_min(*args):
    nums = _numbers(args)
    if isinstance(nums, CellError):
        return nums
    return min(nums) if nums else 0.0


def fn_max(*args):
    nums = _numbers(args)
    if isinstance(nums, CellError):
        return nums
    return max(nums) if nums else 0.0


def fn_count(*args):
    n = 0
    for arg in args:
        members = arg if isinstance(arg, RangeArg) else (arg,)
        n += sum(1 for v in members if isinstance(v, float))
    return float(n)


def _logical(args):
    """Truth values for AND/OR; Blank range members are skipped."""
    out = []
    for arg in args:
        members = arg if isinstance(arg, RangeArg) else (arg,)
        for v in members:
            if isinstance(v, CellError):
                return v
            if v is BLANK:
                continue
            if isinstance(v, str):
                return VALUE
            out.append(v if isinstance(v, bool) else v != 0)
    if not out:
        return VALUE
    return out


def fn_and(*args):
    vals = _logical(args)
    return vals if isinstance(vals, CellError) else all(vals)


def fn_or(*args):
    vals = _logical(args)
    return vals if isinstance(vals, CellError) else any(vals)


def fn_not(x):
    b = to_bool(scalar(x))
    return b if isinstance(b, CellError) else not b


def fn_abs(x):
    n = to_number(scalar(x))
    return n if isinstance(n, CellError) else abs(n)


def fn_round(x, digits):
    n = to_number(scalar(x))
    if isinstance(n, CellError):
        return n
    d = to_number(scalar(digits))
    if isinstance(d, CellError):
        return d
    places = int(d)
    if places > 15:
        return n
    try:
        quantum = Decimal(1).scaleb(-places)
        return number(Decimal(repr(n)).quantize(quantum, rounding=ROUND_HALF_UP))
    except InvalidOperation:
        return VALUE


def _criterion(crit):
    """Split a COUNTIF criterion into (operator, operand value)."""
    if isinstance(crit, str):
        for op in ("<=", ">=", "<>", "<", ">", "="):
            if crit.startswith(op):
                rest = crit[len(op) :]
                return op, (parse_literal(rest) if rest else BLANK)
        return "=", parse_literal(crit) if crit else BLANK
    return "=", crit


def _matches(op: str, target, v) -> bool:
    if target is BLANK:
        if op == "=":
            return v is BLANK or v == ""
        if op == "<>":
            return not (v is BLANK or v == "")
        return False
    if isinstance(v, CellError) or v is BLANK:
        return op == "<>"
    if type(v) is not type(target):
        return op == "<>"
    return _CMP[op](compare(v, target))


def fn_countif(rng, crit):
    if not isinstance(rng, RangeArg):
        return VALUE
    crit = scalar(crit)
    if isinstance(crit, CellError):
        return crit
    op, target = _criterion(crit)
    return float(sum(1 for v in rng if _matches(op, target, v)))


def fn_rand(rng: random.Random):
    return rng.random()


# name -> (min args, max args or None, implementation)
BUILTINS = {
    "AND": (1, None, fn_and),
    "OR": (1, None, fn_or),
    "NOT": (1, 1, fn_not),
    "SUM": (1, None, fn_sum),
    "AVERAGE": (1, None, fn_average),
    "MIN": (1, None, fn_min),
    "MAX": (1, None, fn_max),
    "COUNT": (1, None, fn_count),
    "ABS": (1, 1, fn_abs),
    "ROUND": (2, 2, fn_round),
    "COUNTIF": (2, 2, fn_countif),
}

# Evaluated by the engine itself: IF needs lazy branches, RAND the stream.
SPECIAL = {"IF": (2, 3), "RAND": (0, 0)}


def call_builtin(name: str, args, rng: random.Random | None = None) -> CellValue:
    """Apply builtin ``name`` to evaluated arguments.

    ``IF`` is accepted here with eager arguments for completeness; the
    evaluator short-circuits it instead of calling this.
    """
    if name == "IF":
        if not 2 <= len(args) <= 3:
            return VALUE
        cond = to_bool(scalar(args[0]))
        if isinstance(cond, CellError):
            return cond
        if cond:
            return scalar(args[1])
        return scalar(args[2]) if len(args) == 3 else False
    if name == "RAND":
        if args:
            return VALUE
        return fn_rand(rng if rng is not None else random.Random(0))
    spec = BUILTINS.get(name)
    if spec is None:
        return NAME
    lo, hi, impl = spec
    if len(args) < lo or (hi is not None and len(args) > hi):
        return VALUE
    return impl(*args)
