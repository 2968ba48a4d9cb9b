"""Coverage maps: each sheet drawn as a grid, formula cells coloured by
test status."""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.colors import BoundaryNorm, ListedColormap
from matplotlib.figure import Figure
from matplotlib.patches import Patch

from .refs import col_to_letters
from .workbook import Formula, Workbook

# code -> (label, colour)
_CODES = [
    ("empty", "#ffffff"),
    ("literal", "#dbe4f0"),
    ("untested", "#a6a6a6"),
    ("green", "#2ca02c"),
    ("red", "#d62728"),
]
_STATUS_CODE = {"untested": 2, "green": 3, "red": 4}


def _ticks(n: int, limit: int = 30):
    step = max(1, -(-n // limit))
    return list(range(0, n, step))


def sheet_grid(wb: Workbook, sheet_name: str, statuses: dict) -> np.ndarray:
    """Integer code per cell of the sheet's used area."""
    sheet = wb.sheet(sheet_name)
    if not sheet.cells:
        return np.zeros((1, 1), dtype=int)
    rows = max(r for r, _ in sheet.cells)
    cols = max(c for _, c in sheet.cells)
    grid = np.zeros((rows, cols), dtype=int)
    for (r, c), cell in sheet.cells.items():
        if isinstance(cell, Formula):
            grid[r - 1, c - 1] = _STATUS_CODE[statuses.get((sheet.name, r, c), "untested")]
        else:
            grid[r - 1, c - 1] = 1
    return grid


def plot_coverage(wb: Workbook, cov, path, title: str = "Formula coverage", dpi: int = 120):
    """Write a PNG/PDF/SVG (by extension) with one panel per sheet."""
    statuses = {(e.cell.sheet, e.cell.row, e.cell.col): e.status for e in cov.entries}
    sheets = [s.name for s in wb.sheets]
    fig = Figure(figsize=(6.4, 3.2 * len(sheets) + 0.6))
    FigureCanvasAgg(fig)
    cmap = ListedColormap([colour for _, colour in _CODES])
    norm = BoundaryNorm(np.arange(-0.5, len(_CODES)), cmap.N)
    axes = fig.subplots(len(sheets), 1, squeeze=False)[:, 0]
    for ax, name in zip(axes, sheets):
        grid = sheet_grid(wb, name, statuses)
        ax.imshow(grid, cmap=cmap, norm=norm, interpolation="nearest", aspect="auto")
        nrows, ncols = grid.shape
        xt, yt = _ticks(ncols), _ticks(nrows)
        ax.set_xticks(xt, [col_to_letters(i + 1) for i in xt], fontsize=7)
        ax.set_yticks(yt, [str(i + 1) for i in yt], fontsize=7)
        ax.xaxis.tick_top()
        ax.set_xticks(np.arange(-0.5, ncols), minor=True)
        ax.set_yticks(np.arange(-0.5, nrows), minor=True)
        ax.grid(which="minor", color="#e0e0e0", linewidth=0.4)
        ax.tick_params(which="minor", length=0)
        ax.set_title(name, fontsize=9, loc="left")
    handles = [Patch(facecolor=c, edgecolor="#808080", label=l) for l, c in _CODES[1:]]
    fig.legend(handles=handles, loc="lower center", ncol=len(handles), fontsize=7, frameon=False)
    fig.suptitle(
        f"{title}: {cov.green} green, {cov.red} red, {cov.untested} untested",
        fontsize=10,
    )
    fig.tight_layout(rect=(0, 0.05, 1, 0.97))
    fig.savefig(path, dpi=dpi)
    return fig
