"""Test-driven development for spreadsheets.

A small workbook model with a formula engine, plus an xUnit-style harness
that substitutes input cells, recalculates, checks outputs and restores the
workbook.
"""

__version__ = "0.1.0"
