"""Serialization of size tables, test reports and audit reports.

CSV is the machine-readable exchange format (stable column set, shortest
round-trip float repr, deterministic row order); JSON carries the same
content plus metadata; the pretty table is for terminals, one row
per (k, n) cell with four decimals.
"""

from __future__ import annotations

import dataclasses
import json
import math
from io import StringIO

from .montecarlo import CellCounts, SimulationConfig, SizeTable
from .restrictions import ConditionReport
from .statistics import TestReport

CSV_HEADER = "k,n,statistic,rejections,valid_reps,excluded,empirical_size"


def _cell_rows(table: SizeTable):
    cfg = table.config
    for k in cfg.k_list:
        for n in cfg.n_list:
            for name in cfg.statistics:
                yield k, n, name, table.counts(k, n, name)


def size_table_to_csv(table: SizeTable) -> str:
    out = StringIO()
    out.write(CSV_HEADER + "\n")
    for k, n, name, cc in _cell_rows(table):
        size = repr(cc.empirical_size) if cc.valid else "nan"
        out.write(f"{k},{n},{name},{cc.rejections},{cc.valid},{cc.excluded},{size}\n")
    return out.getvalue()


def parse_size_csv(text: str) -> dict[tuple[int, int, str], CellCounts]:
    """Parse the CSV back into counts (round-trip inverse of the writer)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("unrecognized size-table CSV header")
    cells: dict[tuple[int, int, str], CellCounts] = {}
    for ln in lines[1:]:
        k, n, name, rej, valid, excl, size = ln.split(",")
        cc = CellCounts(rejections=int(rej), valid=int(valid), excluded=int(excl))
        parsed = float(size)
        if cc.valid and not math.isclose(
            parsed, cc.empirical_size, rel_tol=0.0, abs_tol=0.0
        ):
            raise ValueError(f"inconsistent empirical_size in row: {ln}")
        cells[(int(k), int(n), name)] = cc
    return cells


def size_table_to_json(table: SizeTable) -> str:
    cfg = table.config
    payload = {
        "config": dataclasses.asdict(cfg),
        "cells": [
            {
                "k": k,
                "n": n,
                "statistic": name,
                "rejections": cc.rejections,
                "valid_reps": cc.valid,
                "excluded": cc.excluded,
                "empirical_size": cc.empirical_size if cc.valid else None,
            }
            for k, n, name, cc in _cell_rows(table)
        ],
        "meta": [
            {"k": k, "n": n, **info} for (k, n), info in sorted(table.meta.items())
        ],
    }
    return json.dumps(payload, indent=2)


def format_pretty_table(table: SizeTable) -> str:
    """Terminal rendering grouped by k, one row per sample size."""
    cfg = table.config
    stats = cfg.statistics
    width = max(12, max(len(s) for s in stats) + 2)
    header = f"{'k':>5} {'n':>6}" + "".join(f"{s:>{width}}" for s in stats)
    lines = [header, "-" * len(header)]
    for k in cfg.k_list:
        for i, n in enumerate(cfg.n_list):
            klabel = str(k) if i == 0 else ""
            row = f"{klabel:>5} {n:>6}"
            for name in stats:
                cc = table.counts(k, n, name)
                cell = f"{cc.empirical_size:.4f}" if cc.valid else "--"
                row += f"{cell:>{width}}"
            lines.append(row)
        lines.append("")
    notes = []
    for (k, n), info in sorted(table.meta.items()):
        excluded = max(cc.excluded for cc in
                       (table.counts(k, n, s) for s in stats))
        if excluded or info.get("fit_failures"):
            notes.append(
                f"  (k={k}, n={n}): {excluded} excluded replication(s), "
                f"{info.get('branch_negative', 0)} negative-branch fit(s), "
                f"{info.get('fit_failures', 0)} fit failure(s)"
            )
    if notes:
        lines.append("exclusions:")
        lines.extend(notes)
    return "\n".join(lines).rstrip() + "\n"


def test_reports_to_json(reports: list[TestReport]) -> str:
    return json.dumps(
        [
            {
                "name": r.name,
                "value": r.value,
                "df": r.df,
                "p_value": r.p_value,
                "diagnostics": r.diagnostics,
            }
            for r in reports
        ],
        indent=2,
    )


def condition_report_to_json(report: ConditionReport) -> str:
    return json.dumps(
        [
            {
                "condition": c.condition,
                "residual": c.residual,
                "tolerance": c.tolerance,
                "pass": c.passed,
            }
            for c in report.checks
        ],
        indent=2,
    )


def config_from_mapping(data: dict) -> SimulationConfig:
    """Build a SimulationConfig from a flat mapping, rejecting unknown keys."""
    known = {f.name for f in dataclasses.fields(SimulationConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    coerced = dict(data)
    for key in ("k_list", "n_list", "statistics", "theta0"):
        if key in coerced:
            coerced[key] = tuple(coerced[key])
    return SimulationConfig(**coerced)
