"""Result files: per-run rows, per-cell aggregates, and plot-ready series.

Everything except the two timing files is a pure function of (config, base
seed), so repeated sweeps produce byte-identical output.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from .experiment import CellSummary, RunResult, aggregate

RESULT_FIELDS = ["replication", "seed", "erlangs", "kappa", "algorithm", "cost_no_migration",
                 "cost_optimal", "cost_after", "saving", "accepted", "rejected", "migrated_vms",
                 "demand_vms", "background_requests", "drops", "termination"]
TIMING_FIELDS = ["replication", "seed", "erlangs", "kappa", "algorithm", "wall_time"]
AGGREGATE_FIELDS = ["algorithm", "kappa", "erlangs", "n", "mean_cost_no_migration",
                    "mean_cost_after", "stderr_cost_after", "saving", "mean_accepted",
                    "mean_migrated_vms", "mean_drops"]
FORMATS = ("csv", "json")


def _fmt(value):
    if isinstance(value, float):
        return repr(round(value, 10))
    return value


def result_row(r: RunResult) -> dict:
    row = {name: getattr(r, name) for name in RESULT_FIELDS}
    return {k: _fmt(v) for k, v in row.items()}


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(row[h]) for h in header])
    return path


def _series(summary: Sequence[CellSummary], value: str) -> tuple[list[str], list[dict]]:
    """Wide table: one row per load, one column per (algorithm, kappa)."""
    columns = sorted({(s.algorithm, s.kappa) for s in summary})
    header = ["erlangs", "no_migration"] + [f"{a}_k{k}" for a, k in columns]
    rows = []
    for erlangs in sorted({s.erlangs for s in summary}):
        cells = {(s.algorithm, s.kappa): s for s in summary if s.erlangs == erlangs}
        row = {"erlangs": erlangs,
               "no_migration": next(iter(cells.values())).mean_cost_no_migration}
        for a, k in columns:
            cell = cells.get((a, k))
            row[f"{a}_k{k}"] = getattr(cell, value) if cell else ""
        rows.append(row)
    return header, rows


def emit(results: Sequence[RunResult], out_dir: str | Path, format: str = "csv") -> list[Path]:
    """Write the result set under ``out_dir``; returns the files written."""
    if format not in FORMATS:
        raise ValueError(f"unknown output format {format!r}; choose from {FORMATS}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = aggregate(results)

    if format == "json":
        path = out / "results.json"
        payload = {"runs": [result_row(r) for r in results],
                   "aggregate": [{k: _fmt(v) for k, v in asdict(s).items() if k != "mean_wall_time"}
                                 for s in summary]}
        path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
        return [path]

    written = [
        _write_csv(out / "results.csv", RESULT_FIELDS, (result_row(r) for r in results)),
        _write_csv(out / "aggregate.csv", AGGREGATE_FIELDS, (asdict(s) for s in summary)),
        _write_csv(out / "timing.csv", TIMING_FIELDS,
                   ({k: getattr(r, k) for k in TIMING_FIELDS} for r in results)),
    ]
    header, rows = _series(summary, "mean_cost_after")
    written.append(_write_csv(out / "plot_cost_vs_load.csv", header, rows))
    header, rows = _series(summary, "mean_wall_time")
    written.append(_write_csv(out / "plot_runtime_vs_load.csv", header, rows))

    # overall comparison at each kappa, pooled over loads
    pooled = []
    for alg, kappa in sorted({(r.algorithm, r.kappa) for r in results}):
        rows_ = [r for r in results if r.algorithm == alg and r.kappa == kappa]
        base = sum(r.cost_no_migration for r in rows_)
        after = sum(r.cost_after for r in rows_)
        pooled.append({"algorithm": alg, "kappa": kappa, "n": len(rows_),
                       "mean_cost_no_migration": base / len(rows_),
                       "mean_cost_after": after / len(rows_),
                       "saving": 1.0 - after / base if base else 0.0})
    written.append(_write_csv(out / "plot_cost_comparison.csv",
                              ["algorithm", "kappa", "n", "mean_cost_no_migration",
                               "mean_cost_after", "saving"], pooled))
    return written
