"""CSV persistence for benchmark reports."""
from __future__ import annotations

import csv
from pathlib import Path

from .suite import CurveSample, ExperimentReport, ReportRow

TRADEOFF = "tradeoff.csv"
GUARANTEES = "guarantees.csv"
ROW_FIELDS = ("instance", "data", "method", "param", "mean", "worst", "q90", "runtime_s")
CURVE_FIELDS = ("method", "param", "gamma_norm", "bound")


def _fmt(v) -> str:
    return format(v, ".17g") if isinstance(v, float) else str(v)


def _write(path: Path, fields, records) -> None:
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(fields)
            for rec in records:
                writer.writerow([_fmt(getattr(rec, f)) for f in fields])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_csv(report: ExperimentReport, out_dir, curves_only: bool = False) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.sort()
    written = []
    if not curves_only:
        _write(out / TRADEOFF, ROW_FIELDS, report.rows)
        written.append(out / TRADEOFF)
    _write(out / GUARANTEES, CURVE_FIELDS, report.curves)
    written.append(out / GUARANTEES)
    return written


def read_csv(out_dir) -> ExperimentReport:
    out = Path(out_dir)
    report = ExperimentReport()
    path = out / TRADEOFF
    if path.exists():
        with path.open(encoding="utf-8") as fh:
            for r in csv.DictReader(fh):
                report.rows.append(ReportRow(int(r["instance"]), int(r["data"]), r["method"],
                                             *(float(r[k]) for k in ROW_FIELDS[3:])))
    with (out / GUARANTEES).open(encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            report.curves.append(CurveSample(r["method"], *(float(r[k]) for k in CURVE_FIELDS[1:])))
    return report.sort()
