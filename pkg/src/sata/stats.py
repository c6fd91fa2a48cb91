"""Post-schedule statistics rows and CSV/JSON report emission."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, fields

from .cost import SimReport
from .errors import ReportFormatError
from .scheduler import Schedule
from .sorter import HeadType

REPORT_FORMAT = "sata-report"
REPORT_VERSION = 1

_FLOAT_PRECISION = 6


@dataclass
class StatsRow:
    """One workload's summary; field order fixes the CSV column order."""

    label: str
    n: int
    n_heads: int
    k: int | None
    s_f: int
    glob_q_fraction: float
    glob_head_fraction: float
    avg_s_h_fraction: float
    avg_s_h_decrements: float
    mac_reduction_fraction: float
    throughput_gain_dense: float
    throughput_gain_pruned: float
    energy_gain_dense: float
    energy_gain_pruned: float
    sched_overhead_fraction: float
    utilization: float


def collect_stats(
    schedule: Schedule, report: SimReport, *, label: str = "", k: int | None = None
) -> StatsRow:
    """Aggregate sorter/scheduler/cost results into one row.

    Fractions are reported in [0, 1]; the CLI renders percents.
    """
    subs = schedule.subheads
    total_q = sum(s.n_q for s in subs)
    glob_q = sum(s.counts[2] for s in (sub.outcome for sub in subs))
    locals_ = [s for s in subs if s.outcome.head_type is not HeadType.GLOB]
    dense_pairs = schedule.n_heads * schedule.seq_len * schedule.seq_len
    return StatsRow(
        label=label,
        n=schedule.seq_len,
        n_heads=schedule.n_heads,
        k=k,
        s_f=schedule.s_f,
        glob_q_fraction=glob_q / total_q if total_q else 0.0,
        glob_head_fraction=(len(subs) - len(locals_)) / len(subs) if subs else 0.0,
        avg_s_h_fraction=(
            sum(s.outcome.s_h / s.n_k for s in locals_) / len(locals_) if locals_ else 0.0
        ),
        avg_s_h_decrements=(
            sum(s.outcome.decrements for s in subs) / len(subs) if subs else 0.0
        ),
        mac_reduction_fraction=1.0 - report.scheduled_mac_pairs / dense_pairs,
        throughput_gain_dense=report.throughput_gain_dense,
        throughput_gain_pruned=report.throughput_gain_pruned,
        energy_gain_dense=report.energy_gain_dense,
        energy_gain_pruned=report.energy_gain_pruned,
        sched_overhead_fraction=(
            report.sched_overhead_latency / report.scheduled_latency
            if report.scheduled_latency > 0
            else 0.0
        ),
        utilization=report.utilization,
    )


def _field_names() -> list[str]:
    return [f.name for f in fields(StatsRow)]


def _format_cell(name: str, value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.{_FLOAT_PRECISION}f}"
    return str(value)


def _json_row(row: StatsRow) -> dict:
    out = {}
    for name, value in asdict(row).items():
        if isinstance(value, float):
            value = round(value, _FLOAT_PRECISION)
        out[name] = value
    return out


def emit_report(rows: list[StatsRow], fmt: str, path: str) -> None:
    """Write rows as CSV (fixed column order) or JSON; 6-decimal floats."""
    if not rows:
        raise ReportFormatError("no rows to emit")
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            names = _field_names()
            writer.writerow(names)
            for row in rows:
                data = asdict(row)
                writer.writerow([_format_cell(n, data[n]) for n in names])
    elif fmt == "json":
        doc = {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "rows": [_json_row(r) for r in rows],
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")
    else:
        raise ReportFormatError(f"unknown report format {fmt!r}")


def _row_from_dict(data: dict, source: str) -> StatsRow:
    names = _field_names()
    if set(data) != set(names):
        raise ReportFormatError(f"{source}: report columns do not match StatsRow fields")
    kwargs = {}
    for f in fields(StatsRow):
        v = data[f.name]
        if f.name == "label":
            kwargs[f.name] = str(v)
        elif f.name == "k":
            kwargs[f.name] = None if v in (None, "") else int(v)
        elif f.name in ("n", "n_heads", "s_f"):
            kwargs[f.name] = int(v)
        else:
            kwargs[f.name] = float(v)
    return StatsRow(**kwargs)


def read_report(path: str) -> list[StatsRow]:
    """Parse a report file previously written by emit_report."""
    if path.endswith(".csv"):
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != _field_names():
                raise ReportFormatError(f"{path}: CSV header does not match StatsRow fields")
            return [_row_from_dict(dict(r), path) for r in reader]
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ReportFormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != REPORT_FORMAT:
        raise ReportFormatError(f"{path}: missing or wrong format marker")
    if doc.get("version") != REPORT_VERSION:
        raise ReportFormatError(f"{path}: unsupported report version {doc.get('version')!r}")
    return [_row_from_dict(r, path) for r in doc.get("rows", [])]
