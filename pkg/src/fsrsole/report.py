"""Scoring detected events against ground truth, with CSV and figure output.

A run report lines detected events up with the scripted ones in order,
checks that the kinds match, and scores the lifted-weight estimate of
each lift (relative to the scripted load) and the detector's base
weight (relative to the scripted subject weight).  Percentages are
signed: positive means overestimate.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from typing import Sequence

from .detector import LIFTING, ActivityEvent
from .estimation import WeightSample
from .fileio import atomic_write_text
from .traces import GroundTruth, TraceFormatError


class ReportError(ValueError):
    """Raised when events cannot be scored against the truth."""


@dataclass(frozen=True)
class EventRecord:
    """One detected event as stored in an events file."""

    kind: str
    t_ms: int
    lifted_kg: float | None
    base_kg: float

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "t_ms": self.t_ms,
                "lifted_kg": self.lifted_kg,
                "base_kg": self.base_kg,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json_line(cls, line: str) -> "EventRecord":
        doc = json.loads(line)
        lifted = doc["lifted_kg"]
        return cls(
            kind=str(doc["kind"]),
            t_ms=int(doc["t_ms"]),
            lifted_kg=None if lifted is None else float(lifted),
            base_kg=float(doc["base_kg"]),
        )


def events_to_records(events: Sequence[ActivityEvent], base_kg: float) -> list[EventRecord]:
    return [
        EventRecord(
            kind=e.kind,
            t_ms=round(e.t_ms),
            lifted_kg=e.lifted_kg if e.kind == LIFTING else None,
            base_kg=base_kg,
        )
        for e in events
    ]


def save_events_jsonl(path: str | os.PathLike[str], records: Sequence[EventRecord]) -> None:
    atomic_write_text(path, "".join(r.to_json_line() + "\n" for r in records))


def load_events_jsonl(path: str | os.PathLike[str]) -> list[EventRecord]:
    name = os.fspath(path)
    records = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(EventRecord.from_json_line(line))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise TraceFormatError(f"{name}: line {line_no}: {exc}") from exc
    return records


@dataclass(frozen=True)
class ScoredEvent:
    """One event pair: what was scripted and what the detector said."""

    kind: str
    truth_t_ms: int
    detected_t_ms: int
    truth_kg: float
    detected_kg: float
    error_pct: float
    within_tolerance: bool


@dataclass(frozen=True)
class RunReport:
    """Full scoring of one detection run."""

    lift_rows: tuple[ScoredEvent, ...]
    base_rows: tuple[ScoredEvent, ...]
    lift_tolerance_pct: float
    base_tolerance_pct: float
    passed: bool


def _signed_error_pct(detected: float, truth: float) -> float:
    return (detected - truth) / truth * 100.0


def build_report(
    records: Sequence[EventRecord],
    truth: GroundTruth,
    *,
    lift_tolerance_pct: float = 15.0,
    base_tolerance_pct: float = 5.0,
) -> RunReport:
    """Score detected events against the scripted truth.

    The detected kind sequence must match the scripted one exactly;
    anything else (missed or spurious events, swapped kinds) raises
    :class:`ReportError` rather than producing a partial score.
    """
    detected_kinds = [r.kind for r in records]
    truth_kinds = [e.kind for e in truth.events]
    if detected_kinds != truth_kinds:
        raise ReportError(
            f"event sequence mismatch: detected {detected_kinds or '(none)'}, "
            f"expected {truth_kinds or '(none)'}"
        )
    lift_rows = []
    base_rows = []
    for rec, ev in zip(records, truth.events):
        if rec.kind == LIFTING:
            if rec.lifted_kg is None:
                raise ReportError(f"lift at t={rec.t_ms} ms carries no weight estimate")
            err = _signed_error_pct(rec.lifted_kg, ev.load_kg)
            lift_rows.append(
                ScoredEvent(
                    kind=rec.kind,
                    truth_t_ms=ev.t_ms,
                    detected_t_ms=rec.t_ms,
                    truth_kg=ev.load_kg,
                    detected_kg=rec.lifted_kg,
                    error_pct=err,
                    within_tolerance=abs(err) <= lift_tolerance_pct,
                )
            )
        base_err = _signed_error_pct(rec.base_kg, truth.base_kg)
        base_rows.append(
            ScoredEvent(
                kind=rec.kind,
                truth_t_ms=ev.t_ms,
                detected_t_ms=rec.t_ms,
                truth_kg=truth.base_kg,
                detected_kg=rec.base_kg,
                error_pct=base_err,
                within_tolerance=abs(base_err) <= base_tolerance_pct,
            )
        )
    passed = all(r.within_tolerance for r in lift_rows) and all(
        r.within_tolerance for r in base_rows
    )
    return RunReport(
        lift_rows=tuple(lift_rows),
        base_rows=tuple(base_rows),
        lift_tolerance_pct=lift_tolerance_pct,
        base_tolerance_pct=base_tolerance_pct,
        passed=passed,
    )


REPORT_CSV_HEADER = (
    "row",
    "kind",
    "truth_t_ms",
    "detected_t_ms",
    "truth_kg",
    "detected_kg",
    "error_pct",
    "tolerance_pct",
    "within_tolerance",
)


def report_to_csv(report: RunReport) -> str:
    """The report as delimited rows, lifts first, then base checks."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_CSV_HEADER)
    for label, rows, tol in (
        ("lift", report.lift_rows, report.lift_tolerance_pct),
        ("base", report.base_rows, report.base_tolerance_pct),
    ):
        for row in rows:
            writer.writerow(
                (
                    label,
                    row.kind,
                    row.truth_t_ms,
                    row.detected_t_ms,
                    f"{row.truth_kg:.6g}",
                    f"{row.detected_kg:.6g}",
                    f"{row.error_pct:.3f}",
                    f"{tol:.3f}",
                    str(row.within_tolerance).lower(),
                )
            )
    return buf.getvalue()


def report_to_text(report: RunReport) -> str:
    """A short human-readable summary table."""
    lines = []
    if report.lift_rows:
        lines.append(f"lifted weight (tolerance {report.lift_tolerance_pct:g}%):")
        for i, row in enumerate(report.lift_rows, start=1):
            status = "ok" if row.within_tolerance else "FAIL"
            lines.append(
                f"  lift {i}: {row.detected_kg:7.2f} kg vs {row.truth_kg:7.2f} kg"
                f"  ({row.error_pct:+.2f}%)  {status}"
            )
    lines.append(f"base weight (tolerance {report.base_tolerance_pct:g}%):")
    for row in report.base_rows:
        status = "ok" if row.within_tolerance else "FAIL"
        lines.append(
            f"  at t={row.detected_t_ms} ms: {row.detected_kg:7.2f} kg vs "
            f"{row.truth_kg:7.2f} kg  ({row.error_pct:+.2f}%)  {status}"
        )
    lines.append("result: PASS" if report.passed else "result: FAIL")
    return "\n".join(lines) + "\n"


def _use_agg() -> None:
    import matplotlib

    matplotlib.use("Agg")


def render_error_figure(report: RunReport, path: str | os.PathLike[str]) -> None:
    """Bar chart of signed errors against the tolerance bands."""
    _use_agg()
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 4), sharey=False)
    for ax, rows, tol, title in (
        (axes[0], report.lift_rows, report.lift_tolerance_pct, "lifted weight"),
        (axes[1], report.base_rows, report.base_tolerance_pct, "base weight"),
    ):
        xs = range(1, len(rows) + 1)
        errs = [r.error_pct for r in rows]
        colors = ["tab:green" if r.within_tolerance else "tab:red" for r in rows]
        ax.bar(xs, errs, color=colors)
        ax.axhspan(-tol, tol, color="tab:gray", alpha=0.2)
        ax.axhline(0.0, color="black", linewidth=0.8)
        ax.set_title(title)
        ax.set_xlabel("event")
        ax.set_ylabel("error (%)")
        ax.set_xticks(list(xs))
        limit = max([tol * 1.5] + [abs(e) * 1.2 for e in errs]) or 1.0
        ax.set_ylim(-limit, limit)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_timeline_figure(
    samples: Sequence[WeightSample],
    records: Sequence[EventRecord],
    truth: GroundTruth | None,
    path: str | os.PathLike[str],
) -> None:
    """Weight-over-time plot with detected (and scripted) event markers."""
    _use_agg()
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(10, 4))
    ts = [s.t_ms / 1000.0 for s in samples]
    ws = [s.total_kg for s in samples]
    ax.plot(ts, ws, color="tab:blue", linewidth=1.0, label="smoothed weight")
    if truth is not None:
        ax.axhline(truth.base_kg, color="tab:gray", linestyle=":", label="true base")
        for ev in truth.events:
            ax.axvline(ev.t_ms / 1000.0, color="tab:gray", alpha=0.4, linestyle="--")
    seen: set[str] = set()
    for rec in records:
        color = "tab:green" if rec.kind == LIFTING else "tab:orange"
        label = rec.kind if rec.kind not in seen else None
        seen.add(rec.kind)
        ax.axvline(rec.t_ms / 1000.0, color=color, alpha=0.8, label=label)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("weight (kg)")
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
