import pytest

from fsrsole.detector import LIFTING, LOWERING, ActivityEvent
from fsrsole.estimation import WeightSample
from fsrsole.report import (
    EventRecord,
    ReportError,
    build_report,
    events_to_records,
    load_events_jsonl,
    render_error_figure,
    render_timeline_figure,
    report_to_csv,
    report_to_text,
    save_events_jsonl,
)
from fsrsole.traces import GroundTruth, TraceFormatError, TruthEvent


def lift_cycle_truth(base, load, times):
    events = []
    for t_lift, t_lower in times:
        events.append(TruthEvent(LIFTING, t_lift, load))
        events.append(TruthEvent(LOWERING, t_lower, load))
    return GroundTruth(base_kg=base, events=tuple(events))


# The two hardware sessions used as report fixtures: an 18.6 kg load
# against an 82.95 kg wearer, and a 9.3 kg load against 84.86 kg.
HEAVY_TRUTH = lift_cycle_truth(82.95, 18.6, [(10000, 20000), (30000, 40000), (50000, 60000)])
HEAVY_RECORDS = [
    EventRecord(LIFTING, 10400, 17.35, 82.95),
    EventRecord(LOWERING, 20400, None, 80.64),
    EventRecord(LIFTING, 30400, 17.45, 82.95),
    EventRecord(LOWERING, 40400, None, 80.46),
    EventRecord(LIFTING, 50400, 20.75, 82.95),
    EventRecord(LOWERING, 60400, None, 80.17),
]

LIGHT_TRUTH = GroundTruth(
    base_kg=84.86,
    events=(
        TruthEvent(LIFTING, 10000, 9.3),
        TruthEvent(LIFTING, 30000, 9.3),
        TruthEvent(LIFTING, 50000, 9.3),
    ),
)
LIGHT_RECORDS = [
    EventRecord(LIFTING, 10400, 8.43, 84.86),
    EventRecord(LIFTING, 30400, 7.59, 84.86),
    EventRecord(LIFTING, 50400, 7.95, 84.86),
]


class TestEventRecords:
    def test_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "events.jsonl"
        save_events_jsonl(path, HEAVY_RECORDS)
        assert load_events_jsonl(path) == HEAVY_RECORDS

    def test_bad_line_is_named(self, tmp_path):
        path = tmp_path / "events.jsonl"
        path.write_text('{"kind": "LIFTING", "t_ms": 1, "lifted_kg": 2, "base_kg": 3}\nnope\n')
        with pytest.raises(TraceFormatError, match="line 2"):
            load_events_jsonl(path)

    def test_from_detector_events(self):
        events = [
            ActivityEvent(LIFTING, 1000, 18.5),
            ActivityEvent(LOWERING, 2000, None),
        ]
        records = events_to_records(events, base_kg=83.2)
        assert records[0].lifted_kg == 18.5
        assert records[1].lifted_kg is None
        assert all(r.base_kg == 83.2 for r in records)


class TestBuildReport:
    def test_heavy_session_passes_at_default_tolerances(self):
        report = build_report(HEAVY_RECORDS, HEAVY_TRUTH)
        assert report.passed
        errors = [round(r.error_pct, 2) for r in report.lift_rows]
        assert errors == [-6.72, -6.18, 11.56]
        lower_rows = [r for r in report.base_rows if r.kind == LOWERING]
        assert [round(r.error_pct, 2) for r in lower_rows] == [-2.78, -3.0, -3.35]

    def test_light_session_fails_at_fifteen_percent(self):
        report = build_report(LIGHT_RECORDS, LIGHT_TRUTH)
        assert not report.passed
        errors = [round(r.error_pct, 2) for r in report.lift_rows]
        assert errors == [-9.35, -18.39, -14.52]
        verdicts = [r.within_tolerance for r in report.lift_rows]
        assert verdicts == [True, False, True]

    def test_light_session_passes_at_twenty_percent(self):
        report = build_report(LIGHT_RECORDS, LIGHT_TRUTH, lift_tolerance_pct=20.0)
        assert report.passed

    def test_kind_sequence_must_match(self):
        swapped = list(HEAVY_RECORDS)
        swapped[0], swapped[1] = (
            EventRecord(LOWERING, 10400, None, 82.95),
            EventRecord(LIFTING, 20400, 17.35, 82.95),
        )
        with pytest.raises(ReportError, match="sequence"):
            build_report(swapped, HEAVY_TRUTH)

    def test_missing_event_rejected(self):
        with pytest.raises(ReportError):
            build_report(HEAVY_RECORDS[:-1], HEAVY_TRUTH)

    def test_lift_without_estimate_rejected(self):
        records = [EventRecord(LIFTING, 10400, None, 82.95)]
        truth = GroundTruth(82.95, (TruthEvent(LIFTING, 10000, 18.6),))
        with pytest.raises(ReportError):
            build_report(records, truth)

    def test_base_tolerance_applies_to_every_event(self):
        records = [EventRecord(LIFTING, 10400, 18.6, 95.0)]
        truth = GroundTruth(82.95, (TruthEvent(LIFTING, 10000, 18.6),))
        report = build_report(records, truth)
        assert not report.passed
        assert not report.base_rows[0].within_tolerance


class TestRendering:
    def test_csv_layout(self):
        report = build_report(HEAVY_RECORDS, HEAVY_TRUTH)
        lines = report_to_csv(report).splitlines()
        assert lines[0].startswith("row,kind,truth_t_ms")
        # 3 lift rows + 6 base rows + header
        assert len(lines) == 10
        assert lines[1].startswith("lift,LIFTING,10000,10400,18.6,17.35,-6.72")
        assert lines[-1].endswith("true")

    def test_text_summary_mentions_result(self):
        report = build_report(LIGHT_RECORDS, LIGHT_TRUTH)
        text = report_to_text(report)
        assert "result: FAIL" in text
        assert "-18.39%" in text

    def test_error_figure_renders(self, tmp_path):
        report = build_report(HEAVY_RECORDS, HEAVY_TRUTH)
        path = tmp_path / "errors.png"
        render_error_figure(report, path)
        assert path.stat().st_size > 1000

    def test_timeline_figure_renders(self, tmp_path):
        samples = [
            WeightSample(t_ms=t, total_kg=83.0 + (18.6 if 10000 <= t < 20000 else 0.0), per_channel_n=())
            for t in range(0, 60000, 100)
        ]
        path = tmp_path / "timeline.png"
        render_timeline_figure(samples, HEAVY_RECORDS, HEAVY_TRUTH, path)
        assert path.stat().st_size > 1000
