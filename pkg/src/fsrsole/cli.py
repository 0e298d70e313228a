"""Command-line front end: calibrate, simulate, detect, report.

Typical round trip:

    fsrsole calibrate --input points.csv --out curves.json --equalize
    fsrsole simulate --spec scenarios/lift_18kg_x3.json --curves curves.json \
        --out trace.csv --truth truth.json
    fsrsole detect --trace trace.csv --curves curves.json --base auto \
        --out events.jsonl
    fsrsole report --events events.jsonl --truth truth.json --out-dir report/

Exit status: 0 on success (report: all rows within tolerance), 1 when a
report finds rows outside tolerance, 2 on bad input or usage.  Set
FSR_LOG=debug or FSR_LOG=info for progress logging on stderr.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import calibration, report as report_mod, traces
from .calibration import CalibrationError, CurveStore
from .estimation import BaselineError, ConfigurationError
from .fileio import atomic_write_text
from .traces import TraceFormatError

log = logging.getLogger("fsrsole")

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_INPUT = 2


class CliError(Exception):
    """Usage or input problem; maps to exit status 2."""


def _configure_logging() -> None:
    level_name = os.environ.get("FSR_LOG", "").strip().lower()
    if not level_name:
        return
    levels = {"debug": logging.DEBUG, "info": logging.INFO}
    if level_name not in levels:
        print(f"warning: FSR_LOG={level_name!r} not understood; use debug or info",
              file=sys.stderr)
        return
    logging.basicConfig(
        level=levels[level_name],
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _load_curves(path: str) -> CurveStore:
    try:
        return calibration.load_curve_store(path)
    except FileNotFoundError as exc:
        raise CliError(f"curves file not found: {path}") from exc
    except CalibrationError as exc:
        raise CliError(str(exc)) from exc


def cmd_calibrate(args: argparse.Namespace) -> int:
    try:
        grouped = calibration.load_calibration_csv(args.input)
    except FileNotFoundError as exc:
        raise CliError(f"input file not found: {args.input}") from exc
    except CalibrationError as exc:
        raise CliError(str(exc)) from exc
    try:
        curves = {
            sid: calibration.build_curve(sid, pts) for sid, pts in grouped.items()
        }
        compensation = calibration.equalize(list(curves.values())) if args.equalize else None
        models = {
            sid: calibration.fit_model_constant(curve) for sid, curve in curves.items()
        }
    except CalibrationError as exc:
        raise CliError(str(exc)) from exc
    store = CurveStore(curves=curves, models=models, compensation=compensation)
    calibration.save_curve_store(args.out, store)
    log.info("calibrated %d sensors -> %s", len(curves), args.out)
    for sid in sorted(models):
        log.debug("sensor %s: r_const=%.6g", sid, models[sid].r_const)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    store = _load_curves(args.curves)
    try:
        doc = traces.load_scenario_json(args.spec)
    except FileNotFoundError as exc:
        raise CliError(f"scenario file not found: {args.spec}") from exc
    except TraceFormatError as exc:
        raise CliError(str(exc)) from exc
    try:
        spec = traces.scenario_to_spec(doc, store.models, seed=args.seed)
        frames, truth = traces.generate_trace(spec)
    except (TraceFormatError, traces.GenerationError) as exc:
        raise CliError(str(exc)) from exc
    traces.save_trace_csv(args.out, frames)
    log.info("simulated %d frames -> %s", len(frames), args.out)
    if args.truth:
        traces.save_truth_json(args.truth, truth)
        log.info("ground truth (%d events) -> %s", len(truth.events), args.truth)
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    from .detector import run_pipeline

    store = _load_curves(args.curves)
    if args.base == "auto":
        base_kg = None
    else:
        try:
            base_kg = float(args.base)
        except ValueError as exc:
            raise CliError(f"--base must be a weight in kg or 'auto', got {args.base!r}") from exc
        if base_kg <= 0:
            raise CliError(f"--base must be positive, got {base_kg}")
    try:
        frames = traces.load_trace_csv(args.trace)
    except FileNotFoundError as exc:
        raise CliError(f"trace file not found: {args.trace}") from exc
    except TraceFormatError as exc:
        raise CliError(str(exc)) from exc
    try:
        result = run_pipeline(
            frames,
            store.curves,
            compensation=store.compensation,
            base_kg=base_kg,
        )
    except (BaselineError, ConfigurationError) as exc:
        raise CliError(str(exc)) from exc
    records = report_mod.events_to_records(result.events, result.baseline.base_kg)
    report_mod.save_events_jsonl(args.out, records)
    log.info(
        "detected %d events (base %.2f kg) -> %s",
        len(records),
        result.baseline.base_kg,
        args.out,
    )
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        records = report_mod.load_events_jsonl(args.events)
    except FileNotFoundError as exc:
        raise CliError(f"events file not found: {args.events}") from exc
    except TraceFormatError as exc:
        raise CliError(str(exc)) from exc
    try:
        truth = traces.load_truth_json(args.truth)
    except FileNotFoundError as exc:
        raise CliError(f"truth file not found: {args.truth}") from exc
    except TraceFormatError as exc:
        raise CliError(str(exc)) from exc
    try:
        run = report_mod.build_report(
            records,
            truth,
            lift_tolerance_pct=args.tol_lift,
            base_tolerance_pct=args.tol_base,
        )
    except report_mod.ReportError as exc:
        raise CliError(str(exc)) from exc
    csv_text = report_mod.report_to_csv(run)
    sys.stdout.write(csv_text)
    sys.stderr.write(report_mod.report_to_text(run))
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out_dir / "report.csv", csv_text)
        report_mod.render_error_figure(run, out_dir / "errors.png")
        log.info("wrote %s and %s", out_dir / "report.csv", out_dir / "errors.png")
        if args.trace and args.curves:
            from .detector import run_pipeline

            store = _load_curves(args.curves)
            try:
                frames = traces.load_trace_csv(args.trace)
                result = run_pipeline(
                    frames,
                    store.curves,
                    compensation=store.compensation,
                    base_kg=None,
                )
            except (TraceFormatError, BaselineError, ConfigurationError) as exc:
                raise CliError(str(exc)) from exc
            report_mod.render_timeline_figure(
                result.smoothed, records, truth, out_dir / "timeline.png"
            )
            log.info("wrote %s", out_dir / "timeline.png")
        elif args.trace or args.curves:
            raise CliError("--trace and --curves must be given together")
    elif args.trace or args.curves:
        raise CliError("--trace/--curves only make sense with --out-dir")
    return EXIT_OK if run.passed else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsrsole",
        description="Insole force-sensor toolkit: calibration, simulation, "
        "lift detection, and scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cal = sub.add_parser(
        "calibrate", help="fit per-sensor curves and models from a points CSV"
    )
    p_cal.add_argument("--input", required=True, help="calibration points CSV")
    p_cal.add_argument("--out", required=True, help="curve store JSON to write")
    p_cal.add_argument(
        "--equalize",
        action="store_true",
        help="also derive per-sensor series resistances that align the curves",
    )
    p_cal.set_defaults(func=cmd_calibrate)

    p_sim = sub.add_parser("simulate", help="generate a synthetic trace from a scenario")
    p_sim.add_argument("--spec", required=True, help="scenario JSON")
    p_sim.add_argument("--curves", required=True, help="curve store JSON (device models)")
    p_sim.add_argument("--out", required=True, help="trace CSV to write")
    p_sim.add_argument("--truth", help="also write ground-truth JSON here")
    p_sim.add_argument(
        "--seed", type=int, default=None, help="override the scenario's noise seed"
    )
    p_sim.set_defaults(func=cmd_simulate)

    p_det = sub.add_parser("detect", help="run the detection pipeline over a trace")
    p_det.add_argument("--trace", required=True, help="trace CSV")
    p_det.add_argument("--curves", required=True, help="curve store JSON")
    p_det.add_argument(
        "--base",
        default="auto",
        help="base weight in kg, or 'auto' to register it from a quiet stretch",
    )
    p_det.add_argument("--out", required=True, help="events JSONL to write")
    p_det.set_defaults(func=cmd_detect)

    p_rep = sub.add_parser("report", help="score detected events against ground truth")
    p_rep.add_argument("--events", required=True, help="events JSONL from detect")
    p_rep.add_argument("--truth", required=True, help="ground-truth JSON from simulate")
    p_rep.add_argument(
        "--tol-lift", type=float, default=15.0, help="lifted-weight tolerance, percent"
    )
    p_rep.add_argument(
        "--tol-base", type=float, default=5.0, help="base-weight tolerance, percent"
    )
    p_rep.add_argument(
        "--out-dir", help="directory for report.csv and rendered figures"
    )
    p_rep.add_argument(
        "--trace", help="trace CSV; with --curves, adds a weight timeline figure"
    )
    p_rep.add_argument("--curves", help="curve store JSON for the timeline figure")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
