"""Force-sensing insole toolkit.

Models force-sensitive resistors read through a voltage divider and an
ADC, calibrates per-sensor response curves, estimates carried weight
from 16-channel insole traces, and detects lifting/lowering events in
the smoothed weight signal.  A small CLI wires the pieces together and
a trace generator produces synthetic sessions with ground truth for
end-to-end scoring.
"""
from .calibration import (
    CalibrationError,
    CalibrationPoint,
    CompensationTable,
    CurveStore,
    SensorCurve,
    apply_compensation,
    build_curve,
    combine_parallel_analysis,
    equalize,
    fit_model_constant,
    interpolate_force,
    isotonic_decreasing_fit,
    load_calibration_csv,
    load_curve_store,
    save_curve_store,
)
from .circuit import (
    OPEN_CIRCUIT,
    AdcReading,
    DividerCircuit,
    FsrModel,
    adc_quantize,
    check_current_limit,
    divider_voltage,
    is_open,
    resistance_from_force,
    resistance_from_steps,
)
from .detector import (
    LIFTING,
    LOWERING,
    ActivityEvent,
    DetectorConfig,
    DetectorState,
    Phase,
    initial_state,
    run_detector,
    run_pipeline,
    step,
)
from .estimation import (
    Baseline,
    BaselineError,
    CHANNELS,
    ConfigurationError,
    SampleFrame,
    SensorLayout,
    WeightSample,
    frame_to_forces,
    register_baseline,
    smooth,
)
from .report import (
    EventRecord,
    ReportError,
    RunReport,
    build_report,
    load_events_jsonl,
    render_error_figure,
    render_timeline_figure,
    report_to_csv,
    report_to_text,
    save_events_jsonl,
)
from .traces import (
    Carry,
    GenerationError,
    GroundTruth,
    Lift,
    Lower,
    Stand,
    TraceFormatError,
    TraceSpec,
    TruthEvent,
    Walk,
    generate_trace,
    lift_cycles_spec,
    load_trace_csv,
    load_truth_json,
    save_trace_csv,
    save_truth_json,
    walking_spec,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # circuit
    "OPEN_CIRCUIT",
    "AdcReading",
    "DividerCircuit",
    "FsrModel",
    "adc_quantize",
    "check_current_limit",
    "divider_voltage",
    "is_open",
    "resistance_from_force",
    "resistance_from_steps",
    # calibration
    "CalibrationError",
    "CalibrationPoint",
    "CompensationTable",
    "CurveStore",
    "SensorCurve",
    "apply_compensation",
    "build_curve",
    "combine_parallel_analysis",
    "equalize",
    "fit_model_constant",
    "interpolate_force",
    "isotonic_decreasing_fit",
    "load_calibration_csv",
    "load_curve_store",
    "save_curve_store",
    # estimation
    "Baseline",
    "BaselineError",
    "CHANNELS",
    "ConfigurationError",
    "SampleFrame",
    "SensorLayout",
    "WeightSample",
    "frame_to_forces",
    "register_baseline",
    "smooth",
    # detector
    "LIFTING",
    "LOWERING",
    "ActivityEvent",
    "DetectorConfig",
    "DetectorState",
    "Phase",
    "initial_state",
    "run_detector",
    "run_pipeline",
    "step",
    # traces
    "Carry",
    "GenerationError",
    "GroundTruth",
    "Lift",
    "Lower",
    "Stand",
    "TraceFormatError",
    "TraceSpec",
    "TruthEvent",
    "Walk",
    "generate_trace",
    "lift_cycles_spec",
    "load_trace_csv",
    "load_truth_json",
    "save_trace_csv",
    "save_truth_json",
    "walking_spec",
    # report
    "EventRecord",
    "ReportError",
    "RunReport",
    "build_report",
    "load_events_jsonl",
    "render_error_figure",
    "render_timeline_figure",
    "report_to_csv",
    "report_to_text",
    "save_events_jsonl",
]
