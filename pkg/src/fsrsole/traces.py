"""Synthetic 16-channel traces with ground truth, plus their file formats.

A scenario is a list of activity segments (stand, walk, lift, carry,
lower) walked through at a fixed sample rate.  The total carried weight
follows a piecewise-linear profile per segment; walking adds a
sinusoidal transfer of load between the feet plus a matching total
transient.  Per-channel forces are split 60/40 heel/metatarsal by
default, pushed through each channel's device model and the divider,
then quantized, which makes a generated trace obey exactly the same
physics the decoding side inverts.

Lift segments dip (bending down), hold the dip, then ramp up to the
loaded weight; lower segments spike above the carried weight, settle
back down, and briefly undershoot the base so that the weight strictly
crosses it even on noiseless traces.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field, asdict
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import DividerCircuit, FsrModel
from .detector import LIFTING, LOWERING
from .estimation import DEFAULT_LAYOUT, GRAVITY_N_PER_KG, SampleFrame, SensorLayout
from .fileio import atomic_write_text


class GenerationError(ValueError):
    """Raised for scenarios that cannot be generated."""


class TraceFormatError(ValueError):
    """Raised when a trace, truth, or scenario file cannot be parsed."""


@dataclass(frozen=True)
class Stand:
    """Hold the current weight still."""

    duration_ms: float


@dataclass(frozen=True)
class Walk:
    """Walk in place: load sloshes between feet at the step frequency.

    The total weight swings by ``amplitude_kg`` around its level, in
    phase with the foot transfer.  At 2 steps per second each swing
    stays shorter than a quarter second, which is what the detector's
    time gate is designed to reject.
    """

    duration_ms: float
    step_freq_hz: float = 2.0
    amplitude_kg: float = 8.0


@dataclass(frozen=True)
class Lift:
    """Bend (dip), hold the dip, then straighten up with the load.

    ``dip_ms`` covers the ramp down plus an equal hold at the bottom;
    ``rise_ms`` is the ramp from the dip to the loaded weight.
    """

    load_kg: float
    dip_kg: float = 3.0
    dip_ms: float = 600.0
    rise_ms: float = 300.0


@dataclass(frozen=True)
class Carry:
    """Hold the current (loaded) weight still."""

    duration_ms: float


@dataclass(frozen=True)
class Lower:
    """Swing the load down (spike), settle back to the unloaded weight.

    ``spike_ms`` covers the ramp up plus an equal hold at the peak;
    ``settle_ms`` covers the descent to ``undershoot_kg`` below the
    unloaded weight and the short recovery back onto it.
    """

    spike_kg: float = 3.0
    spike_ms: float = 600.0
    settle_ms: float = 600.0
    undershoot_kg: float = 2.0


Segment = Stand | Walk | Lift | Carry | Lower

_SEGMENT_KINDS: dict[str, type] = {
    "stand": Stand,
    "walk": Walk,
    "lift": Lift,
    "carry": Carry,
    "lower": Lower,
}


def segment_duration(segment: Segment) -> float:
    if isinstance(segment, (Stand, Walk, Carry)):
        return segment.duration_ms
    if isinstance(segment, Lift):
        return segment.dip_ms + segment.rise_ms
    return segment.spike_ms + segment.settle_ms


@dataclass(frozen=True)
class TruthEvent:
    """One scripted lift or lower completion."""

    kind: str
    t_ms: int
    load_kg: float


@dataclass(frozen=True)
class GroundTruth:
    """What a perfect detector should report for a generated trace."""

    base_kg: float
    events: tuple[TruthEvent, ...]


@dataclass(frozen=True)
class TraceSpec:
    """Full recipe for one synthetic session."""

    segments: tuple[Segment, ...]
    models: Mapping[str, FsrModel]
    subject_weight_kg: float = 83.0
    sample_rate_hz: float = 10.0
    noise_sigma_n: float = 0.0
    seed: int = 0
    heel_fraction: float = 0.6
    circuit: DividerCircuit = field(default_factory=DividerCircuit)
    layout: SensorLayout = field(default_factory=lambda: DEFAULT_LAYOUT)

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "models", dict(self.models))
        if self.subject_weight_kg <= 0:
            raise GenerationError(f"subject weight must be positive, got {self.subject_weight_kg}")
        if not (0 < self.sample_rate_hz <= 1000):
            raise GenerationError(f"sample rate must be in (0, 1000] Hz, got {self.sample_rate_hz}")
        if not (0 < self.heel_fraction < 1):
            raise GenerationError(f"heel fraction must be in (0, 1), got {self.heel_fraction}")
        if self.noise_sigma_n < 0:
            raise GenerationError(f"noise sigma must be >= 0, got {self.noise_sigma_n}")
        missing = [ch for ch in self.layout.channels if ch not in self.models]
        if missing:
            raise GenerationError(f"no device model for channels: {', '.join(missing)}")
        for seg in self.segments:
            if segment_duration(seg) <= 0:
                raise GenerationError(f"segment {seg!r} has non-positive duration")
        carried = None
        for seg in self.segments:
            if isinstance(seg, Lift):
                if carried is not None:
                    raise GenerationError("lift while a load is already carried")
                carried = seg.load_kg
            elif isinstance(seg, Lower):
                if carried is None:
                    raise GenerationError("lower without a carried load")
                carried = None


def _walk_segments(
    spec: TraceSpec,
) -> tuple[list[tuple[float, float, Segment, float, float | None]], float, list[TruthEvent]]:
    """Lay segments on the time axis, tracking the carried load.

    Returns (entries, total duration, truth events); each entry is
    (t_start, t_end, segment, level at entry, carried load or None).
    """
    entries = []
    truth: list[TruthEvent] = []
    t = 0.0
    level = spec.subject_weight_kg
    carried: float | None = None
    for seg in spec.segments:
        dur = segment_duration(seg)
        entries.append((t, t + dur, seg, level, carried))
        if isinstance(seg, Lift):
            truth.append(TruthEvent(LIFTING, round(t + dur), seg.load_kg))
            carried = seg.load_kg
            level += seg.load_kg
        elif isinstance(seg, Lower):
            assert carried is not None
            descend = 0.8 * seg.settle_ms
            drop = seg.spike_kg + carried + seg.undershoot_kg
            t_cross = t + seg.spike_ms + descend * (seg.spike_kg + carried) / drop
            truth.append(TruthEvent(LOWERING, round(t_cross), carried))
            level -= carried
            carried = None
        t += dur
    return entries, t, truth


def _profile(
    spec: TraceSpec, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Total weight (kg) and left-foot share at each sample time."""
    total = np.full(times.shape, spec.subject_weight_kg, dtype=float)
    share = np.full(times.shape, 0.5, dtype=float)
    entries, _, _ = _walk_segments(spec)
    for t0, t1, seg, level, carried in entries:
        mask = (times >= t0) & (times < t1)
        if not mask.any():
            continue
        tau = times[mask] - t0
        if isinstance(seg, (Stand, Carry)):
            total[mask] = level
        elif isinstance(seg, Walk):
            phase = 2.0 * math.pi * seg.step_freq_hz * tau / 1000.0
            swing = np.sin(phase)
            total[mask] = level + seg.amplitude_kg * swing
            share[mask] = 0.5 + 0.5 * swing
        elif isinstance(seg, Lift):
            ramp = seg.dip_ms / 2.0
            down = level - seg.dip_kg * tau / ramp
            rise = level - seg.dip_kg + (seg.load_kg + seg.dip_kg) * (
                tau - seg.dip_ms
            ) / seg.rise_ms
            total[mask] = np.where(
                tau < ramp, down, np.where(tau < seg.dip_ms, level - seg.dip_kg, rise)
            )
        else:  # Lower
            assert carried is not None
            unloaded = level - carried
            ramp = seg.spike_ms / 2.0
            peak = level + seg.spike_kg
            low = unloaded - seg.undershoot_kg
            descend = 0.8 * seg.settle_ms
            recover = seg.settle_ms - descend
            up = level + seg.spike_kg * tau / ramp
            down = peak + (low - peak) * (tau - seg.spike_ms) / descend
            back = low + (unloaded - low) * (tau - seg.spike_ms - descend) / recover
            total[mask] = np.where(
                tau < ramp,
                up,
                np.where(
                    tau < seg.spike_ms,
                    peak,
                    np.where(tau < seg.spike_ms + descend, down, back),
                ),
            )
    return total, share


def generate_trace(spec: TraceSpec) -> tuple[list[SampleFrame], GroundTruth]:
    """Synthesize ADC frames and the matching ground truth for a scenario.

    The same spec and seed always produce the same frames.  An empty
    segment list produces an empty trace.
    """
    entries, total_ms, truth_events = _walk_segments(spec)
    dt = 1000.0 / spec.sample_rate_hz
    n = int(math.floor(total_ms / dt + 1e-9))
    truth = GroundTruth(base_kg=spec.subject_weight_kg, events=tuple(truth_events))
    if n == 0:
        return [], truth
    times = np.arange(n) * dt
    t_ms = np.rint(times).astype(np.int64)
    if len(np.unique(t_ms)) != n:
        raise GenerationError(
            f"sample rate {spec.sample_rate_hz} Hz collapses distinct sample times"
        )
    total_kg, left_share = _profile(spec, times)

    total_n = total_kg * GRAVITY_N_PER_KG
    channels = spec.layout.channels
    forces = np.empty((n, len(channels)), dtype=float)
    for j, ch in enumerate(channels):
        foot, group, _ = spec.layout.placements[ch]
        foot_share = left_share if foot == "left" else 1.0 - left_share
        frac = (spec.heel_fraction if group == "back" else 1.0 - spec.heel_fraction) / 4.0
        forces[:, j] = total_n * foot_share * frac
    if spec.noise_sigma_n > 0:
        rng = np.random.default_rng(spec.seed)
        forces = forces + rng.normal(0.0, spec.noise_sigma_n, size=forces.shape)
    np.clip(forces, 0.0, None, out=forces)

    steps = np.empty((n, len(channels)), dtype=np.int64)
    circuit = spec.circuit
    for j, ch in enumerate(channels):
        model = spec.models[ch]
        f = forces[:, j]
        open_mask = (f <= 0.0) | (f < model.min_force)
        f_eff = np.minimum(f, model.max_force)
        with np.errstate(divide="ignore"):
            r = model.r_const / f_eff
        r[open_mask] = np.inf
        v = circuit.v_in * circuit.r2 / (r + circuit.r2)
        col = np.floor(v * circuit.adc_levels / circuit.v_in + 0.5).astype(np.int64)
        steps[:, j] = np.clip(col, 0, circuit.adc_levels - 1)

    frames = [
        SampleFrame(int(t_ms[k]), tuple(int(s) for s in steps[k])) for k in range(n)
    ]
    return frames, truth


# ---------------------------------------------------------------------------
# Scenario builders used by the bundled scenario files and the tests


def lift_cycles_spec(
    models: Mapping[str, FsrModel],
    *,
    subject_weight_kg: float = 83.0,
    load_kg: float = 18.6,
    cycles: int = 3,
    walk_each_cycle: bool = True,
    carry_ms: float = 2500.0,
    sample_rate_hz: float = 10.0,
    noise_sigma_n: float = 0.0,
    seed: int = 0,
    circuit: DividerCircuit | None = None,
    lead_in_ms: float = 6000.0,
) -> TraceSpec:
    """A session of repeated lift/lower cycles around a quiet lead-in.

    With ``walk_each_cycle`` the subject walks a few steps before every
    lift; otherwise they walk once after the lead-in and then cycle
    lift/lower back to back.
    """
    segments: list[Segment] = [Stand(lead_in_ms)]
    if not walk_each_cycle:
        segments += [Walk(4000.0), Stand(1500.0)]
    for _ in range(cycles):
        if walk_each_cycle:
            segments += [Walk(4000.0), Stand(1500.0)]
        segments += [
            Lift(load_kg, dip_kg=5.0, dip_ms=800.0, rise_ms=200.0),
            Carry(carry_ms),
            Lower(spike_kg=5.0, spike_ms=800.0, settle_ms=800.0, undershoot_kg=2.0),
            Stand(2000.0),
        ]
    return TraceSpec(
        segments=tuple(segments),
        models=models,
        subject_weight_kg=subject_weight_kg,
        sample_rate_hz=sample_rate_hz,
        noise_sigma_n=noise_sigma_n,
        seed=seed,
        circuit=circuit if circuit is not None else DividerCircuit(),
    )


def walking_spec(
    models: Mapping[str, FsrModel],
    *,
    subject_weight_kg: float = 83.0,
    walk_ms: float = 54000.0,
    lead_in_ms: float = 6000.0,
    sample_rate_hz: float = 10.0,
    noise_sigma_n: float = 0.0,
    seed: int = 0,
    circuit: DividerCircuit | None = None,
) -> TraceSpec:
    """A quiet lead-in followed by sustained walking; no lifts at all."""
    return TraceSpec(
        segments=(Stand(lead_in_ms), Walk(walk_ms)),
        models=models,
        subject_weight_kg=subject_weight_kg,
        sample_rate_hz=sample_rate_hz,
        noise_sigma_n=noise_sigma_n,
        seed=seed,
        circuit=circuit if circuit is not None else DividerCircuit(),
    )


# ---------------------------------------------------------------------------
# File formats

TRACE_CSV_HEADER: tuple[str, ...] = ("t_ms",) + DEFAULT_LAYOUT.channels


def save_trace_csv(path: str | os.PathLike[str], frames: Sequence[SampleFrame]) -> None:
    """Write frames as ``t_ms,L0..L7,R0..R7`` (atomic write)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_CSV_HEADER)
    for frame in frames:
        writer.writerow((frame.t_ms,) + frame.steps)
    atomic_write_text(path, buf.getvalue())


def load_trace_csv(
    path: str | os.PathLike[str], adc_levels: int = 1024
) -> list[SampleFrame]:
    """Read a trace CSV back into frames, validating every row.

    Rows must carry one timestamp plus 16 integer step counts within
    ``[0, adc_levels - 1]``, with strictly increasing timestamps.
    Violations raise :class:`TraceFormatError` naming the row.
    """
    frames: list[SampleFrame] = []
    name = os.fspath(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceFormatError(f"{name}: file is empty")
        if tuple(h.strip() for h in header) != TRACE_CSV_HEADER:
            raise TraceFormatError(
                f"{name}: expected header {','.join(TRACE_CSV_HEADER)}"
            )
        last_t: int | None = None
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_CSV_HEADER):
                raise TraceFormatError(
                    f"{name}: row {row_no}: expected {len(TRACE_CSV_HEADER)} fields, "
                    f"got {len(row)}"
                )
            try:
                values = [int(cell) for cell in row]
            except ValueError as exc:
                raise TraceFormatError(f"{name}: row {row_no}: {exc}") from exc
            t, steps = values[0], values[1:]
            if last_t is not None and t <= last_t:
                raise TraceFormatError(
                    f"{name}: row {row_no}: t_ms {t} not after {last_t}"
                )
            for s in steps:
                if not (0 <= s <= adc_levels - 1):
                    raise TraceFormatError(
                        f"{name}: row {row_no}: steps {s} outside 0..{adc_levels - 1}"
                    )
            last_t = t
            frames.append(SampleFrame(t, tuple(steps)))
    return frames


def save_truth_json(path: str | os.PathLike[str], truth: GroundTruth) -> None:
    """Persist ground truth next to its trace (atomic write)."""
    doc = {
        "base_kg": truth.base_kg,
        "events": [
            {"kind": e.kind, "t_ms": e.t_ms, "load_kg": e.load_kg} for e in truth.events
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_truth_json(path: str | os.PathLike[str]) -> GroundTruth:
    name = os.fspath(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"{name}: not valid JSON: {exc}") from exc
    try:
        events = tuple(
            TruthEvent(str(e["kind"]), int(e["t_ms"]), float(e["load_kg"]))
            for e in doc["events"]
        )
        return GroundTruth(base_kg=float(doc["base_kg"]), events=events)
    except (KeyError, TypeError, ValueError) as exc:
        raise TraceFormatError(f"{name}: bad ground truth: {exc}") from exc


def spec_to_scenario(spec: TraceSpec) -> dict:
    """The JSON-friendly scenario form of a spec (models travel separately)."""
    segments = []
    for seg in spec.segments:
        doc = {"kind": next(k for k, t in _SEGMENT_KINDS.items() if isinstance(seg, t))}
        doc.update(asdict(seg))
        segments.append(doc)
    return {
        "subject_weight_kg": spec.subject_weight_kg,
        "sample_rate_hz": spec.sample_rate_hz,
        "noise_sigma_n": spec.noise_sigma_n,
        "seed": spec.seed,
        "heel_fraction": spec.heel_fraction,
        "segments": segments,
    }


def save_scenario_json(path: str | os.PathLike[str], spec: TraceSpec) -> None:
    atomic_write_text(path, json.dumps(spec_to_scenario(spec), indent=2) + "\n")


def scenario_to_spec(
    doc: dict,
    models: Mapping[str, FsrModel],
    *,
    circuit: DividerCircuit | None = None,
    seed: int | None = None,
) -> TraceSpec:
    """Build a TraceSpec from a parsed scenario document plus device models.

    ``seed`` overrides the scenario's own seed when given.  Scenario
    problems raise :class:`TraceFormatError`.
    """
    if not isinstance(doc, dict):
        raise TraceFormatError("scenario must be a JSON object")
    segments: list[Segment] = []
    for i, seg_doc in enumerate(doc.get("segments", [])):
        if not isinstance(seg_doc, dict) or "kind" not in seg_doc:
            raise TraceFormatError(f"segment {i}: missing 'kind'")
        kind = seg_doc["kind"]
        seg_type = _SEGMENT_KINDS.get(kind)
        if seg_type is None:
            raise TraceFormatError(
                f"segment {i}: unknown kind {kind!r}; expected one of "
                f"{', '.join(sorted(_SEGMENT_KINDS))}"
            )
        kwargs = {k: v for k, v in seg_doc.items() if k != "kind"}
        try:
            segments.append(seg_type(**kwargs))
        except (TypeError, ValueError) as exc:
            raise TraceFormatError(f"segment {i} ({kind}): {exc}") from exc
    try:
        return TraceSpec(
            segments=tuple(segments),
            models=models,
            subject_weight_kg=float(doc.get("subject_weight_kg", 83.0)),
            sample_rate_hz=float(doc.get("sample_rate_hz", 10.0)),
            noise_sigma_n=float(doc.get("noise_sigma_n", 0.0)),
            seed=int(seed if seed is not None else doc.get("seed", 0)),
            heel_fraction=float(doc.get("heel_fraction", 0.6)),
            circuit=circuit if circuit is not None else DividerCircuit(),
        )
    except GenerationError as exc:
        raise TraceFormatError(str(exc)) from exc


def load_scenario_json(path: str | os.PathLike[str]) -> dict:
    name = os.fspath(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"{name}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise TraceFormatError(f"{name}: scenario must be a JSON object")
    return doc
