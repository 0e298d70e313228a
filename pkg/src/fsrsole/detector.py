"""Lift/lower detection over a smoothed total-weight stream.

The detector is a four-phase finite state machine driven by one weight
sample at a time, against a fixed standing baseline:

``IDLE``
    Nothing in progress.  A dip below ``base - dip_margin`` (the
    operator bending down to grab a load) arms the detector.
``PRE_LIFTING``
    Armed.  If the weight then stays above ``base + rise_margin``
    continuously for at least ``time_threshold_ms``, a ``LIFTING``
    event fires; its weight estimate is the mean of the rise samples
    old enough to be past the smoother's warm-up (at least
    ``time_threshold_ms`` past the start of the rise).  If instead the
    weight hangs around the baseline (within ``dip_margin``) for twice
    the threshold, the dip is written off as a walking transient and
    the machine disarms.  Walking swings shorter than the threshold
    can never sustain a rise, which is what makes the quarter-second
    gate robust against gait bounce.
``LIFTING``
    Carrying.  The estimate keeps refining as a running mean over
    samples that agree with it to within ``spike_margin``.  A push
    above ``base + lifted + spike_margin`` (the characteristic spike
    when the load is swung down) moves to ``PRE_LOWERING``.
``PRE_LOWERING``
    Waiting for the weight to fall strictly below the baseline, which
    fires ``LOWERING`` and returns to ``IDLE``.

Events therefore always alternate LIFTING / LOWERING.  The functional
`step` returns a new state plus an optional event; `run_detector` wires
the whole pipeline (decode, smooth, baseline, detect) over raw frames.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .calibration import CompensationTable, SensorCurve
from .circuit import DividerCircuit
from .estimation import (
    Baseline,
    SampleFrame,
    WeightSample,
    frame_to_forces,
    register_baseline,
    smooth,
)

log = logging.getLogger(__name__)

LIFTING = "LIFTING"
LOWERING = "LOWERING"


class StreamError(ValueError):
    """Raised when samples arrive out of time order."""


class Phase(enum.Enum):
    IDLE = "idle"
    PRE_LIFTING = "pre_lifting"
    LIFTING = "lifting"
    PRE_LOWERING = "pre_lowering"


@dataclass(frozen=True)
class DetectorConfig:
    """Margins and timing for the state machine.

    Margins left at ``None`` are resolved per stream: dip and rise
    default to ``max(2.0, 2.5% of base)`` kilograms, the spike margin to
    ``2.5%`` of base plus the current lifted estimate.
    """

    time_threshold_ms: float = 250.0
    dip_margin_kg: float | None = None
    rise_margin_kg: float | None = None
    spike_margin_kg: float | None = None

    def __post_init__(self) -> None:
        if self.time_threshold_ms <= 0:
            raise ValueError(f"time_threshold_ms must be positive, got {self.time_threshold_ms}")
        for name in ("dip_margin_kg", "rise_margin_kg", "spike_margin_kg"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive when set, got {value}")

    def dip_margin(self, base_kg: float) -> float:
        if self.dip_margin_kg is not None:
            return self.dip_margin_kg
        return max(2.0, 0.025 * base_kg)

    def rise_margin(self, base_kg: float) -> float:
        if self.rise_margin_kg is not None:
            return self.rise_margin_kg
        return max(2.0, 0.025 * base_kg)

    def spike_margin(self, base_kg: float, lifted_kg: float) -> float:
        if self.spike_margin_kg is not None:
            return self.spike_margin_kg
        return 0.025 * (base_kg + lifted_kg)


@dataclass(frozen=True)
class ActivityEvent:
    """A detected lift or lower; ``lifted_kg`` is None for LOWERING."""

    kind: str
    t_ms: int
    lifted_kg: float | None


@dataclass(frozen=True)
class DetectorState:
    """Immutable machine state between samples."""

    base_kg: float
    phase: Phase = Phase.IDLE
    lifted_kg: float = 0.0
    last_t_ms: int | None = None
    rise_start_ms: int | None = None
    inband_start_ms: int | None = None
    estimate_sum: float = 0.0
    estimate_count: int = 0

    def __post_init__(self) -> None:
        if not self.base_kg > 0:
            raise ValueError(f"base_kg must be positive, got {self.base_kg}")


def initial_state(base_kg: float) -> DetectorState:
    """Fresh IDLE state against a registered standing weight."""
    return DetectorState(base_kg=base_kg)


def step(
    state: DetectorState, config: DetectorConfig, sample: WeightSample
) -> tuple[DetectorState, ActivityEvent | None]:
    """Advance the machine by one smoothed sample.

    Returns the next state and the event fired on this sample, if any.
    Samples must arrive in strictly increasing time order.
    """
    t = sample.t_ms
    if state.last_t_ms is not None and t <= state.last_t_ms:
        raise StreamError(f"sample at {t} ms arrived after {state.last_t_ms} ms")
    weight = sample.total_kg
    base = state.base_kg
    state = replace(state, last_t_ms=t)

    if state.phase is Phase.IDLE:
        if weight < base - config.dip_margin(base):
            log.debug("dip to %.2f kg at %d ms, arming", weight, t)
            return (
                replace(
                    state,
                    phase=Phase.PRE_LIFTING,
                    rise_start_ms=None,
                    inband_start_ms=None,
                    estimate_sum=0.0,
                    estimate_count=0,
                ),
                None,
            )
        return state, None

    if state.phase is Phase.PRE_LIFTING:
        if weight > base + config.rise_margin(base):
            rise_start = state.rise_start_ms if state.rise_start_ms is not None else t
            state = replace(state, rise_start_ms=rise_start, inband_start_ms=None)
            if t - rise_start >= config.time_threshold_ms:
                # Past the smoother warm-up: this sample reflects the
                # settled load, so it seeds the estimate and fires.
                total = state.estimate_sum + (weight - base)
                count = state.estimate_count + 1
                lifted = total / count
                log.debug("lifting %.2f kg detected at %d ms", lifted, t)
                return (
                    replace(
                        state,
                        phase=Phase.LIFTING,
                        lifted_kg=lifted,
                        estimate_sum=total,
                        estimate_count=count,
                        rise_start_ms=None,
                    ),
                    ActivityEvent(LIFTING, t, lifted),
                )
            return state, None
        state = replace(state, rise_start_ms=None)
        if abs(weight - base) <= config.dip_margin(base):
            inband_start = state.inband_start_ms if state.inband_start_ms is not None else t
            if t - inband_start >= 2.0 * config.time_threshold_ms:
                log.debug("dip at %d ms written off as walking", t)
                return replace(state, phase=Phase.IDLE, inband_start_ms=None), None
            return replace(state, inband_start_ms=inband_start), None
        return replace(state, inband_start_ms=None), None

    if state.phase is Phase.LIFTING:
        margin = config.spike_margin(base, state.lifted_kg)
        if weight > base + state.lifted_kg + margin:
            log.debug("spike to %.2f kg at %d ms, expecting lowering", weight, t)
            return replace(state, phase=Phase.PRE_LOWERING), None
        delta = weight - base
        if abs(delta - state.lifted_kg) <= margin:
            total = state.estimate_sum + delta
            count = state.estimate_count + 1
            return (
                replace(
                    state,
                    lifted_kg=total / count,
                    estimate_sum=total,
                    estimate_count=count,
                ),
                None,
            )
        return state, None

    # PRE_LOWERING
    if weight < base:
        log.debug("weight back under base at %d ms, lowering done", t)
        return (
            replace(
                state,
                phase=Phase.IDLE,
                lifted_kg=0.0,
                estimate_sum=0.0,
                estimate_count=0,
                rise_start_ms=None,
                inband_start_ms=None,
            ),
            ActivityEvent(LOWERING, t, None),
        )
    return state, None


@dataclass(frozen=True)
class PipelineResult:
    """Everything a full detection run produces."""

    decoded: tuple[WeightSample, ...]
    smoothed: tuple[WeightSample, ...]
    baseline: Baseline
    events: tuple[ActivityEvent, ...]


def run_pipeline(
    frames: Iterable[SampleFrame],
    curves: Mapping[str, SensorCurve],
    *,
    circuit: DividerCircuit | None = None,
    compensation: CompensationTable | None = None,
    config: DetectorConfig | None = None,
    window_ms: float = 250.0,
    baseline_window_ms: float = 5000.0,
    base_kg: float | None = None,
) -> PipelineResult:
    """Decode, smooth, register a baseline, and detect events.

    With ``base_kg`` given, baseline registration is skipped and
    detection starts from the first sample; otherwise the earliest
    quiet window sets the base and detection starts after that window,
    so nothing can fire during the baseline itself.
    """
    circuit = circuit if circuit is not None else DividerCircuit()
    config = config if config is not None else DetectorConfig()
    decoded = tuple(
        frame_to_forces(frame, circuit, curves, compensation) for frame in frames
    )
    smoothed = tuple(smooth(decoded, window_ms=window_ms))
    if base_kg is not None:
        start_ms = smoothed[0].t_ms - 1 if smoothed else 0
        baseline = Baseline(base_kg=base_kg, window_ms=(start_ms, start_ms))
    else:
        baseline = register_baseline(smoothed, window_ms=baseline_window_ms)
    state = initial_state(baseline.base_kg)
    events: list[ActivityEvent] = []
    for sample in smoothed:
        if sample.t_ms <= baseline.window_ms[1]:
            continue
        state, event = step(state, config, sample)
        if event is not None:
            events.append(event)
    return PipelineResult(
        decoded=decoded,
        smoothed=smoothed,
        baseline=baseline,
        events=tuple(events),
    )


def run_detector(
    frames: Iterable[SampleFrame],
    curves: Mapping[str, SensorCurve],
    **kwargs,
) -> list[ActivityEvent]:
    """Run the full pipeline and return just the events."""
    return list(run_pipeline(frames, curves, **kwargs).events)
