"""Turning 16-channel ADC frames into body-plus-load weight estimates.

Each insole carries eight sensors: four under the metatarsal heads
(the ``front`` group) and four under the heel (``back``).  A frame is
one synchronized sweep of all 16 channels.  Decoding goes steps ->
resistance -> (optional series compensation) -> force per channel; the
total weight is the force sum divided by standard gravity.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from . import circuit as _circuit
from .calibration import CompensationTable, SensorCurve, apply_compensation, interpolate_force
from .circuit import AdcReading, DividerCircuit, resistance_from_steps

GRAVITY_N_PER_KG = 9.8

LEFT_CHANNELS = ("L0", "L1", "L2", "L3", "L4", "L5", "L6", "L7")
RIGHT_CHANNELS = ("R0", "R1", "R2", "R3", "R4", "R5", "R6", "R7")
CHANNELS = LEFT_CHANNELS + RIGHT_CHANNELS


class ConfigurationError(ValueError):
    """Raised when the pipeline is wired with inconsistent pieces."""


class BaselineError(RuntimeError):
    """Raised when no quiet window qualifies as a standing baseline."""


@dataclass(frozen=True)
class SensorLayout:
    """Mapping from channel name to (foot, group, index-in-group).

    ``foot`` is ``"left"``/``"right"``; ``group`` is ``"front"``
    (metatarsal heads) or ``"back"`` (heel).  Exactly 16 channels, each
    mapped once.
    """

    placements: Mapping[str, tuple[str, str, int]]

    def __post_init__(self) -> None:
        placements = dict(self.placements)
        object.__setattr__(self, "placements", placements)
        if len(placements) != 16:
            raise ConfigurationError(f"layout must map 16 channels, got {len(placements)}")
        seen = set()
        for ch, (foot, group, idx) in placements.items():
            if foot not in ("left", "right") or group not in ("front", "back"):
                raise ConfigurationError(f"channel {ch!r}: bad placement {(foot, group, idx)}")
            key = (foot, group, idx)
            if key in seen:
                raise ConfigurationError(f"duplicate placement {key}")
            seen.add(key)

    @property
    def channels(self) -> tuple[str, ...]:
        return tuple(self.placements)

    def group_channels(self, foot: str, group: str) -> tuple[str, ...]:
        return tuple(
            ch for ch, (f, g, _) in self.placements.items() if f == foot and g == group
        )

    @classmethod
    def default(cls) -> "SensorLayout":
        """L0-L3/R0-R3 under the metatarsals, L4-L7/R4-R7 under the heel."""
        placements: dict[str, tuple[str, str, int]] = {}
        for foot, names in (("left", LEFT_CHANNELS), ("right", RIGHT_CHANNELS)):
            for i, ch in enumerate(names):
                group = "front" if i < 4 else "back"
                placements[ch] = (foot, group, i % 4)
        return cls(placements)


DEFAULT_LAYOUT = SensorLayout.default()


@dataclass(frozen=True)
class SampleFrame:
    """One synchronized 16-channel ADC sweep at time ``t_ms``."""

    t_ms: int
    steps: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.steps) != 16:
            raise ValueError(f"frame needs 16 channels, got {len(self.steps)}")
        for s in self.steps:
            if not isinstance(s, int) or s < 0:
                raise ValueError(f"steps must be non-negative ints, got {s!r}")


@dataclass(frozen=True)
class WeightSample:
    """Decoded weight at one instant: total kg and per-channel newtons."""

    t_ms: int
    total_kg: float
    per_channel_n: tuple[float, ...]


@dataclass(frozen=True)
class Baseline:
    """Standing weight registered from a quiet window of the stream."""

    base_kg: float
    window_ms: tuple[int, int]

    def __post_init__(self) -> None:
        if not (math.isfinite(self.base_kg) and self.base_kg > 0):
            raise ValueError(f"base_kg must be positive, got {self.base_kg}")


def frame_to_forces(
    frame: SampleFrame,
    circuit: DividerCircuit,
    curves: Mapping[str, SensorCurve],
    compensation: CompensationTable | None = None,
    layout: SensorLayout = DEFAULT_LAYOUT,
) -> WeightSample:
    """Decode one frame into per-channel forces and a total weight.

    Without compensation, each channel's resistance is looked up in its
    own curve.  With a compensation table, the series offset is added
    first and the lookup goes through the base sensor's curve, treating
    the equalized sensors as copies of the base device.
    """
    channels = layout.channels
    if len(frame.steps) != len(channels):
        raise ConfigurationError(
            f"frame has {len(frame.steps)} channels, layout has {len(channels)}"
        )
    missing = [ch for ch in channels if ch not in curves]
    if missing:
        raise ConfigurationError(f"no calibration curve for channels: {', '.join(missing)}")
    if compensation is not None and compensation.base_sensor_id not in curves:
        raise ConfigurationError(
            f"no curve for base sensor {compensation.base_sensor_id!r}"
        )
    forces = []
    for ch, steps in zip(channels, frame.steps):
        resistance = resistance_from_steps(circuit, steps)
        if compensation is None:
            curve = curves[ch]
        else:
            resistance = apply_compensation(compensation, ch, resistance)
            curve = curves[compensation.base_sensor_id]
        forces.append(interpolate_force(curve, resistance))
    total_kg = sum(forces) / GRAVITY_N_PER_KG
    return WeightSample(t_ms=frame.t_ms, total_kg=total_kg, per_channel_n=tuple(forces))


def smooth(
    samples: Iterable[WeightSample], window_ms: float = 250.0
) -> Iterator[WeightSample]:
    """Trailing moving average of the total over the last ``window_ms``.

    Each output keeps its input timestamp and per-channel forces; only
    ``total_kg`` is averaged, over samples with timestamps in
    ``(t - window_ms, t]``.  A window shorter than the sample period is
    therefore the identity.  Constant stretches pass through exactly.
    """
    if window_ms <= 0:
        raise ValueError(f"window_ms must be positive, got {window_ms}")
    window: list[WeightSample] = []
    for sample in samples:
        window.append(sample)
        cutoff = sample.t_ms - window_ms
        while window and window[0].t_ms <= cutoff:
            window.pop(0)
        first = window[0].total_kg
        if all(s.total_kg == first for s in window):
            mean = first
        else:
            mean = math.fsum(s.total_kg for s in window) / len(window)
        yield WeightSample(sample.t_ms, mean, sample.per_channel_n)


def register_baseline(
    samples: Iterable[WeightSample],
    window_ms: float = 5000.0,
    max_rel_std: float = 0.01,
) -> Baseline:
    """Find the earliest quiet window and return its mean as the baseline.

    A window qualifies when it spans at least ``window_ms`` and the
    sample standard deviation of its totals is at most ``max_rel_std``
    of its mean.  Raises :class:`BaselineError` when no window in the
    stream is quiet enough.
    """
    seq = list(samples)
    if len(seq) < 2:
        raise BaselineError(f"need at least 2 samples, got {len(seq)}")
    times = [s.t_ms for s in seq]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("samples must have strictly increasing timestamps")
    totals = [s.total_kg for s in seq]
    end = 0
    for start in range(len(seq)):
        if end <= start:
            end = start + 1
        while end < len(seq) and times[end] - times[start] < window_ms:
            end += 1
        if end >= len(seq) and times[-1] - times[start] < window_ms:
            break
        stop = min(end, len(seq) - 1)
        window = totals[start : stop + 1]
        mean = math.fsum(window) / len(window)
        if mean <= 0:
            continue
        if statistics.stdev(window) <= max_rel_std * mean:
            return Baseline(base_kg=mean, window_ms=(times[start], times[stop]))
    raise BaselineError(
        f"no window of {window_ms:g} ms had relative deviation <= {max_rel_std:g}"
    )
