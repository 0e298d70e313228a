"""Sensing-chain physics for force-sensing resistors behind an ADC.

The modeled chain is::

    force -> FSR resistance -> divider voltage -> ADC steps -> resistance

An FSR is approximated by an inverse law: ``resistance = r_const / force``.
The sensor sits on top of a voltage divider with a fixed pull-down
resistor ``r2``; the microcontroller samples the divider midpoint with a
linear ADC.  Everything here is a pure function over immutable values.

Open circuit (an unloaded sensor) is represented by :data:`OPEN_CIRCUIT`
(positive infinity) rather than some huge finite resistance, so that an
unloaded channel naturally reads 0 V, 0 steps, and 0 N downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

OPEN_CIRCUIT: float = math.inf


def is_open(resistance: float) -> bool:
    """True if ``resistance`` is the open-circuit marker."""
    return math.isinf(resistance)


@dataclass(frozen=True)
class FsrModel:
    """Inverse-law device model of one force-sensing resistor.

    ``r_const`` is the device constant in ohm*newton: the modeled
    resistance under ``force`` newton is ``r_const / force``.  Below
    ``min_force`` the sensor is treated as unloaded (open circuit);
    above ``max_force`` the resistance saturates at the ``max_force``
    value.
    """

    sensor_id: str
    r_const: float
    min_force: float = 0.0
    max_force: float = 441.0

    def __post_init__(self) -> None:
        if not (self.r_const > 0 and math.isfinite(self.r_const)):
            raise ValueError(f"r_const must be positive and finite, got {self.r_const}")
        if not (0.0 <= self.min_force < self.max_force):
            raise ValueError(
                f"need 0 <= min_force < max_force, got {self.min_force}..{self.max_force}"
            )


@dataclass(frozen=True)
class DividerCircuit:
    """Protection divider and ADC in front of one sensor channel.

    ``r2`` is the fixed resistor between the sensing node and ground,
    ``i_max`` the largest current the sensor may sink at full load.
    """

    v_in: float = 3.3
    r2: float = 5600.0
    adc_levels: int = 1024
    i_max: float = 0.0005

    def __post_init__(self) -> None:
        if self.v_in <= 0:
            raise ValueError(f"v_in must be positive, got {self.v_in}")
        if self.r2 <= 0:
            raise ValueError(f"r2 must be positive, got {self.r2}")
        if self.adc_levels < 2:
            raise ValueError(f"adc_levels must be >= 2, got {self.adc_levels}")
        if self.i_max <= 0:
            raise ValueError(f"i_max must be positive, got {self.i_max}")


@dataclass(frozen=True)
class AdcReading:
    """One quantized sample: ``steps`` counts out of the ADC's range."""

    steps: int

    def __post_init__(self) -> None:
        if not isinstance(self.steps, int):
            raise TypeError(f"steps must be an int, got {type(self.steps).__name__}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")


class CurrentCheck(NamedTuple):
    """Result of a current-budget check at full load."""

    current_a: float
    within_limit: bool


def resistance_from_force(model: FsrModel, force: float) -> float:
    """Resistance of the sensor under ``force`` newton.

    Forces below ``model.min_force`` (including exactly zero) read as
    :data:`OPEN_CIRCUIT`; forces above ``model.max_force`` saturate at
    the ``max_force`` resistance.  Negative force is a domain error.
    """
    if not math.isfinite(force) or force < 0:
        raise ValueError(f"force must be finite and >= 0, got {force}")
    if force == 0.0 or force < model.min_force:
        return OPEN_CIRCUIT
    return model.r_const / min(force, model.max_force)


def divider_voltage(circuit: DividerCircuit, r_fsr: float) -> float:
    """Voltage at the divider midpoint for a sensor resistance.

    ``v = v_in * r2 / (r_fsr + r2)``; an open sensor reads 0 V.
    """
    if is_open(r_fsr):
        return 0.0
    if not math.isfinite(r_fsr) or r_fsr <= 0:
        raise ValueError(f"r_fsr must be positive, finite, or open; got {r_fsr}")
    return circuit.v_in * circuit.r2 / (r_fsr + circuit.r2)


def adc_quantize(circuit: DividerCircuit, voltage: float) -> AdcReading:
    """Round a midpoint voltage to the nearest ADC step.

    Steps are clamped to ``[0, adc_levels - 1]``; ties round up.
    """
    if not (0.0 <= voltage <= circuit.v_in):
        raise ValueError(f"voltage must be within [0, {circuit.v_in}], got {voltage}")
    steps = int(math.floor(voltage * circuit.adc_levels / circuit.v_in + 0.5))
    return AdcReading(min(max(steps, 0), circuit.adc_levels - 1))


def resistance_from_steps(circuit: DividerCircuit, reading: AdcReading | int) -> float:
    """Recover the sensor resistance from a quantized reading.

    Inverts the divider: ``r = r2 * (adc_levels / steps - 1)``.  Zero
    steps read as :data:`OPEN_CIRCUIT`.  ``steps == adc_levels`` (full
    scale before clamping, hypothetical) maps to exactly 0 ohm.
    """
    steps = reading.steps if isinstance(reading, AdcReading) else int(reading)
    if not (0 <= steps <= circuit.adc_levels):
        raise ValueError(f"steps must be within [0, {circuit.adc_levels}], got {steps}")
    if steps == 0:
        return OPEN_CIRCUIT
    return circuit.r2 * (circuit.adc_levels / steps - 1.0)


def resistance_from_steps_via_ratio(circuit: DividerCircuit, steps: int) -> float:
    """Resistance recovery written as the explicit supply/ratio quotient.

    ``r = (v_in * r2) / (v_in * (steps / adc_levels)) - r2``.  This is
    algebraically identical to :func:`resistance_from_steps`; it exists
    so the two spellings can be checked against each other.
    """
    if not (1 <= steps <= circuit.adc_levels):
        raise ValueError(f"steps must be within [1, {circuit.adc_levels}], got {steps}")
    return (circuit.v_in * circuit.r2) / (circuit.v_in * (steps / circuit.adc_levels)) - circuit.r2


def check_current_limit(circuit: DividerCircuit, r_fsr_min: float) -> CurrentCheck:
    """Check the sensor current at its lowest (full-load) resistance.

    The divider current is ``v_in / (r_fsr_min + r2)``; the check passes
    when it stays at or under ``circuit.i_max``.  An open sensor draws
    no current and always passes.
    """
    if is_open(r_fsr_min):
        return CurrentCheck(0.0, True)
    if not math.isfinite(r_fsr_min) or r_fsr_min < 0:
        raise ValueError(f"r_fsr_min must be >= 0, finite, or open; got {r_fsr_min}")
    current = circuit.v_in / (r_fsr_min + circuit.r2)
    return CurrentCheck(current, current <= circuit.i_max)


def recovered_resistance_uncertainty(
    circuit: DividerCircuit, reading: AdcReading | int
) -> float:
    """Worst-case recovery error (ohm) from half-a-step of quantization.

    If the exact, unrounded step count lies within half a step of the
    observed ``steps``, the recovered resistance can be off by at most
    ``r2 * adc_levels * 0.5 / (steps * (steps - 0.5))``.
    """
    steps = reading.steps if isinstance(reading, AdcReading) else int(reading)
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    return circuit.r2 * circuit.adc_levels * 0.5 / (steps * (steps - 0.5))
