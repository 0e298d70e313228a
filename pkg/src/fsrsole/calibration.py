"""Per-sensor force/resistance curves and cross-sensor equalization.

A calibration sweep loads a sensor in known force steps and records the
resistance at each step.  This module turns such sweeps into clean,
strictly monotone lookup curves, inverts them (resistance back to
force), fits the inverse-law device constant, and builds series
compensation values that equalize sensors against the least sensitive
one.  It also owns the on-disk formats: the calibration CSV and the
JSON curve store.
"""
from __future__ import annotations

import csv
import json
import math
import os
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .circuit import FsrModel, OPEN_CIRCUIT, is_open
from .fileio import atomic_write_text

MAX_CALIBRATION_FORCE = 441.0

CALIBRATION_CSV_HEADER = ("sensor_id", "force_n", "resistance_ohm")
CURVE_STORE_VERSION = 1


class CalibrationError(ValueError):
    """Raised when calibration data cannot produce a usable curve."""


@dataclass(frozen=True)
class CalibrationPoint:
    """One sweep sample: applied force (N) and measured resistance (ohm)."""

    force: float
    resistance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.force) and self.force >= 0):
            raise ValueError(f"force must be finite and >= 0, got {self.force}")
        if not (math.isfinite(self.resistance) and self.resistance > 0):
            raise ValueError(f"resistance must be finite and positive, got {self.resistance}")


@dataclass(frozen=True)
class SensorCurve:
    """Cleaned lookup curve for one sensor.

    Points are sorted by strictly increasing force and carry strictly
    decreasing resistance, so both directions of lookup are single
    valued.
    """

    sensor_id: str
    points: tuple[CalibrationPoint, ...]
    # Ascending-resistance view used for inverse (resistance -> force) lookup.
    _res_asc: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _force_by_res_asc: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise CalibrationError(
                f"sensor {self.sensor_id!r}: need at least 2 points, got {len(self.points)}"
            )
        for prev, cur in zip(self.points, self.points[1:]):
            if cur.force <= prev.force:
                raise CalibrationError(
                    f"sensor {self.sensor_id!r}: forces must be strictly increasing"
                )
            if cur.resistance >= prev.resistance:
                raise CalibrationError(
                    f"sensor {self.sensor_id!r}: resistance must be strictly decreasing"
                )
        rev = tuple(reversed(self.points))
        object.__setattr__(self, "_res_asc", tuple(p.resistance for p in rev))
        object.__setattr__(self, "_force_by_res_asc", tuple(p.force for p in rev))

    @property
    def forces(self) -> tuple[float, ...]:
        return tuple(p.force for p in self.points)

    @property
    def resistances(self) -> tuple[float, ...]:
        return tuple(p.resistance for p in self.points)

    def resistance_at(self, force: float) -> float:
        """Forward interpolation (force -> resistance), clamped at the ends."""
        forces = self.forces
        if force <= forces[0]:
            return self.points[0].resistance
        if force >= forces[-1]:
            return self.points[-1].resistance
        hi = bisect_left(forces, force)
        lo = hi - 1
        a, b = self.points[lo], self.points[hi]
        frac = (force - a.force) / (b.force - a.force)
        return a.resistance + frac * (b.resistance - a.resistance)


def isotonic_decreasing_fit(values: Sequence[float]) -> list[float]:
    """Least-squares non-increasing fit by pooling adjacent violators.

    Returns the closest (in summed squared error) non-increasing
    sequence to ``values``; equal-weight pooling, classic
    pool-adjacent-violators.
    """
    blocks: list[list[float]] = []  # each block: [sum, count]
    for v in values:
        blocks.append([float(v), 1.0])
        # Merge while an earlier block mean is smaller than a later one.
        while len(blocks) > 1 and blocks[-2][0] * blocks[-1][1] < blocks[-1][0] * blocks[-2][1]:
            s, c = blocks.pop()
            blocks[-1][0] += s
            blocks[-1][1] += c
    out: list[float] = []
    for s, c in blocks:
        out.extend([s / c] * int(c))
    return out


def _strictify_decreasing(values: Sequence[float]) -> list[float]:
    """Break ties in a non-increasing sequence by a minimal epsilon."""
    out = list(values)
    i = 0
    while i < len(out):
        j = i
        while j + 1 < len(out) and out[j + 1] == out[i]:
            j += 1
        if j > i:
            run = j - i + 1
            gap_below = out[i] - out[j + 1] if j + 1 < len(out) else out[i]
            eps = max(abs(out[i]), 1.0) * 1e-9
            if gap_below > 0:
                eps = min(eps, gap_below / (2.0 * run))
            for k in range(i + 1, j + 1):
                out[k] = out[i] - (k - i) * eps
        i = j + 1
    return out


def build_curve(sensor_id: str, raw_points: Iterable[CalibrationPoint]) -> SensorCurve:
    """Clean a raw sweep into a strictly monotone :class:`SensorCurve`.

    Zero-force samples are dropped (the sensor is open there), repeated
    force levels are averaged, and any resistance that fails to decrease
    with force is pooled with its neighbors; the pooled ties are then
    separated by a minimal epsilon so the curve stays strictly
    decreasing.

    Raises :class:`CalibrationError` when fewer than two usable points
    remain or a force exceeds the supported sweep range.
    """
    by_force: dict[float, list[float]] = {}
    for p in raw_points:
        if p.force > MAX_CALIBRATION_FORCE:
            raise CalibrationError(
                f"sensor {sensor_id!r}: force {p.force} N outside 0..{MAX_CALIBRATION_FORCE} N"
            )
        if p.force == 0.0:
            continue
        by_force.setdefault(p.force, []).append(p.resistance)
    if len(by_force) < 2:
        raise CalibrationError(
            f"sensor {sensor_id!r}: need at least 2 distinct nonzero force levels, "
            f"got {len(by_force)}"
        )
    forces = sorted(by_force)
    means = [sum(by_force[f]) / len(by_force[f]) for f in forces]
    fitted = _strictify_decreasing(isotonic_decreasing_fit(means))
    points = tuple(CalibrationPoint(f, r) for f, r in zip(forces, fitted))
    return SensorCurve(sensor_id, points)


def interpolate_force(curve: SensorCurve, resistance: float) -> float:
    """Invert a curve: measured resistance (ohm) to force (N).

    Resistances above the largest tabulated value, and open circuit,
    read 0 N (the sensor is effectively unloaded); resistances below the
    smallest tabulated value clamp to the largest tabulated force.
    In between, force is linear in resistance.
    """
    if is_open(resistance):
        return 0.0
    if not (math.isfinite(resistance) and resistance > 0):
        raise ValueError(f"resistance must be positive, finite, or open; got {resistance}")
    res_asc = curve._res_asc
    forces = curve._force_by_res_asc
    if resistance > res_asc[-1]:
        return 0.0
    if resistance <= res_asc[0]:
        return forces[0]
    hi = bisect_left(res_asc, resistance)
    if res_asc[hi] == resistance:
        return forces[hi]
    lo = hi - 1
    frac = (resistance - res_asc[lo]) / (res_asc[hi] - res_asc[lo])
    return forces[lo] + frac * (forces[hi] - forces[lo])


def fit_model_constant(curve: SensorCurve) -> FsrModel:
    """Least-squares inverse-law constant for a curve.

    Minimizes ``sum((r_i - c / f_i)^2)`` over ``c``, which gives
    ``c = sum(r_i / f_i) / sum(1 / f_i^2)`` in closed form.  The fitted
    model spans from zero up to the curve's largest calibrated force.
    """
    num = sum(p.resistance / p.force for p in curve.points)
    den = sum(1.0 / (p.force * p.force) for p in curve.points)
    return FsrModel(
        sensor_id=curve.sensor_id,
        r_const=num / den,
        min_force=0.0,
        max_force=curve.points[-1].force,
    )


@dataclass(frozen=True)
class CompensationTable:
    """Series resistance added per sensor to match the base sensor.

    The base sensor is the least sensitive one (highest resistance at a
    given force); its own compensation is zero.
    """

    base_sensor_id: str
    series_ohm: Mapping[str, float]

    def __post_init__(self) -> None:
        table = dict(self.series_ohm)
        object.__setattr__(self, "series_ohm", table)
        if self.base_sensor_id not in table:
            raise ValueError(f"base sensor {self.base_sensor_id!r} missing from table")
        if table[self.base_sensor_id] != 0.0:
            raise ValueError("base sensor compensation must be 0")
        for sid, ohm in table.items():
            if not (math.isfinite(ohm) and ohm >= 0):
                raise ValueError(f"compensation for {sid!r} must be finite and >= 0, got {ohm}")


def equalize(curves: Sequence[SensorCurve]) -> CompensationTable:
    """Build series compensation that lines sensors up with the base one.

    All curves are resampled onto the union of their force knots within
    the shared force range.  The base sensor is the one with the highest
    mean resistance over those levels (ties break toward the smallest
    sensor id); every other sensor gets the mean resistance difference
    to the base, floored at zero.
    """
    if len(curves) < 2:
        raise CalibrationError(f"equalization needs at least 2 curves, got {len(curves)}")
    ids = [c.sensor_id for c in curves]
    if len(set(ids)) != len(ids):
        raise CalibrationError("duplicate sensor ids in equalization set")
    lo = max(c.forces[0] for c in curves)
    hi = min(c.forces[-1] for c in curves)
    if lo > hi:
        raise CalibrationError("curves share no force range; cannot equalize")
    levels = sorted({f for c in curves for f in c.forces if lo <= f <= hi})
    if not levels:
        levels = [lo, hi] if hi > lo else [lo]
    sampled = {c.sensor_id: [c.resistance_at(f) for f in levels] for c in curves}
    means = {sid: sum(vals) / len(vals) for sid, vals in sampled.items()}
    base_id = min(means, key=lambda sid: (-means[sid], sid))
    table = {
        sid: max(0.0, means[base_id] - means[sid]) if sid != base_id else 0.0
        for sid in sampled
    }
    return CompensationTable(base_sensor_id=base_id, series_ohm=table)


def apply_compensation(table: CompensationTable, sensor_id: str, resistance: float) -> float:
    """Add a sensor's series compensation to a measured resistance.

    Open circuit stays open.  Unknown sensors raise ``KeyError``.
    """
    offset = table.series_ohm[sensor_id]
    if is_open(resistance):
        return OPEN_CIRCUIT
    return resistance + offset


@dataclass(frozen=True)
class ParallelComparison:
    """Outcome of wiring sensors in parallel versus reading them singly.

    ``inferred_force`` is the force obtained by pushing the parallel
    resistance through the reference (least sensitive) model;
    ``discrepancy`` is ``inferred_force - true_force_total``.
    """

    sensor_resistances: tuple[float, ...]
    module_resistance: float
    inferred_force: float
    true_force_total: float
    discrepancy: float

    @property
    def relative_discrepancy(self) -> float:
        if self.true_force_total == 0:
            return 0.0
        return self.discrepancy / self.true_force_total


def combine_parallel_analysis(
    models: Sequence[FsrModel], forces: Sequence[float]
) -> ParallelComparison:
    """Compare a parallel sensor group's combined reading with the truth.

    Each sensor sees its own force; conductances add:
    ``1/r_module = sum(1/r_i)``.  The module resistance is then read
    back through the reference model (the one with the largest
    ``r_const``), and the inferred force is compared against the plain
    sum of the individual forces.  The discrepancy is zero exactly when
    every sensor shares the reference device constant; open (unloaded)
    channels contribute no conductance and no force.
    """
    if not models:
        raise ValueError("need at least one model")
    if len(models) != len(forces):
        raise ValueError(f"got {len(models)} models but {len(forces)} forces")
    from .circuit import resistance_from_force

    resistances = tuple(resistance_from_force(m, f) for m, f in zip(models, forces))
    conductance = sum(0.0 if is_open(r) else 1.0 / r for r in resistances)
    module_r = OPEN_CIRCUIT if conductance == 0.0 else 1.0 / conductance
    reference = max(models, key=lambda m: (m.r_const, m.sensor_id))
    inferred = 0.0 if is_open(module_r) else reference.r_const / module_r
    true_total = sum(f for r, f in zip(resistances, forces) if not is_open(r))
    return ParallelComparison(
        sensor_resistances=resistances,
        module_resistance=module_r,
        inferred_force=inferred,
        true_force_total=true_total,
        discrepancy=inferred - true_total,
    )


# ---------------------------------------------------------------------------
# File formats


def load_calibration_csv(path: str | os.PathLike[str]) -> dict[str, list[CalibrationPoint]]:
    """Read a sweep CSV with header ``sensor_id,force_n,resistance_ohm``.

    Returns raw points grouped by sensor id, in file order.  Malformed
    rows raise :class:`CalibrationError` naming the row number.
    """
    points: dict[str, list[CalibrationPoint]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CalibrationError(f"{os.fspath(path)}: file is empty")
        if tuple(h.strip() for h in header) != CALIBRATION_CSV_HEADER:
            raise CalibrationError(
                f"{os.fspath(path)}: expected header {','.join(CALIBRATION_CSV_HEADER)}, "
                f"got {','.join(header)}"
            )
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise CalibrationError(f"{os.fspath(path)}: row {row_no}: expected 3 fields")
            sid = row[0].strip()
            try:
                point = CalibrationPoint(float(row[1]), float(row[2]))
            except ValueError as exc:
                raise CalibrationError(f"{os.fspath(path)}: row {row_no}: {exc}") from exc
            if not sid:
                raise CalibrationError(f"{os.fspath(path)}: row {row_no}: empty sensor_id")
            points.setdefault(sid, []).append(point)
    if not points:
        raise CalibrationError(f"{os.fspath(path)}: no data rows")
    return points


@dataclass(frozen=True)
class CurveStore:
    """Everything the pipeline needs per sensor, as persisted on disk."""

    curves: Mapping[str, SensorCurve]
    models: Mapping[str, FsrModel]
    compensation: CompensationTable | None = None


def save_curve_store(path: str | os.PathLike[str], store: CurveStore) -> None:
    """Persist a curve store as a single JSON document (atomic write)."""
    sensors = {}
    for sid in sorted(store.curves):
        curve = store.curves[sid]
        model = store.models[sid]
        sensors[sid] = {
            "r_const": model.r_const,
            "points": [
                {"force_n": p.force, "resistance_ohm": p.resistance} for p in curve.points
            ],
        }
    doc = {
        "version": CURVE_STORE_VERSION,
        "sensors": sensors,
        "compensation": (
            None
            if store.compensation is None
            else {
                "base_sensor_id": store.compensation.base_sensor_id,
                "series_ohm": {
                    sid: store.compensation.series_ohm[sid]
                    for sid in sorted(store.compensation.series_ohm)
                },
            }
        ),
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_curve_store(path: str | os.PathLike[str]) -> CurveStore:
    """Load a curve store written by :func:`save_curve_store`."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"{os.fspath(path)}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "sensors" not in doc:
        raise CalibrationError(f"{os.fspath(path)}: missing 'sensors' object")
    if doc.get("version") != CURVE_STORE_VERSION:
        raise CalibrationError(
            f"{os.fspath(path)}: unsupported store version {doc.get('version')!r}"
        )
    curves: dict[str, SensorCurve] = {}
    models: dict[str, FsrModel] = {}
    for sid, entry in doc["sensors"].items():
        try:
            points = tuple(
                CalibrationPoint(p["force_n"], p["resistance_ohm"]) for p in entry["points"]
            )
            curves[sid] = SensorCurve(sid, points)
            models[sid] = FsrModel(
                sensor_id=sid,
                r_const=float(entry["r_const"]),
                min_force=0.0,
                max_force=points[-1].force,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CalibrationError(f"{os.fspath(path)}: sensor {sid!r}: {exc}") from exc
    comp = doc.get("compensation")
    compensation = None
    if comp is not None:
        try:
            compensation = CompensationTable(
                base_sensor_id=comp["base_sensor_id"],
                series_ohm={sid: float(v) for sid, v in comp["series_ohm"].items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CalibrationError(f"{os.fspath(path)}: bad compensation table: {exc}") from exc
    return CurveStore(curves=curves, models=models, compensation=compensation)
