import pytest

from fsrsole.calibration import CalibrationPoint, CurveStore, build_curve
from fsrsole.circuit import FsrModel
from fsrsole.detector import run_pipeline
from fsrsole.estimation import CHANNELS
from fsrsole.traces import generate_trace, lift_cycles_spec

# Calibration sweep grid: every 9.8 N (1 kg of load) up to the sensor limit.
# The last knot is written as an exact 441.0 because 45 * 9.8 rounds up in
# floats and would fall outside the supported sweep range.
FORCE_GRID = tuple(9.8 * k for k in range(1, 45)) + (441.0,)


def channel_r_const(index: int) -> float:
    """A mildly heterogeneous device family: ~10% spread across channels."""
    return 600000.0 * (0.85 + 0.02 * index)


def make_curve(sensor_id: str, r_const: float, max_force: float = 441.0):
    points = [CalibrationPoint(f, r_const / f) for f in FORCE_GRID if f <= max_force]
    return build_curve(sensor_id, points)


@pytest.fixture(scope="session")
def models16() -> dict[str, FsrModel]:
    return {
        ch: FsrModel(ch, channel_r_const(i), max_force=441.0)
        for i, ch in enumerate(CHANNELS)
    }


@pytest.fixture(scope="session")
def curves16(models16):
    return {ch: make_curve(ch, m.r_const) for ch, m in models16.items()}


@pytest.fixture(scope="session")
def store16(curves16, models16):
    return CurveStore(curves=dict(curves16), models=dict(models16), compensation=None)


@pytest.fixture(scope="session")
def exp1_noiseless(models16, curves16):
    """One cached noiseless three-cycle 18.6 kg session plus its detection run."""
    spec = lift_cycles_spec(models16, load_kg=18.6)
    frames, truth = generate_trace(spec)
    result = run_pipeline(frames, curves16)
    return spec, frames, truth, result
