import math

import pytest
from hypothesis import given, strategies as st

from fsrsole.circuit import (
    OPEN_CIRCUIT,
    AdcReading,
    DividerCircuit,
    FsrModel,
    adc_quantize,
    check_current_limit,
    divider_voltage,
    is_open,
    recovered_resistance_uncertainty,
    resistance_from_force,
    resistance_from_steps,
    resistance_from_steps_via_ratio,
)

CIRCUIT = DividerCircuit()


class TestFsrModel:
    def test_inverse_law(self):
        model = FsrModel("S", 9600.0)
        assert resistance_from_force(model, 1.0) == 9600.0
        assert resistance_from_force(model, 2.0) == 4800.0
        assert resistance_from_force(model, 96.0) == 100.0

    def test_zero_force_reads_open(self):
        model = FsrModel("S", 9600.0)
        assert is_open(resistance_from_force(model, 0.0))

    def test_below_min_force_reads_open(self):
        model = FsrModel("S", 9600.0, min_force=5.0)
        assert is_open(resistance_from_force(model, 4.9))
        assert resistance_from_force(model, 5.0) == 9600.0 / 5.0

    def test_saturates_at_max_force(self):
        model = FsrModel("S", 9600.0, max_force=441.0)
        at_limit = resistance_from_force(model, 441.0)
        assert resistance_from_force(model, 1000.0) == at_limit

    def test_negative_force_rejected(self):
        model = FsrModel("S", 9600.0)
        with pytest.raises(ValueError):
            resistance_from_force(model, -1.0)

    def test_bad_model_params_rejected(self):
        with pytest.raises(ValueError):
            FsrModel("S", 0.0)
        with pytest.raises(ValueError):
            FsrModel("S", 9600.0, min_force=-1.0)
        with pytest.raises(ValueError):
            FsrModel("S", 9600.0, min_force=10.0, max_force=5.0)


class TestDivider:
    def test_defaults(self):
        assert CIRCUIT.v_in == 3.3
        assert CIRCUIT.r2 == 5600.0
        assert CIRCUIT.adc_levels == 1024
        assert CIRCUIT.i_max == 0.0005

    def test_voltage_at_3000_ohm(self):
        # 3.3 * 5600 / 8600
        assert divider_voltage(CIRCUIT, 3000.0) == pytest.approx(2.148837, abs=1e-6)

    def test_voltage_at_10000_ohm(self):
        # 3.3 * 5600 / 15600
        assert divider_voltage(CIRCUIT, 10000.0) == pytest.approx(1.184615, abs=1e-6)

    def test_voltage_open_circuit_is_zero(self):
        assert divider_voltage(CIRCUIT, OPEN_CIRCUIT) == 0.0

    def test_voltage_monotone_decreasing_in_resistance(self):
        vs = [divider_voltage(CIRCUIT, r) for r in (100, 1000, 5600, 50000)]
        assert vs == sorted(vs, reverse=True)

    def test_equal_resistances_split_supply(self):
        assert divider_voltage(CIRCUIT, 5600.0) == pytest.approx(1.65)


class TestAdc:
    def test_quantize_rounds_to_nearest(self):
        # 2.149 V -> 2.149 * 1024 / 3.3 = 666.84 -> 667
        assert adc_quantize(CIRCUIT, 2.149).steps == 667

    def test_quantize_clamps_full_scale(self):
        assert adc_quantize(CIRCUIT, 3.3).steps == 1023
        assert adc_quantize(CIRCUIT, 0.0).steps == 0

    def test_quantize_rejects_out_of_range_voltage(self):
        with pytest.raises(ValueError):
            adc_quantize(CIRCUIT, -0.5)
        with pytest.raises(ValueError):
            adc_quantize(CIRCUIT, 3.31)

    def test_zero_steps_reads_open(self):
        assert is_open(resistance_from_steps(CIRCUIT, 0))
        assert is_open(resistance_from_steps(CIRCUIT, AdcReading(0)))

    def test_recovery_at_667_steps(self):
        # 5600 * (1024/667 - 1) = 5600 * 357 / 667
        assert resistance_from_steps(CIRCUIT, 667) == pytest.approx(
            5600.0 * 357.0 / 667.0
        )

    def test_midpoint_is_exact(self):
        # 5600 ohm gives exactly half the supply, hence exactly 512 steps,
        # and the recovery is exact.
        reading = adc_quantize(CIRCUIT, divider_voltage(CIRCUIT, 5600.0))
        assert reading.steps == 512
        assert resistance_from_steps(CIRCUIT, reading) == 5600.0

    def test_steps_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            resistance_from_steps(CIRCUIT, -1)
        with pytest.raises(ValueError):
            resistance_from_steps(CIRCUIT, 1025)
        with pytest.raises(ValueError):
            AdcReading(-3)

    def test_recovery_formulas_agree_everywhere(self):
        # The direct form r2*(N/s - 1) and the two-stage form
        # (v_in*r2)/(v_in*s/N) - r2 must agree at every step count.
        for steps in range(1, CIRCUIT.adc_levels + 1):
            direct = resistance_from_steps(CIRCUIT, steps)
            staged = resistance_from_steps_via_ratio(CIRCUIT, steps)
            assert math.isclose(direct, staged, rel_tol=1e-12, abs_tol=1e-12)


class TestRoundTrip:
    FIXED = (100.0, 200.0, 500.0, 1000.0, 3000.0, 5600.0, 10000.0)

    def test_fixed_resistances_within_one_percent(self):
        for r1 in self.FIXED:
            reading = adc_quantize(CIRCUIT, divider_voltage(CIRCUIT, r1))
            assert reading.steps >= 100
            recovered = resistance_from_steps(CIRCUIT, reading)
            assert abs(recovered - r1) / r1 < 0.01

    def test_error_bound_is_analytic(self):
        # |recovered - true| <= r2*N/2 / (s*(s-1/2)) given s >= 1.
        for r1 in self.FIXED:
            reading = adc_quantize(CIRCUIT, divider_voltage(CIRCUIT, r1))
            recovered = resistance_from_steps(CIRCUIT, reading)
            assert abs(recovered - r1) <= recovered_resistance_uncertainty(
                CIRCUIT, reading
            )

    @given(st.floats(min_value=10.0, max_value=1e6))
    def test_round_trip_error_within_uncertainty(self, r1):
        reading = adc_quantize(CIRCUIT, divider_voltage(CIRCUIT, r1))
        if reading.steps == 0:
            return  # too large to resolve: reads open
        recovered = resistance_from_steps(CIRCUIT, reading)
        assert abs(recovered - r1) <= recovered_resistance_uncertainty(CIRCUIT, reading)

    @given(st.integers(min_value=1, max_value=1023))
    def test_steps_round_trip_exactly(self, steps):
        # Going resistance -> voltage -> steps must reproduce the steps.
        r = resistance_from_steps(CIRCUIT, steps)
        assert adc_quantize(CIRCUIT, divider_voltage(CIRCUIT, r)).steps == steps


class TestCurrentLimit:
    def test_low_resistance_exceeds_limit(self):
        check = check_current_limit(CIRCUIT, 100.0)
        assert check.current_a == pytest.approx(3.3 / 5700.0)
        assert check.current_a > 0.0005
        assert not check.within_limit

    def test_high_resistance_within_limit(self):
        check = check_current_limit(CIRCUIT, 10000.0)
        assert check.current_a == pytest.approx(3.3 / 15600.0)
        assert check.within_limit

    def test_threshold_resistance(self):
        # v_in / i_max - r2 = 3.3/0.0005 - 5600 = 1000 ohm is the break-even.
        assert check_current_limit(CIRCUIT, 1000.0).within_limit
        assert not check_current_limit(CIRCUIT, 999.0).within_limit
