import pytest

from fsrsole.detector import (
    LIFTING,
    LOWERING,
    DetectorConfig,
    Phase,
    StreamError,
    initial_state,
    run_detector,
    run_pipeline,
    step,
)
from fsrsole.estimation import WeightSample
from fsrsole.traces import generate_trace, lift_cycles_spec


def drive(weights, base=83.0, spacing_ms=100, config=None):
    """Feed a plain weight series through the machine, collecting events."""
    config = config or DetectorConfig()
    state = initial_state(base)
    events = []
    phases = []
    for i, w in enumerate(weights):
        sample = WeightSample(t_ms=i * spacing_ms, total_kg=w, per_channel_n=())
        state, event = step(state, config, sample)
        phases.append(state.phase)
        if event is not None:
            events.append(event)
    return state, events, phases


class TestMargins:
    def test_floor_of_two_kilograms(self):
        config = DetectorConfig()
        assert config.dip_margin(40.0) == 2.0
        assert config.rise_margin(40.0) == 2.0

    def test_relative_margin_above_eighty_kilograms(self):
        config = DetectorConfig()
        assert config.dip_margin(83.0) == pytest.approx(2.075)
        assert config.rise_margin(83.0) == pytest.approx(2.075)

    def test_spike_margin_includes_load(self):
        config = DetectorConfig()
        assert config.spike_margin(83.0, 18.6) == pytest.approx(2.54)

    def test_explicit_margins_win(self):
        config = DetectorConfig(dip_margin_kg=5.0, rise_margin_kg=6.0, spike_margin_kg=7.0)
        assert config.dip_margin(83.0) == 5.0
        assert config.rise_margin(83.0) == 6.0
        assert config.spike_margin(83.0, 18.6) == 7.0


class TestHandTrace:
    # base 83 kg; margins: dip/rise 2.075, spike 2.54 once 18.6 kg is up.
    WEIGHTS = [83.0, 80.0, 80.0, 101.6, 101.6, 101.6, 101.6, 104.5, 82.0]

    def test_full_lift_lower_cycle(self):
        state, events, phases = drive(self.WEIGHTS)
        assert [e.kind for e in events] == [LIFTING, LOWERING]
        lift, lower = events
        # Rise starts at t=300; the quarter-second gate passes at t=600,
        # and only that settled sample feeds the first estimate.
        assert lift.t_ms == 600
        assert lift.lifted_kg == pytest.approx(18.6)
        assert lower.t_ms == 800
        assert lower.lifted_kg is None
        assert state.phase is Phase.IDLE

    def test_phase_walkthrough(self):
        _, _, phases = drive(self.WEIGHTS)
        assert phases == [
            Phase.IDLE,          # 83.0: nothing
            Phase.PRE_LIFTING,   # 80.0 < 80.925: armed
            Phase.PRE_LIFTING,   # still down
            Phase.PRE_LIFTING,   # 101.6 > 85.075: rise starts
            Phase.PRE_LIFTING,   # 100 ms of rise
            Phase.PRE_LIFTING,   # 200 ms
            Phase.LIFTING,       # 300 ms >= threshold: event
            Phase.PRE_LOWERING,  # 104.5 > 83 + 18.6 + 2.54
            Phase.IDLE,          # 82.0 < 83: lowered
        ]

    def test_spike_must_exceed_margin(self):
        weights = list(self.WEIGHTS)
        weights[7] = 104.0  # below 104.14: not a spike
        _, events, phases = drive(weights)
        assert [e.kind for e in events] == [LIFTING]
        assert phases[7] is Phase.LIFTING

    def test_lowering_requires_strictly_below_base(self):
        weights = self.WEIGHTS[:8] + [83.0, 83.0]
        state, events, _ = drive(weights)
        assert [e.kind for e in events] == [LIFTING]
        assert state.phase is Phase.PRE_LOWERING


class TestTimeGate:
    def test_short_rise_does_not_fire(self):
        # Two samples above the rise margin span only 100 ms.
        weights = [83.0, 80.0, 101.6, 101.6, 80.0, 80.0]
        _, events, _ = drive(weights)
        assert events == []

    def test_interrupted_rise_restarts_the_clock(self):
        # The rise breaks at t=500; the second rise must last 250 ms on
        # its own before firing.
        weights = [83.0, 80.0, 101.6, 101.6, 83.0, 101.6, 101.6, 101.6, 101.6]
        _, events, _ = drive(weights)
        assert [e.kind for e in events] == [LIFTING]
        assert events[0].t_ms == 800  # 250 ms after the restart at t=500

    def test_walking_dip_written_off(self):
        # Arm at t=100, then hold the baseline band from t=200 on; after
        # 500 ms (= 2 * threshold) in band the machine disarms silently.
        weights = [83.0, 80.0, 83.0, 83.0, 83.0, 83.0, 83.0, 83.0]
        state, events, phases = drive(weights)
        assert events == []
        assert phases[6] is Phase.PRE_LIFTING  # t=600: only 400 ms in band
        assert phases[7] is Phase.IDLE  # t=700: 500 ms in band since t=200
        assert state.phase is Phase.IDLE


class TestEstimateRefinement:
    def test_running_mean_over_agreeing_samples(self):
        # After the event at t=600 (estimate 18.6), samples within the
        # spike margin keep refining the estimate.
        weights = [83.0, 80.0, 80.0, 101.6, 101.6, 101.6, 101.6, 101.0, 100.8]
        state, events, _ = drive(weights)
        assert events[0].lifted_kg == pytest.approx(18.6)
        # refined with deltas 18.0 and 17.8: mean of (18.6, 18.0, 17.8)
        assert state.lifted_kg == pytest.approx((18.6 + 18.0 + 17.8) / 3)

    def test_outliers_do_not_pollute_the_estimate(self):
        weights = [83.0, 80.0, 80.0, 101.6, 101.6, 101.6, 101.6, 90.0]
        state, events, _ = drive(weights)
        # 90.0 is 7 kg under the carried weight: ignored.
        assert state.lifted_kg == pytest.approx(18.6)
        assert state.phase is Phase.LIFTING


class TestStreamContract:
    def test_non_increasing_timestamps_rejected(self):
        config = DetectorConfig()
        state = initial_state(83.0)
        state, _ = step(state, config, WeightSample(100, 83.0, ()))
        with pytest.raises(StreamError):
            step(state, config, WeightSample(100, 83.0, ()))

    def test_bad_base_rejected(self):
        with pytest.raises(ValueError):
            initial_state(0.0)


class TestPipeline:
    def test_auto_baseline_matches_explicit_base(self, models16, curves16, exp1_noiseless):
        _, frames, truth, auto_result = exp1_noiseless
        explicit = run_pipeline(frames, curves16, base_kg=auto_result.baseline.base_kg)
        assert [e.kind for e in explicit.events] == [e.kind for e in auto_result.events]

    def test_detection_starts_after_baseline_window(self, exp1_noiseless):
        _, _, _, result = exp1_noiseless
        assert all(e.t_ms > result.baseline.window_ms[1] for e in result.events)

    def test_events_alternate(self, exp1_noiseless):
        _, _, _, result = exp1_noiseless
        kinds = [e.kind for e in result.events]
        assert kinds == [LIFTING, LOWERING] * 3

    def test_run_detector_returns_just_events(self, models16, curves16):
        spec = lift_cycles_spec(models16, load_kg=18.6, cycles=1)
        frames, _ = generate_trace(spec)
        events = run_detector(frames, curves16)
        assert [e.kind for e in events] == [LIFTING, LOWERING]
