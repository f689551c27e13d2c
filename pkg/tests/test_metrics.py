import random
from dataclasses import dataclass, field
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmzones.metrics import (
    CoverageModel,
    FleetWindowStats,
    LinkSample,
    SignalTimeModel,
    coverage_time,
    drones_in_use,
    ks_statistic,
    sample_signal_time,
    throughput,
    triangular_cdf,
    utilization_series,
)


@dataclass
class Ev:
    tick: int
    kind: str
    payload: dict = field(default_factory=dict)


def state_ev(tick, drone, state):
    return Ev(tick, "drone_state", {"drone": drone, "state": state})


class TestThroughput:
    def test_all_bits_errored(self):
        assert throughput(LinkSample(1000, 1.0, 0.05)) == 0

    def test_reference_vector(self):
        # 256*8*1000*0.99/0.05
        assert throughput(LinkSample(1000, 0.01, 0.05)) == pytest.approx(40_550_400.0)

    def test_exact_rational(self):
        s = LinkSample(1000, Fraction(1, 100), Fraction(1, 20))
        assert throughput(s) == Fraction(2048 * 1000 * 99, 100) * 20 / 1

    @given(n=st.integers(0, 10_000), ber_num=st.integers(0, 100))
    @settings(max_examples=100)
    def test_linear_in_packets_and_success(self, n, ber_num):
        ber = Fraction(ber_num, 100)
        t = Fraction(1, 10)
        one = throughput(LinkSample(1, ber, t))
        many = throughput(LinkSample(n, ber, t))
        assert many == n * one

    def test_halving_time_doubles_throughput(self):
        a = throughput(LinkSample(500, Fraction(1, 50), Fraction(1, 10)))
        b = throughput(LinkSample(500, Fraction(1, 50), Fraction(1, 20)))
        assert b == 2 * a

    def test_validation(self):
        with pytest.raises(ValueError):
            LinkSample(10, 1.5, 0.05)
        with pytest.raises(ValueError):
            LinkSample(10, 0.5, 0)


class TestSignalTime:
    def test_degenerate_triangle(self):
        m = SignalTimeModel(2.0, 2.0, 2.0)
        rng = random.Random(1)
        assert all(sample_signal_time(m, rng) == 2.0 for _ in range(100))

    def test_reported_mean(self):
        m = SignalTimeModel(0.0, 2.3, 10.0)
        assert m.mean == pytest.approx(4.1)
        rng = random.Random(20260809)
        draws = [sample_signal_time(m, rng) for _ in range(100_000)]
        assert sum(draws) / len(draws) == pytest.approx(4.1, abs=0.2)

    def test_support_strictly_below_max(self):
        m = SignalTimeModel(0.0, 2.3, 10.0)
        rng = random.Random(7)
        draws = [sample_signal_time(m, rng) for _ in range(50_000)]
        assert all(0.0 <= d < 10.0 for d in draws)

    def test_ks_statistic_small(self):
        m = SignalTimeModel(0.0, 2.3, 10.0)
        rng = random.Random(99)
        draws = [sample_signal_time(m, rng) for _ in range(100_000)]
        assert ks_statistic(draws, m) < 0.01

    def test_cdf_endpoints(self):
        m = SignalTimeModel(0.0, 2.3, 10.0)
        assert triangular_cdf(-1.0, m) == 0.0
        assert triangular_cdf(11.0, m) == 1.0
        assert triangular_cdf(2.3, m) == pytest.approx(0.23)

    def test_invalid_model(self):
        with pytest.raises(ValueError):
            SignalTimeModel(5.0, 2.0, 10.0)


class TestCoverageTime:
    def test_single_drone_single_leg(self):
        cm = CoverageModel(per_drone_rate=2.0, segment_km=100.0)
        # 80 km fits one sortie: no refills at all
        assert coverage_time(80.0, 1, cm) == pytest.approx(40.0)

    def test_more_drones_never_slower(self):
        cm = CoverageModel()
        times = [coverage_time(1200.0, d, cm) for d in (1, 2, 3, 5, 10, 20, 30, 40)]
        for t1, t2 in zip(times, times[1:]):
            assert t2 <= t1 + 1e-9

    def test_non_decreasing_in_distance(self):
        cm = CoverageModel()
        times = [coverage_time(km, 5, cm) for km in (100, 400, 800, 1200)]
        for t1, t2 in zip(times, times[1:]):
            assert t1 <= t2 + 1e-9

    def test_refills_and_recharges_accounted(self):
        cm = CoverageModel(per_drone_rate=1.0, segment_km=50.0, refill_time=10.0,
                           recharge_time=100.0, battery_segments=2, depot_servers=2)
        # one drone, 4 legs: services between legs are f, f+g, f
        want = 4 * 50.0 + 2 * 10.0 + (10.0 + 100.0)
        assert coverage_time(200.0, 1, cm) == pytest.approx(want)

    def test_validation(self):
        with pytest.raises(ValueError):
            coverage_time(0.0, 3)
        with pytest.raises(ValueError):
            coverage_time(100.0, 0)


class TestUtilizationSeries:
    def test_idle_fleet(self):
        events = [state_ev(0, 1, "Idle"), state_ev(0, 2, "Idle"),
                  Ev(3599, "noop", {})]
        series = utilization_series(events, 3600)
        assert len(series) == 1
        assert series[0].cumulative_dispatches == 0
        assert series[0].mean_utilization == 0.0

    def test_redispatch_counted_each_time(self):
        events = [Ev(t, "drone_dispatch", {"drone": 1}) for t in (10, 500, 900)]
        events.append(Ev(999, "noop", {}))
        series = utilization_series(events, 1000)
        assert series[-1].cumulative_dispatches == 3

    def test_known_busy_fractions(self):
        # drone 1 scans [100, 400), drone 2 stays idle; window 1000 s
        events = [
            state_ev(0, 1, "Idle"), state_ev(0, 2, "Idle"),
            state_ev(100, 1, "Scanning"), state_ev(400, 1, "Idle"),
            Ev(999, "noop", {}),
        ]
        series = utilization_series(events, 1000)
        assert series[0].mean_utilization == pytest.approx((300 / 1000) / 2)
        assert series[0].max_utilization == pytest.approx(0.3)

    def test_windows_tile_busy_time(self):
        rng = random.Random(4)
        events = []
        busy_total = 0
        t = 0
        state = "Idle"
        while t < 5000:
            nxt = "Scanning" if state == "Idle" else "Idle"
            events.append(state_ev(t, 1, nxt))
            dur = rng.randint(50, 400)
            if nxt == "Scanning":
                busy_total += min(dur, 5000 - t)
            state = nxt
            t += dur
        events.append(Ev(4999, "noop", {}))
        series = utilization_series(events, 700)
        acc = sum(s.mean_utilization * (s.window[1] - s.window[0]) for s in series)
        assert acc == pytest.approx(busy_total, abs=1e-6)


class TestDronesInUse:
    def test_all_idle(self):
        events = [state_ev(0, d, "Idle") for d in range(5)]
        assert drones_in_use(events, 10) == 0

    def test_seven_active(self):
        events = [state_ev(0, d, "Scanning") for d in range(7)]
        events += [state_ev(0, d, "Idle") for d in range(7, 12)]
        assert drones_in_use(events, 5) == 7

    def test_refilling_counts_as_in_use(self):
        events = [state_ev(0, 1, "Refilling"), state_ev(0, 2, "Recalled")]
        assert drones_in_use(events, 1) == 1
