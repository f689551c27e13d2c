import random
from dataclasses import dataclass, field

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmzones.fleet import Drone, DroneState
from swarmzones.grid import GridSpec, Position, ZoneId, zone_center
from swarmzones.zone_ops import (
    DensityMap,
    DroneAbsent,
    EmptyWindow,
    ExperienceCounters,
    MixedNetworks,
    MixedWindows,
    Person,
    QosVector,
    SensorRange,
    ZoneAction,
    ZoneStats,
    compute_zone_stats,
    density_map,
    edge_aggregate,
    fever_alarm,
    fever_trend,
    sanitization_priority,
    scan_cycle,
)

G3 = GridSpec(n=3, tau=10.0)


@dataclass
class Ev:
    tick: int
    kind: str
    payload: dict = field(default_factory=dict)


def scanning_drone(zone: ZoneId) -> Drone:
    return Drone(id=0, position=zone_center(zone, G3), state=DroneState.SCANNING)


class TestFeverTrend:
    def test_two_rises(self):
        series = [(0, 37.0), (1, 37.8), (2, 38.5)]
        assert fever_trend(series, k=2)

    def test_last_diff_negative(self):
        series = [(0, 36.5), (1, 36.6), (2, 36.4)]
        assert not fever_trend(series, k=2)

    def test_single_sample_insufficient(self):
        result = fever_trend([(0, 37.0)], k=2)
        assert not result
        assert result.insufficient_data

    @given(
        temps=st.lists(st.floats(30, 42), min_size=3, max_size=8),
        shift=st.floats(-3, 3),
    )
    @settings(max_examples=150)
    def test_invariant_under_constant_shift(self, temps, shift):
        series = list(enumerate(temps))
        shifted = [(t, v + shift) for t, v in series]
        assert fever_trend(series, 2).rising == fever_trend(shifted, 2).rising


class TestFeverAlarm:
    def test_two_point_two_over(self):
        assert fever_alarm(39.2, normal=37.0)

    def test_one_point_nine_under(self):
        assert not fever_alarm(38.9, normal=37.0)

    def test_at_normal(self):
        assert not fever_alarm(37.0, normal=37.0)

    def test_exactly_plus_two_alarms(self):
        assert fever_alarm(39.0, normal=37.0)

    def test_sensor_range(self):
        with pytest.raises(SensorRange):
            fever_alarm(24.0)
        with pytest.raises(SensorRange):
            fever_alarm(46.0)

    @given(
        t=st.floats(25, 45), t2=st.floats(25, 45),
    )
    @settings(max_examples=200)
    def test_monotone(self, t, t2):
        lo, hi = min(t, t2), max(t, t2)
        if fever_alarm(lo):
            assert fever_alarm(hi)


class TestScanCycle:
    def test_afebrile_persons_no_actions(self):
        zone = ZoneId(1, 1, 0)
        persons = [
            Person(i, zone_center(zone, G3), [(0, 36.6)]) for i in range(3)
        ]
        result = scan_cycle(zone, scanning_drone(zone), persons, G3, tick=5, interval=60)
        assert len(result.observations) == 3
        assert result.actions == ()
        assert result.next_delay == 60

    def test_rising_series_triggers_sanitize_and_medicate(self):
        zone = ZoneId(0, 0, 0)
        person = Person(7, zone_center(zone, G3), [(0, 37.0), (1, 37.6), (2, 38.2)])
        result = scan_cycle(zone, scanning_drone(zone), [person], G3, tick=2, interval=60)
        kinds = {a for _pid, a in result.actions}
        assert ZoneAction.SANITIZE in kinds
        assert ZoneAction.MEDICATE in kinds

    def test_empty_zone_still_advances_clock(self):
        zone = ZoneId(2, 2, 0)
        result = scan_cycle(zone, scanning_drone(zone), [], G3, tick=0, interval=45)
        assert result.observations == ()
        assert result.next_delay == 45

    def test_doubling_flag(self):
        zone = ZoneId(2, 2, 0)
        result = scan_cycle(zone, scanning_drone(zone), [], G3, tick=0, interval=45,
                            doubling=True)
        assert result.next_delay == 90

    def test_absent_drone_rejected(self):
        zone = ZoneId(0, 0, 0)
        drone = scanning_drone(ZoneId(1, 1, 0))
        with pytest.raises(DroneAbsent):
            scan_cycle(zone, drone, [], G3, tick=0, interval=60)

    def test_persons_outside_zone_ignored(self):
        zone = ZoneId(0, 0, 0)
        inside = Person(1, zone_center(zone, G3), [(0, 36.6)])
        outside = Person(2, zone_center(ZoneId(2, 2, 0), G3), [(0, 41.0)])
        result = scan_cycle(zone, scanning_drone(zone), [inside, outside], G3,
                            tick=0, interval=60)
        assert [o.person for o in result.observations] == [1]


class TestComputeZoneStats:
    def test_empty_window_is_zero(self):
        stats = compute_zone_stats([], ZoneId(0, 0, 0), (0, 100))
        assert stats.experience == ExperienceCounters()
        assert stats.qos.coverage_fraction == 0.0

    def test_counter_tally(self):
        zone = ZoneId(1, 0, 0)
        zkey = [1, 0, 0]
        events = (
            [Ev(t, "scan_observation", {"zone": zkey}) for t in range(10)]
            + [Ev(3, "fever_alarm", {"zone": zkey}), Ev(5, "fever_alarm", {"zone": zkey})]
            + [Ev(6, "sanitize", {"zone": zkey})]
        )
        stats = compute_zone_stats(events, zone, (0, 100))
        assert stats.experience.persons_scanned == 10
        assert stats.experience.fever_alarms == 2
        assert stats.experience.sanitizations == 1
        assert stats.qos.coverage_fraction == 1.0

    def test_rejects_degenerate_window(self):
        with pytest.raises(EmptyWindow):
            compute_zone_stats([], ZoneId(0, 0, 0), (5, 5))

    def test_recomputation_is_identical(self):
        zkey = [0, 1, 0]
        events = [Ev(2, "scan_observation", {"zone": zkey}),
                  Ev(4, "signal_time", {"zone": zkey, "seconds": 3.0})]
        a = compute_zone_stats(events, ZoneId(0, 1, 0), (0, 10))
        b = compute_zone_stats(events, ZoneId(0, 1, 0), (0, 10))
        assert a == b


class TestEdgeAggregate:
    def _stats(self, zone, throughput=0.0, counters=None, network=0):
        return ZoneStats(
            zone=zone,
            network=network,
            qos=QosVector(throughput_bps=throughput),
            experience=counters or ExperienceCounters(),
            window=(0, 100),
        )

    def test_single_zone_identity(self):
        s = self._stats(ZoneId(0, 0, 0), throughput=42.0,
                        counters=ExperienceCounters(5, 1, 2, 0))
        summary = edge_aggregate([s])
        assert summary.qos == s.qos
        assert summary.experience == s.experience
        assert summary.zones == (s,)

    def test_mean_of_throughputs(self):
        a = self._stats(ZoneId(0, 0, 0), throughput=40e6)
        b = self._stats(ZoneId(0, 1, 0), throughput=60e6)
        assert edge_aggregate([a, b]).qos.throughput_bps == pytest.approx(50e6)

    def test_counters_sum_componentwise(self):
        a = self._stats(ZoneId(0, 0, 0), counters=ExperienceCounters(10, 2, 1, 0))
        b = self._stats(ZoneId(0, 1, 0), counters=ExperienceCounters(5, 1, 0, 1))
        assert edge_aggregate([a, b]).experience == ExperienceCounters(15, 3, 1, 1)

    def test_mixed_networks_rejected(self):
        a = self._stats(ZoneId(0, 0, 0), network=0)
        b = self._stats(ZoneId(0, 1, 0), network=1)
        with pytest.raises(MixedNetworks):
            edge_aggregate([a, b])

    def test_mixed_windows_rejected(self):
        a = self._stats(ZoneId(0, 0, 0))
        b = ZoneStats(ZoneId(0, 1, 0), 0, QosVector(), ExperienceCounters(), (0, 50))
        with pytest.raises(MixedWindows):
            edge_aggregate([a, b])

    @given(k=st.integers(1, 12))
    def test_k_identical_inputs(self, k):
        s = self._stats(ZoneId(0, 0, 0), throughput=7.5,
                        counters=ExperienceCounters(4, 1, 1, 1))
        summary = edge_aggregate([s] * k)
        assert summary.qos.throughput_bps == pytest.approx(7.5)
        assert summary.experience.persons_scanned == 4 * k

    def test_coverage_visited_over_total(self):
        # 6 of 9 zones visited -> network coverage 2/3
        stats = []
        for i, zone in enumerate(
            ZoneId(r, c, 0) for r in range(3) for c in range(3)
        ):
            qos = QosVector(coverage_fraction=1.0 if i < 6 else 0.0)
            stats.append(ZoneStats(zone, 0, qos, ExperienceCounters(), (0, 100)))
        assert edge_aggregate(stats).qos.coverage_fraction == pytest.approx(2 / 3)


class TestDensityMap:
    def test_no_movement_all_zero(self):
        dm = density_map([], (0, 100), G3)
        assert dm.total == 0

    def test_parked_person(self):
        events = [Ev(t, "person_position", {"zone": [1, 1, 0], "person": 3})
                  for t in range(10)]
        dm = density_map(events, (0, 100), G3)
        assert dm.counts[1, 1] == 10
        assert dm.total == 10

    def test_conservation_under_partition(self):
        rng = random.Random(5)
        events = [
            Ev(t, "person_position", {"zone": [rng.randrange(3), rng.randrange(3), 0]})
            for t in range(1000)
        ]
        whole = density_map(events, (0, 1000), G3).total
        left = density_map(events, (0, 400), G3).total
        right = density_map(events, (400, 1000), G3).total
        assert whole == left + right == 1000

    def test_uniform_walk_flattens(self):
        rng = random.Random(11)
        events = [
            Ev(t, "person_position", {"zone": [rng.randrange(3), rng.randrange(3), 0]})
            for t in range(100_000)
        ]
        dm = density_map(events, (0, 100_000), G3)
        ratio = dm.counts.max() / dm.counts.min()
        assert ratio < 1.1


class TestSanitizationPriority:
    def test_all_zero_is_ordinal_order(self):
        dm = DensityMap(counts=np.zeros((3, 3), dtype=np.int64), window=(0, 1))
        order = sanitization_priority(dm)
        assert order[0] == ZoneId(0, 0, 0)
        assert order[1] == ZoneId(0, 1, 0)
        assert len(order) == 9

    def test_descending_counts(self):
        counts = np.zeros((3, 3), dtype=np.int64)
        counts[0, 0] = 5   # zone A
        counts[1, 1] = 9   # zone B
        counts[2, 2] = 1   # zone C
        dm = DensityMap(counts=counts, window=(0, 1))
        order = sanitization_priority(dm)
        assert order[0] == ZoneId(1, 1, 0)
        assert order[1] == ZoneId(0, 0, 0)
        assert order[2] == ZoneId(2, 2, 0)

    def test_single_zone(self):
        dm = DensityMap(counts=np.array([[4]], dtype=np.int64), window=(0, 1))
        assert sanitization_priority(dm) == [ZoneId(0, 0, 0)]
