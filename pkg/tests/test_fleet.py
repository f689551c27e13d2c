import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmzones.fleet import (
    Drone,
    DroneState,
    FleetConfig,
    TooManyDrones,
    advance_drone,
    create_fleet,
    measure_utilization,
    refill,
)
from swarmzones.grid import GridSpec, Position, zone_of_position


G3 = GridSpec(n=3, tau=10.0)


def make_drone(**kw):
    defaults = dict(id=0, position=Position(5.0, 5.0, 0))
    defaults.update(kw)
    return Drone(**defaults)


class TestCreateFleet:
    def test_one_per_zone_in_ordinal_order(self):
        drones = create_fleet(9, G3)
        assert len(drones) == 9
        assert all(d.state is DroneState.IDLE for d in drones)
        # first drone sits in ordinal 0 = (0,0); second in ordinal 1 = (0,1)
        assert zone_of_position(drones[0].position, G3).row == 0
        assert zone_of_position(drones[0].position, G3).col == 0
        assert zone_of_position(drones[1].position, G3) .col == 1
        zones = {zone_of_position(d.position, G3) for d in drones}
        assert len(zones) == 9

    def test_single_drone_in_entry_zone(self):
        (d,) = create_fleet(1, G3)
        z = zone_of_position(d.position, G3)
        assert (z.row, z.col) == (0, 0)

    def test_pigeonhole(self):
        with pytest.raises(TooManyDrones):
            create_fleet(10, G3)

    def test_full_budgets(self):
        drones = create_fleet(3, G3, FleetConfig(count=3, tank_liters=5.0))
        assert all(d.battery == 1.0 and d.tank == 5.0 for d in drones)


class TestAdvanceDrone:
    def test_idle_is_grounded(self):
        d = make_drone()
        budget = d.flight_budget
        advance_drone(d, 60.0)
        assert d.position == Position(5.0, 5.0, 0)
        assert d.flight_budget == budget
        assert d.battery == 1.0

    def test_sanitizing_burns_tank_at_spray_rate(self):
        d = make_drone(state=DroneState.SANITIZING, tank=5.0, spray_rate=0.4)
        advance_drone(d, 60.0)
        assert d.tank == pytest.approx(5.0 - 0.4)

    def test_battery_floor_forces_refilling(self):
        d = make_drone(state=DroneState.SCANNING, battery=0.051, battery_floor=0.05)
        d._full_flight = 2100.0
        advance_drone(d, 60.0)
        assert d.state is DroneState.REFILLING
        assert d.waypoint == d.depot

    def test_empty_tank_forces_refilling(self):
        d = make_drone(state=DroneState.SANITIZING, tank=0.1, spray_rate=0.4)
        advance_drone(d, 60.0)
        assert d.tank == 0.0
        assert d.state is DroneState.REFILLING

    def test_moves_toward_waypoint_capped_by_speed(self):
        d = make_drone(state=DroneState.TRANSFERRING, speed=2.0,
                       waypoint=Position(25.0, 5.0, 0))
        advance_drone(d, 1.0)
        assert d.position.x == pytest.approx(7.0)
        assert d.position.y == pytest.approx(5.0)

    def test_arrives_and_clears_waypoint(self):
        d = make_drone(state=DroneState.TRANSFERRING, speed=5.0,
                       waypoint=Position(6.0, 5.0, 0))
        advance_drone(d, 1.0)
        assert d.position == Position(6.0, 5.0, 0)
        assert d.waypoint is None

    @given(
        wx=st.floats(0, 30), wy=st.floats(0, 30),
        dt=st.floats(0.1, 120), speed=st.floats(0.5, 20),
    )
    @settings(max_examples=200)
    def test_no_teleportation(self, wx, wy, dt, speed):
        d = make_drone(state=DroneState.SCANNING, speed=speed,
                       waypoint=Position(wx, wy, 0))
        x0, y0 = d.position.x, d.position.y
        advance_drone(d, dt)
        moved = ((d.position.x - x0) ** 2 + (d.position.y - y0) ** 2) ** 0.5
        assert moved <= speed * dt + 1e-9

    def test_budgets_non_increasing_while_airborne(self):
        d = make_drone(state=DroneState.SCANNING)
        readings = []
        for _ in range(10):
            advance_drone(d, 30.0)
            readings.append((d.battery, d.tank))
        for (b1, t1), (b2, t2) in zip(readings, readings[1:]):
            assert b2 <= b1 and t2 <= t1

    def test_refill_restores_budgets(self):
        d = make_drone(state=DroneState.SCANNING, battery=0.2, tank=1.0)
        refill(d, tank_liters=5.0)
        assert d.battery == 1.0 and d.tank == 5.0
        assert d.state is DroneState.IDLE


class TestUtilization:
    def test_always_idle_is_zero(self):
        d = make_drone()
        for _ in range(60):
            advance_drone(d, 60.0)
        assert measure_utilization(d, 3600.0) == 0.0

    def test_fig24_upper_band(self):
        # 48 minutes scanning out of a 60 minute window; budget large
        # enough that the battery floor does not interrupt the shift
        d = make_drone(flight_budget=100000.0)
        d.state = DroneState.SCANNING
        for _ in range(48):
            advance_drone(d, 60.0)
        d.state = DroneState.IDLE
        for _ in range(12):
            advance_drone(d, 60.0)
        assert measure_utilization(d, 3600.0) == pytest.approx(0.8)

    def test_alternating_half_duty(self):
        d = make_drone()
        for i in range(60):
            d.state = DroneState.SCANNING if i % 2 == 0 else DroneState.IDLE
            advance_drone(d, 60.0)
        assert measure_utilization(d, 3600.0) == pytest.approx(0.5)

    def test_utilization_times_window_matches_busy_time(self):
        d = make_drone()
        busy = 0.0
        for i in range(100):
            d.state = DroneState.SANITIZING if i % 3 == 0 else DroneState.IDLE
            advance_drone(d, 10.0)
            if i % 3 == 0:
                busy += 10.0
        window = d.clock
        assert measure_utilization(d, window) * window == pytest.approx(busy)

    def test_bounded_by_one(self):
        d = make_drone(state=DroneState.TRANSFERRING)
        for _ in range(10):
            advance_drone(d, 5.0)
        assert 0.0 <= measure_utilization(d, 25.0) <= 1.0
