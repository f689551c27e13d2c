"""Drone entities: operational state machine, battery/tank budgets, utilization.

Defaults follow the reference airframe used for field operations: 5 L
sanitizer tank good for 12-15 minutes of spraying, 35-40 minutes of
flight on thermal-only duty.  Speed defaults to 5 m/s so a boustrophedon
sweep covers a 2 km-radius area within ten minutes at the default swath.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .grid import GridSpec, Position, zone_center, zone_of_ordinal


class FleetError(Exception):
    pass


class TooManyDrones(FleetError):
    pass


class DroneState(str, Enum):
    IDLE = "Idle"
    SCANNING = "Scanning"
    SANITIZING = "Sanitizing"
    TRANSFERRING = "Transferring"
    WAITING_IN_TRANSFER_AREA = "WaitingInTransferArea"
    REFILLING = "Refilling"
    RECALLED = "Recalled"


#: States that count toward utilization.
ACTIVE_STATES = frozenset(
    {DroneState.SCANNING, DroneState.SANITIZING, DroneState.TRANSFERRING}
)

#: States in which the drone is airborne and burning battery/flight budget.
AIRBORNE_STATES = frozenset(
    {
        DroneState.SCANNING,
        DroneState.SANITIZING,
        DroneState.TRANSFERRING,
        DroneState.WAITING_IN_TRANSFER_AREA,
    }
)


@dataclass
class FleetConfig:
    count: int = 1
    speed: float = 5.0                 # m/s
    tank_liters: float = 5.0
    spray_rate: float = 0.4            # L/min while sanitizing
    flight_seconds: float = 35.0 * 60  # airborne budget per charge
    battery_floor: float = 0.05        # fraction that forces refilling
    recharge_seconds: float = 40.0 * 60
    refill_seconds: float = 5.0 * 60

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if self.speed <= 0:
            raise ValueError(f"speed must be positive, got {self.speed}")


@dataclass
class Drone:
    id: int
    position: Position
    state: DroneState = DroneState.IDLE
    battery: float = 1.0               # fraction of full charge
    tank: float = 5.0                  # liters remaining
    speed: float = 5.0                 # m/s
    flight_budget: float = 35.0 * 60   # seconds of airborne time left
    spray_rate: float = 0.4            # L/min
    battery_floor: float = 0.05
    waypoint: Position | None = None
    depot: Position = field(default_factory=lambda: Position(0.0, 0.0, 0))
    clock: float = 0.0
    # (start, end, state) segments, most recent last; consecutive segments
    # in the same state are merged.
    history: list[tuple[float, float, DroneState]] = field(default_factory=list)
    dispatch_count: int = 0

    _full_flight: float = field(default=0.0, repr=False)

    def __post_init__(self) -> None:
        if self._full_flight <= 0:
            self._full_flight = self.flight_budget

    def set_state(self, state: DroneState) -> None:
        self.state = state

    @property
    def utilization(self) -> float:
        """Lifetime active fraction; windowed view via measure_utilization."""
        if self.clock <= 0:
            return 0.0
        return min(1.0, self._active_seconds(0.0, self.clock) / self.clock)

    def _record(self, start: float, end: float, state: DroneState) -> None:
        if end <= start:
            return
        if self.history and self.history[-1][2] is state and self.history[-1][1] == start:
            prev = self.history[-1]
            self.history[-1] = (prev[0], end, state)
        else:
            self.history.append((start, end, state))

    def _active_seconds(self, lo: float, hi: float) -> float:
        total = 0.0
        for start, end, state in self.history:
            if state in ACTIVE_STATES:
                total += max(0.0, min(end, hi) - max(start, lo))
        return total


def create_fleet(count: int, g: GridSpec, cfg: FleetConfig | None = None) -> list[Drone]:
    """Idle drones with full battery/tank, one per zone of the operational
    layer in zigzag-ordinal order."""
    cfg = cfg or FleetConfig(count=count)
    if count > g.zones_per_layer:
        raise TooManyDrones(
            f"{count} drones exceed {g.zones_per_layer} zones on the operational layer"
        )
    depot = zone_center(zone_of_ordinal(0, g, g.operational_layer), g)
    drones = []
    for i in range(count):
        zone = zone_of_ordinal(i, g, g.operational_layer)
        drones.append(
            Drone(
                id=i,
                position=zone_center(zone, g),
                battery=1.0,
                tank=cfg.tank_liters,
                speed=cfg.speed,
                flight_budget=cfg.flight_seconds,
                spray_rate=cfg.spray_rate,
                battery_floor=cfg.battery_floor,
                depot=depot,
            )
        )
    return drones


def advance_drone(d: Drone, dt: float) -> Drone:
    """One kinematic tick: move toward the waypoint at <= speed*dt, burn
    battery/flight budget while airborne, burn tank while sanitizing.
    Hitting the tank or battery floor forces Refilling with the depot as
    waypoint; floors clamp at zero rather than erroring."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    start = self_clock = d.clock
    state = d.state

    if state in AIRBORNE_STATES:
        if d.waypoint is not None:
            _move_toward(d, d.waypoint, d.speed * dt)
        burn = dt / d._full_flight if d._full_flight > 0 else 0.0
        d.battery = max(0.0, d.battery - burn)
        d.flight_budget = max(0.0, d.flight_budget - dt)
        if state is DroneState.SANITIZING:
            d.tank = max(0.0, d.tank - d.spray_rate * dt / 60.0)
        if d.battery <= d.battery_floor or d.tank <= 0.0:
            d.state = DroneState.REFILLING
            d.waypoint = d.depot

    d.clock = self_clock + dt
    d._record(start, d.clock, state)
    return d


def _move_toward(d: Drone, target: Position, max_step: float) -> None:
    dx = target.x - d.position.x
    dy = target.y - d.position.y
    dist = (dx * dx + dy * dy) ** 0.5
    if dist <= max_step or dist == 0.0:
        d.position = Position(target.x, target.y, target.layer)
        if dist <= max_step:
            d.waypoint = None
    else:
        f = max_step / dist
        d.position = Position(d.position.x + f * dx, d.position.y + f * dy, d.position.layer)


def measure_utilization(d: Drone, window: float) -> float:
    """Fraction of the trailing ``window`` seconds spent scanning,
    sanitizing or transferring."""
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    lo = max(0.0, d.clock - window)
    span = d.clock - lo
    if span <= 0:
        return 0.0
    return min(1.0, d._active_seconds(lo, d.clock) / span)


def refill(d: Drone, tank_liters: float = 5.0, flight_seconds: float | None = None) -> Drone:
    """Depot service completion: restore tank, battery and flight budget."""
    d.tank = tank_liters
    d.battery = 1.0
    d.flight_budget = flight_seconds if flight_seconds is not None else d._full_flight
    d.state = DroneState.IDLE
    d.waypoint = None
    return d
