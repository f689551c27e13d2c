"""Link and fleet metrics: throughput, signal-time model, coverage makespan.

Throughput follows the fixed 256-byte-payload formula; the ground-to-drone
signal time is triangular on [0, 10] seconds with the mode back-solved
from the reported 4.1 s mean.  Coverage makespan is simulated, not
closed-form: drones sweep route segments and queue at a small number of
depot bays for sanitizer refills and periodic recharges, which is what
bends the time-vs-fleet-size curve away from perfect scaling.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass
from random import Random

from .fleet import DroneState

PACKET_PAYLOAD_BYTES = 256

#: Drone states that count as "in use" (anything but parked or recalled).
IN_USE_EXCLUDED = frozenset({DroneState.IDLE.value, DroneState.RECALLED.value})

#: States counting toward utilization fractions.
UTILIZATION_STATES = frozenset(
    {DroneState.SCANNING.value, DroneState.SANITIZING.value, DroneState.TRANSFERRING.value}
)


@dataclass(frozen=True)
class LinkSample:
    packets_success: int
    ber: float
    transmission_time: float

    def __post_init__(self) -> None:
        if self.packets_success < 0:
            raise ValueError("packets_success must be non-negative")
        if not 0 <= self.ber <= 1:
            raise ValueError(f"ber {self.ber} outside [0, 1]")
        if self.transmission_time <= 0:
            raise ValueError("transmission_time must be positive")


def throughput(s: LinkSample, packet_bytes: int = PACKET_PAYLOAD_BYTES):
    """Link throughput in bits/second: payload bits times successful
    packets times (1 - BER) over the transmission time.  Exact under
    rational inputs; BER = 1 legitimately yields zero."""
    return packet_bytes * 8 * s.packets_success * (1 - s.ber) / s.transmission_time


@dataclass(frozen=True)
class SignalTimeModel:
    min_s: float = 0.0
    mode_s: float = 2.3
    max_s: float = 10.0

    def __post_init__(self) -> None:
        if not self.min_s <= self.mode_s <= self.max_s:
            raise ValueError(f"need min <= mode <= max, got {self}")

    @property
    def mean(self) -> float:
        return (self.min_s + self.mode_s + self.max_s) / 3.0


def sample_signal_time(m: SignalTimeModel, rng: Random) -> float:
    """One triangular draw from the run's seeded generator."""
    return rng.triangular(m.min_s, m.max_s, m.mode_s)


def triangular_cdf(x: float, m: SignalTimeModel) -> float:
    a, c, b = m.min_s, m.mode_s, m.max_s
    if x <= a:
        return 0.0
    if x >= b:
        return 1.0
    if b == a:
        return 1.0
    if x < c:
        return (x - a) ** 2 / ((b - a) * (c - a)) if c > a else 0.0
    if x == c:
        return (c - a) / (b - a)
    return 1.0 - (b - x) ** 2 / ((b - a) * (b - c)) if b > c else 1.0


def ks_statistic(samples: list[float], m: SignalTimeModel) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of the
    samples and the analytic triangular CDF."""
    xs = sorted(samples)
    n = len(xs)
    worst = 0.0
    for i, x in enumerate(xs):
        f = triangular_cdf(x, m)
        worst = max(worst, abs(f - i / n), abs(f - (i + 1) / n))
    return worst


# --------------------------------------------------------------------------
# Coverage makespan
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageModel:
    """Sweep-and-service model behind the coverage-time curves.

    Drones sweep ``segment_km`` route legs at ``per_drone_rate`` and then
    take a depot bay for a sanitizer refill; every ``battery_segments``-th
    leg also needs a recharge.  Service is skipped when no route remains,
    so short campaigns never pay the recharge tail.
    """

    per_drone_rate: float = 0.2        # km/minute while sweeping
    refill_time: float = 150.0         # minutes
    recharge_time: float = 1100.0      # minutes
    depot_servers: int = 3
    segment_km: float = 57.2           # route per sortie (one tank)
    battery_segments: int = 2          # sorties per battery charge

    def __post_init__(self) -> None:
        for name in ("per_drone_rate", "refill_time", "recharge_time",
                     "depot_servers", "segment_km", "battery_segments"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def coverage_time(total_km: float, drones: int, cm: CoverageModel | None = None) -> float:
    """Simulated makespan in minutes to sweep ``total_km`` of route.

    Work-conserving greedy claiming: the next free drone takes the next
    leg (or the remainder), so doubling the fleet never increases the
    makespan.  Ties resolve by drone id for determinism.
    """
    if total_km <= 0:
        raise ValueError("total_km must be positive")
    if drones < 1:
        raise ValueError("drones must be >= 1")
    cm = cm or CoverageModel()
    remaining = total_km
    ready = [(0.0, i) for i in range(drones)]
    heapq.heapify(ready)
    servers = [0.0] * cm.depot_servers
    sorties = [0] * drones
    makespan = 0.0
    eps = 1e-9
    while remaining > eps and ready:
        t, i = heapq.heappop(ready)
        claim = min(cm.segment_km, remaining)
        remaining -= claim
        finish = t + claim / cm.per_drone_rate
        makespan = max(makespan, finish)
        sorties[i] += 1
        if remaining > eps:
            service = cm.refill_time
            if sorties[i] % cm.battery_segments == 0:
                service += cm.recharge_time
            bay = min(range(len(servers)), key=lambda j: (servers[j], j))
            start = max(finish, servers[bay])
            servers[bay] = start + service
            heapq.heappush(ready, (start + service, i))
    return makespan


# --------------------------------------------------------------------------
# Fleet series from the event log
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FleetWindowStats:
    window: tuple[int, int]
    cumulative_dispatches: int
    mean_utilization: float
    max_utilization: float


class _StateTimeline:
    """Per-drone state reconstruction from drone_state events."""

    def __init__(self) -> None:
        self.ticks: list[int] = []
        self.states: list[str] = []

    def record(self, tick: int, state: str) -> None:
        self.ticks.append(tick)
        self.states.append(state)

    def state_at(self, t: int) -> str:
        i = bisect_right(self.ticks, t) - 1
        if i < 0:
            return DroneState.IDLE.value
        return self.states[i]

    def seconds_in(self, states: frozenset[str], lo: int, hi: int) -> int:
        if not self.ticks:
            return 0
        total = 0
        for i, start in enumerate(self.ticks):
            end = self.ticks[i + 1] if i + 1 < len(self.ticks) else hi
            if self.states[i] in states:
                total += max(0, min(end, hi) - max(start, lo))
        # segment before the first event counts as Idle
        return total


def _timelines(events: list) -> dict[int, _StateTimeline]:
    lines: dict[int, _StateTimeline] = {}
    for ev in events:
        if ev.kind == "drone_state":
            drone = ev.payload["drone"]
            lines.setdefault(drone, _StateTimeline()).record(ev.tick, ev.payload["state"])
    return lines


def utilization_series(events: list, window_s: int) -> list[FleetWindowStats]:
    """Windowed fleet statistics: dispatch count cumulative across windows
    (a re-used drone is counted again) plus mean and max per-drone
    utilization in each window.  Windows tile the log span exactly."""
    if window_s <= 0:
        raise ValueError("window must be positive")
    if not events:
        return []
    span_end = max(ev.tick for ev in events) + 1
    lines = _timelines(events)
    dispatch_ticks = sorted(
        ev.tick for ev in events if ev.kind == "drone_dispatch"
    )
    out = []
    cumulative = 0
    start = 0
    while start < span_end:
        end = min(start + window_s, span_end)
        cumulative += len([t for t in dispatch_ticks if start <= t < end])
        utils = [
            line.seconds_in(UTILIZATION_STATES, start, end) / (end - start)
            for line in lines.values()
        ]
        out.append(
            FleetWindowStats(
                window=(start, end),
                cumulative_dispatches=cumulative,
                mean_utilization=sum(utils) / len(utils) if utils else 0.0,
                max_utilization=max(utils) if utils else 0.0,
            )
        )
        start = end
    return out


def drones_in_use(events: list, t: int) -> int:
    """Drones not parked (Idle) or recalled at ``t``: operating in a zone,
    refilling, transferring or hovering all count."""
    lines = _timelines(events)
    return sum(
        1 for line in lines.values() if line.state_at(t) not in IN_USE_EXCLUDED
    )


def mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else math.nan
