"""Per-zone scan/sanitize cycles, fever detection and edge aggregation.

Each zone's drone collects person observations every scan interval,
applies the fever rules (an absolute alarm at normal + 2 degrees C and a
rising-trend rule over consecutive scans) and tallies experience
counters.  Per-zone statistics stay local; the edge aggregator combines
them by averaging QoS components and summing counters, keeping the
per-zone inputs intact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .fleet import Drone, DroneState
from .grid import GridSpec, Position, ZoneId, drone_zone_value, zone_of_position

NORMAL_BODY_TEMP_C = 37.0
FEVER_ALARM_DELTA_C = 2.0
SENSOR_RANGE_C = (25.0, 45.0)


class ZoneOpsError(Exception):
    pass


class DroneAbsent(ZoneOpsError):
    pass


class SensorRange(ZoneOpsError):
    pass


class EmptyWindow(ZoneOpsError):
    pass


class MixedNetworks(ZoneOpsError):
    pass


class MixedWindows(ZoneOpsError):
    pass


class ObservationSource(str, Enum):
    THERMAL = "Thermal"
    WEARABLE = "Wearable"


@dataclass
class Person:
    id: int
    position: Position
    temperature_series: list[tuple[int, float]] = field(default_factory=list)
    queue: int | None = None

    def temperature_at(self, tick: int) -> float:
        latest = NORMAL_BODY_TEMP_C
        for t, temp in self.temperature_series:
            if t <= tick:
                latest = temp
        return latest


@dataclass(frozen=True)
class PersonObservation:
    person: int
    zone: ZoneId
    timestamp: int
    temperature: float
    source: ObservationSource = ObservationSource.THERMAL

    def __post_init__(self) -> None:
        lo, hi = SENSOR_RANGE_C
        if not lo <= self.temperature <= hi:
            raise SensorRange(
                f"temperature {self.temperature} outside sensor window [{lo}, {hi}]"
            )


@dataclass(frozen=True)
class QosVector:
    mean_signal_time: float = 0.0
    throughput_bps: float = 0.0
    coverage_fraction: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.coverage_fraction <= 1.0:
            raise ValueError(f"coverage_fraction {self.coverage_fraction} outside [0,1]")
        if self.mean_signal_time < 0 or self.throughput_bps < 0:
            raise ValueError("QoS components must be non-negative")


@dataclass(frozen=True)
class ExperienceCounters:
    persons_scanned: int = 0
    fever_alarms: int = 0
    sanitizations: int = 0
    medications: int = 0

    def __post_init__(self) -> None:
        if min(self.persons_scanned, self.fever_alarms,
               self.sanitizations, self.medications) < 0:
            raise ValueError("counters must be non-negative")
        if self.fever_alarms > self.persons_scanned:
            raise ValueError("fever_alarms cannot exceed persons_scanned")

    def __add__(self, other: "ExperienceCounters") -> "ExperienceCounters":
        return ExperienceCounters(
            self.persons_scanned + other.persons_scanned,
            self.fever_alarms + other.fever_alarms,
            self.sanitizations + other.sanitizations,
            self.medications + other.medications,
        )


@dataclass(frozen=True)
class ZoneStats:
    zone: ZoneId
    network: int
    qos: QosVector
    experience: ExperienceCounters
    window: tuple[int, int]

    def __post_init__(self) -> None:
        if self.window[0] >= self.window[1]:
            raise ValueError(f"window start must precede end, got {self.window}")


# --------------------------------------------------------------------------
# Fever rules
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrendResult:
    rising: bool
    insufficient_data: bool = False

    def __bool__(self) -> bool:
        return self.rising


def fever_trend(series: list[tuple[int, float]], k: int = 2) -> TrendResult:
    """True iff the last k successive temperature differences are strictly
    positive.  Fewer than k+1 samples cannot establish a trend and return
    false with the insufficient-data flag set."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(series) < k + 1:
        return TrendResult(rising=False, insufficient_data=True)
    temps = [temp for _t, temp in series[-(k + 1):]]
    rising = all(b > a for a, b in zip(temps, temps[1:]))
    return TrendResult(rising=rising)


def fever_alarm(t: float, normal: float = NORMAL_BODY_TEMP_C) -> bool:
    """Alarm when the reading exceeds normal body temperature by at least
    two degrees."""
    lo, hi = SENSOR_RANGE_C
    if not lo <= t <= hi:
        raise SensorRange(f"temperature {t} outside sensor window [{lo}, {hi}]")
    return t >= normal + FEVER_ALARM_DELTA_C


# --------------------------------------------------------------------------
# Scan cycle
# --------------------------------------------------------------------------

class ZoneAction(str, Enum):
    ALARM = "Alarm"
    SANITIZE = "Sanitize"
    MEDICATE = "Medicate"


@dataclass(frozen=True)
class ScanResult:
    observations: tuple[PersonObservation, ...]
    actions: tuple[tuple[int, ZoneAction], ...]
    next_delay: int


def scan_cycle(
    zone: ZoneId,
    drone: Drone,
    persons: list[Person],
    g: GridSpec,
    tick: int,
    interval: int,
    trend_k: int = 2,
    normal: float = NORMAL_BODY_TEMP_C,
    doubling: bool = False,
) -> ScanResult:
    """One scan pass over a zone: one observation per person present,
    fever rules applied, sanitize+medicate triggered on a rising trend.
    The returned delay advances the cycle clock one interval, or doubles
    it under the geometric reading of the interval-update rule."""
    if drone.state is not DroneState.SCANNING:
        raise DroneAbsent(f"drone {drone.id} is not scanning (state {drone.state})")
    if zone_of_position(drone.position, g) != zone:
        raise DroneAbsent(f"drone {drone.id} is not in zone {zone}")
    observations = []
    actions: list[tuple[int, ZoneAction]] = []
    for person in persons:
        if zone_of_position(person.position, g) != zone:
            continue
        temp = person.temperature_at(tick)
        observations.append(
            PersonObservation(person.id, zone, tick, temp, ObservationSource.THERMAL)
        )
        if fever_alarm(temp, normal):
            actions.append((person.id, ZoneAction.ALARM))
        history = [(t, v) for t, v in person.temperature_series if t <= tick]
        if fever_trend(history, trend_k):
            actions.append((person.id, ZoneAction.SANITIZE))
            actions.append((person.id, ZoneAction.MEDICATE))
    next_delay = interval * 2 if doubling else interval
    return ScanResult(tuple(observations), tuple(actions), next_delay)


# --------------------------------------------------------------------------
# Statistics over the event log
# --------------------------------------------------------------------------

def compute_zone_stats(
    events: list,
    zone: ZoneId,
    window: tuple[int, int],
    network: int = 0,
) -> ZoneStats:
    """Deterministic per-zone stats from event records within the window.

    Events are anything with ``tick``, ``kind``, ``payload`` attributes;
    coverage is the drone-presence indicator for the window, so the edge
    mean over zones equals visited/total.
    """
    start, end = window
    if start >= end:
        raise EmptyWindow(f"window start must precede end, got {window}")
    zone_key = [zone.row, zone.col, zone.layer]
    scanned = alarms = sanitizations = medications = 0
    signal_times: list[float] = []
    throughputs: list[float] = []
    visited = False
    for ev in events:
        if not start <= ev.tick < end:
            continue
        payload = ev.payload
        if payload.get("zone") != zone_key:
            continue
        kind = ev.kind
        if kind == "scan_observation":
            scanned += 1
            visited = True
        elif kind == "fever_alarm":
            alarms += 1
        elif kind == "sanitize":
            sanitizations += 1
        elif kind == "medicate":
            medications += 1
        elif kind == "drone_at_zone":
            visited = True
        elif kind == "signal_time":
            signal_times.append(payload["seconds"])
        elif kind == "link_sample":
            throughputs.append(payload["throughput_bps"])
    qos = QosVector(
        mean_signal_time=sum(signal_times) / len(signal_times) if signal_times else 0.0,
        throughput_bps=sum(throughputs) / len(throughputs) if throughputs else 0.0,
        coverage_fraction=1.0 if visited else 0.0,
    )
    counters = ExperienceCounters(scanned, min(alarms, scanned), sanitizations, medications)
    return ZoneStats(zone=zone, network=network, qos=qos, experience=counters, window=window)


@dataclass(frozen=True)
class NetworkSummary:
    network: int
    window: tuple[int, int]
    qos: QosVector
    experience: ExperienceCounters
    zones: tuple[ZoneStats, ...]


def edge_aggregate(stats: list[ZoneStats]) -> NetworkSummary:
    """Edge-side fold: arithmetic mean of QoS components, componentwise sum
    of experience counters.  Per-zone inputs are retained in the summary;
    the zones keep their data discrete."""
    if not stats:
        raise ValueError("nothing to aggregate")
    networks = {s.network for s in stats}
    if len(networks) > 1:
        raise MixedNetworks(f"stats span networks {sorted(networks)}")
    windows = {s.window for s in stats}
    if len(windows) > 1:
        raise MixedWindows(f"stats span windows {sorted(windows)}")
    k = len(stats)
    qos = QosVector(
        mean_signal_time=sum(s.qos.mean_signal_time for s in stats) / k,
        throughput_bps=sum(s.qos.throughput_bps for s in stats) / k,
        coverage_fraction=sum(s.qos.coverage_fraction for s in stats) / k,
    )
    counters = ExperienceCounters()
    for s in stats:
        counters = counters + s.experience
    return NetworkSummary(
        network=stats[0].network,
        window=stats[0].window,
        qos=qos,
        experience=counters,
        zones=tuple(stats),
    )


# --------------------------------------------------------------------------
# Density analysis
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityMap:
    counts: np.ndarray
    window: tuple[int, int]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def density_map(events: list, window: tuple[int, int], g: GridSpec) -> DensityMap:
    """Per-zone count of person-presence samples within the window; the
    heat source for sanitization-priority analysis."""
    start, end = window
    counts = np.zeros((g.n, g.n), dtype=np.int64)
    for ev in events:
        if ev.kind != "person_position" or not start <= ev.tick < end:
            continue
        row, col = ev.payload["zone"][0], ev.payload["zone"][1]
        counts[row, col] += 1
    return DensityMap(counts=counts, window=window)


def sanitization_priority(dm: DensityMap) -> list[ZoneId]:
    """Zones ordered most-visited first; ties broken by zigzag ordinal."""
    n = dm.counts.shape[0]
    zones = [ZoneId(r, c, 0) for r in range(n) for c in range(n)]
    return sorted(
        zones,
        key=lambda z: (-int(dm.counts[z.row, z.col]), drone_zone_value(z.row, z.col, n)),
    )
