"""Deterministic discrete-event core: clock, event log, scenario runs.

One run is a single-threaded loop over integer ticks (1 tick = 1 second)
with all randomness drawn from substreams of one seeded generator, each
substream keyed by a fixed label so adding a subsystem never perturbs the
draws of another.  The event log is append-only and strictly ordered by
(tick, seq); identical (scenario, seed) pairs replay to identical logs,
byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field, asdict
from pathlib import Path
from random import Random
from typing import Any

from .distancing import (
    DistanceMethod,
    ViolationMode,
    Violation,
    control_room_notification,
    detect_violations,
    load_persons_csv,
)
from .fleet import Drone, DroneState, FleetConfig, create_fleet
from .grid import GridSpec, ZoneId, zone_center, zone_of_ordinal
from .metrics import LinkSample, SignalTimeModel, sample_signal_time, throughput
from .protocols import (
    OccupancyLedger,
    ParallelSweepRun,
    ProtocolArena,
    Strategy,
    SwapRequest,
    hybrid_plan,
    zigzag_route,
)
from .zone_ops import Person, ZoneAction, scan_cycle


class ValidationError(Exception):
    def __init__(self, issues: list["ValidationIssue"]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


@dataclass(frozen=True)
class ValidationIssue:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


# --------------------------------------------------------------------------
# Event log
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SimEvent:
    tick: int
    seq: int
    entity: str
    kind: str
    payload: dict


class EventLog:
    """Append-only, strictly (tick, seq)-ordered record of state changes."""

    def __init__(self) -> None:
        self.events: list[SimEvent] = []
        self._seq = 0
        self._last: tuple[int, int] | None = None

    def append(self, tick: int, entity: str, kind: str, payload: dict) -> SimEvent:
        key = (tick, self._seq)
        if self._last is not None and key <= self._last:
            raise ValueError(f"event ordering violated: {key} after {self._last}")
        ev = SimEvent(tick=tick, seq=self._seq, entity=entity, kind=kind, payload=payload)
        self.events.append(ev)
        self._seq += 1
        self._last = key
        return ev

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)


# --------------------------------------------------------------------------
# Scenario configuration
# --------------------------------------------------------------------------

@dataclass
class StrategyPlan:
    kind: str = "Zigzag"               # FixedArea|Zigzag|Parallel|MultiLayer|Hybrid
    swap_period_s: int = 60
    timeout_ticks: int = 20
    move_period_s: int = 8
    levels: list[list] = field(default_factory=list)  # [[layer, strategy], ...]


@dataclass
class PedFlowSpec:
    """Pedestrian pipeline: source -> gates -> check -> walk -> spaced
    queue -> service -> sink."""

    arrival_rate_per_min: float = 360.0
    gate_capacity: int = 150
    walk_time_s: int = 30
    wait_spacing_m: float = 1.0
    service_units: int = 10
    service_time_max_s: int = 120
    check_time_s: float = 3.0
    drone_service_time_s: float = 4.0
    spacing_violation_prob: float = 0.02


@dataclass
class DistancingConfig:
    method: str = "PixelRatio"
    threshold_m: float = 1.0
    mode: str = "Queue"
    utilization_lower: float = 0.2
    utilization_upper: float = 0.8
    persons_csv: str | None = None


@dataclass
class PersonsConfig:
    count: int = 0
    walk_period_s: int = 10
    fever_fraction: float = 0.05


@dataclass
class DutyConfig:
    enabled: bool = False
    target_min: int = 27
    target_max: int = 53
    retarget_period_s: int = 300
    burst_min_s: int = 600
    burst_max_s: int = 1200
    rest_min_s: int = 480


@dataclass
class LinkConfig:
    enabled: bool = False
    sample_period_s: int = 60
    transmitters: int = 22
    packets_min: int = 900
    packets_max: int = 1700
    ber_max: float = 0.02
    window_s: float = 0.05
    success_boost: float = 1.0


@dataclass
class SignalConfig:
    enabled: bool = False
    min_s: float = 0.0
    mode_s: float = 2.3
    max_s: float = 10.0
    period_s: int = 20


@dataclass
class ScanConfig:
    interval_s: int = 60
    doubling: bool = False
    trend_k: int = 2
    normal_temp_c: float = 37.0


@dataclass
class Scenario:
    name: str = "Custom"
    seed: int = 42
    duration_ticks: int = 600
    network_id: int = 0
    provenance: str = "simulation"
    grid: GridSpec = field(default_factory=lambda: GridSpec(n=3, tau=10.0))
    fleet: FleetConfig = field(default_factory=lambda: FleetConfig(count=1))
    strategy: StrategyPlan = field(default_factory=StrategyPlan)
    ped_flow: PedFlowSpec | None = None
    distancing: DistancingConfig = field(default_factory=DistancingConfig)
    persons: PersonsConfig = field(default_factory=PersonsConfig)
    duty: DutyConfig = field(default_factory=DutyConfig)
    links: LinkConfig = field(default_factory=LinkConfig)
    signals: SignalConfig = field(default_factory=SignalConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)

    def content_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(scenario_to_dict(self), sort_keys=True).encode()
        ).hexdigest()[:16]


_STRATEGY_NAMES = {s.value for s in Strategy}


def scenario_to_dict(s: Scenario) -> dict:
    out = asdict(s)
    out["grid"] = {
        "n": s.grid.n, "tau": s.grid.tau,
        "layers": s.grid.layers, "band_fraction": s.grid.band_fraction,
    }
    return out


def scenario_from_dict(data: dict) -> Scenario:
    data = dict(data)
    kw: dict[str, Any] = {}
    for key in ("name", "seed", "duration_ticks", "network_id", "provenance"):
        if key in data:
            kw[key] = data[key]
    if "grid" in data:
        kw["grid"] = GridSpec(**data["grid"])
    if "fleet" in data:
        kw["fleet"] = FleetConfig(**data["fleet"])
    if "strategy" in data:
        kw["strategy"] = StrategyPlan(**data["strategy"])
    if data.get("ped_flow") is not None:
        kw["ped_flow"] = PedFlowSpec(**data["ped_flow"])
    for key, cls in (
        ("distancing", DistancingConfig), ("persons", PersonsConfig),
        ("duty", DutyConfig), ("links", LinkConfig),
        ("signals", SignalConfig), ("scan", ScanConfig),
    ):
        if data.get(key) is not None:
            kw[key] = cls(**data[key])
    return Scenario(**kw)


def load_scenario(path: str | Path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def validate(s: Scenario) -> list[ValidationIssue]:
    """Structured cross-checks; returns issues rather than raising."""
    issues: list[ValidationIssue] = []

    def bad(path: str, message: str) -> None:
        issues.append(ValidationIssue(path, message))

    if s.duration_ticks <= 0:
        bad("duration_ticks", "must be positive")
    if s.fleet.count > s.grid.zones_per_layer:
        bad("fleet.count", f"{s.fleet.count} drones exceed "
            f"{s.grid.zones_per_layer} zones per layer")
    if s.strategy.kind not in _STRATEGY_NAMES:
        bad("strategy.kind", f"unknown strategy {s.strategy.kind!r}")
    elif s.strategy.kind == Strategy.MULTI_LAYER.value and s.grid.layers < 2:
        bad("strategy.kind", "MissingTransferLayer: MultiLayer needs layers >= 2")
    elif s.strategy.kind == Strategy.HYBRID.value:
        try:
            levels = [(int(l), Strategy(st)) for l, st in s.strategy.levels]
            hybrid_plan(levels, s.grid)
        except Exception as exc:
            bad("strategy.levels", f"{type(exc).__name__}: {exc}")
    if s.ped_flow is not None:
        pf = s.ped_flow
        for name in ("arrival_rate_per_min", "gate_capacity", "walk_time_s",
                     "wait_spacing_m", "service_units", "service_time_max_s",
                     "check_time_s", "drone_service_time_s"):
            if getattr(pf, name) <= 0:
                bad(f"ped_flow.{name}", "must be positive")
    d = s.distancing
    if not 0.0 <= d.utilization_lower < d.utilization_upper <= 1.0:
        bad("distancing.utilization_lower",
            f"need 0 <= lower < upper <= 1, got ({d.utilization_lower}, {d.utilization_upper})")
    if d.threshold_m <= 0:
        bad("distancing.threshold_m", "must be positive")
    if d.method not in {m.value for m in DistanceMethod}:
        bad("distancing.method", f"unknown method {d.method!r}")
    if d.mode not in {m.value for m in ViolationMode}:
        bad("distancing.mode", f"unknown mode {d.mode!r}")
    if s.duty.enabled:
        if not 0 < s.duty.target_min <= s.duty.target_max <= s.fleet.count:
            bad("duty.target_min", "need 0 < target_min <= target_max <= fleet.count")
    if s.signals.enabled:
        if not s.signals.min_s <= s.signals.mode_s <= s.signals.max_s:
            bad("signals.mode_s", "need min <= mode <= max")
    if s.persons.count < 0:
        bad("persons.count", "must be non-negative")
    return issues


# --------------------------------------------------------------------------
# Seeded substreams
# --------------------------------------------------------------------------

class RngHub:
    """Per-subsystem generators derived from (seed, fixed label) so the
    draw sequences of different subsystems never interleave."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._streams: dict[str, Random] = {}

    def stream(self, label: str) -> Random:
        rng = self._streams.get(label)
        if rng is None:
            rng = Random(f"{self.seed}/{label}")
            self._streams[label] = rng
        return rng


def poisson_draw(rng: Random, lam: float) -> int:
    """Knuth's product method; adequate for per-tick arrival intensities."""
    if lam <= 0:
        return 0
    limit = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


# --------------------------------------------------------------------------
# Pedestrian pipeline (source -> gates -> check -> walk -> queue -> service)
# --------------------------------------------------------------------------

@dataclass
class PedState:
    tick: int = 0
    arrivals: int = 0
    balked: int = 0
    checked: int = 0
    served: int = 0
    next_person: int = 0
    gate: deque = field(default_factory=deque)          # person ids
    checking: list = field(default_factory=list)        # (finish, person)
    walking: list = field(default_factory=list)         # (arrive, person)
    queue: deque = field(default_factory=deque)         # (person, gap_m)
    serving: list = field(default_factory=list)         # (finish, person, unit)

    @property
    def in_system(self) -> int:
        return (
            len(self.gate) + len(self.checking) + len(self.walking)
            + len(self.queue) + len(self.serving)
        )

    @property
    def sinks(self) -> int:
        return self.balked + self.served


def ped_flow_step(
    spec: PedFlowSpec,
    state: PedState,
    rng: Random,
    check_servers: int,
    delivery_servers: int,
    log: EventLog | None = None,
) -> PedState:
    """One tick of the pedestrian pipeline.

    Arrivals are Poisson; the gate area holds at most ``gate_capacity``
    waiting persons and everyone beyond that is turned away to the sink.
    Checking occupies one drone-server per person; checked persons walk to
    the spaced service queue.  A queue-head violating the wait spacing is
    sent back to the queue end and not served that cycle.  Service runs on
    drone units plus fixed ground units, capped at the configured maximum
    service time.
    """
    t = state.tick

    def emit(entity: str, kind: str, payload: dict) -> None:
        if log is not None:
            log.append(t, entity, kind, payload)

    # service completions
    still = []
    for finish, person, unit in state.serving:
        if finish <= t:
            state.served += 1
            emit(f"p{person}", "ped_served", {"person": person, "unit": unit})
            emit(f"p{person}", "ped_sink", {"person": person, "reason": "served"})
        else:
            still.append((finish, person, unit))
    state.serving = still

    # walking arrivals join the spaced queue
    still_w = []
    for arrive, person in state.walking:
        if arrive <= t:
            gap = 2.0 * spec.wait_spacing_m
            if rng.random() < spec.spacing_violation_prob:
                gap = spec.wait_spacing_m * rng.uniform(0.2, 0.95)
            state.queue.append((person, gap))
            emit(f"p{person}", "ped_queue_join", {"person": person, "gap_m": round(gap, 3)})
        else:
            still_w.append((arrive, person))
    state.walking = still_w

    # check completions -> walk stage
    still_c = []
    for finish, person in state.checking:
        if finish <= t:
            state.checked += 1
            emit(f"p{person}", "ped_checked", {"person": person})
            state.walking.append((t + spec.walk_time_s, person))
        else:
            still_c.append((finish, person))
    state.checking = still_c

    # arrivals against gate capacity
    for _ in range(poisson_draw(rng, spec.arrival_rate_per_min / 60.0)):
        person = state.next_person
        state.next_person += 1
        state.arrivals += 1
        emit(f"p{person}", "ped_arrival", {"person": person})
        if len(state.gate) < spec.gate_capacity:
            state.gate.append(person)
        else:
            state.balked += 1
            emit(f"p{person}", "ped_balk", {"person": person})
            emit(f"p{person}", "ped_sink", {"person": person, "reason": "balked"})

    # admit gate -> free checkers
    while state.gate and len(state.checking) < check_servers:
        person = state.gate.popleft()
        finish = t + max(1, round(spec.check_time_s))
        state.checking.append((finish, person))
        emit(f"p{person}", "ped_check_start", {"person": person})

    # dispatch queue -> free service units; spacing violators go back to
    # the queue end and are not served again this cycle
    drone_units = delivery_servers
    ground_units = spec.service_units
    total_units = drone_units + ground_units
    budget = len(state.queue)
    while budget > 0 and state.queue and len(state.serving) < total_units:
        budget -= 1
        person, gap = state.queue[0]
        if gap < spec.wait_spacing_m:
            state.queue.popleft()
            new_gap = 2.0 * spec.wait_spacing_m
            state.queue.append((person, new_gap))
            emit(f"p{person}", "ped_requeue", {"person": person, "gap_m": round(gap, 3)})
            continue
        state.queue.popleft()
        busy_drone_units = sum(1 for _f, _p, u in state.serving if u.startswith("drone"))
        if busy_drone_units < drone_units:
            unit = f"drone{busy_drone_units}"
            duration = max(1, round(spec.drone_service_time_s))
        else:
            unit = f"unit{len(state.serving) - busy_drone_units}"
            duration = spec.service_time_max_s
        state.serving.append((t + duration, person, unit))
        emit(f"p{person}", "ped_service_start", {"person": person, "unit": unit})

    emit("ped", "ped_counts", {
        "arrivals": state.arrivals, "in_system": state.in_system,
        "sinks": state.sinks, "checked": state.checked, "served": state.served,
    })
    state.tick += 1
    return state


def medicine_service_count(events, units: int | None = None,
                           service_time_max_s: int | None = None) -> int:
    """Persons that passed the medicine-service stage and reached the sink."""
    return sum(1 for ev in events if ev.kind == "ped_served")


# --------------------------------------------------------------------------
# Fleet duty scheduler (control-room cases)
# --------------------------------------------------------------------------

class DutyScheduler:
    """Keeps the number of active drones tracking a wandering target and
    rotates duty so no drone exceeds the utilization band."""

    _ACTIVE = (DroneState.SCANNING, DroneState.SANITIZING, DroneState.TRANSFERRING)

    def __init__(self, cfg: DutyConfig, drones: list[Drone], rng: Random,
                 log: EventLog | None) -> None:
        self.cfg = cfg
        self.drones = drones
        self.rng = rng
        self.log = log
        self.target = (cfg.target_min + cfg.target_max) // 2
        self.burst_end: dict[int, int] = {}
        self.rest_since: dict[int, int] = {d.id: -cfg.rest_min_s for d in drones}
        self.dispatch_count = 0

    def _emit(self, tick: int, entity: str, kind: str, payload: dict) -> None:
        if self.log is not None:
            self.log.append(tick, entity, kind, payload)

    def active_ids(self) -> list[int]:
        return [d.id for d in self.drones if d.state in self._ACTIVE]

    def tick(self, t: int) -> None:
        cfg = self.cfg
        if t % cfg.retarget_period_s == 0 and t > 0:
            self.target = max(
                cfg.target_min,
                min(cfg.target_max, self.target + self.rng.randint(-6, 6)),
            )
        by_id = {d.id: d for d in self.drones}
        # burst expiry
        for drone_id, end in sorted(self.burst_end.items()):
            if end <= t:
                drone = by_id[drone_id]
                drone.set_state(DroneState.IDLE)
                self.rest_since[drone_id] = t
                del self.burst_end[drone_id]
                self._emit(t, f"d{drone_id}", "drone_state",
                           {"drone": drone_id, "state": DroneState.IDLE.value})
        active = self.active_ids()
        deficit = self.target - len(active)
        if deficit > 0:
            idle = [d for d in self.drones if d.state is DroneState.IDLE]
            rested = [d for d in idle if t - self.rest_since[d.id] >= cfg.rest_min_s]
            pool = sorted(rested, key=lambda d: (self.rest_since[d.id], d.id))
            if len(pool) < deficit:
                # pool shortfall: allow half-rested drones, never less, so a
                # drone's windowed duty stays under the utilization ceiling
                extra = sorted(
                    (d for d in idle
                     if d not in pool and t - self.rest_since[d.id] >= cfg.rest_min_s // 2),
                    key=lambda d: (self.rest_since[d.id], d.id),
                )
                pool += extra
            for drone in pool[:deficit]:
                state = self.rng.choice(self._ACTIVE)
                drone.set_state(state)
                self.burst_end[drone.id] = t + self.rng.randint(
                    cfg.burst_min_s, cfg.burst_max_s
                )
                self.dispatch_count += 1
                self._emit(t, f"d{drone.id}", "drone_dispatch", {"drone": drone.id})
                self._emit(t, f"d{drone.id}", "drone_state",
                           {"drone": drone.id, "state": state.value})
        elif deficit < 0:
            overbusy = sorted(
                self.burst_end.items(), key=lambda kv: (kv[1], kv[0])
            )[: -deficit]
            for drone_id, _end in overbusy:
                drone = by_id[drone_id]
                drone.set_state(DroneState.IDLE)
                self.rest_since[drone_id] = t
                del self.burst_end[drone_id]
                self._emit(t, f"d{drone_id}", "drone_state",
                           {"drone": drone_id, "state": DroneState.IDLE.value})


# --------------------------------------------------------------------------
# Simulation
# --------------------------------------------------------------------------

@dataclass
class RunResult:
    scenario: Scenario
    seed: int
    log: EventLog
    summary: dict


def run(s: Scenario, seed: int | None = None, record_events: bool = True) -> RunResult:
    """Execute a scenario to completion.  Output is fully determined by
    (scenario, seed)."""
    issues = validate(s)
    if issues:
        raise ValidationError(issues)
    seed = s.seed if seed is None else seed
    hub = RngHub(seed)
    log = EventLog()
    sink = log if record_events else None

    log.append(0, "sim", "run_start", {
        "scenario": s.name, "seed": seed, "hash": s.content_hash(),
        "provenance": s.provenance,
    })

    drones = create_fleet(s.fleet.count, s.grid, s.fleet)
    arena = ProtocolArena(s.grid, timeout=s.strategy.timeout_ticks)
    op_layer = s.grid.operational_layer
    drone_zone: dict[int, ZoneId] = {}
    for i, d in enumerate(drones):
        z = zone_of_ordinal(i, s.grid, op_layer)
        arena.ledger.place(d.id, z)
        drone_zone[d.id] = z
        if sink:
            sink.append(0, f"d{d.id}", "drone_at_zone",
                        {"drone": d.id, "zone": [z.row, z.col, z.layer]})

    duty = DutyScheduler(s.duty, drones, hub.stream("duty"), sink) if s.duty.enabled else None
    ped_state = PedState() if s.ped_flow is not None else None
    sweep = None
    if (
        s.strategy.kind == Strategy.PARALLEL.value
        and not s.duty.enabled
        and s.fleet.count <= s.grid.n
    ):
        # a dedicated row crew; larger duty-scheduled fleets keep their
        # zone assignments and only inherit the parallel link profile
        crew = [d.id for d in drones]
        for drone_id in crew:
            arena.ledger.remove(drone_id)
        sweep = ParallelSweepRun(crew, s.grid, arena.ledger, layer=op_layer)

    persons = _seed_persons(s, hub.stream("persons"))
    next_scan: dict[int, int] = {d.id: s.scan.interval_s for d in drones}
    scan_delay: dict[int, int] = {d.id: s.scan.interval_s for d in drones}

    if not s.duty.enabled:
        for d in drones:
            d.set_state(DroneState.SCANNING)
            if sink:
                sink.append(0, f"d{d.id}", "drone_state",
                            {"drone": d.id, "state": d.state.value})

    signal_model = SignalTimeModel(s.signals.min_s, s.signals.mode_s, s.signals.max_s)
    rng_links = hub.stream("links")
    rng_signals = hub.stream("signals")
    rng_walk = hub.stream("walk")
    rng_swaps = hub.stream("swaps")
    rng_ped = hub.stream("pedestrians")

    throughputs: list[float] = []
    signal_times: list[float] = []
    violations_total = 0

    standing_violations: list[Violation] = []
    if s.distancing.persons_csv:
        roster = load_persons_csv(s.distancing.persons_csv)
        standing_violations = detect_violations(
            roster,
            DistanceMethod(s.distancing.method),
            s.distancing.threshold_m,
            ViolationMode(s.distancing.mode),
        )
        violations_total += len(standing_violations)
        if sink:
            for v in standing_violations:
                sink.append(0, "distancing", "violation", {
                    "a": v.a, "b": v.b, "method": v.method.value,
                    "distance_m": round(v.distance_m, 6),
                })

    for t in range(1, s.duration_ticks + 1):
        if duty is not None:
            duty.tick(t)

        if ped_state is not None and s.ped_flow is not None:
            ped_flow_step(
                s.ped_flow, ped_state, rng_ped,
                check_servers=s.fleet.count,
                delivery_servers=max(0, s.fleet.count - 1),
                log=sink,
            )

        if sweep is not None and t % s.strategy.move_period_s == 0:
            sweep.tick()

        if s.strategy.kind == Strategy.ZIGZAG.value and t % s.strategy.move_period_s == 0:
            _zigzag_advance(s, arena.ledger, drone_zone, sink, t)

        if s.strategy.kind in (Strategy.FIXED_AREA.value, Strategy.MULTI_LAYER.value):
            if t % s.strategy.swap_period_s == 0:
                _submit_swap(s, arena, rng_swaps, t)
            arena.tick()
            _sync_zones(arena.ledger, drone_zone)

        if persons and t % s.persons.walk_period_s == 0:
            _walk_persons(s, persons, rng_walk, sink, t)

        if persons:
            _scan_zones(s, drones, drone_zone, persons, next_scan, scan_delay, sink, t)

        if s.links.enabled and t % s.links.sample_period_s == 0:
            tput = _sample_links(s, duty, drones, drone_zone, rng_links, sink, t)
            throughputs.extend(tput)

        if s.signals.enabled and t % s.signals.period_s == 0:
            seconds = sample_signal_time(signal_model, rng_signals)
            signal_times.append(seconds)
            if sink:
                which = drones[rng_signals.randrange(len(drones))]
                z = drone_zone.get(which.id)
                sink.append(t, f"d{which.id}", "signal_time", {
                    "drone": which.id, "seconds": round(seconds, 6),
                    "zone": [z.row, z.col, z.layer] if z else None,
                })

    directives = {}
    if s.duty.enabled:
        from .metrics import UTILIZATION_STATES, _timelines

        lines = _timelines(log.events) if record_events else {}
        window = min(3600, s.duration_ticks)
        utils = {
            drone_id: line.seconds_in(UTILIZATION_STATES,
                                      s.duration_ticks - window, s.duration_ticks) / window
            for drone_id, line in sorted(lines.items())
        }
        report = control_room_notification(
            utils, s.distancing.utilization_upper, s.distancing.utilization_lower,
            standing_violations,
        )
        directives = {k: v.value for k, v in report.directives.items()}
        if sink:
            for drone_id, directive in sorted(directives.items()):
                sink.append(s.duration_ticks, "control_room", "directive",
                            {"drone": drone_id, "action": directive})

    log.append(s.duration_ticks, "sim", "run_stop", {"ticks": s.duration_ticks})

    summary: dict[str, Any] = {
        "scenario": s.name,
        "seed": seed,
        "duration_ticks": s.duration_ticks,
        "events": len(log),
        "violations": violations_total,
        "directives": directives,
    }
    if ped_state is not None:
        summary.update({
            "ped_arrivals": ped_state.arrivals,
            "ped_checked": ped_state.checked,
            "ped_served": ped_state.served,
            "ped_balked": ped_state.balked,
            "ped_in_system": ped_state.in_system,
        })
    if throughputs:
        summary["mean_throughput_bps"] = sum(throughputs) / len(throughputs)
        summary["throughput_samples"] = len(throughputs)
    if signal_times:
        summary["mean_signal_time_s"] = sum(signal_times) / len(signal_times)
        summary["signal_samples"] = len(signal_times)
    if duty is not None:
        summary["dispatches"] = duty.dispatch_count
    return RunResult(scenario=s, seed=seed, log=log, summary=summary)


# --------------------------------------------------------------------------
# Run helpers
# --------------------------------------------------------------------------

def _seed_persons(s: Scenario, rng: Random) -> list[Person]:
    persons = []
    for i in range(s.persons.count):
        zone = zone_of_ordinal(rng.randrange(s.grid.zones_per_layer), s.grid,
                               s.grid.operational_layer)
        series = [(0, 36.4 + rng.random() * 0.6)]
        if rng.random() < s.persons.fever_fraction:
            # scripted rising fever across the first few scans
            base = 37.2 + rng.random() * 0.4
            series = [(0, base), (60, base + 0.7), (120, base + 1.4), (180, base + 2.1)]
        persons.append(Person(id=i, position=zone_center(zone, s.grid),
                              temperature_series=series))
    return persons


def _walk_persons(s: Scenario, persons: list[Person], rng: Random,
                  sink: EventLog | None, t: int) -> None:
    from .grid import zone_of_position, neighbors_of

    for p in persons:
        here = zone_of_position(p.position, s.grid)
        options = [z for z in sorted(neighbors_of(here, s.grid)) if z.layer == here.layer]
        options.append(here)
        target = options[rng.randrange(len(options))]
        p.position = zone_center(target, s.grid)
        if sink:
            sink.append(t, f"p{p.id}", "person_position", {
                "person": p.id, "zone": [target.row, target.col, target.layer],
            })


def _scan_zones(s: Scenario, drones: list[Drone], drone_zone: dict[int, ZoneId],
                persons: list[Person], next_scan: dict[int, int],
                scan_delay: dict[int, int], sink: EventLog | None, t: int) -> None:
    for d in drones:
        if t < next_scan[d.id] or d.state is not DroneState.SCANNING:
            continue
        zone = drone_zone.get(d.id)
        if zone is None:
            continue
        d.position = zone_center(zone, s.grid)
        result = scan_cycle(zone, d, persons, s.grid, t, scan_delay[d.id],
                            trend_k=s.scan.trend_k, normal=s.scan.normal_temp_c,
                            doubling=s.scan.doubling)
        scan_delay[d.id] = result.next_delay
        next_scan[d.id] = t + result.next_delay
        if sink:
            zkey = [zone.row, zone.col, zone.layer]
            for obs in result.observations:
                sink.append(t, f"d{d.id}", "scan_observation", {
                    "zone": zkey, "person": obs.person,
                    "temperature": round(obs.temperature, 3),
                })
            for person_id, action in result.actions:
                kind = {ZoneAction.ALARM: "fever_alarm",
                        ZoneAction.SANITIZE: "sanitize",
                        ZoneAction.MEDICATE: "medicate"}[action]
                sink.append(t, f"d{d.id}", kind, {"zone": zkey, "person": person_id})


def _zigzag_advance(s: Scenario, ledger: OccupancyLedger,
                    drone_zone: dict[int, ZoneId], sink: EventLog | None, t: int) -> None:
    # advance drones in reverse ordinal order so the circuit never collides
    from .grid import drone_zone_value

    order = sorted(
        drone_zone.items(),
        key=lambda kv: -drone_zone_value(kv[1].row, kv[1].col, s.grid.n),
    )
    for drone_id, zone in order:
        nxt = zigzag_route(zone, s.grid)
        if nxt == zone:
            continue
        if ledger.is_free(nxt):
            ledger.move(drone_id, nxt)
            drone_zone[drone_id] = nxt
            if sink:
                sink.append(t, f"d{drone_id}", "drone_at_zone", {
                    "drone": drone_id, "zone": [nxt.row, nxt.col, nxt.layer],
                })


def _submit_swap(s: Scenario, arena: ProtocolArena, rng: Random, t: int) -> None:
    placed = [
        (d, c) for d, c in sorted(arena.ledger.drones().items())
        if d not in arena.busy_drones() and isinstance(c, ZoneId)
    ]
    if not placed:
        return
    drone, cell = placed[rng.randrange(len(placed))]
    if s.strategy.kind == Strategy.MULTI_LAYER.value:
        if cell.layer < 1:
            return
        target = zone_of_ordinal(rng.randrange(s.grid.zones_per_layer), s.grid, cell.layer)
        if target == cell:
            return
        arena.submit(SwapRequest(drone, cell, target, Strategy.MULTI_LAYER, issued_at=t))
    else:
        cols = [c for c in (cell.col - 1, cell.col + 1) if 0 <= c < s.grid.n]
        if not cols:
            return
        target = ZoneId(cell.row, cols[rng.randrange(len(cols))], cell.layer)
        arena.submit(SwapRequest(drone, cell, target, Strategy.FIXED_AREA, issued_at=t))


def _sync_zones(ledger: OccupancyLedger, drone_zone: dict[int, ZoneId]) -> None:
    for drone_id, cell in ledger.drones().items():
        if isinstance(cell, ZoneId):
            drone_zone[drone_id] = cell


def _sample_links(s: Scenario, duty: DutyScheduler | None, drones: list[Drone],
                  drone_zone: dict[int, ZoneId], rng: Random,
                  sink: EventLog | None, t: int) -> list[float]:
    if duty is not None:
        candidates = sorted(duty.active_ids())
    else:
        candidates = [d.id for d in drones]
    if not candidates:
        return []
    k = min(s.links.transmitters, len(candidates))
    chosen = rng.sample(candidates, k)
    out = []
    for drone_id in chosen:
        packets = round(
            rng.randint(s.links.packets_min, s.links.packets_max) * s.links.success_boost
        )
        sample = LinkSample(
            packets_success=packets,
            ber=rng.uniform(0.0, s.links.ber_max),
            transmission_time=s.links.window_s,
        )
        bps = throughput(sample)
        out.append(bps)
        if sink:
            z = drone_zone.get(drone_id)
            sink.append(t, f"d{drone_id}", "link_sample", {
                "drone": drone_id, "packets": sample.packets_success,
                "ber": round(sample.ber, 6),
                "throughput_bps": round(bps, 3),
                "zone": [z.row, z.col, z.layer] if z else None,
            })
    return out
