"""Independent oracle suites backing the verification command.

Each suite checks an implementation against a second, independently
derived route: the zigzag ordinals against plain diagonal enumeration,
the tunnel formula against the law-of-cosines chord, violation detection
against a vectorized all-pairs sweep, and the transfer protocols against
randomized fuzzing of the occupancy ledger.  Suites accept the function
under test as a parameter so that known-bad mutants can be shown to fail.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distancing import (
    CameraModel,
    DistanceMethod,
    GeoPoint,
    QueuePerson,
    ViolationMode,
    detect_violations,
    haversine_distance,
    pixel_ratio_distance,
    tunnel_distance,
    tunnel_error_bound,
)
from .grid import GridSpec, ZoneId, diagonal_enumeration_oracle, drone_zone_value, zone_of_ordinal
from .protocols import (
    ProtocolArena,
    ParallelSweepRun,
    Strategy,
    SwapRequest,
    is_adjacent_cells,
)


@dataclass
class SuiteReport:
    name: str
    checks: int = 0
    failures: int = 0
    first_counterexample: str | None = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def fail(self, message: str) -> None:
        self.failures += 1
        if self.first_counterexample is None:
            self.first_counterexample = message

    def summary(self) -> str:
        verdict = "ok" if self.passed else "FAIL"
        line = f"{self.name}: {self.checks} checks, {self.failures} failures [{verdict}]"
        if self.first_counterexample:
            line += f"\n  first counterexample: {self.first_counterexample}"
        return line


# --------------------------------------------------------------------------
# Suite 1: zigzag ordinal bijection
# --------------------------------------------------------------------------

def bijection_suite(
    fn: Callable[[int, int, int], int] = drone_zone_value, max_n: int = 40
) -> SuiteReport:
    report = SuiteReport("zone-value bijection")
    for n in range(1, max_n + 1):
        cells = diagonal_enumeration_oracle(n)
        values = []
        for ordinal, (a, b) in enumerate(cells):
            got = fn(a, b, n)
            report.checks += 1
            values.append(got)
            if got != ordinal:
                report.fail(f"n={n} cell ({a},{b}): got {got}, oracle says {ordinal}")
        if sorted(values) != list(range(n * n)):
            dupes = sorted({v for v in values if values.count(v) > 1})
            report.fail(f"n={n}: not a bijection, duplicate ordinals {dupes[:4]}")
    return report


# --------------------------------------------------------------------------
# Suite 2: distance oracles
# --------------------------------------------------------------------------

def _chord_oracle(p1: GeoPoint, p2: GeoPoint, radius_km: float) -> float:
    """Chord via 2R sin(sigma/2) with the central angle from the spherical
    law of cosines; an independent derivation path from the vector form."""
    lat1, lon1 = math.radians(p1.lat), math.radians(p1.lon)
    lat2, lon2 = math.radians(p2.lat), math.radians(p2.lon)
    cos_sigma = (
        math.sin(lat1) * math.sin(lat2)
        + math.cos(lat1) * math.cos(lat2) * math.cos(lon2 - lon1)
    )
    sigma = math.acos(max(-1.0, min(1.0, cos_sigma)))
    return 2.0 * radius_km * math.sin(sigma / 2.0)


def distance_suite(
    pairs: int = 1000,
    seed: int = 20260809,
    tunnel_fn: Callable = tunnel_distance,
    pixel_fn: Callable = pixel_ratio_distance,
) -> SuiteReport:
    report = SuiteReport("distance oracles")
    rng = random.Random(seed)
    radius = 6371.0

    # chord oracle on well-separated random pairs
    for _ in range(pairs):
        p1 = GeoPoint(rng.uniform(-80, 80), rng.uniform(-179, 180))
        p2 = GeoPoint(rng.uniform(-80, 80), rng.uniform(-179, 180))
        got = tunnel_fn(p1, p2, radius)
        want = _chord_oracle(p1, p2, radius)
        report.checks += 1
        scale = max(want, 1e-6)
        if abs(got - want) / scale > 1e-12:
            report.fail(f"tunnel({p1}, {p2}) = {got!r}, chord oracle {want!r}")

    # haversine-vs-chord gap bounded by 1.25 * e(D) for short distances
    for _ in range(pairs):
        lat = rng.uniform(-70, 70)
        lon = rng.uniform(-170, 170)
        p1 = GeoPoint(lat, lon)
        p2 = GeoPoint(lat + rng.uniform(-4, 4), lon + rng.uniform(-4, 4))
        chord = tunnel_fn(p1, p2, radius)
        if chord > 1000.0 or chord == 0.0:
            continue
        gap = abs(haversine_distance(p1, p2, radius) - chord)
        bound = 1.25 * tunnel_error_bound(chord, radius)
        report.checks += 1
        if gap > bound:
            report.fail(f"haversine-chord gap {gap!r} exceeds bound {bound!r} at {p1}->{p2}")

    # anchor: one degree of longitude on the equator
    a1, a2 = GeoPoint(0.0, 0.0), GeoPoint(0.0, 1.0)
    chord = tunnel_fn(a1, a2, radius)
    report.checks += 1
    if abs(chord - 111.19) > 0.01:
        report.fail(f"equator-degree chord {chord!r}, expected 111.19 km")

    # symmetry of the pixel-ratio measure
    cam = CameraModel()
    for _ in range(200):
        a = QueuePerson(id=1, apparent_length_m=rng.uniform(0.5, 2.5))
        b = QueuePerson(id=2, apparent_length_m=rng.uniform(0.5, 2.5))
        d_ab = pixel_fn(a, b, cam)
        d_ba = pixel_fn(b, a, cam)
        report.checks += 1
        if d_ab != d_ba or pixel_fn(a, a, cam) != 0.0:
            report.fail(f"pixel-ratio asymmetry: D(a,b)={d_ab!r} D(b,a)={d_ba!r}")
    return report


# --------------------------------------------------------------------------
# Suite 3: violation detection vs brute force
# --------------------------------------------------------------------------

def _scatter_oracle_numpy(
    lats: np.ndarray, lons: np.ndarray, threshold_m: float
) -> set[tuple[int, int]]:
    """All-pairs flat lat/lon sweep in numpy; same formula, independent
    pair enumeration and filtering."""
    dlat = lats[:, None] - lats[None, :]
    dlon = lons[:, None] - lons[None, :]
    dist_m = 111.32 * np.sqrt(dlat * dlat + dlon * dlon) * 1000.0
    hits = np.argwhere(dist_m < threshold_m)
    return {(int(i), int(j)) for i, j in hits if i < j}


def violation_suite(
    configs: int = 1000,
    max_persons: int = 200,
    seed: int = 31337,
    detect_fn: Callable = detect_violations,
) -> SuiteReport:
    report = SuiteReport("violation brute force")
    rng = random.Random(seed)
    for c in range(configs):
        count = rng.randint(1, max_persons)
        lat0, lon0 = rng.uniform(-60, 60), rng.uniform(-60, 60)
        lats = np.array([lat0 + rng.uniform(0, 9e-5) for _ in range(count)])
        lons = np.array([lon0 + rng.uniform(0, 9e-5) for _ in range(count)])
        persons = [
            QueuePerson(id=i, location=GeoPoint(float(lats[i]), float(lons[i])))
            for i in range(count)
        ]
        threshold = rng.uniform(0.5, 2.0)
        got = {
            (min(v.a, v.b), max(v.a, v.b))
            for v in detect_fn(
                persons, DistanceMethod.FLAT_LAT_LON, threshold, ViolationMode.SCATTER
            )
        }
        want = _scatter_oracle_numpy(lats, lons, threshold)
        report.checks += 1
        if got != want:
            diff = got.symmetric_difference(want)
            report.fail(f"config {c} ({count} persons): pair sets differ on {sorted(diff)[:4]}")
            continue
        queue_pairs = {
            (min(v.a, v.b), max(v.a, v.b))
            for v in detect_fn(
                persons, DistanceMethod.FLAT_LAT_LON, threshold, ViolationMode.QUEUE
            )
        }
        report.checks += 1
        if not queue_pairs <= got:
            report.fail(f"config {c}: queue violations not a subset of scatter")
    return report


# --------------------------------------------------------------------------
# Suite 4: collision fuzzing
# --------------------------------------------------------------------------

@dataclass
class FuzzReport:
    steps: int = 0
    violations: int = 0
    adjacency_breaches: int = 0
    swaps_completed: int = 0
    swaps_aborted: int = 0
    first_counterexample: str | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.adjacency_breaches == 0

    def summary(self) -> str:
        verdict = "ok" if self.passed else "FAIL"
        line = (
            f"collision fuzz: {self.steps} protocol steps, "
            f"{self.swaps_completed} swaps done, {self.swaps_aborted} aborted, "
            f"{self.violations} occupancy violations, "
            f"{self.adjacency_breaches} non-adjacent moves [{verdict}]"
        )
        if self.first_counterexample:
            line += f"\n  first counterexample: {self.first_counterexample}"
        return line


def collision_fuzz(steps: int = 100_000, seed: int = 424242) -> FuzzReport:
    """Randomized safety fuzz across the fixed-area, parallel-sweep and
    multi-layer protocols on grids n in [2,10], layers in [1,3].  Checks
    the occupancy invariant after every ledger mutation and the adjacency
    of every recorded move."""
    rng = random.Random(seed)
    report = FuzzReport()
    while report.steps < steps:
        n = rng.randint(2, 10)
        layers = rng.randint(1, 3)
        g = GridSpec(n=n, tau=10.0, layers=layers)
        op_layer = g.operational_layer
        arena = ProtocolArena(g, timeout=rng.randint(15, 30))
        drone_count = rng.randint(2, min(2 * n, g.zones_per_layer))
        ordinals = rng.sample(range(g.zones_per_layer), drone_count)
        for drone, o in enumerate(ordinals):
            arena.ledger.place(drone, zone_of_ordinal(o, g, op_layer))
        sweep = None
        if layers >= 2 and rng.random() < 0.3:
            # parallel sweep crew on the top layer, clear of the swap traffic
            crew = list(range(100, 100 + min(n, 4)))
            sweep = ParallelSweepRun(crew, g, arena.ledger, layer=0)

        episode_ticks = rng.randint(40, 120)
        for _ in range(episode_ticks):
            if report.steps >= steps:
                break
            if rng.random() < 0.5:
                _submit_random_request(arena, g, op_layer, rng)
            before = len(arena.ledger.transitions)
            try:
                arena.tick()
                if sweep is not None:
                    sweep.tick()
                    arena.ledger.check_invariants()
            except AssertionError as exc:
                report.violations += 1
                if report.first_counterexample is None:
                    report.first_counterexample = f"n={n} layers={layers}: {exc}"
                break
            new_moves = arena.ledger.transitions[before:]
            report.steps += max(1, len(new_moves))
            for drone, frm, to in new_moves:
                if frm is not None and not is_adjacent_cells(frm, to):
                    report.adjacency_breaches += 1
                    if report.first_counterexample is None:
                        report.first_counterexample = (
                            f"drone {drone} jumped {frm} -> {to} on n={n}"
                        )
        report.swaps_aborted += len(arena.aborted)
        report.swaps_completed += arena.completed_count
    return report


def _submit_random_request(arena: ProtocolArena, g: GridSpec, op_layer: int, rng) -> None:
    busy = arena.busy_drones()
    placed = [
        (d, c) for d, c in sorted(arena.ledger.drones().items())
        if d not in busy and isinstance(c, ZoneId) and d < 100
    ]
    if not placed:
        return
    drone, cell = placed[rng.randrange(len(placed))]
    use_multi = g.layers >= 2 and cell.layer >= 1 and rng.random() < 0.5
    if use_multi:
        target = zone_of_ordinal(rng.randrange(g.zones_per_layer), g, cell.layer)
        if target == cell:
            return
        arena.submit(SwapRequest(drone, cell, target, Strategy.MULTI_LAYER,
                                 issued_at=arena.tick_count))
    else:
        deltas = [(0, 1), (0, -1)]
        rng.shuffle(deltas)
        for dr, dc in deltas:
            r, c = cell.row + dr, cell.col + dc
            if 0 <= c < g.n:
                target = ZoneId(r, c, cell.layer)
                arena.submit(SwapRequest(drone, cell, target, Strategy.FIXED_AREA,
                                         issued_at=arena.tick_count))
                return
