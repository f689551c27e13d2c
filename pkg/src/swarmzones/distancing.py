"""Person counting, distance measurement and violation intimation.

Four distance modes: straight-line chord through the sphere ("tunnel"),
flat lat/lon scaling, ground-sample-distance photogrammetry and the
pixel-ratio range difference.  The flat lat/lon formula deliberately
carries no cos-latitude correction: it reproduces the stated method and
is increasingly inaccurate away from the equator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .grid import Position

EARTH_RADIUS_KM = 6371.0
KM_PER_DEGREE = 111.32


class DistancingError(Exception):
    pass


class MissingObservation(DistancingError):
    pass


class InvalidThresholds(DistancingError):
    pass


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 < self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside (-180, 180]")


@dataclass(frozen=True)
class CameraModel:
    """Airborne camera parameters for the image-based distance modes.

    ``pixel_angular_size`` is the scale factor linking apparent object
    length to camera range (L = factor * r).  The premises also name a
    per-pixel image width that no formula consumes; it is not modeled.
    """

    sensor_width_mm: float = 13.2
    focal_length_mm: float = 8.8
    image_width_px: int = 5472
    altitude_m: float = 100.0
    pixel_angular_size: float = 0.17

    def __post_init__(self) -> None:
        for name in ("sensor_width_mm", "focal_length_mm", "image_width_px",
                     "altitude_m", "pixel_angular_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class DistanceMethod(str, Enum):
    TUNNEL_CHORD = "TunnelChord"
    FLAT_LAT_LON = "FlatLatLon"
    GROUND_SAMPLE_DISTANCE = "GroundSampleDistance"
    PIXEL_RATIO = "PixelRatio"


class ViolationMode(str, Enum):
    QUEUE = "Queue"
    SCATTER = "Scatter"


@dataclass
class QueuePerson:
    """A person under observation, in a queue or scattered in the area.

    ``range_m`` is the sensor-measured camera distance when available;
    the pixel-ratio mode recovers it from ``apparent_length_m`` otherwise.
    ``pixel_xy`` carries image coordinates for the GSD mode.
    """

    id: int
    queue: int = 0
    location: GeoPoint | Position | None = None
    apparent_length_m: float | None = None
    range_m: float | None = None
    pixel_xy: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.apparent_length_m is not None and self.apparent_length_m <= 0:
            raise ValueError("apparent_length_m must be positive when set")
        if self.range_m is not None and self.range_m <= 0:
            raise ValueError("range_m must be positive when set")


# --------------------------------------------------------------------------
# Person counting
# --------------------------------------------------------------------------

def count_persons(
    persons: list[QueuePerson],
    sensors_available: bool,
    cam: CameraModel,
    length_threshold_m: float = 1.0,
    sweep: bool = False,
) -> int:
    """Headcount of an observed area.

    With ranging sensors: one count per distinct detected range.  Without:
    count image objects whose apparent length L = factor * r exceeds the
    threshold.  ``sweep`` is the rotating-sensor variant for scattered
    populations: detections from all four directions are unioned, so a
    person visible from two directions still counts once.
    """
    if sweep:
        seen: set[int] = set()
        for p in persons:
            if _detected(p, sensors_available, cam, length_threshold_m):
                seen.add(p.id)
        return len(seen)
    count = 0
    for p in persons:
        if _detected(p, sensors_available, cam, length_threshold_m):
            count += 1
    return count


def _detected(
    p: QueuePerson, sensors_available: bool, cam: CameraModel, threshold: float
) -> bool:
    if sensors_available:
        return p.range_m is not None
    length = p.apparent_length_m
    if length is None and p.range_m is not None:
        length = cam.pixel_angular_size * p.range_m
    return length is not None and length > threshold


# --------------------------------------------------------------------------
# Distance formulas
# --------------------------------------------------------------------------

def tunnel_distance(p1: GeoPoint, p2: GeoPoint, radius_km: float = EARTH_RADIUS_KM) -> float:
    """Chord distance through the sphere in kilometers: the Euclidean norm
    of the unit-vector difference, scaled by the radius."""
    if radius_km <= 0:
        raise ValueError(f"radius must be positive, got {radius_km}")
    lat1, lon1 = math.radians(p1.lat), math.radians(p1.lon)
    lat2, lon2 = math.radians(p2.lat), math.radians(p2.lon)
    dx = math.cos(lat2) * math.cos(lon2) - math.cos(lat1) * math.cos(lon1)
    dy = math.cos(lat2) * math.sin(lon2) - math.cos(lat1) * math.sin(lon1)
    dz = math.sin(lat2) - math.sin(lat1)
    t_d = math.sqrt(dx * dx + dy * dy + dz * dz)
    return t_d * radius_km


def tunnel_error_bound(d_km: float, radius_km: float = EARTH_RADIUS_KM) -> float:
    """Chord-vs-arc error estimate e(D) = D * (D/R)^2 / 24, valid for
    distances small against the radius."""
    if d_km < 0:
        raise ValueError(f"distance must be non-negative, got {d_km}")
    return d_km * (d_km / radius_km) ** 2 / 24.0


def flat_latlon_distance(p1: GeoPoint, p2: GeoPoint) -> float:
    """Euclidean distance in degrees scaled by 111.32 km/degree, in
    kilometers.  No latitude correction; see module docstring."""
    return KM_PER_DEGREE * math.hypot(p2.lat - p1.lat, p2.lon - p1.lon)


def haversine_distance(p1: GeoPoint, p2: GeoPoint, radius_km: float = EARTH_RADIUS_KM) -> float:
    """Great-circle (arc) distance in kilometers; reference companion to
    the chord formula for error-bound checks."""
    lat1, lon1 = math.radians(p1.lat), math.radians(p1.lon)
    lat2, lon2 = math.radians(p2.lat), math.radians(p2.lon)
    s_lat = math.sin((lat2 - lat1) / 2.0)
    s_lon = math.sin((lon2 - lon1) / 2.0)
    h = s_lat * s_lat + math.cos(lat1) * math.cos(lat2) * s_lon * s_lon
    return 2.0 * radius_km * math.asin(min(1.0, math.sqrt(h)))


def ground_sample_distance(cam: CameraModel) -> tuple[float, float]:
    """(gsd in cm/pixel, ground footprint width in meters) for the camera.

    gsd = sensor_width_mm * altitude_m * 100 / (focal_length_mm * image_width_px);
    the footprint is the gsd times the image width, converted to meters.
    """
    gsd_cm = (cam.sensor_width_mm * cam.altitude_m * 100.0) / (
        cam.focal_length_mm * cam.image_width_px
    )
    footprint_m = gsd_cm * cam.image_width_px / 100.0
    return gsd_cm, footprint_m


def pixel_ratio_distance(a: QueuePerson, b: QueuePerson, cam: CameraModel) -> float:
    """Separation in meters from camera ranges recovered as r = L / factor.

    The raw range difference can be negative depending on argument order,
    so the absolute value is returned to keep the measure symmetric.
    """
    r_a = _range_of(a, cam)
    r_b = _range_of(b, cam)
    return abs(r_a - r_b)


def _range_of(p: QueuePerson, cam: CameraModel) -> float:
    if p.range_m is not None:
        return p.range_m
    if p.apparent_length_m is None:
        raise MissingObservation(f"person {p.id} has neither range nor apparent length")
    return p.apparent_length_m / cam.pixel_angular_size


def measure_distance(
    a: QueuePerson,
    b: QueuePerson,
    method: DistanceMethod,
    cam: CameraModel | None = None,
    radius_km: float = EARTH_RADIUS_KM,
) -> float:
    """Separation of two persons in meters under the selected method."""
    cam = cam or CameraModel()
    if method is DistanceMethod.TUNNEL_CHORD:
        return 1000.0 * tunnel_distance(_geo(a), _geo(b), radius_km)
    if method is DistanceMethod.FLAT_LAT_LON:
        return 1000.0 * flat_latlon_distance(_geo(a), _geo(b))
    if method is DistanceMethod.GROUND_SAMPLE_DISTANCE:
        if a.pixel_xy is None or b.pixel_xy is None:
            raise MissingObservation("GSD method needs pixel coordinates")
        gsd_cm, _ = ground_sample_distance(cam)
        px = math.hypot(a.pixel_xy[0] - b.pixel_xy[0], a.pixel_xy[1] - b.pixel_xy[1])
        return px * gsd_cm / 100.0
    if method is DistanceMethod.PIXEL_RATIO:
        return pixel_ratio_distance(a, b, cam)
    raise ValueError(f"unknown method {method}")


def _geo(p: QueuePerson) -> GeoPoint:
    if not isinstance(p.location, GeoPoint):
        raise MissingObservation(f"person {p.id} has no geographic location")
    return p.location


# --------------------------------------------------------------------------
# Violation detection and intimation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    a: int
    b: int
    method: DistanceMethod
    distance_m: float


def detect_violations(
    persons: list[QueuePerson],
    method: DistanceMethod,
    threshold_m: float = 1.0,
    mode: ViolationMode = ViolationMode.QUEUE,
    cam: CameraModel | None = None,
    radius_km: float = EARTH_RADIUS_KM,
) -> list[Violation]:
    """Pairs strictly closer than the threshold; both members are flagged
    for intimation.  Queue mode checks consecutive pairs in list order,
    scatter mode checks all pairs."""
    if threshold_m <= 0:
        raise ValueError(f"threshold must be positive, got {threshold_m}")
    cam = cam or CameraModel()
    # hoist the method dispatch out of the O(n^2) pair loop
    if method is DistanceMethod.FLAT_LAT_LON:
        dist = lambda a, b: 1000.0 * flat_latlon_distance(_geo(a), _geo(b))
    elif method is DistanceMethod.TUNNEL_CHORD:
        dist = lambda a, b: 1000.0 * tunnel_distance(_geo(a), _geo(b), radius_km)
    else:
        dist = lambda a, b: measure_distance(a, b, method, cam, radius_km)
    out: list[Violation] = []
    if mode is ViolationMode.QUEUE:
        pairs = zip(persons, persons[1:])
    else:
        pairs = (
            (persons[i], persons[j])
            for i in range(len(persons))
            for j in range(i + 1, len(persons))
        )
    for pa, pb in pairs:
        d = dist(pa, pb)
        if d < threshold_m:
            out.append(Violation(pa.id, pb.id, method, d))
    return out


class Directive(str, Enum):
    RECALL = "Recall"
    START_OPS = "StartOps"
    NO_ACTION = "NoAction"


@dataclass(frozen=True)
class ControlRoomReport:
    directives: dict[int, Directive]
    reissued: tuple[Violation, ...]


def control_room_notification(
    utilizations: dict[int, float],
    upper: float = 0.8,
    lower: float = 0.2,
    violations: list[Violation] | None = None,
) -> ControlRoomReport:
    """Per-drone directive from utilization thresholds: recall overworked
    drones, start operations on underused ones; standing violations are
    re-intimated."""
    if not (0.0 <= lower < upper <= 1.0):
        raise InvalidThresholds(f"need 0 <= lower < upper <= 1, got ({lower}, {upper})")
    directives = {}
    for drone, util in utilizations.items():
        if util >= upper:
            directives[drone] = Directive.RECALL
        elif util < lower:
            directives[drone] = Directive.START_OPS
        else:
            directives[drone] = Directive.NO_ACTION
    return ControlRoomReport(directives=directives, reissued=tuple(violations or ()))


# --------------------------------------------------------------------------
# CSV ingestion / export
# --------------------------------------------------------------------------

def load_persons_csv(path: str | Path) -> list[QueuePerson]:
    """Read persons from CSV with either (id, lat, lon) or (id, x, y, queue)
    columns."""
    persons = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pid = int(row["id"])
            queue = int(row.get("queue", 0) or 0)
            if "lat" in row and row.get("lat"):
                loc: GeoPoint | Position = GeoPoint(float(row["lat"]), float(row["lon"]))
            else:
                loc = Position(float(row["x"]), float(row["y"]), 0)
            rng = row.get("range_m")
            length = row.get("apparent_length_m")
            persons.append(
                QueuePerson(
                    id=pid,
                    queue=queue,
                    location=loc,
                    range_m=float(rng) if rng else None,
                    apparent_length_m=float(length) if length else None,
                )
            )
    return persons


def write_violations_csv(path: str | Path, violations: list[Violation]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["person_a", "person_b", "method", "distance_m"])
        for v in violations:
            writer.writerow([v.a, v.b, v.method.value, repr(v.distance_m)])
