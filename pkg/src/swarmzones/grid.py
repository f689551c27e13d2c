"""Zone lattice geometry: square zones, zigzag ordinals, collision bands.

The operations area is an n x n lattice of square zones of side ``tau``
meters, stacked into one or more layers.  Layer 0 is the topmost layer;
the transfer layer serving operation layer ``m`` is layer ``m - 1``.
Zones are half-open squares so every point maps to exactly one zone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator


class GridError(Exception):
    pass


class OutOfBounds(GridError):
    pass


class IndexOutOfRange(GridError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Lattice shape: zones per side, zone side length, layer count.

    ``band_fraction`` sizes the collision-feasibility band near interior
    zone boundaries as a fraction of tau.
    """

    n: int
    tau: float
    layers: int = 1
    band_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if not 0 < self.band_fraction < 0.5:
            raise ValueError(
                f"band_fraction must be in (0, 0.5), got {self.band_fraction}"
            )

    @property
    def side(self) -> float:
        return self.n * self.tau

    @property
    def zones_per_layer(self) -> int:
        return self.n * self.n

    @property
    def operational_layer(self) -> int:
        """Bottom layer; single-layer grids operate on layer 0."""
        return self.layers - 1


@dataclass(frozen=True, order=True)
class ZoneId:
    row: int
    col: int
    layer: int = 0

    def validate(self, g: GridSpec) -> "ZoneId":
        if not (0 <= self.row < g.n and 0 <= self.col < g.n):
            raise IndexOutOfRange(f"zone {self} outside {g.n}x{g.n} grid")
        if not 0 <= self.layer < g.layers:
            raise IndexOutOfRange(f"layer {self.layer} outside {g.layers} layers")
        return self


class TransferDirection(str, Enum):
    LR = "LR"
    RL = "RL"


@dataclass(frozen=True)
class TransferArea:
    """Capacity-1 buffer between two horizontally adjacent zones.

    ``index`` enumerates boundary pairs within a layer; a pair of areas
    (one per direction) exists for every horizontal adjacency.
    """

    index: int
    direction: TransferDirection
    left: ZoneId
    right: ZoneId

    @property
    def between(self) -> tuple[ZoneId, ZoneId]:
        return (self.left, self.right)


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    layer: int = 0


def zone_of_position(p: Position, g: GridSpec) -> ZoneId:
    """Zone whose half-open square [r*tau, (r+1)*tau) x [c*tau, (c+1)*tau)
    contains ``p``; the closing grid boundary belongs to the last zone."""
    if not (0 <= p.x <= g.side and 0 <= p.y <= g.side):
        raise OutOfBounds(f"position ({p.x}, {p.y}) outside {g.side}m grid")
    if not 0 <= p.layer < g.layers:
        raise OutOfBounds(f"layer {p.layer} outside {g.layers} layers")
    row = min(int(p.x // g.tau), g.n - 1)
    col = min(int(p.y // g.tau), g.n - 1)
    return ZoneId(row, col, p.layer)


def zone_center(z: ZoneId, g: GridSpec) -> Position:
    return Position((z.row + 0.5) * g.tau, (z.col + 0.5) * g.tau, z.layer)


def in_collision_band(p: Position, g: GridSpec) -> bool:
    """True iff ``p`` lies within band_fraction*tau of an interior zone
    boundary.  Grid-edge boundaries have no neighbor and never count."""
    if not (0 <= p.x <= g.side and 0 <= p.y <= g.side):
        raise OutOfBounds(f"position ({p.x}, {p.y}) outside {g.side}m grid")
    if g.n < 2:
        return False
    band = g.band_fraction * g.tau
    for coord in (p.x, p.y):
        k = round(coord / g.tau)
        if 1 <= k <= g.n - 1 and abs(coord - k * g.tau) < band:
            return True
    return False


def drone_zone_value(a: int, b: int, n: int) -> int:
    """Ordinal of cell (a, b) in the diagonal (zigzag) enumeration.

    Lower half (a+b < n) is the classic diagonal pairing k = T(a+b) + a;
    the upper half reflects through the grid center with constant n^2 - 1,
    which keeps the map a bijection onto [0, n^2).
    """
    if not (0 <= a < n and 0 <= b < n):
        raise IndexOutOfRange(f"cell ({a}, {b}) outside {n}x{n} grid")
    if a + b >= n:
        return (n * n - 1) - drone_zone_value(n - 1 - a, n - 1 - b, n)
    k = (a + b) * (a + b + 1) // 2
    return k + a


def diagonal_enumeration_oracle(n: int) -> list[tuple[int, int]]:
    """Cells diagonal by diagonal (d = a+b ascending, then a ascending).

    Independent oracle for the zigzag bijection; length n^2.
    """
    if n < 1:
        raise IndexOutOfRange(f"n must be >= 1, got {n}")
    cells = []
    for d in range(2 * n - 1):
        for a in range(n):
            b = d - a
            if 0 <= b < n:
                cells.append((a, b))
    return cells


def zone_of_ordinal(ordinal: int, g: GridSpec, layer: int = 0) -> ZoneId:
    """Inverse of drone_zone_value within one layer."""
    if not 0 <= ordinal < g.zones_per_layer:
        raise IndexOutOfRange(f"ordinal {ordinal} outside [0, {g.zones_per_layer})")
    a, b = _cells_of(g.n)[ordinal]
    return ZoneId(a, b, layer)


_CELL_CACHE: dict[int, list[tuple[int, int]]] = {}


def _cells_of(n: int) -> list[tuple[int, int]]:
    cells = _CELL_CACHE.get(n)
    if cells is None:
        cells = diagonal_enumeration_oracle(n)
        _CELL_CACHE[n] = cells
    return cells


def neighbors_of(z: ZoneId, g: GridSpec) -> set[ZoneId]:
    """4-neighborhood in the same layer plus vertical neighbors across
    adjacent layers, clipped at grid edges."""
    z.validate(g)
    out: set[ZoneId] = set()
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        r, c = z.row + dr, z.col + dc
        if 0 <= r < g.n and 0 <= c < g.n:
            out.add(ZoneId(r, c, z.layer))
    for dl in (-1, 1):
        layer = z.layer + dl
        if 0 <= layer < g.layers:
            out.add(ZoneId(z.row, z.col, layer))
    return out


def transfer_areas(g: GridSpec) -> list[TransferArea]:
    """All transfer areas of the grid: one LR/RL pair per horizontal
    adjacency (same row, consecutive columns) on every layer."""
    areas = []
    index = 0
    for layer in range(g.layers):
        for row in range(g.n):
            for col in range(g.n - 1):
                left = ZoneId(row, col, layer)
                right = ZoneId(row, col + 1, layer)
                areas.append(TransferArea(index, TransferDirection.LR, left, right))
                areas.append(TransferArea(index, TransferDirection.RL, left, right))
                index += 1
    return areas


def iter_zones(g: GridSpec, layer: int | None = None) -> Iterator[ZoneId]:
    layers = range(g.layers) if layer is None else (layer,)
    for lay in layers:
        for row in range(g.n):
            for col in range(g.n):
                yield ZoneId(row, col, lay)


def zone_distance(z1: ZoneId, z2: ZoneId) -> int:
    """Manhattan distance in cells, vertical steps included."""
    return abs(z1.row - z2.row) + abs(z1.col - z2.col) + abs(z1.layer - z2.layer)


def euclidean(p1: Position, p2: Position) -> float:
    return math.hypot(p1.x - p2.x, p1.y - p2.y)
