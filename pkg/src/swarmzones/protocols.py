"""Collision-free zone-transfer protocols over an occupancy ledger.

Five movement strategies: fixed-area swap through capacity-1 transfer
areas, zigzag circuit along the diagonal ordinals, parallel row sweep,
multi-layer transfer through the layer above, and hybrid multi-level
plans.  The safety contract is the ledger invariant: at most one drone
per cell and exactly one cell per drone, checked after every single-cell
move.  Every protocol step moves a drone at most one cell per tick.

Deadlock handling: requests are processed in a global acquisition order
(lower origin ordinal first) and any request older than ``timeout``
ticks without completing is aborted and may be requeued by the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .fleet import Drone
from .grid import (
    GridSpec,
    TransferArea,
    TransferDirection,
    ZoneId,
    drone_zone_value,
    in_collision_band,
    neighbors_of,
    transfer_areas,
    zone_of_ordinal,
    zone_of_position,
)

Cell = ZoneId | TransferArea


class ProtocolError(Exception):
    pass


class NotAdjacent(ProtocolError):
    pass


class RowConflict(ProtocolError):
    pass


class LayerOverlap(ProtocolError):
    pass


class MissingTransferLayer(ProtocolError):
    pass


class CollisionError(ProtocolError):
    """A move would violate the occupancy invariant."""


class Strategy(str, Enum):
    FIXED_AREA = "FixedArea"
    ZIGZAG = "Zigzag"
    PARALLEL = "Parallel"
    MULTI_LAYER = "MultiLayer"
    HYBRID = "Hybrid"


class SwapStatus(str, Enum):
    PENDING = "Pending"
    IN_PROGRESS = "InProgress"
    DONE = "Done"
    ABORTED = "Aborted"


_STATUS_RANK = {
    SwapStatus.PENDING: 0,
    SwapStatus.IN_PROGRESS: 1,
    SwapStatus.DONE: 2,
    SwapStatus.ABORTED: 2,
}


def is_adjacent_cells(a: Cell, b: Cell) -> bool:
    """Adjacency for protocol moves: 4-neighborhood in-layer, vertical
    across layers, and zone <-> transfer-area links of one boundary."""
    if isinstance(a, ZoneId) and isinstance(b, ZoneId):
        return (
            abs(a.row - b.row) + abs(a.col - b.col) + abs(a.layer - b.layer)
        ) == 1
    if isinstance(a, TransferArea) and isinstance(b, TransferArea):
        return False
    zone, area = (a, b) if isinstance(a, ZoneId) else (b, a)
    return zone in area.between


class OccupancyLedger:
    """Cell -> drone occupancy map; the collision-safety authority.

    Every mutation re-checks the core invariant (<= 1 drone per cell,
    exactly 1 cell per drone) and records the transition.
    """

    def __init__(self) -> None:
        self._cell_of: dict[int, Cell] = {}
        self._occupant: dict[Cell, int] = {}
        self.transitions: list[tuple[int, Cell | None, Cell]] = []

    def occupant(self, cell: Cell) -> int | None:
        return self._occupant.get(cell)

    def is_free(self, cell: Cell) -> bool:
        return cell not in self._occupant

    def cell_of(self, drone: int) -> Cell | None:
        return self._cell_of.get(drone)

    def place(self, drone: int, cell: Cell) -> None:
        if drone in self._cell_of:
            raise CollisionError(f"drone {drone} already placed at {self._cell_of[drone]}")
        if cell in self._occupant:
            raise CollisionError(f"cell {cell} already holds drone {self._occupant[cell]}")
        self._cell_of[drone] = cell
        self._occupant[cell] = drone
        self.transitions.append((drone, None, cell))

    def move(self, drone: int, to_cell: Cell) -> None:
        here = self._cell_of.get(drone)
        if here is None:
            raise CollisionError(f"drone {drone} is not on the ledger")
        if to_cell in self._occupant:
            raise CollisionError(
                f"cell {to_cell} already holds drone {self._occupant[to_cell]}"
            )
        del self._occupant[here]
        self._cell_of[drone] = to_cell
        self._occupant[to_cell] = drone
        self.transitions.append((drone, here, to_cell))

    def remove(self, drone: int) -> None:
        here = self._cell_of.pop(drone, None)
        if here is not None:
            del self._occupant[here]

    def drones(self) -> dict[int, Cell]:
        return dict(self._cell_of)

    def check_invariants(self) -> None:
        assert len(self._cell_of) == len(self._occupant), "cell/drone maps diverged"
        for drone, cell in self._cell_of.items():
            assert self._occupant.get(cell) == drone, f"drone {drone} lost cell {cell}"

    def copy(self) -> "OccupancyLedger":
        dup = OccupancyLedger()
        dup._cell_of = dict(self._cell_of)
        dup._occupant = dict(self._occupant)
        return dup


class TransferAreaIndex:
    """Lookup of the LR/RL area pair joining two horizontally adjacent zones."""

    def __init__(self, g: GridSpec) -> None:
        self.g = g
        self._by_pair: dict[tuple[ZoneId, ZoneId], dict[TransferDirection, TransferArea]] = {}
        for area in transfer_areas(g):
            self._by_pair.setdefault((area.left, area.right), {})[area.direction] = area

    def pair_for(self, z1: ZoneId, z2: ZoneId) -> dict[TransferDirection, TransferArea]:
        left, right = (z1, z2) if z1.col < z2.col else (z2, z1)
        pair = self._by_pair.get((left, right))
        if pair is None:
            raise NotAdjacent(f"no transfer areas between {z1} and {z2}")
        return pair


@dataclass
class SwapRequest:
    """A zone-transfer request; status moves Pending -> InProgress -> Done|Aborted."""

    requester: int
    from_zone: ZoneId
    to_zone: ZoneId
    strategy: Strategy
    issued_at: int = 0
    timeout: int = 20
    status: SwapStatus = SwapStatus.PENDING

    # protocol-internal progress
    phase: str = field(default="init", repr=False)
    partner: int | None = field(default=None, repr=False)
    bay: TransferArea | None = field(default=None, repr=False)
    bay_zone: ZoneId | None = field(default=None, repr=False)
    path_req: list[ZoneId] = field(default_factory=list, repr=False)
    path_par: list[ZoneId] = field(default_factory=list, repr=False)
    ticks_taken: int = field(default=0, repr=False)
    layers_visited: set[int] = field(default_factory=set, repr=False)

    def __post_init__(self) -> None:
        if self.from_zone == self.to_zone:
            raise ValueError("swap endpoints must differ")
        if self.from_zone.layer != self.to_zone.layer:
            raise ValueError("swap endpoints must share a layer")

    def set_status(self, status: SwapStatus) -> None:
        if _STATUS_RANK[status] < _STATUS_RANK[self.status]:
            raise ProtocolError(f"status cannot regress {self.status} -> {status}")
        self.status = status

    @property
    def active(self) -> bool:
        return self.status in (SwapStatus.PENDING, SwapStatus.IN_PROGRESS)

    def expired(self, tick: int) -> bool:
        return self.active and (tick - self.issued_at) >= self.timeout


# --------------------------------------------------------------------------
# Fixed-area swap (single layer)
# --------------------------------------------------------------------------

def fixed_area_swap_step(
    req: SwapRequest,
    ledger: OccupancyLedger,
    g: GridSpec,
    areas: TransferAreaIndex | None = None,
) -> tuple[OccupancyLedger, SwapStatus]:
    """One tick of the fixed-area protocol between horizontally adjacent
    zones.  Direct path when both transfer areas are free; otherwise the
    requester parks in the free area and waits for the blocked one to
    clear before the exchange completes."""
    if not req.active:
        return ledger, req.status
    areas = areas or TransferAreaIndex(g)
    zf, zt = req.from_zone, req.to_zone
    if zf.row != zt.row or abs(zf.col - zt.col) != 1 or zf.layer != zt.layer:
        raise NotAdjacent(f"{zf} and {zt} are not horizontally adjacent")
    pair = areas.pair_for(zf, zt)
    going_right = zf.col < zt.col
    own_dir = TransferDirection.LR if going_right else TransferDirection.RL
    own_area, other_area = pair[own_dir], pair[_flip(own_dir)]

    req.ticks_taken += 1

    if req.phase == "init":
        if ledger.cell_of(req.requester) != zf:
            return ledger, req.status
        req.partner = ledger.occupant(zt)
        if req.partner is None:
            # move to an empty neighbor through the matching transfer area
            if ledger.is_free(own_area):
                ledger.move(req.requester, own_area)
                req.set_status(SwapStatus.IN_PROGRESS)
                req.phase = "solo_exit"
            return ledger, req.status
        own_free, other_free = ledger.is_free(own_area), ledger.is_free(other_area)
        if own_free and other_free:
            ledger.move(req.requester, own_area)
            ledger.move(req.partner, other_area)
            req.set_status(SwapStatus.IN_PROGRESS)
            req.phase = "crossing"
        elif other_free:
            # own area blocked by a third drone: park in the opposite area
            ledger.move(req.requester, other_area)
            req.set_status(SwapStatus.IN_PROGRESS)
            req.bay = other_area
            req.phase = "parked"
        elif own_free:
            ledger.move(req.requester, own_area)
            req.set_status(SwapStatus.IN_PROGRESS)
            req.bay = own_area
            req.phase = "parked"
        # both areas occupied: keep waiting (timeout applies)
        return ledger, req.status

    if req.phase == "crossing":
        if ledger.cell_of(req.requester) == own_area and ledger.is_free(zt):
            ledger.move(req.requester, zt)
        if ledger.cell_of(req.partner) == other_area and ledger.is_free(zf):
            ledger.move(req.partner, zf)
        if ledger.cell_of(req.requester) == zt and ledger.cell_of(req.partner) == zf:
            req.set_status(SwapStatus.DONE)
        return ledger, req.status

    if req.phase == "parked":
        blocked = own_area if req.bay is other_area else other_area
        if ledger.is_free(blocked):
            if req.partner is not None and ledger.cell_of(req.partner) == zt and ledger.is_free(zf):
                ledger.move(req.partner, zf)
                req.phase = "bay_exit"
        return ledger, req.status

    if req.phase == "bay_exit":
        if ledger.cell_of(req.requester) == req.bay and ledger.is_free(zt):
            ledger.move(req.requester, zt)
            req.set_status(SwapStatus.DONE)
        return ledger, req.status

    if req.phase == "solo_exit":
        if ledger.cell_of(req.requester) == own_area and ledger.is_free(zt):
            ledger.move(req.requester, zt)
            req.set_status(SwapStatus.DONE)
        return ledger, req.status

    raise ProtocolError(f"unknown fixed-area phase {req.phase}")


def _flip(d: TransferDirection) -> TransferDirection:
    return TransferDirection.RL if d is TransferDirection.LR else TransferDirection.LR


# --------------------------------------------------------------------------
# Zigzag route (single layer)
# --------------------------------------------------------------------------

def zigzag_route(current: ZoneId, g: GridSpec) -> ZoneId:
    """Next zone on the zigzag circuit: ordinal + 1; the last ordinal
    wraps back to the entry zone (ordinal 0)."""
    current.validate(g)
    ordinal = drone_zone_value(current.row, current.col, g.n)
    nxt = (ordinal + 1) % g.zones_per_layer
    return zone_of_ordinal(nxt, g, current.layer)


# --------------------------------------------------------------------------
# Parallel sweep (single layer)
# --------------------------------------------------------------------------

def parallel_sweep_step(
    row_assignments: list[int], col: int, l: int, g: GridSpec, layer: int = 0
) -> list[tuple[int, ZoneId]]:
    """Advance every row's drone to column ``col`` simultaneously.  The
    stagger offset ``l`` cyclically rotates which drone serves which row,
    so row r is served by drone ``row_assignments[(r + l) % k]``."""
    if len(set(row_assignments)) != len(row_assignments):
        raise RowConflict("a drone appears on more than one row")
    if len(row_assignments) > g.n:
        raise RowConflict(f"{len(row_assignments)} drones for {g.n} rows")
    if not 0 <= col < g.n:
        raise ProtocolError(f"column {col} outside grid")
    k = len(row_assignments)
    return [
        (row_assignments[(r + l) % k], ZoneId(r, col, layer))
        for r in range(k)
    ]


class ParallelSweepRun:
    """Ledger-backed parallel sweep: one drone per row, columns advance
    together, the stagger offset rotates after each full pass.

    The rotation shifts every drone up one row; the displaced top drone
    detours through the free neighboring column down to the bottom row,
    so the cyclic reassignment never needs a move into an occupied cell.
    """

    def __init__(
        self,
        drone_ids: list[int],
        g: GridSpec,
        ledger: OccupancyLedger,
        layer: int = 0,
    ) -> None:
        if len(set(drone_ids)) != len(drone_ids):
            raise RowConflict("a drone appears on more than one row")
        if len(drone_ids) > g.n:
            raise RowConflict(f"{len(drone_ids)} drones for {g.n} rows")
        self.drone_ids = list(drone_ids)
        self.g = g
        self.layer = layer
        self.ledger = ledger
        self.col = 0
        self.l = 0
        self._paths: dict[int, list[ZoneId]] | None = None
        for r, drone in enumerate(drone_ids):
            target = ZoneId(r, 0, layer)
            if ledger.cell_of(drone) is None:
                ledger.place(drone, target)

    def tick(self) -> list[tuple[int, ZoneId]]:
        if self._paths is not None:
            return self._advance_rotation()
        next_col = self.col + 1
        if next_col >= self.g.n:
            cells = [self.ledger.cell_of(d) for d in self.drone_ids]
            if any(
                not isinstance(c, ZoneId) or c.col != self.col for c in cells
            ) or len({c.row for c in cells}) != len(cells):
                return []  # crew displaced by interference: hold position
            self._paths = self._rotation_paths()
            return self._advance_rotation()
        moved = []
        for drone in self.drone_ids:
            here = self.ledger.cell_of(drone)
            if isinstance(here, ZoneId) and here.col != next_col:
                step = _step_toward(here, ZoneId(here.row, next_col, self.layer))
                if step is not None and self.ledger.is_free(step):
                    self.ledger.move(drone, step)
                    moved.append((drone, step))
        if all(
            isinstance(self.ledger.cell_of(d), ZoneId)
            and self.ledger.cell_of(d).col == next_col  # type: ignore[union-attr]
            for d in self.drone_ids
        ):
            self.col = next_col
        return moved

    def _rotation_paths(self) -> dict[int, list[ZoneId]]:
        """Cell scripts from column n-1 back to column 0 with rows shifted
        up cyclically (row r served by the next drone in the ring)."""
        k = len(self.drone_ids)
        n, lay = self.g.n, self.layer
        if k == 1 or n == 1:
            return {d: [] for d in self.drone_ids}
        by_row = {}
        for drone in self.drone_ids:
            cell = self.ledger.cell_of(drone)
            by_row[cell.row] = drone  # type: ignore[union-attr]
        paths: dict[int, list[ZoneId]] = {}
        side = n - 2
        top = by_row[0]
        # top drone detours through the free neighbor column to the bottom row
        paths[top] = (
            [ZoneId(r, side, lay) for r in range(0, k)]
            + [ZoneId(k - 1, c, lay) for c in range(side - 1, -1, -1)]
        )
        for r in range(1, k):
            drone = by_row[r]
            paths[drone] = [ZoneId(r - 1, n - 1, lay)] + [
                ZoneId(r - 1, c, lay) for c in range(n - 2, -1, -1)
            ]
        return paths

    def _advance_rotation(self) -> list[tuple[int, ZoneId]]:
        assert self._paths is not None
        moved = []
        for drone in self.drone_ids:
            path = self._paths.get(drone, [])
            if not path:
                continue
            here = self.ledger.cell_of(drone)
            nxt = path[0]
            if here is None or not is_adjacent_cells(here, nxt):
                continue  # displaced by outside interference: hold
            if self.ledger.is_free(nxt):
                self.ledger.move(drone, nxt)
                path.pop(0)
                moved.append((drone, nxt))
        if all(not p for p in self._paths.values()):
            self._paths = None
            self.col = 0
            self.l += 1
        return moved


def _step_toward(here: ZoneId, target: ZoneId) -> ZoneId | None:
    if here.col != target.col:
        step = 1 if target.col > here.col else -1
        return ZoneId(here.row, here.col + step, here.layer)
    if here.row != target.row:
        step = 1 if target.row > here.row else -1
        return ZoneId(here.row + step, here.col, here.layer)
    return None


# --------------------------------------------------------------------------
# Multi-layer transfer
# --------------------------------------------------------------------------

def multilayer_swap(
    req: SwapRequest, ledger: OccupancyLedger, g: GridSpec,
    areas: TransferAreaIndex | None = None,
) -> tuple[OccupancyLedger, SwapStatus]:
    """One tick of the multi-layer protocol on operation layer m with
    transfer layer m-1.

    Adjacent swap: both drones ascend, the requester sidesteps on the
    transfer layer so the partner can cross and descend, then the
    requester follows into the exchanged zone.  Move-to-empty: up,
    across, down (first requester wins a contended target).  Non-adjacent
    swap: both ascend and route toward each other's zone on the transfer
    layer, passing through the fixed-area buffers of that layer when
    they meet head-on."""
    if not req.active:
        return ledger, req.status
    if g.layers < 2:
        raise MissingTransferLayer("multi-layer transfer needs at least 2 layers")
    m = req.from_zone.layer
    if m < 1:
        raise MissingTransferLayer(f"operation layer {m} has no transfer layer above")
    areas = areas or TransferAreaIndex(g)
    t = m - 1
    zf, zt = req.from_zone, req.to_zone
    zf_t = ZoneId(zf.row, zf.col, t)
    zt_t = ZoneId(zt.row, zt.col, t)
    adjacent = abs(zf.row - zt.row) + abs(zf.col - zt.col) == 1

    req.ticks_taken += 1

    if req.phase == "init":
        if ledger.cell_of(req.requester) != zf:
            return ledger, req.status
        req.partner = ledger.occupant(zt)
        if req.partner is None:
            req.phase = "mv_up"
        elif adjacent:
            req.phase = "adj_up"
        else:
            req.phase = "far_up"
        # fall through into the first movement phase this same tick

    if req.phase == "mv_up":
        if ledger.cell_of(req.requester) == zf and ledger.is_free(zf_t):
            ledger.move(req.requester, zf_t)
            req.layers_visited.add(t)
            req.set_status(SwapStatus.IN_PROGRESS)
            req.path_req = _manhattan_path(zf_t, zt_t)[1:]
            req.phase = "mv_across"
        return ledger, req.status  # transfer layer occupied: retry next tick

    if req.phase == "mv_across":
        if req.path_req:
            here = ledger.cell_of(req.requester)
            nxt = req.path_req[0]
            if here is not None and is_adjacent_cells(here, nxt) and ledger.is_free(nxt):
                ledger.move(req.requester, nxt)
                req.path_req.pop(0)
            return ledger, req.status
        req.phase = "mv_down"
        return ledger, req.status

    if req.phase == "mv_down":
        if ledger.cell_of(req.requester) == zt_t and ledger.is_free(zt):
            ledger.move(req.requester, zt)
            req.set_status(SwapStatus.DONE)
        return ledger, req.status

    if req.phase == "adj_up":
        if (
            ledger.cell_of(req.requester) == zf
            and ledger.cell_of(req.partner) == zt
            and ledger.is_free(zf_t)
            and ledger.is_free(zt_t)
        ):
            ledger.move(req.requester, zf_t)
            ledger.move(req.partner, zt_t)
            req.layers_visited.add(t)
            req.set_status(SwapStatus.IN_PROGRESS)
            req.phase = "adj_aside"
        return ledger, req.status

    if req.phase == "adj_aside":
        bay = _free_neighbor(zf_t, zt_t, g, ledger)
        if ledger.cell_of(req.requester) == zf_t and bay is not None:
            ledger.move(req.requester, bay)
            req.bay_zone = bay
            req.phase = "adj_partner_across"
        return ledger, req.status

    if req.phase == "adj_partner_across":
        if ledger.cell_of(req.partner) == zt_t and ledger.is_free(zf_t):
            ledger.move(req.partner, zf_t)
            req.phase = "adj_partner_down"
        return ledger, req.status

    if req.phase == "adj_partner_down":
        if ledger.cell_of(req.partner) == zf_t and ledger.is_free(zf):
            ledger.move(req.partner, zf)
            if ledger.cell_of(req.requester) == req.bay_zone and ledger.is_free(zf_t):
                ledger.move(req.requester, zf_t)
                req.phase = "adj_req_across"
        return ledger, req.status

    if req.phase == "adj_req_across":
        if ledger.cell_of(req.requester) == zf_t and ledger.is_free(zt_t):
            ledger.move(req.requester, zt_t)
            req.phase = "adj_req_down"
        return ledger, req.status

    if req.phase == "adj_req_down":
        if ledger.cell_of(req.requester) == zt_t and ledger.is_free(zt):
            ledger.move(req.requester, zt)
            req.set_status(SwapStatus.DONE)
        return ledger, req.status

    if req.phase == "far_up":
        if (
            ledger.cell_of(req.requester) == zf
            and ledger.cell_of(req.partner) == zt
            and ledger.is_free(zf_t)
            and ledger.is_free(zt_t)
        ):
            ledger.move(req.requester, zf_t)
            ledger.move(req.partner, zt_t)
            req.layers_visited.add(t)
            req.set_status(SwapStatus.IN_PROGRESS)
            path_a, path_b = _disjoint_paths(zf_t, zt_t, g)
            req.path_req = path_a[1:]
            req.path_par = path_b[1:]
            req.phase = "far_route"
        return ledger, req.status

    if req.phase == "far_route":
        _route_step(req, ledger, areas, "requester")
        _route_step(req, ledger, areas, "partner")
        if ledger.cell_of(req.requester) == zt_t and not req.path_req and ledger.is_free(zt):
            ledger.move(req.requester, zt)
        if ledger.cell_of(req.partner) == zf_t and not req.path_par and ledger.is_free(zf):
            ledger.move(req.partner, zf)
        if ledger.cell_of(req.requester) == zt and ledger.cell_of(req.partner) == zf:
            req.set_status(SwapStatus.DONE)
        return ledger, req.status

    raise ProtocolError(f"unknown multi-layer phase {req.phase}")


def _manhattan_path(start: ZoneId, goal: ZoneId) -> list[ZoneId]:
    """Walk along the start row to the goal column, then along that
    column; start and goal included."""
    path = [start]
    r, c = start.row, start.col
    step = 1 if goal.col > c else -1
    while c != goal.col:
        c += step
        path.append(ZoneId(r, c, start.layer))
    step = 1 if goal.row > r else -1
    while r != goal.row:
        r += step
        path.append(ZoneId(r, c, start.layer))
    return path


def _disjoint_paths(a: ZoneId, b: ZoneId, g: GridSpec) -> tuple[list[ZoneId], list[ZoneId]]:
    """Transfer-layer routes a->b and b->a with disjoint interiors where
    the grid allows; the shared-row case is left to head-on passing."""
    if a.row == b.row:
        return _manhattan_path(a, b), _manhattan_path(b, a)
    if a.col == b.col:
        # detour one drone through a neighboring column
        c_alt = a.col + 1 if a.col + 1 < g.n else a.col - 1
        via1 = ZoneId(a.row, c_alt, a.layer)
        via2 = ZoneId(b.row, c_alt, a.layer)
        path_a = [a] + _manhattan_path(via1, via2) + [b]
        return path_a, _manhattan_path(b, a)
    # row-first for both: interiors cannot cross
    return _manhattan_path(a, b), _manhattan_path(b, a)


def _free_neighbor(
    of: ZoneId, avoid: ZoneId, g: GridSpec, ledger: OccupancyLedger
) -> ZoneId | None:
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        r, c = of.row + dr, of.col + dc
        if not (0 <= r < g.n and 0 <= c < g.n):
            continue
        cand = ZoneId(r, c, of.layer)
        if cand != avoid and ledger.is_free(cand):
            return cand
    return None


def _route_step(
    req: SwapRequest, ledger: OccupancyLedger, areas: TransferAreaIndex, who: str
) -> None:
    """Advance one drone of a routed pair a single cell along its
    remaining path, passing head-on encounters through transfer buffers."""
    drone = req.requester if who == "requester" else req.partner
    other = req.partner if who == "requester" else req.requester
    path = req.path_req if who == "requester" else req.path_par
    if drone is None or not path:
        return
    here = ledger.cell_of(drone)
    nxt = path[0]

    if isinstance(here, TransferArea):
        # inside a pass buffer: exit into the facing cell once it clears
        if is_adjacent_cells(here, nxt) and ledger.is_free(nxt):
            ledger.move(drone, nxt)
            path.pop(0)
        return

    if not isinstance(here, ZoneId):
        return
    if not is_adjacent_cells(here, nxt):
        return  # displaced by interference: stall until timeout
    if ledger.is_free(nxt):
        ledger.move(drone, nxt)
        path.pop(0)
        return
    # head-on with the routed partner on a shared row: duck into a buffer
    other_path = req.path_par if who == "requester" else req.path_req
    facing = (
        ledger.occupant(nxt) == other
        and other_path
        and other_path[0] == here
        and here.row == nxt.row
    )
    if facing:
        pair = areas.pair_for(here, nxt)
        direction = TransferDirection.LR if here.col < nxt.col else TransferDirection.RL
        buffer_area = pair[direction]
        if ledger.is_free(buffer_area):
            ledger.move(drone, buffer_area)


# --------------------------------------------------------------------------
# Hybrid multi-level plans
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HybridPlan:
    levels: tuple[tuple[int, Strategy], ...]


def hybrid_plan(levels: list[tuple[int, Strategy]], g: GridSpec) -> HybridPlan:
    """Validate a multi-level strategy assignment: one strategy per layer,
    and every MultiLayer level needs the layer above it free for crossings."""
    seen: set[int] = set()
    for layer, _strategy in levels:
        if layer in seen:
            raise LayerOverlap(f"layer {layer} assigned twice")
        if not 0 <= layer < g.layers:
            raise ProtocolError(f"layer {layer} outside grid with {g.layers} layers")
        seen.add(layer)
    for layer, strategy in levels:
        if strategy is Strategy.MULTI_LAYER:
            above = layer - 1
            if above < 0 or above in seen:
                raise MissingTransferLayer(
                    f"MultiLayer level at layer {layer} needs a free transfer layer above"
                )
    return HybridPlan(levels=tuple(levels))


# --------------------------------------------------------------------------
# Collision-band signaling
# --------------------------------------------------------------------------

def band_signal(d: Drone, g: GridSpec, ledger: OccupancyLedger) -> set[int]:
    """Drones in neighboring zones that must hold for one tick because
    ``d`` entered the collision-feasibility band; empty when the drone is
    interior or the boundary has no neighbor."""
    if not in_collision_band(d.position, g):
        return set()
    zone = zone_of_position(d.position, g)
    notified = set()
    for nb in neighbors_of(zone, g):
        occupant = ledger.occupant(nb)
        if occupant is not None and occupant != d.id:
            notified.add(occupant)
    return notified


# --------------------------------------------------------------------------
# Arena: drives many requests tick by tick
# --------------------------------------------------------------------------

class ProtocolArena:
    """Single-threaded protocol driver used by the simulator and fuzzer.

    Requests are processed in global acquisition order (origin ordinal,
    then issue tick, then requester id); expired requests are aborted.
    """

    def __init__(self, g: GridSpec, ledger: OccupancyLedger | None = None,
                 timeout: int = 20) -> None:
        self.g = g
        self.ledger = ledger if ledger is not None else OccupancyLedger()
        self.areas = TransferAreaIndex(g)
        self.timeout = timeout
        self.requests: list[SwapRequest] = []
        self.tick_count = 0
        self.steps_executed = 0
        self.completed_count = 0
        self.aborted: list[SwapRequest] = []

    def submit(self, req: SwapRequest) -> SwapRequest:
        req.timeout = self.timeout
        self.requests.append(req)
        return req

    def busy_drones(self) -> set[int]:
        out: set[int] = set()
        for req in self.requests:
            if req.active:
                out.add(req.requester)
                if req.partner is not None:
                    out.add(req.partner)
        return out

    def _order_key(self, req: SwapRequest) -> tuple[int, int, int]:
        ordinal = drone_zone_value(req.from_zone.row, req.from_zone.col, self.g.n)
        return (ordinal, req.issued_at, req.requester)

    def tick(self) -> None:
        self.tick_count += 1
        self._resolve_target_contention()
        for req in sorted(self.requests, key=self._order_key):
            if not req.active:
                continue
            if req.expired(self.tick_count):
                req.set_status(SwapStatus.ABORTED)
                self.aborted.append(req)
                continue
            if req.strategy is Strategy.FIXED_AREA:
                fixed_area_swap_step(req, self.ledger, self.g, self.areas)
            elif req.strategy is Strategy.MULTI_LAYER:
                multilayer_swap(req, self.ledger, self.g, self.areas)
            else:
                raise ProtocolError(f"arena cannot drive strategy {req.strategy}")
            self.steps_executed += 1
            self.ledger.check_invariants()
        self.completed_count += sum(
            1 for r in self.requests if r.status is SwapStatus.DONE
        )
        self.requests = [r for r in self.requests if r.active]
        self._recover_stranded()
        self.ledger.check_invariants()

    def _recover_stranded(self) -> None:
        """Move drones abandoned inside a transfer buffer by an aborted
        request back into an adjacent free zone, one move per tick."""
        busy = self.busy_drones()
        for drone, cell in sorted(self.ledger.drones().items()):
            if drone in busy or not isinstance(cell, TransferArea):
                continue
            for zone in cell.between:
                if self.ledger.is_free(zone):
                    self.ledger.move(drone, zone)
                    break

    def _resolve_target_contention(self) -> None:
        """First-requester-wins on a contended empty target zone; ties
        broken by issue tick then drone id."""
        by_target: dict[ZoneId, list[SwapRequest]] = {}
        for req in self.requests:
            if (
                req.active
                and req.strategy is Strategy.MULTI_LAYER
                and req.phase in ("init", "mv_up")
                and self.ledger.occupant(req.to_zone) is None
            ):
                by_target.setdefault(req.to_zone, []).append(req)
        for _target, contenders in by_target.items():
            if len(contenders) < 2:
                continue
            contenders.sort(key=lambda r: (r.issued_at, r.requester))
            for loser in contenders[1:]:
                loser.set_status(SwapStatus.ABORTED)
                self.aborted.append(loser)
