"""Per-grid congestion verdicts: naive, free flow, trapped humans and macro-micro."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..core import GridId, GridPartition, Kinematics, Rect, Snapshot, Vec2, derive_kinematics
from ..instructions import Instruction, InstructionKind
from ..spatial import SpatialHash
from .grouping import Group, SubGroup, build_groups, same_direction, split_subgroups
from .params import DetectionParams


class Strategy(str, enum.Enum):
    NAIVE = "naive"
    FREE_FLOW = "freeflow"
    TRAPPED = "trapped"
    MACRO_MICRO = "macromicro"


class Cause(str, enum.Enum):
    DIRECTION = "direction-conflict"
    SPEED = "speed-conflict"


def in_grid(partition: GridPartition, grid: GridId, p: Vec2) -> bool:
    try:
        return partition.locate(p, grid.layer) == grid
    except ValueError:
        return False


def occupants(snapshot: Snapshot, partition: GridPartition, grid: GridId) -> list[int]:
    return list(snapshot.cell_members(partition, grid.layer).get(grid, ()))


# -- naive -------------------------------------------------------------------

@dataclass(frozen=True)
class NaiveVerdict:
    congested: bool
    count: int
    capacity: int


def capacity(area: float, density_max: float) -> int:
    return math.floor(area * density_max)


def detect_naive(snapshot: Snapshot, grid: GridId, density_max: float,
                 partition: GridPartition) -> NaiveVerdict:
    count = len(occupants(snapshot, partition, grid))
    cap = capacity(partition.area(grid), density_max)
    return NaiveVerdict(count > cap, count, cap)


# -- free flow ---------------------------------------------------------------

@dataclass(frozen=True)
class FlowCounter:
    grid: GridId
    entered: int
    left: int
    window: float

    def __post_init__(self) -> None:
        if self.entered < 0 or self.left < 0:
            raise ValueError("flow counts must be non-negative")
        if not self.window > 0:
            raise ValueError("flow window must be positive")


@dataclass(frozen=True)
class FlowVerdict:
    congested: bool
    entered: int
    left: int
    occupancy: int


def count_flow(partition: GridPartition, grid: GridId, earlier: Snapshot,
               later: Snapshot) -> FlowCounter:
    """Entries and exits of ``grid`` between two snapshots (pedestrians that
    left the field count as having left the grid)."""
    before = set(occupants(earlier, partition, grid))
    after = set(occupants(later, partition, grid))
    window = later.sim_time - earlier.sim_time
    return FlowCounter(grid, len(after - before), len(before - after), window if window > 0 else 1e-9)


def detect_free_flow(flow: FlowCounter, occupancy: int) -> FlowVerdict:
    if occupancy == 0:
        congested = False
    else:
        congested = not flow.left > flow.entered
    return FlowVerdict(congested, flow.entered, flow.left, occupancy)


# -- trapped humans ----------------------------------------------------------

@dataclass(frozen=True)
class TrappedVerdict:
    congested: bool
    trapped: tuple[int, ...]


def detect_trapped(snapshot: Snapshot, grid: GridId, min_neighbors: int, radius: float,
                   partition: GridPartition, index: SpatialHash | None = None) -> TrappedVerdict:
    """A pedestrian in the grid is trapped with strictly more than ``min_neighbors``
    others inside the closed disc of ``radius``."""
    if index is None:
        index = SpatialHash.from_pedestrians(snapshot.pedestrians, radius)
    trapped = []
    inside = set(occupants(snapshot, partition, grid))
    for p in snapshot.pedestrians:
        if p.id in inside:
            if len(index.query(p.position, radius, exclude=p.id)) > min_neighbors:
                trapped.append(p.id)
    return TrappedVerdict(bool(trapped), tuple(trapped))


# -- macro-micro -------------------------------------------------------------

@dataclass(frozen=True)
class Convergence:
    point: Vec2
    group_ids: tuple[int, ...]


def ray_intersection(ca: Vec2, ha: Vec2, cb: Vec2, hb: Vec2) -> tuple[float, float] | None:
    """Parameters (t, u) with ca + t*ha == cb + u*hb, or None for parallel rays."""
    cross = ha.cross(hb)
    if abs(cross) < 1e-12:
        return None
    d = cb - ca
    return d.cross(hb) / cross, d.cross(ha) / cross


def find_convergences(groups: Sequence[Group], theta_dir: float, radius: float,
                      horizon: float) -> list[Convergence]:
    """Clusters of heading-ray intersections that gather three or more groups
    with pairwise conflicting directions.

    Only pairs whose headings differ by more than ``theta_dir`` intersect, and
    the intersection must lie ahead of both groups within ``horizon``.
    """
    moving = [g for g in groups if g.mean_heading is not None]
    points: list[tuple[Vec2, int, int]] = []
    for i, a in enumerate(moving):
        for b in moving[i + 1:]:
            if same_direction(a.mean_heading, b.mean_heading, theta_dir):
                continue
            tu = ray_intersection(a.centroid, a.mean_heading, b.centroid, b.mean_heading)
            if tu is None:
                continue
            t, u = tu
            if 0.0 < t <= horizon and 0.0 < u <= horizon:
                points.append((a.centroid + a.mean_heading * t, a.id, b.id))
    heading = {g.id: g.mean_heading for g in moving}
    out: list[Convergence] = []
    seen: set[tuple[int, ...]] = set()
    for p, _, _ in points:
        cluster = [q for q in points if q[0].dist(p) <= radius]
        ids = sorted({q[1] for q in cluster} | {q[2] for q in cluster})
        if len(ids) < 3 or tuple(ids) in seen:
            continue
        if not _has_conflicting_triple(ids, heading, theta_dir):
            continue
        seen.add(tuple(ids))
        cx = sum(q[0].x for q in cluster) / len(cluster)
        cy = sum(q[0].y for q in cluster) / len(cluster)
        out.append(Convergence(Vec2(cx, cy), tuple(ids)))
    return out


def _has_conflicting_triple(ids, heading, theta) -> bool:
    n = len(ids)
    for i in range(n):
        for j in range(i + 1, n):
            if same_direction(heading[ids[i]], heading[ids[j]], theta):
                continue
            for k in range(j + 1, n):
                if (not same_direction(heading[ids[i]], heading[ids[k]], theta)
                        and not same_direction(heading[ids[j]], heading[ids[k]], theta)):
                    return True
    return False


@dataclass(frozen=True)
class MacroVerdict:
    congested: bool
    group_ids: tuple[int, ...] = ()
    point: Vec2 | None = None


def detect_macro(groups: Sequence[Group], region: Rect, radius: float, horizon: float,
                 theta_dir: float = math.radians(30.0),
                 convergences: Sequence[Convergence] | None = None) -> MacroVerdict:
    if convergences is None:
        convergences = find_convergences(groups, theta_dir, radius, horizon)
    for cv in convergences:
        if region.contains(cv.point):
            return MacroVerdict(True, cv.group_ids, cv.point)
    return MacroVerdict(False)


@dataclass(frozen=True)
class MicroVerdict:
    congested: bool
    front: SubGroup | None = None
    rear: SubGroup | None = None


def detect_micro(subgroups: Sequence[SubGroup], eps_speed: float = 0.2) -> MicroVerdict:
    """Rear sub-group faster than the one directly in front of it."""
    ranked = sorted(subgroups, key=lambda s: s.rank_along_heading)
    for front, rear in zip(ranked, ranked[1:]):
        if rear.mean_speed > front.mean_speed + eps_speed:
            return MicroVerdict(True, front, rear)
    return MicroVerdict(False)


@dataclass
class Analysis:
    """Everything macro-micro needs about one snapshot, computed once and shared
    read-only by all per-grid checks."""

    kinematics: dict[int, Kinematics]
    groups: list[Group]
    subgroups: dict[int, list[SubGroup]]
    convergences: list[Convergence]
    speed_conflicts: list[MicroVerdict]
    positions: dict[int, Vec2] = field(default_factory=dict)

    def group(self, gid: int) -> Group:
        return self.groups[gid]


def analyze(snapshot: Snapshot, params: DetectionParams, partition: GridPartition,
            kinematics: Mapping[int, Kinematics] | None = None) -> Analysis:
    kin = dict(kinematics) if kinematics is not None else derive_kinematics(snapshot)
    groups = build_groups(snapshot, kin, params.r_connect, params.theta_dir)
    subs = {}
    conflicts = []
    for g in groups:
        if g.mean_heading is None:
            continue
        parts = split_subgroups(g, snapshot, kin, params.eps_speed, params.r_connect)
        subs[g.id] = parts
        mv = detect_micro(parts, params.eps_speed)
        if mv.congested:
            conflicts.append(mv)
    convergences = find_convergences(groups, params.theta_dir, params.convergence_radius,
                                     params.horizon(partition.cell_size))
    return Analysis(kin, groups, subs, convergences, conflicts,
                    {p.id: p.position for p in snapshot.pedestrians})


@dataclass(frozen=True)
class Verdict:
    congested: bool
    cause: Cause | None = None
    converging_groups: tuple[int, ...] = ()
    convergence_point: Vec2 | None = None
    speed_conflict: MicroVerdict | None = None


def detect_macro_micro(snapshot: Snapshot, grid: GridId, params: DetectionParams,
                       partition: GridPartition, analysis: Analysis | None = None) -> Verdict:
    """Macro (three or more converging groups) or micro (speed inversion) test
    for one grid; direction conflicts take precedence for the cause."""
    if analysis is None:
        analysis = analyze(snapshot, params, partition)
    for cv in analysis.convergences:
        if in_grid(partition, grid, cv.point):
            return Verdict(True, Cause.DIRECTION, cv.group_ids, cv.point)
    for mv in analysis.speed_conflicts:
        members = mv.front.member_ids | mv.rear.member_ids
        if any(in_grid(partition, grid, analysis.positions[i]) for i in sorted(members)):
            return Verdict(True, Cause.SPEED, (mv.front.parent_group,), None, mv)
    return Verdict(False)


# -- vacancy and obedience -----------------------------------------------------

def is_vacant(area: GridId | Rect, snapshot: Snapshot, vacancy_density: float,
              partition: GridPartition | None = None, exclude: Iterable[int] = ()) -> bool:
    """Naive-style occupancy test: density strictly below ``vacancy_density``."""
    skip = set(exclude)
    if isinstance(area, Rect):
        rect = area
        count = sum(1 for p in snapshot.pedestrians
                    if p.id not in skip and rect.contains(p.position))
    else:
        if partition is None:
            raise ValueError("a partition is needed to test a grid id")
        rect = partition.rect(area)
        count = sum(1 for p in snapshot.pedestrians
                    if p.id not in skip and in_grid(partition, area, p.position))
    if rect.area <= 0:
        return False
    return count / rect.area < vacancy_density


def deviates(ped_position: Vec2, kin: Kinematics, inst: Instruction,
             params: DetectionParams) -> bool:
    if inst.kind is InstructionKind.WAIT:
        return kin.speed > params.tol_speed
    if inst.kind is InstructionKind.SLOW_DOWN:
        if inst.target_speed is None:
            return False
        return kin.speed > inst.target_speed + params.tol_speed
    spot = inst.spotlight
    if kin.speed > spot.speed + params.tol_speed:
        return True
    to_spot = spot.position - ped_position
    if to_spot.norm() <= params.follow_radius or kin.heading is None:
        return False
    cosang = kin.heading.dot(to_spot) / to_spot.norm()
    return cosang < math.cos(params.tol_angle)


def disobedience_fraction(snapshot: Snapshot, instructions: Iterable[Instruction],
                          params: DetectionParams,
                          kinematics: Mapping[int, Kinematics] | None = None) -> float:
    """Share of addressed pedestrians whose observed motion departs from what
    they were told; 0 when nobody is addressed."""
    kin = kinematics if kinematics is not None else derive_kinematics(snapshot)
    current: dict[int, Instruction] = {}
    for inst in sorted(instructions, key=lambda i: i.issue_tick):
        for pid in inst.addressed:
            current[pid] = inst
    positions = {p.id: p.position for p in snapshot.pedestrians}
    addressed = [pid for pid in sorted(current) if pid in positions]
    if not addressed:
        return 0.0
    bad = sum(1 for pid in addressed
              if deviates(positions[pid], kin[pid], current[pid], params))
    return bad / len(addressed)
