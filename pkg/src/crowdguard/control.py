"""Congestion control by a flying spotlight agent.

The agent either asks a fast rear sub-group to slow down, or resolves a
direction conflict one group at a time: every other group is asked to wait
while the chosen group follows the spotlight out of the congested area,
straight ahead when there is room in front of it and otherwise around a
semicircle spanning the congested humans.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

from .core import FieldConfig, GridId, GridPartition, Rect, Snapshot, Vec2, derive_kinematics
from .detection import (
    Analysis,
    Cause,
    CongestedRegion,
    DetectionParams,
    Group,
    SubGroup,
    analyze,
    detect_macro_micro,
    detect_micro,
    disobedience_fraction,
    find_congested_region,
    is_vacant,
    split_subgroups,
)
from .detection.grouping import centroid_of
from .instructions import Instruction, InstructionKind, Spotlight

__all__ = [
    "Case",
    "CCAState",
    "Classification",
    "ControlParams",
    "DegenerateRegion",
    "EscalationMonitor",
    "Instruction",
    "InstructionKind",
    "InvalidRegion",
    "NoVacantFront",
    "Phase",
    "PoliceRequest",
    "RegionController",
    "ResolutionOutcome",
    "SemicirclePath",
    "cca_tick",
    "classify_case",
    "escalate",
    "farthest_pair",
    "plan_semicircle",
    "plan_straight_lead",
    "resolve_region",
]


class InvalidRegion(ValueError):
    pass


class DegenerateRegion(ValueError):
    pass


class NoVacantFront(ValueError):
    pass


@dataclass(frozen=True)
class ControlParams:
    slow_factor: float = 0.5
    spotlight_max: float = 1.0
    spotlight_fraction: float = 0.8
    cca_speed: float = 2.0
    leash: float = 2.5
    probe_size: float = 2.0
    probe_clearance: float = 0.5
    exit_margin: float = 1.0
    arc_clearance: float = 1.0
    arc_step: float = math.radians(10.0)
    confirm_ticks: int = 10
    escalation_threshold: float = 0.3
    debounce_ticks: int = 20


class Case(str, enum.Enum):
    I = "CaseI"
    II = "CaseII"
    III = "CaseIII"


class Phase(str, enum.Enum):
    IDLE = "Idle"
    SLOWING = "SlowingSubgroup"
    LEADING_STRAIGHT = "LeadingStraight"
    LEADING_ARC = "LeadingArc"
    RETURNING = "Returning"


@dataclass(frozen=True)
class Classification:
    case: Case
    group: Group | None = None


# -- geometry ------------------------------------------------------------------

def _refresh(group: Group, positions: Mapping[int, Vec2]) -> Group | None:
    """Same party (members, intended heading) with its current centroid."""
    present = sorted(i for i in group.member_ids if i in positions)
    if not present:
        return None
    return replace(group, member_ids=frozenset(present),
                   centroid=centroid_of(positions[i] for i in present))


def front_probe(group: Group, positions: Mapping[int, Vec2], params: ControlParams) -> Rect:
    """Square just ahead of the group's leading member."""
    h = group.mean_heading
    lead = max((positions[i] for i in sorted(group.member_ids)), key=lambda p: p.dot(h))
    c = lead + h * (params.probe_clearance + params.probe_size / 2)
    return Rect.around(c, params.probe_size / 2)


def front_vacant(group: Group, snapshot: Snapshot, dparams: DetectionParams,
                 params: ControlParams) -> bool:
    positions = {p.id: p.position for p in snapshot.pedestrians}
    probe = front_probe(group, positions, params)
    return is_vacant(probe, snapshot, dparams.vacancy_density, exclude=group.member_ids)


def classify_case(region: CongestedRegion, groups: Sequence[Group],
                  subgroups: Mapping[int, Sequence[SubGroup]] | None,
                  vacant: Callable[[Group], bool]) -> Classification:
    """Pick the control case for a congested region.

    Speed conflicts without a direction conflict are case I. Otherwise the
    smallest group with room ahead is led straight (case II), and failing
    that the smallest group is detoured (case III).
    """
    if region.cause is Cause.SPEED:
        parent = region.speed_pair[1].parent_group if region.speed_pair else None
        match = [g for g in groups if g.id == parent]
        return Classification(Case.I, match[0] if match else None)
    moving = [g for g in groups if g.mean_heading is not None]
    if not moving:
        raise InvalidRegion(f"region {region.id} has no member groups")
    ordered = sorted(moving, key=lambda g: (g.size, g.id))
    for g in ordered:
        if vacant(g):
            return Classification(Case.II, g)
    return Classification(Case.III, ordered[0])


def farthest_pair(members: Mapping[int, Vec2] | Iterable[tuple[int, Vec2]]) -> tuple[int, int, float]:
    """Farthest pair by Euclidean distance; ties go to the lexicographically
    smallest (lower id, higher id) pair. Returns (id_a, id_b, squared distance).

    Only convex-hull vertices can be endpoints, so the quadratic search runs
    over the hull (collinear points kept) rather than every member.
    """
    items = sorted(members.items() if isinstance(members, Mapping) else members)
    if len(items) < 2:
        raise DegenerateRegion("need at least two members")
    at: dict[tuple[float, float], list[int]] = {}
    for pid, p in items:
        at.setdefault((p.x, p.y), []).append(pid)
    coords = sorted(at)
    if len(coords) == 1:
        ids = at[coords[0]]
        return ids[0], ids[1], 0.0
    hull = _hull(coords)
    best = -1.0
    best_pair = None
    for i, a in enumerate(hull):
        for b in hull[i + 1:]:
            dx = a[0] - b[0]
            dy = a[1] - b[1]
            d2 = dx * dx + dy * dy
            ia, ib = at[a][0], at[b][0]
            pair = (ia, ib) if ia < ib else (ib, ia)
            if d2 > best or (d2 == best and pair < best_pair):
                best, best_pair = d2, pair
    return best_pair[0], best_pair[1], best


def _hull(pts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Monotone-chain hull keeping collinear boundary points."""
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    if len(pts) <= 2:
        return list(pts)
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) < 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) < 0:
            upper.pop()
        upper.append(p)
    return list(dict.fromkeys(lower[:-1] + upper[:-1]))


@dataclass(frozen=True)
class SemicirclePath:
    center: Vec2
    radius: float
    entry_angle: float
    exit_angle: float
    clockwise: bool
    pair: tuple[int, int]

    @property
    def direction(self) -> str:
        return "clockwise" if self.clockwise else "counterclockwise"

    def point_at(self, angle: float, clearance: float = 0.0) -> Vec2:
        return self.center + Vec2.polar(self.radius + clearance, angle)

    def waypoints(self, step: float = math.radians(10.0), clearance: float = 0.0) -> list[Vec2]:
        n = max(2, math.ceil(math.pi / step))
        sign = -1.0 if self.clockwise else 1.0
        return [self.point_at(self.entry_angle + sign * math.pi * k / n, clearance)
                for k in range(n + 1)]


def plan_semicircle(members: Mapping[int, Vec2], heading: Vec2 | None = None,
                    crowd: Iterable[Vec2] = ()) -> SemicirclePath:
    """Detour circle through the two most distant congested humans.

    The centre is their midpoint and the radius half their distance. With a
    heading, the arc starts behind the centre and ends ahead of it, bulging
    toward whichever side of the heading line holds fewer of ``crowd``.
    """
    ia, ib, _ = farthest_pair(members)
    a, b = members[ia], members[ib]
    center = Vec2((a.x + b.x) / 2, (a.y + b.y) / 2)
    radius = a.dist(b) / 2
    if heading is None:
        entry = math.atan2(a.y - center.y, a.x - center.x)
        return SemicirclePath(center, radius, entry, entry + math.pi, False, (ia, ib))
    entry = (-heading).angle()
    left = right = 0
    for p in crowd:
        side = heading.cross(p - center)
        if side > 0:
            left += 1
        elif side < 0:
            right += 1
    # counterclockwise from behind the centre sweeps the right-hand side
    clockwise = left < right
    exit_ = entry - math.pi if clockwise else entry + math.pi
    return SemicirclePath(center, radius, entry, exit_, clockwise, (ia, ib))


def _past(box: Rect, p: Vec2, heading: Vec2) -> bool:
    """Whether the whole box lies behind ``p`` when looking along ``heading``."""
    corners = (Vec2(box.x0, box.y0), Vec2(box.x1, box.y0), Vec2(box.x0, box.y1), Vec2(box.x1, box.y1))
    return all((c - p).dot(heading) <= 0.0 for c in corners)


def _clamp(p: Vec2, field: FieldConfig, inset: float = 0.5) -> Vec2:
    """Nearest point at least ``inset`` inside the field boundary."""
    return Vec2(min(max(p.x, inset), field.width - inset), min(max(p.y, inset), field.height - inset))


def conflict_box(region: CongestedRegion, params: ControlParams,
                 positions: Mapping[int, Vec2] | None = None) -> Rect:
    """Region box grown to the convergence point and, given ``positions``,
    to every member of the conflicting groups, plus the exit margin."""
    box = region.bounding_box
    if region.convergence_point is not None:
        box = box.union(Rect.around(region.convergence_point, 0.0))
    if positions is not None:
        for g in region.groups:
            for i in sorted(g.member_ids):
                if i in positions:
                    box = box.union(Rect.around(positions[i], 0.0))
    return box.expanded(params.exit_margin)


def plan_straight_lead(group: Group, snapshot: Snapshot, region: CongestedRegion,
                       dparams: DetectionParams, params: ControlParams,
                       field: FieldConfig | None = None, zone: Rect | None = None
                       ) -> list[Vec2]:
    """Waypoints along the group's heading until the conflict box is behind it.

    Every probe square along the way must be vacant (the group's own members
    are ignored) and, given a ``field``, walkable; otherwise
    :class:`NoVacantFront` is raised. The last
    waypoint sits one leash length past the box so the followers clear it too.
    """
    h = group.mean_heading
    box = zone if zone is not None else conflict_box(region, params)
    start = group.centroid
    if _past(box, start, h):
        return [start]
    positions = {p.id: p.position for p in snapshot.pedestrians}
    if not is_vacant(front_probe(group, positions, params), snapshot,
                     dparams.vacancy_density, exclude=group.member_ids):
        raise NoVacantFront(f"group {group.id} has no room ahead")
    out = []
    k = 1
    while True:
        w = start + h * (k * params.probe_size)
        probe = Rect.around(w, params.probe_size / 2)
        if not is_vacant(probe, snapshot, dparams.vacancy_density, exclude=group.member_ids):
            raise NoVacantFront(f"path of group {group.id} is blocked at {w}")
        if field is not None and field.blocked(w):
            raise NoVacantFront(f"path of group {group.id} leaves the walkable area at {w}")
        out.append(w)
        if _past(box, w, h):
            end = w + h * params.leash
            if field is not None and field.blocked(end):
                raise NoVacantFront(f"path of group {group.id} leaves the walkable area at {end}")
            out.append(end)
            return out
        k += 1


# -- the flying agent ------------------------------------------------------------

@dataclass(frozen=True)
class CCAState:
    position: Vec2
    speed_limit: float
    phase: Phase
    assigned_region: CongestedRegion
    led_group: Group | None = None
    waiting_groups: tuple[Group, ...] = ()
    path: tuple[Vec2, ...] = ()
    path_index: int = 0          # next waypoint to reach
    spotlight_speed: float = 0.0
    case: Case | None = None
    next_phase: Phase | None = None   # lead phase to enter once the agent has flown over
    slow_pair: tuple[SubGroup, SubGroup] | None = None
    slow_target: float | None = None
    semicircle: SemicirclePath | None = None
    released: tuple[int, ...] = ()    # groups already led out
    zone: Rect | None = None          # area a led group must get past

    @property
    def leading(self) -> bool:
        return self.phase in (Phase.LEADING_STRAIGHT, Phase.LEADING_ARC)

    def to_json(self) -> dict:
        return {
            "region": self.assigned_region.id,
            "phase": self.phase.value,
            "position": [self.position.x, self.position.y],
            "led_group": None if self.led_group is None else self.led_group.id,
            "waiting": [g.id for g in self.waiting_groups],
            "case": None if self.case is None else self.case.value,
            "spotlight_speed": self.spotlight_speed,
        }


@dataclass(frozen=True)
class ControlContext:
    partition: GridPartition
    detection: DetectionParams
    control: ControlParams
    dt: float
    field: FieldConfig | None = None


def _advance(pos: Vec2, path: Sequence[Vec2], idx: int, dist: float) -> tuple[Vec2, int]:
    while idx < len(path) and dist > 0.0:
        d = pos.dist(path[idx])
        if d <= dist:
            dist -= d
            pos = path[idx]
            idx += 1
        else:
            pos = pos + (path[idx] - pos) * (dist / d)
            dist = 0.0
    return pos, idx


def _mean_vmax(group: Group, snapshot: Snapshot) -> float:
    by_id = snapshot.by_id()
    vs = [by_id[i].v_max for i in sorted(group.member_ids) if i in by_id]
    return sum(vs) / len(vs) if vs else 1.0


def start_lead(cca: CCAState, parties: Sequence[Group], snapshot: Snapshot,
               ctx: ControlContext) -> CCAState:
    """Classify the remaining parties and plan the next lead (the recursion step)."""
    positions = {p.id: p.position for p in snapshot.pedestrians}
    fresh = [g for g in (_refresh(p, positions) for p in parties) if g is not None]
    if len(fresh) <= 1:
        # a single remaining group no longer conflicts with anyone
        return replace(cca, phase=Phase.IDLE, led_group=None, waiting_groups=(), path=(),
                       path_index=0, case=None, next_phase=None, semicircle=None)
    region = cca.assigned_region

    def vacant(g: Group) -> bool:
        try:
            plan_straight_lead(g, snapshot, region, ctx.detection, ctx.control, ctx.field,
                               cca.zone)
        except NoVacantFront:
            return False
        return True

    cls = classify_case(region, fresh, None, vacant)
    led = cls.group
    waiting = tuple(g for g in fresh if g.id != led.id)
    cp = ctx.control
    semicircle = None
    if cls.case is Case.II:
        path = [led.centroid, *plan_straight_lead(led, snapshot, region, ctx.detection, cp,
                                                  ctx.field, cca.zone)]
        lead_phase = Phase.LEADING_STRAIGHT
    else:
        members = {i: positions[i] for g in fresh for i in sorted(g.member_ids)}
        crowd = [positions[i] for g in waiting for i in sorted(g.member_ids)]
        try:
            semicircle = plan_semicircle(members, led.mean_heading, crowd)
        except DegenerateRegion:
            semicircle = None
        if semicircle is None:
            path = [led.centroid, led.centroid + led.mean_heading * cp.probe_size]
        else:
            arc = semicircle.waypoints(cp.arc_step, cp.arc_clearance)
            path = [led.centroid, *arc]
        box = cca.zone if cca.zone is not None else conflict_box(region, cp)
        end = path[-1]
        k = 1
        while not _past(box, end, led.mean_heading):
            end = path[-1] + led.mean_heading * (k * cp.probe_size)
            k += 1
        path.append(end + led.mean_heading * cp.leash)
        if ctx.field is not None:
            path = [_clamp(w, ctx.field) for w in path]
        lead_phase = Phase.LEADING_ARC
    speed = min(cp.spotlight_max, cp.spotlight_fraction * _mean_vmax(led, snapshot))
    return replace(cca, phase=Phase.RETURNING, led_group=led, waiting_groups=waiting,
                   path=tuple(path), path_index=0, spotlight_speed=speed, case=cls.case,
                   next_phase=lead_phase, semicircle=semicircle)


def _instructions(cca: CCAState, tick: int, params: ControlParams) -> list[Instruction]:
    rid = cca.assigned_region.id
    if cca.phase is Phase.IDLE:
        return []
    if cca.phase is Phase.SLOWING:
        rear = cca.slow_pair[1]
        return [Instruction(InstructionKind.SLOW_DOWN, rear.member_ids, tick, rid,
                            rear.parent_group, factor=params.slow_factor,
                            target_speed=cca.slow_target)]
    out = []
    if cca.leading:
        out.append(Instruction(InstructionKind.FOLLOW_SPOTLIGHT, cca.led_group.member_ids, tick,
                               rid, cca.led_group.id,
                               spotlight=Spotlight(cca.position, cca.spotlight_speed)))
    else:
        out.append(Instruction(InstructionKind.WAIT, cca.led_group.member_ids, tick, rid,
                               cca.led_group.id))
    for g in cca.waiting_groups:
        out.append(Instruction(InstructionKind.WAIT, g.member_ids, tick, rid, g.id))
    return out


def begin(region: CongestedRegion, snapshot: Snapshot, ctx: ControlContext) -> CCAState:
    """Agent called to a freshly detected region, hovering over its centre."""
    start = region.convergence_point or region.bounding_box.center
    positions = {p.id: p.position for p in snapshot.pedestrians}
    cca = CCAState(start, ctx.control.cca_speed, Phase.IDLE, region,
                   zone=conflict_box(region, ctx.control, positions))
    if region.cause is Cause.SPEED and region.speed_pair is not None:
        front, rear = region.speed_pair
        parent = region.groups[0] if region.groups else None
        return replace(cca, phase=Phase.SLOWING, case=Case.I, led_group=parent,
                       slow_pair=(front, rear),
                       slow_target=ctx.control.slow_factor * rear.mean_speed,
                       position=rear.centroid)
    if not region.groups:
        raise InvalidRegion(f"region {region.id} has no member groups")
    return start_lead(cca, region.groups, snapshot, ctx)


def cca_tick(cca: CCAState, snapshot: Snapshot, ctx: ControlContext,
             kinematics=None) -> tuple[CCAState, list[Instruction]]:
    """One control step: move the agent, advance its phase, and say what to broadcast."""
    cp = ctx.control
    tick = snapshot.tick
    positions = {p.id: p.position for p in snapshot.pedestrians}
    if cca.phase is Phase.IDLE:
        return cca, []

    if cca.phase is Phase.SLOWING:
        kin = kinematics if kinematics is not None else derive_kinematics(snapshot)
        front, rear = cca.slow_pair
        heading = cca.led_group.mean_heading if cca.led_group is not None else None
        members = (front.member_ids | rear.member_ids) & positions.keys()
        if heading is None or not members:
            return replace(cca, phase=Phase.IDLE), []
        grp = Group(front.parent_group, frozenset(members), heading,
                    centroid_of(positions[i] for i in sorted(members)))
        parts = split_subgroups(grp, snapshot, kin, ctx.detection.eps_speed, ctx.detection.r_connect)
        mv = detect_micro(parts, ctx.detection.eps_speed)
        if not mv.congested:
            return replace(cca, phase=Phase.IDLE, slow_pair=None), []
        pos, _ = _advance(cca.position, [mv.rear.centroid], 0, cca.speed_limit * ctx.dt)
        target = cca.slow_target if cca.slow_target is not None \
            else cp.slow_factor * mv.rear.mean_speed
        cca = replace(cca, position=pos, slow_pair=(mv.front, mv.rear), slow_target=target)
        return cca, _instructions(cca, tick, cp)

    led = _refresh(cca.led_group, positions)
    if led is None:
        # the led group has left the field entirely
        cca = start_lead(replace(cca, released=cca.released + (cca.led_group.id,)),
                         cca.waiting_groups, snapshot, ctx)
        return cca, _instructions(cca, tick, cp)

    if cca.phase is Phase.RETURNING:
        pos, idx = _advance(cca.position, [led.centroid], 0, cca.speed_limit * ctx.dt)
        if idx == 1:
            cca = replace(cca, position=pos, phase=cca.next_phase, path_index=0)
            cca = replace(cca, path=(led.centroid, *cca.path[1:]))
        else:
            cca = replace(cca, position=pos)
        return cca, _instructions(cca, tick, cp)

    # leading: the spotlight only moves on while the group keeps up
    pos, idx = cca.position, cca.path_index
    if led.centroid.dist(pos) <= cp.leash:
        pos, idx = _advance(pos, cca.path, idx, cca.spotlight_speed * ctx.dt)
    cca = replace(cca, position=pos, path_index=idx)
    done = idx >= len(cca.path)
    heading = cca.led_group.mean_heading
    zone = cca.zone if cca.zone is not None else conflict_box(cca.assigned_region, cp)
    if done and (heading is None or _past(zone, led.centroid, heading)):
        cca = replace(cca, released=cca.released + (led.id,))
        cca = start_lead(cca, cca.waiting_groups, snapshot, ctx)
    return cca, _instructions(cca, tick, cp)


# -- escalation ----------------------------------------------------------------

@dataclass(frozen=True)
class PoliceRequest:
    tick: int
    region: CongestedRegion
    disobedience_fraction: float

    def to_json(self) -> dict:
        return {"tick": self.tick, "region": self.region.id,
                "disobedience_fraction": self.disobedience_fraction}


def escalate(fraction: float, threshold: float = 0.3) -> bool:
    """Whether a single disobedience reading reaches the escalation threshold."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    return fraction >= threshold


@dataclass
class EscalationMonitor:
    """Emits a police request once the threshold has held for ``debounce`` ticks in a row."""

    threshold: float = 0.3
    debounce: int = 20
    streak: int = 0

    def update(self, fraction: float, tick: int, region: CongestedRegion) -> PoliceRequest | None:
        self.streak = self.streak + 1 if escalate(fraction, self.threshold) else 0
        if self.streak >= self.debounce:
            return PoliceRequest(tick, region, fraction)
        return None


# -- region lifecycle ------------------------------------------------------------

class Status(str, enum.Enum):
    ACTIVE = "active"
    RESOLVED = "resolved"
    ESCALATED = "escalated"
    UNRESOLVED = "unresolved"


def parties_for(verdict, analysis: Analysis) -> tuple[Group, ...]:
    if verdict.cause is Cause.DIRECTION:
        return tuple(analysis.groups[i] for i in verdict.converging_groups)
    if verdict.cause is Cause.SPEED and verdict.speed_conflict is not None:
        return (analysis.groups[verdict.speed_conflict.rear.parent_group],)
    return ()


def region_at(seed: GridId, snapshot: Snapshot, ctx: ControlContext,
              analysis: Analysis | None = None, region_id: int = 0) -> CongestedRegion | None:
    """Grow the macro-micro region around ``seed`` and attach the parties to lead.

    Returns None when the seed grid is clear.
    """
    if analysis is None:
        analysis = analyze(snapshot, ctx.detection, ctx.partition)

    def check(g: GridId):
        return detect_macro_micro(snapshot, g, ctx.detection, ctx.partition, analysis)

    region = find_congested_region(seed, check, ctx.partition)
    if region is None:
        return None
    parties = parties_for(check(seed), analysis)
    if not parties:
        for g in sorted(region.grids):
            v = check(g)
            if v.congested and parties_for(v, analysis):
                parties = parties_for(v, analysis)
                break
    return replace(region, id=region_id, detection_tick=snapshot.tick, groups=parties)


class RegionController:
    """One agent driving one congested region from detection to resolution or escalation."""

    def __init__(self, region: CongestedRegion, snapshot: Snapshot, ctx: ControlContext):
        self.region = region
        self.ctx = ctx
        self.cca = begin(region, snapshot, ctx)
        self.monitor = EscalationMonitor(ctx.control.escalation_threshold,
                                         ctx.control.debounce_ticks)
        self.status = Status.ACTIVE
        self.clear_streak = 0
        self.last: list[Instruction] = []
        self.events: list[dict] = []
        self.police: PoliceRequest | None = None
        self.resolved_tick: int | None = None
        self.last_fraction = 0.0

    @property
    def done(self) -> bool:
        return self.status is not Status.ACTIVE

    def _region_verdicts(self, snapshot: Snapshot, analysis: Analysis):
        part = self.ctx.partition
        for g in sorted(self.region.grids):
            v = detect_macro_micro(snapshot, g, self.ctx.detection, part, analysis)
            if v.congested:
                return v
        return None

    def step(self, snapshot: Snapshot, analysis: Analysis) -> list[Instruction]:
        if self.done:
            return []
        tick = snapshot.tick
        frac = 0.0
        if self.last:
            frac = disobedience_fraction(snapshot, self.last, self.ctx.detection,
                                         analysis.kinematics)
        self.last_fraction = frac
        req = self.monitor.update(frac, tick, self.region)
        if req is not None:
            self.police = req
            self.status = Status.ESCALATED
            self.cca = replace(self.cca, phase=Phase.IDLE)
            self.events.append({"event": "PoliceRequest", **req.to_json()})
            self.last = []
            return []
        phase_before = self.cca.phase
        self.cca, insts = cca_tick(self.cca, snapshot, self.ctx, analysis.kinematics)
        if self.cca.phase is Phase.IDLE:
            v = self._region_verdicts(snapshot, analysis)
            if v is None:
                self.clear_streak += 1
                if self.clear_streak >= self.ctx.control.confirm_ticks:
                    self.status = Status.RESOLVED
                    self.resolved_tick = tick
                    self.events.append({"event": "Resolved", "tick": tick,
                                        "region": self.region.id})
            else:
                # congestion came back: handle it again
                self.clear_streak = 0
                region = replace(self.region, cause=v.cause,
                                 converging_groups=v.converging_groups,
                                 convergence_point=v.convergence_point,
                                 groups=parties_for(v, analysis),
                                 speed_pair=None if v.speed_conflict is None
                                 else (v.speed_conflict.front, v.speed_conflict.rear))
                try:
                    self.cca = replace(begin(region, snapshot, self.ctx),
                                       position=self.cca.position)
                except InvalidRegion:
                    pass
                else:
                    insts = _instructions(self.cca, tick, self.ctx.control)
        else:
            self.clear_streak = 0
        if self.cca.phase is not phase_before:
            self.events.append({"event": "Phase", "tick": tick, "region": self.region.id,
                                "from": phase_before.value, "to": self.cca.phase.value})
        self.last = insts
        return insts


@dataclass(frozen=True)
class ResolutionOutcome:
    status: Status
    ticks: int
    police_request: PoliceRequest | None = None
    events: tuple[dict, ...] = ()

    @property
    def resolved(self) -> bool:
        return self.status is Status.RESOLVED

    @property
    def escalated(self) -> bool:
        return self.status is Status.ESCALATED


def instruction_map(instructions: Iterable[Instruction]) -> dict[int, Instruction]:
    out: dict[int, Instruction] = {}
    for inst in instructions:
        for pid in sorted(inst.addressed):
            out[pid] = inst
    return out


def resolve_region(region: CongestedRegion, snapshot: Snapshot,
                   advance: Callable[[Mapping[int, Instruction]], Snapshot],
                   ctx: ControlContext, tick_budget: int = 3000) -> ResolutionOutcome:
    """Run one region's controller against a world until it resolves, escalates
    or exhausts ``tick_budget``.

    ``advance`` applies the given instructions, steps the world once and
    returns the new snapshot.
    """
    start = snapshot.tick
    analysis = analyze(snapshot, ctx.detection, ctx.partition)
    if not any(detect_macro_micro(snapshot, g, ctx.detection, ctx.partition, analysis).congested
               for g in sorted(region.grids)):
        return ResolutionOutcome(Status.RESOLVED, 0)
    if not region.groups:
        for g in sorted(region.grids):
            v = detect_macro_micro(snapshot, g, ctx.detection, ctx.partition, analysis)
            if v.congested and parties_for(v, analysis):
                region = replace(region, groups=parties_for(v, analysis))
                break
    ctl = RegionController(region, snapshot, ctx)
    for _ in range(tick_budget):
        insts = ctl.step(snapshot, analysis)
        if ctl.done:
            break
        snapshot = advance(instruction_map(insts))
        analysis = analyze(snapshot, ctx.detection, ctx.partition)
    if ctl.status is Status.RESOLVED:
        return ResolutionOutcome(Status.RESOLVED, ctl.resolved_tick - start, None, tuple(ctl.events))
    if ctl.status is Status.ESCALATED:
        return ResolutionOutcome(Status.ESCALATED, ctl.police.tick - start, ctl.police,
                                 tuple(ctl.events))
    return ResolutionOutcome(Status.UNRESOLVED, snapshot.tick - start, None, tuple(ctl.events))
