"""Field geometry, grid partitions, pedestrian state and per-tick snapshots."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterator, Mapping, NamedTuple, Sequence

STILLNESS_THRESHOLD = 1e-3  # metres of displacement per tick


class InvalidArgument(ValueError):
    pass


class OutOfBounds(ValueError):
    pass


class InvalidSnapshot(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidArgument(f"non-finite vector ({self.x}, {self.y})")

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> Vec2:
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2) -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Vec2) -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dist(self, other: Vec2) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def normalized(self) -> Vec2:
        n = self.norm()
        if n == 0.0:
            raise InvalidArgument("cannot normalize the zero vector")
        return Vec2(self.x / n, self.y / n)

    def angle(self) -> float:
        return math.atan2(self.y, self.x)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)

    @classmethod
    def polar(cls, r: float, theta: float) -> Vec2:
        return cls(r * math.cos(theta), r * math.sin(theta))


ZERO = Vec2(0.0, 0.0)


def angle_between(a: Vec2, b: Vec2) -> float:
    """Unsigned angle in [0, pi] between two non-zero vectors."""
    c = a.dot(b) / (a.norm() * b.norm())
    return math.acos(max(-1.0, min(1.0, c)))


@dataclass(frozen=True, slots=True)
class Rect:
    """Axis-aligned rectangle, half-open on the high edges."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return max(0.0, self.width) * max(0.0, self.height)

    @property
    def center(self) -> Vec2:
        return Vec2((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    def contains(self, p: Vec2) -> bool:
        return self.x0 <= p.x < self.x1 and self.y0 <= p.y < self.y1

    def contains_closed(self, p: Vec2) -> bool:
        return self.x0 <= p.x <= self.x1 and self.y0 <= p.y <= self.y1

    def intersection(self, other: Rect) -> Rect | None:
        r = Rect(max(self.x0, other.x0), max(self.y0, other.y0),
                 min(self.x1, other.x1), min(self.y1, other.y1))
        if r.x0 >= r.x1 or r.y0 >= r.y1:
            return None
        return r

    def union(self, other: Rect) -> Rect:
        return Rect(min(self.x0, other.x0), min(self.y0, other.y0),
                    max(self.x1, other.x1), max(self.y1, other.y1))

    def expanded(self, margin: float) -> Rect:
        return Rect(self.x0 - margin, self.y0 - margin, self.x1 + margin, self.y1 + margin)

    @classmethod
    def around(cls, c: Vec2, half: float) -> Rect:
        return cls(c.x - half, c.y - half, c.x + half, c.y + half)


# -- field ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class RectObstacle:
    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, p: Vec2) -> bool:
        return self.x0 <= p.x <= self.x1 and self.y0 <= p.y <= self.y1

    def closest_point(self, p: Vec2) -> Vec2:
        return Vec2(min(max(p.x, self.x0), self.x1), min(max(p.y, self.y0), self.y1))

    def bounds(self) -> Rect:
        return Rect(self.x0, self.y0, self.x1, self.y1)


@dataclass(frozen=True, slots=True)
class CircleObstacle:
    cx: float
    cy: float
    r: float

    def contains(self, p: Vec2) -> bool:
        return (p.x - self.cx) ** 2 + (p.y - self.cy) ** 2 <= self.r * self.r

    def closest_point(self, p: Vec2) -> Vec2:
        d = Vec2(p.x - self.cx, p.y - self.cy)
        n = d.norm()
        if n == 0.0:
            return Vec2(self.cx + self.r, self.cy)
        return Vec2(self.cx + d.x / n * self.r, self.cy + d.y / n * self.r)

    def bounds(self) -> Rect:
        return Rect(self.cx - self.r, self.cy - self.r, self.cx + self.r, self.cy + self.r)


Obstacle = RectObstacle | CircleObstacle


@dataclass(frozen=True, slots=True)
class ExitSegment:
    """Axis-aligned doorway lying on the field boundary."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def a(self) -> Vec2:
        return Vec2(self.x0, self.y0)

    @property
    def b(self) -> Vec2:
        return Vec2(self.x1, self.y1)

    def closest_point(self, p: Vec2) -> Vec2:
        ab = self.b - self.a
        denom = ab.dot(ab)
        t = 0.0 if denom == 0.0 else max(0.0, min(1.0, (p - self.a).dot(ab) / denom))
        return self.a + ab * t


@dataclass(frozen=True)
class FieldConfig:
    width: float
    height: float
    obstacles: tuple[Obstacle, ...] = ()
    exits: tuple[ExitSegment, ...] = ()

    def problems(self) -> list[str]:
        out = []
        if not self.width > 0 or not self.height > 0:
            out.append(f"field size must be positive, got {self.width}x{self.height}")
            return out
        bounds = self.bounds
        for i, ob in enumerate(self.obstacles):
            b = ob.bounds()
            if b.x0 < 0 or b.y0 < 0 or b.x1 > self.width or b.y1 > self.height:
                out.append(f"obstacle {i} extends outside the field")
        for i, ex in enumerate(self.exits):
            if not (bounds.contains_closed(ex.a) and bounds.contains_closed(ex.b)):
                out.append(f"exit {i} lies outside the field")
                continue
            on_side = (
                (ex.x0 == ex.x1 and ex.x0 in (0.0, self.width))
                or (ex.y0 == ex.y1 and ex.y0 in (0.0, self.height))
            )
            if not on_side:
                out.append(f"exit {i} does not lie on the field boundary")
        return out

    @property
    def bounds(self) -> Rect:
        return Rect(0.0, 0.0, self.width, self.height)

    def in_field(self, p: Vec2) -> bool:
        return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.height

    def blocked(self, p: Vec2) -> bool:
        return not self.in_field(p) or any(ob.contains(p) for ob in self.obstacles)


# -- grids ---------------------------------------------------------------

class Layer(str, enum.Enum):
    BASE = "base"
    SHIFTED_X = "shifted-x"
    SHIFTED_Y = "shifted-y"
    SHIFTED_XY = "shifted-xy"

    @property
    def sx(self) -> int:
        return _SHIFT_BITS[self][0]

    @property
    def sy(self) -> int:
        return _SHIFT_BITS[self][1]

    @classmethod
    def from_bits(cls, sx: int, sy: int) -> Layer:
        return _LAYER_BITS[(sx, sy)]


_LAYER_BITS = {
    (0, 0): Layer.BASE,
    (1, 0): Layer.SHIFTED_X,
    (0, 1): Layer.SHIFTED_Y,
    (1, 1): Layer.SHIFTED_XY,
}
_SHIFT_BITS = {layer: bits for bits, layer in _LAYER_BITS.items()}


class GridId(NamedTuple):
    column: int
    row: int
    layer: Layer = Layer.BASE

    def to_json(self) -> list:
        return [self.column, self.row, self.layer.value]

    @classmethod
    def from_json(cls, raw: Sequence) -> GridId:
        return cls(int(raw[0]), int(raw[1]), Layer(raw[2]))


@dataclass(frozen=True)
class GridPartition:
    cell_size: float
    columns: int
    rows: int
    origin: Vec2
    width: float
    height: float

    def shape(self, layer: Layer) -> tuple[int, int]:
        """Columns and rows of a layer; shifted layers need one extra cell to cover the far edge."""
        s = self.cell_size
        cols = self.columns if not layer.sx else math.ceil((self.width + s / 2) / s)
        rows = self.rows if not layer.sy else math.ceil((self.height + s / 2) / s)
        return cols, rows

    def is_valid(self, g: GridId) -> bool:
        cols, rows = self.shape(g.layer)
        return 0 <= g.column < cols and 0 <= g.row < rows

    def unclipped_rect(self, g: GridId) -> Rect:
        s = self.cell_size
        x0 = self.origin.x + g.column * s - g.layer.sx * s / 2
        y0 = self.origin.y + g.row * s - g.layer.sy * s / 2
        return Rect(x0, y0, x0 + s, y0 + s)

    def rect(self, g: GridId) -> Rect:
        """Cell rectangle truncated to the field."""
        field_rect = Rect(self.origin.x, self.origin.y,
                          self.origin.x + self.width, self.origin.y + self.height)
        r = self.unclipped_rect(g).intersection(field_rect)
        if r is None:
            raise OutOfBounds(f"{g} does not intersect the field")
        return r

    def area(self, g: GridId) -> float:
        return self.rect(g).area

    def grids(self, layer: Layer = Layer.BASE) -> Iterator[GridId]:
        cols, rows = self.shape(layer)
        for r in range(rows):
            for c in range(cols):
                yield GridId(c, r, layer)

    def all_grids(self) -> Iterator[GridId]:
        for layer in Layer:
            yield from self.grids(layer)

    def locate(self, p: Vec2, layer: Layer = Layer.BASE) -> GridId:
        return locate(self, p, layer)


def build_partition(field: FieldConfig, cell_size: float) -> GridPartition:
    if not cell_size > 0:
        raise InvalidArgument(f"cell_size must be positive, got {cell_size}")
    if cell_size > min(field.width, field.height):
        raise InvalidArgument(
            f"cell_size {cell_size} exceeds the smaller field side {min(field.width, field.height)}"
        )
    return GridPartition(
        cell_size=cell_size,
        columns=math.ceil(field.width / cell_size),
        rows=math.ceil(field.height / cell_size),
        origin=Vec2(0.0, 0.0),
        width=field.width,
        height=field.height,
    )


def locate(partition: GridPartition, p: Vec2, layer: Layer = Layer.BASE) -> GridId:
    """Grid of ``layer`` containing ``p`` under half-open [low, high) cells.

    The far field edges (x == width or y == height) are folded into the last cell.
    """
    x = p.x - partition.origin.x
    y = p.y - partition.origin.y
    if not (0.0 <= x <= partition.width and 0.0 <= y <= partition.height):
        raise OutOfBounds(f"point ({p.x}, {p.y}) is outside the field")
    s = partition.cell_size
    cols, rows = partition.shape(layer)
    c = math.floor((x + layer.sx * s / 2) / s)
    r = math.floor((y + layer.sy * s / 2) / s)
    return GridId(min(c, cols - 1), min(r, rows - 1), layer)


# -- pedestrians and snapshots ---------------------------------------------

@dataclass(frozen=True, slots=True)
class Goal:
    """Either a target point or a fixed heading (unit vector)."""

    point: Vec2 | None = None
    heading: Vec2 | None = None

    def __post_init__(self) -> None:
        if (self.point is None) == (self.heading is None):
            raise InvalidArgument("a goal needs exactly one of point or heading")
        if self.heading is not None:
            object.__setattr__(self, "heading", self.heading.normalized())

    def direction_from(self, p: Vec2) -> Vec2 | None:
        if self.heading is not None:
            return self.heading
        d = self.point - p
        n = d.norm()
        return None if n == 0.0 else Vec2(d.x / n, d.y / n)

    def to_json(self) -> dict:
        if self.point is not None:
            return {"point": [self.point.x, self.point.y]}
        return {"heading": [self.heading.x, self.heading.y]}


@dataclass(frozen=True, slots=True)
class Pedestrian:
    id: int
    position: Vec2
    velocity: Vec2
    goal: Goal
    group_hint: int
    v_max: float
    obedient: bool = True
    desired_speed: float | None = None
    active_instruction: object | None = None  # control.Instruction

    def __post_init__(self) -> None:
        if not self.v_max > 0:
            raise InvalidArgument(f"pedestrian {self.id}: v_max must be positive")
        if self.desired_speed is None:
            object.__setattr__(self, "desired_speed", self.v_max)

    @property
    def speed(self) -> float:
        return self.velocity.norm()


@dataclass(frozen=True)
class Snapshot:
    tick: int
    sim_time: float
    pedestrians: tuple[Pedestrian, ...]
    previous_positions: Mapping[int, Vec2] = field(default_factory=dict)
    previous_time: float | None = None
    _cells: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = [p.id for p in self.pedestrians]
        if len(set(ids)) != len(ids):
            raise InvalidSnapshot("duplicate pedestrian ids")
        object.__setattr__(self, "pedestrians", tuple(self.pedestrians))
        object.__setattr__(self, "previous_positions",
                           MappingProxyType(dict(self.previous_positions)))

    def by_id(self) -> dict[int, Pedestrian]:
        return {p.id: p for p in self.pedestrians}

    def cell_members(self, partition: GridPartition, layer: Layer = Layer.BASE
                     ) -> Mapping[GridId, tuple[int, ...]]:
        """Pedestrian ids per grid of one layer, computed once per snapshot."""
        key = (partition, layer)
        cells = self._cells.get(key)
        if cells is None:
            acc: dict[GridId, list[int]] = {}
            for p in self.pedestrians:
                try:
                    g = partition.locate(p.position, layer)
                except ValueError:
                    continue
                acc.setdefault(g, []).append(p.id)
            cells = MappingProxyType({g: tuple(v) for g, v in acc.items()})
            self._cells[key] = cells
        return cells

    def __len__(self) -> int:
        return len(self.pedestrians)


@dataclass(frozen=True, slots=True)
class Kinematics:
    speed: float
    heading: Vec2 | None

    @property
    def stationary(self) -> bool:
        return self.heading is None


def derive_kinematics(current: Snapshot) -> dict[int, Kinematics]:
    """Observed speed and heading from consecutive positions.

    Pedestrians that moved less than the stillness threshold, or that have
    no previous position, come back stationary (speed 0, heading None).
    """
    if current.previous_time is None:
        raise InvalidSnapshot("snapshot carries no previous timestamp")
    dt = current.sim_time - current.previous_time
    if dt <= 0.0:
        raise InvalidSnapshot(f"non-positive time step {dt}")
    out: dict[int, Kinematics] = {}
    for ped in current.pedestrians:
        prev = current.previous_positions.get(ped.id)
        if prev is None:
            out[ped.id] = Kinematics(0.0, None)
            continue
        dx = ped.position.x - prev.x
        dy = ped.position.y - prev.y
        d = math.hypot(dx, dy)
        if d < STILLNESS_THRESHOLD:
            out[ped.id] = Kinematics(0.0, None)
        else:
            out[ped.id] = Kinematics(d / dt, Vec2(dx / d, dy / d))
    return out
