"""Overlapping-grid expansion of congested areas (breadth-first worklist)."""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence, TypeVar

from ..core import GridId, GridPartition, Layer, Rect, Vec2
from .grouping import Group, SubGroup
from .strategies import Cause

T = TypeVar("T")


def overlapping_grids(g: GridId, partition: GridPartition) -> list[GridId]:
    """Half-cell-shifted grids that each cover half of ``g``.

    Toggling the x shift gives the two grids offset by -/+ half a cell in x,
    toggling the y shift the two offset in y. Base grids always have four;
    shifted grids on the far border can have fewer.
    """
    return list(_overlaps(g, partition))


@lru_cache(maxsize=65536)
def _overlaps(g: GridId, partition: GridPartition) -> tuple[GridId, ...]:
    c, r, layer = g
    sx, sy = layer.sx, layer.sy
    lx = Layer.from_bits(1 - sx, sy)
    ly = Layer.from_bits(sx, 1 - sy)
    cols = (c, c + 1) if sx == 0 else (c - 1, c)
    rows = (r, r + 1) if sy == 0 else (r - 1, r)
    cands = (GridId(cols[0], r, lx), GridId(cols[1], r, lx),
             GridId(c, rows[0], ly), GridId(c, rows[1], ly))
    return tuple(h for h in cands if partition.is_valid(h))


def _is_congested(verdict) -> bool:
    return bool(getattr(verdict, "congested", verdict))


def expand_congested(seed: GridId, check: Callable[[GridId], object],
                     partition: GridPartition) -> dict[GridId, object]:
    """Grids reached from ``seed`` through congested overlapping grids.

    FIFO worklist: pop the first grid, check it, and when congested record
    it and queue its overlapping grids. A grid is queued at most once, so
    each one is checked at most once.
    Returns recorded grids (in discovery order) mapped to their verdicts.
    """
    congested: dict[GridId, object] = {}
    queued = {seed}
    to_check = deque([seed])
    while to_check:
        current = to_check.popleft()
        verdict = check(current)
        if _is_congested(verdict):
            congested[current] = verdict
            for nb in _overlaps(current, partition):
                if nb not in queued:
                    queued.add(nb)
                    to_check.append(nb)
    return congested


@dataclass(frozen=True)
class CongestedRegion:
    grids: frozenset[GridId]
    bounding_box: Rect
    cause: Cause | None = None
    converging_groups: tuple[int, ...] = ()
    convergence_point: Vec2 | None = None
    groups: tuple[Group, ...] = ()          # conflicting parties as seen at detection
    speed_pair: tuple[SubGroup, SubGroup] | None = None  # (front, rear) for speed conflicts
    detection_tick: int = 0
    id: int = 0

    @property
    def members(self) -> frozenset[int]:
        if self.groups:
            return frozenset().union(*(g.member_ids for g in self.groups))
        if self.speed_pair is not None:
            return self.speed_pair[0].member_ids | self.speed_pair[1].member_ids
        return frozenset()

    def to_json(self) -> dict:
        b = self.bounding_box
        return {
            "id": self.id,
            "grids": sorted(g.to_json() for g in self.grids),
            "bbox": [b.x0, b.y0, b.x1, b.y1],
            "cause": None if self.cause is None else self.cause.value,
            "groups": [g.to_json() for g in self.groups],
            "point": None if self.convergence_point is None else list(self.convergence_point.as_tuple()),
            "members": sorted(self.members),
            "detection_tick": self.detection_tick,
        }


def find_congested_region(seed: GridId, checker: Callable[[GridId], object],
                          partition: GridPartition) -> CongestedRegion | None:
    """Grow the congested area around ``seed``; None when the seed itself is clear."""
    found = expand_congested(seed, checker, partition)
    if not found:
        return None
    box = None
    for g in found:
        r = partition.rect(g)
        box = r if box is None else box.union(r)
    verdicts = list(found.values())
    direction = [v for v in verdicts if getattr(v, "cause", None) is Cause.DIRECTION]
    lead = direction[0] if direction else verdicts[0]
    speed = getattr(lead, "speed_conflict", None)
    return CongestedRegion(
        grids=frozenset(found),
        bounding_box=box,
        cause=getattr(lead, "cause", None),
        converging_groups=tuple(getattr(lead, "converging_groups", ())),
        convergence_point=getattr(lead, "convergence_point", None),
        speed_pair=None if speed is None else (speed.front, speed.rear),
    )


_POOLS: dict[int, ThreadPoolExecutor] = {}


def _pool(workers: int) -> ThreadPoolExecutor:
    # one long-lived pool per size; creating threads every tick dominated small scans
    pool = _POOLS.get(workers)
    if pool is None:
        pool = _POOLS[workers] = ThreadPoolExecutor(max_workers=workers,
                                                    thread_name_prefix="crowdguard-scan")
    return pool


def scan_grids(grids: Sequence[GridId], check: Callable[[GridId], T],
               workers: int = 1) -> list[T]:
    """Run one detector per grid, optionally on a thread pool; order is preserved."""
    if workers <= 1 or len(grids) <= 1:
        return [check(g) for g in grids]
    # contiguous chunks, one per worker, so dispatch cost does not scale with grid count
    size = -(-len(grids) // workers)
    chunks = [grids[i:i + size] for i in range(0, len(grids), size)]
    parts = _pool(workers).map(lambda chunk: [check(g) for g in chunk], chunks)
    return [v for part in parts for v in part]
