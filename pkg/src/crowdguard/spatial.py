"""Uniform spatial hash for exact radius queries."""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Iterable

from .core import Pedestrian, Snapshot, Vec2


class SpatialHash:
    """Buckets points into square cells of side ``bucket_size``.

    A query of radius r <= bucket_size only has to look at the 3x3 block of
    buckets around the query point; candidates are then filtered by exact
    distance (closed ball), so results match a brute-force scan.
    """

    def __init__(self, points: Iterable[tuple[int, Vec2]], bucket_size: float):
        if not bucket_size > 0:
            raise ValueError("bucket_size must be positive")
        self.bucket_size = bucket_size
        self._inv = 1.0 / bucket_size
        self._points: dict[int, Vec2] = {}
        self._buckets: dict[tuple[int, int], list[int]] = defaultdict(list)
        for key, p in points:
            self._points[key] = p
            self._buckets[self._bucket(p)].append(key)

    @classmethod
    def from_pedestrians(cls, peds: Iterable[Pedestrian], bucket_size: float) -> SpatialHash:
        return cls(((p.id, p.position) for p in peds), bucket_size)

    def _bucket(self, p: Vec2) -> tuple[int, int]:
        return (math.floor(p.x * self._inv), math.floor(p.y * self._inv))

    def __len__(self) -> int:
        return len(self._points)

    def query(self, center: Vec2, radius: float, exclude: int | None = None) -> list[int]:
        """Keys within ``radius`` of ``center``, sorted ascending."""
        if radius > self.bucket_size:
            raise ValueError(f"radius {radius} exceeds bucket size {self.bucket_size}")
        bx, by = self._bucket(center)
        r2 = radius * radius
        out = []
        for i in (bx - 1, bx, bx + 1):
            for j in (by - 1, by, by + 1):
                for key in self._buckets.get((i, j), ()):
                    if key == exclude:
                        continue
                    q = self._points[key]
                    dx = q.x - center.x
                    dy = q.y - center.y
                    if dx * dx + dy * dy <= r2:
                        out.append(key)
        out.sort()
        return out

    def neighbors(self, key: int, radius: float) -> list[int]:
        return self.query(self._points[key], radius, exclude=key)


def neighbor_index(snapshot: Snapshot, bucket_size: float) -> SpatialHash:
    return SpatialHash.from_pedestrians(snapshot.pedestrians, bucket_size)
