"""Same-direction groups and same-speed sub-groups."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .. import kernels
from ..core import Kinematics, Snapshot, Vec2


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        a, b = self.find(i), self.find(j)
        if a != b:
            if a < b:
                self.parent[b] = a
            else:
                self.parent[a] = b

    def components(self) -> list[list[int]]:
        comps: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            comps.setdefault(self.find(i), []).append(i)
        return sorted(comps.values(), key=lambda c: c[0])


@dataclass(frozen=True)
class Group:
    id: int
    member_ids: frozenset[int]
    mean_heading: Vec2 | None  # None for a stationary singleton
    centroid: Vec2

    @property
    def size(self) -> int:
        return len(self.member_ids)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "members": sorted(self.member_ids),
            "heading": None if self.mean_heading is None else list(self.mean_heading.as_tuple()),
            "centroid": list(self.centroid.as_tuple()),
        }


@dataclass(frozen=True)
class SubGroup:
    parent_group: int
    member_ids: frozenset[int]
    mean_speed: float
    rank_along_heading: int  # 0 = frontmost
    centroid: Vec2


def same_direction(a: Vec2, b: Vec2, theta: float) -> bool:
    return a.dot(b) >= math.cos(theta)


def centroid_of(points) -> Vec2:
    xs = 0.0
    ys = 0.0
    n = 0
    for p in points:
        xs += p.x
        ys += p.y
        n += 1
    return Vec2(xs / n, ys / n)


def mean_direction(headings) -> Vec2 | None:
    sx = 0.0
    sy = 0.0
    for h in headings:
        sx += h.x
        sy += h.y
    n = math.hypot(sx, sy)
    if n < 1e-12:
        return None
    return Vec2(sx / n, sy / n)


def build_groups(snapshot: Snapshot, kinematics: Mapping[int, Kinematics],
                 r_connect: float, theta_dir: float) -> list[Group]:
    """Connected components of (distance <= r_connect and heading gap <= theta_dir).

    Stationary pedestrians have no heading and stay singletons. Groups are
    numbered in order of their smallest member id.
    """
    peds = snapshot.pedestrians
    n = len(peds)
    if n == 0:
        return []
    heads = [kinematics[p.id].heading for p in peds]
    x = np.fromiter((p.position.x for p in peds), float, n)
    y = np.fromiter((p.position.y for p in peds), float, n)
    ds = _DisjointSet(n)
    ii, jj = kernels.close_pairs(x, y, r_connect)
    for i, j in zip(ii.tolist(), jj.tolist()):
        hi, hj = heads[i], heads[j]
        if hi is not None and hj is not None and same_direction(hi, hj, theta_dir):
            ds.union(i, j)
    groups = []
    for gid, comp in enumerate(ds.components()):
        members = [peds[i] for i in comp]
        hs = [heads[i] for i in comp if heads[i] is not None]
        groups.append(Group(
            id=gid,
            member_ids=frozenset(p.id for p in members),
            mean_heading=mean_direction(hs) if hs else None,
            centroid=centroid_of(p.position for p in members),
        ))
    return groups


def split_subgroups(group: Group, snapshot: Snapshot, kinematics: Mapping[int, Kinematics],
                    eps_speed: float, r_connect: float) -> list[SubGroup]:
    """Connected components of similar speed inside ``group``, ranked front to back."""
    by_id = snapshot.by_id()
    members = [by_id[i] for i in sorted(group.member_ids)]
    n = len(members)
    speeds = [kinematics[p.id].speed for p in members]
    x = np.fromiter((p.position.x for p in members), float, n)
    y = np.fromiter((p.position.y for p in members), float, n)
    ds = _DisjointSet(n)
    ii, jj = kernels.close_pairs(x, y, r_connect)
    for i, j in zip(ii.tolist(), jj.tolist()):
        if abs(speeds[i] - speeds[j]) <= eps_speed:
            ds.union(i, j)
    parts = []
    for comp in ds.components():
        c = centroid_of(members[i].position for i in comp)
        mean_speed = sum(speeds[i] for i in comp) / len(comp)
        parts.append((comp, c, mean_speed))
    h = group.mean_heading
    if h is not None:
        # front first; ties broken by smallest member id
        parts.sort(key=lambda t: (-t[1].dot(h), t[0][0]))
    return [
        SubGroup(group.id, frozenset(members[i].id for i in comp), ms, rank, c)
        for rank, (comp, c, ms) in enumerate(parts)
    ]
