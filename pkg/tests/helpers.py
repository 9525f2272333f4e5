"""Builders and brute-force oracles shared by the test modules."""

from __future__ import annotations

import itertools
from functools import lru_cache

import networkx as nx

from crowdguard.core import (
    FieldConfig,
    Goal,
    GridPartition,
    Layer,
    Pedestrian,
    Snapshot,
    Vec2,
)

EAST = Goal(heading=Vec2(1.0, 0.0))


def ped(pid, x, y, vx=0.0, vy=0.0, *, group=0, goal=EAST, v_max=1.5, obedient=True,
        desired=None):
    return Pedestrian(pid, Vec2(x, y), Vec2(vx, vy), goal, group, v_max, obedient, desired)


def moving(rows, dt=1.0, tick=1):
    """Snapshot from (id, previous xy, current xy) rows, velocities by finite difference."""
    peds = []
    prev = {}
    for pid, (px, py), (x, y) in rows:
        peds.append(ped(pid, x, y, (x - px) / dt, (y - py) / dt))
        prev[pid] = Vec2(px, py)
    return Snapshot(tick, tick * dt, tuple(peds), prev, (tick - 1) * dt)


def still(points, tick=1, dt=1.0):
    """Snapshot of pedestrians that did not move since the previous tick."""
    return moving([(i, p, p) for i, p in enumerate(points)], dt, tick)


def open_field(w, h):
    return FieldConfig(float(w), float(h))


# -- oracles --------------------------------------------------------------------

def brute_radius(points, center, radius, exclude=None):
    r2 = radius * radius
    out = []
    for key, q in points.items():
        if key == exclude:
            continue
        dx = q.x - center.x
        dy = q.y - center.y
        if dx * dx + dy * dy <= r2:
            out.append(key)
    return sorted(out)


def brute_farthest(members):
    """Exhaustive farthest pair: largest squared distance, then smallest (low, high) id pair."""
    best = None
    for (ia, a), (ib, b) in itertools.combinations(sorted(members.items()), 2):
        dx = a.x - b.x
        dy = a.y - b.y
        d2 = dx * dx + dy * dy
        key = (-d2, (ia, ib))
        if best is None or key < best:
            best = key
    return best[1][0], best[1][1], -best[0]


@lru_cache(maxsize=8)
def overlap_graph(partition: GridPartition) -> nx.Graph:
    """Grids as nodes, an edge wherever two cells of different layers share
    exactly half a cell of area (measured on the unclipped squares)."""
    s = partition.cell_size
    half = s * s / 2
    g = nx.Graph()
    valid = list(partition.all_grids())
    g.add_nodes_from(valid)
    by_key = {(x.column, x.row, x.layer): x for x in valid}
    for a in valid:
        ra = partition.unclipped_rect(a)
        for layer in Layer:
            if layer is a.layer:
                continue
            for dc in (-1, 0, 1):
                for dr in (-1, 0, 1):
                    b = by_key.get((a.column + dc, a.row + dr, layer))
                    if b is None:
                        continue
                    inter = ra.intersection(partition.unclipped_rect(b))
                    if inter is not None and inter.area == half:
                        g.add_edge(a, b)
    return g


def flood_fill(partition, mask, seed):
    if seed not in mask:
        return frozenset()
    sub = overlap_graph(partition).subgraph(mask)
    return frozenset(nx.node_connected_component(sub, seed))


def brute_components(n, linked):
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for i, j in itertools.combinations(range(n), 2):
        if linked(i, j):
            g.add_edge(i, j)
    return sorted(sorted(c) for c in nx.connected_components(g))


def brute_trapped(snapshot, inside, min_neighbors, radius):
    pts = {p.id: p.position for p in snapshot.pedestrians}
    return sorted(i for i in inside
                  if len(brute_radius(pts, pts[i], radius, exclude=i)) > min_neighbors)
