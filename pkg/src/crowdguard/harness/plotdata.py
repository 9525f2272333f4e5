"""Per-tick CSV frames from a run trace, for external plotting."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

from ..core import GridId, Vec2, build_partition
from .runner import Trace
from .scenario import parse_scenario

COLUMNS = ["id", "x", "y", "heading_x", "heading_y", "group", "congested",
           "spotlight_x", "spotlight_y"]


def emit_plot_data(trace: Trace | str | Path, out_dir: str | Path, stride: int = 10) -> list[Path]:
    """Write ``frame_<tick>.csv`` for ticks stride, 2*stride, ... of the trace.

    A pedestrian's congestion flag is the trace verdict of the base grid it
    stands in; spotlight columns are empty when no agent is leading.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if not isinstance(trace, Trace):
        trace = Trace.read(trace)
    header = trace.records[0]
    scenario = header["scenario"]
    fc = parse_scenario(scenario).field
    part = build_partition(fc, scenario["cell_size"])

    peds = defaultdict(list)
    congested = {}
    spots = defaultdict(list)
    for r in trace.records:
        t = r.get("tick")
        if r["type"] == "ped":
            peds[t].append(r)
        elif r["type"] == "verdicts":
            congested[t] = {GridId.from_json(g) for g in r["congested"]}
        elif r["type"] == "cca" and r["phase"] in ("LeadingStraight", "LeadingArc", "SlowingSubgroup"):
            spots[t].append(r["position"])

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for t in sorted(peds):
        if t == 0 or t % stride:
            continue
        flags = congested.get(t, set())
        spot = spots[t][0] if spots.get(t) else None
        path = out / f"frame_{t:06d}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            for r in sorted(peds[t], key=lambda r: r["id"]):
                s = math.hypot(r["vx"], r["vy"])
                hx, hy = (r["vx"] / s, r["vy"] / s) if s > 1e-9 else (0.0, 0.0)
                cell = part.locate(Vec2(r["x"], r["y"]))
                w.writerow([r["id"], r["x"], r["y"], hx, hy, r["group"], int(cell in flags),
                            "" if spot is None else spot[0], "" if spot is None else spot[1]])
        written.append(path)
    return written
