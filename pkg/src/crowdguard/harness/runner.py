"""Simulation driver: dynamics, per-grid detection, region growing and control."""

from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from ..control import ControlContext, RegionController, Status, instruction_map, region_at
from ..core import GridId, GridPartition, Layer, Snapshot
from ..detection import (
    Analysis,
    DetectionParams,
    SpatialHash,
    Strategy,
    analyze,
    count_flow,
    detect_free_flow,
    detect_macro_micro,
    detect_naive,
    detect_trapped,
    occupants,
    scan_grids,
)
from ..dynamics import World, step
from .scenario import Scenario


def _dumps(rec: dict) -> str:
    return json.dumps(rec, separators=(",", ":"), allow_nan=False)


class Trace:
    """Append-only, tick-ordered list of trace records (one JSON object per line)."""

    def __init__(self) -> None:
        self.records: list[dict] = []

    def add(self, rec: dict) -> None:
        if self.records and rec.get("tick", 0) < self.records[-1].get("tick", 0):
            raise ValueError("trace records must be tick-ordered")
        self.records.append(rec)

    def pedestrians(self, snap: Snapshot) -> None:
        for p in snap.pedestrians:
            self.add({"type": "ped", "tick": snap.tick, "id": p.id,
                      "x": p.position.x, "y": p.position.y,
                      "vx": p.velocity.x, "vy": p.velocity.y, "group": p.group_hint})

    def of_type(self, kind: str) -> list[dict]:
        return [r for r in self.records if r["type"] == kind]

    def to_text(self) -> str:
        return "".join(_dumps(r) + "\n" for r in self.records)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_text(), encoding="utf-8")
        return path

    @classmethod
    def read(cls, path: str | Path) -> Trace:
        t = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    t.records.append(json.loads(line))
        return t


# -- detection pass -------------------------------------------------------------

def grid_checker(strategy: Strategy, snap: Snapshot, earlier: Snapshot, partition: GridPartition,
                 params: DetectionParams, analysis: Analysis | None = None,
                 index: SpatialHash | None = None) -> Callable[[GridId], bool]:
    """Per-grid congestion predicate for one strategy on one snapshot."""
    if strategy is Strategy.NAIVE:
        return lambda g: detect_naive(snap, g, params.density_max, partition).congested
    if strategy is Strategy.FREE_FLOW:
        def free_flow(g: GridId) -> bool:
            flow = count_flow(partition, g, earlier, snap)
            return detect_free_flow(flow, len(occupants(snap, partition, g))).congested
        return free_flow
    if strategy is Strategy.TRAPPED:
        idx = index if index is not None else SpatialHash.from_pedestrians(
            snap.pedestrians, params.trapped_radius)
        return lambda g: detect_trapped(snap, g, params.min_neighbors, params.trapped_radius,
                                        partition, idx).congested
    an = analysis if analysis is not None else analyze(snap, params, partition)
    return lambda g: detect_macro_micro(snap, g, params, partition, an).congested


def detection_pass(strategy: Strategy, snap: Snapshot, earlier: Snapshot,
                   partition: GridPartition, params: DetectionParams,
                   analysis: Analysis | None = None, workers: int = 1) -> list[GridId]:
    """Congested base grids, one detector task per grid."""
    grids = list(partition.grids(Layer.BASE))
    check = grid_checker(strategy, snap, earlier, partition, params, analysis)
    flags = scan_grids(grids, check, workers)
    return [g for g, f in zip(grids, flags) if f]


# -- run -----------------------------------------------------------------------

@dataclass(frozen=True)
class RunOptions:
    strategy: Strategy | None = None
    control: bool | None = None
    workers: int = 1
    ticks: int | None = None
    dt: float | None = None
    quiet_ticks: int = 50


@dataclass
class RegionMetrics:
    region: int
    detection_tick: int
    resolve_tick: int | None
    ticks_to_resolve: int | None
    seconds_to_resolve: float | None
    humans: int
    conflicting_groups: int
    status: str
    disobedience_fraction: float


@dataclass
class Metrics:
    regions: list[RegionMetrics] = field(default_factory=list)
    ticks_run: int = 0
    dt: float = 0.1
    exited: int = 0
    final_disobedience_fraction: float = 0.0

    def to_json(self) -> dict:
        return {
            "ticks_run": self.ticks_run,
            "dt": self.dt,
            "exited": self.exited,
            "final_disobedience_fraction": self.final_disobedience_fraction,
            "regions": [vars(r) for r in self.regions],
        }


@dataclass
class RunResult:
    trace: Trace
    metrics: Metrics
    world: World
    controllers: list[RegionController]
    exit_status: int = 0

    def resolved(self) -> list[RegionMetrics]:
        return [r for r in self.metrics.regions if r.status == Status.RESOLVED.value]

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace_path = self.trace.write(out / "trace.ndjson")
        metrics_path = out / "metrics.json"
        metrics_path.write_text(json.dumps(self.metrics.to_json(), indent=2) + "\n", encoding="utf-8")
        return {"trace": trace_path, "metrics": metrics_path}


def initial_world(scenario: Scenario) -> World:
    return World(scenario.field, scenario.pedestrians, scenario.forces, scenario.scenario_force)


def run(scenario: Scenario, options: RunOptions = RunOptions()) -> RunResult:
    strategy = options.strategy or scenario.strategy
    control_on = scenario.control_enabled if options.control is None else options.control
    dt = options.dt or scenario.dt
    budget = options.ticks or scenario.tick_budget
    part = scenario.partition
    dparams = scenario.detection
    ctx = ControlContext(part, dparams, scenario.control, dt, scenario.field)

    trace = Trace()
    trace.add({"type": "header", "tick": 0, "scenario": scenario.to_json(),
               "options": {"strategy": strategy.value, "control": control_on, "dt": dt,
                           "ticks": budget, "workers": options.workers}})
    world = initial_world(scenario)
    trace.pedestrians(world.snapshot())
    window = max(1, round(dparams.flow_window / dt))
    history: deque[Snapshot] = deque([world.snapshot()], maxlen=window + 1)
    controllers: list[RegionController] = []
    instructions: dict = {}
    quiet = 0
    n_exited = 0

    for tick in range(1, budget + 1):
        world = step(world.with_instructions(instructions), dt)
        snap = world.snapshot()
        history.append(snap)
        trace.pedestrians(snap)
        for pid in world.exited[n_exited:]:
            trace.add({"type": "exit", "tick": tick, "id": pid})
        n_exited = len(world.exited)

        analysis = None
        if control_on or strategy is Strategy.MACRO_MICRO:
            analysis = analyze(snap, dparams, part)
        mm_congested: list[GridId] = []
        if tick % scenario.detection_stride == 0:
            congested = detection_pass(strategy, snap, history[0], part, dparams, analysis,
                                       options.workers)
            trace.add({"type": "verdicts", "tick": tick, "strategy": strategy.value,
                       "congested": [g.to_json() for g in congested]})
            if control_on:
                mm_congested = congested if strategy is Strategy.MACRO_MICRO else \
                    detection_pass(Strategy.MACRO_MICRO, snap, history[0], part, dparams,
                                   analysis, options.workers)

        if not control_on:
            if not snap.pedestrians:
                break
            continue

        for seed in mm_congested:
            if _covered(seed, part, controllers):
                continue
            region = region_at(seed, snap, ctx, analysis, region_id=len(controllers))
            if region is None or _owned(region.groups, controllers):
                continue
            try:
                ctl = RegionController(region, snap, ctx)
            except ValueError:
                continue
            controllers.append(ctl)
            trace.add({"type": "region", "tick": tick, **region.to_json()})
            trace.add({"type": "event", "tick": tick, "event": "Detected", "region": region.id})

        broadcast = []
        for ctl in controllers:
            if ctl.done:
                continue
            n_events = len(ctl.events)
            insts = ctl.step(snap, analysis)
            broadcast.extend(insts)
            for ev in ctl.events[n_events:]:
                trace.add({"type": "event", **ev, "tick": tick})
            trace.add({"type": "cca", "tick": tick, **ctl.cca.to_json(),
                       "status": ctl.status.value})
        for inst in broadcast:
            trace.add({"type": "instruction", "tick": tick, **inst.to_json()})
        instructions = instruction_map(broadcast)

        if controllers and all(c.done for c in controllers) and not mm_congested:
            quiet += 1
        else:
            quiet = 0
        if not snap.pedestrians or (options.quiet_ticks and quiet >= options.quiet_ticks):
            break

    metrics = Metrics(ticks_run=world.tick, dt=dt, exited=len(world.exited))
    for ctl in controllers:
        r = ctl.region
        if ctl.status is Status.RESOLVED:
            ticks = ctl.resolved_tick - r.detection_tick
            status, rtick = Status.RESOLVED.value, ctl.resolved_tick
        else:
            ticks, rtick = None, None
            status = ctl.status.value if ctl.done else Status.UNRESOLVED.value
        metrics.regions.append(RegionMetrics(
            region=r.id, detection_tick=r.detection_tick, resolve_tick=rtick,
            ticks_to_resolve=ticks, seconds_to_resolve=None if ticks is None else ticks * dt,
            humans=len(r.members), conflicting_groups=len(r.groups), status=status,
            disobedience_fraction=ctl.last_fraction,
        ))
    if controllers:
        metrics.final_disobedience_fraction = controllers[-1].last_fraction
    trace.add({"type": "metrics", "tick": world.tick, **metrics.to_json()})
    return RunResult(trace, metrics, world, controllers)


def _holding(ctl: RegionController) -> bool:
    # escalated regions stay with the police for the rest of the run
    return not ctl.done or ctl.status is Status.ESCALATED


def _owned(parties, controllers: Sequence[RegionController]) -> bool:
    """True when a party member already belongs to a region under control."""
    ids = {m for g in parties for m in g.member_ids}
    return any(_holding(c) and ids & set(c.region.members) for c in controllers)


def _covered(seed: GridId, part: GridPartition, controllers: Sequence[RegionController]) -> bool:
    c = part.rect(seed).center
    for ctl in controllers:
        if not _holding(ctl):
            continue
        if seed in ctl.region.grids or ctl.region.bounding_box.contains(c):
            return True
    return False


# -- strategy comparison ----------------------------------------------------------

STRATEGIES = (Strategy.NAIVE, Strategy.FREE_FLOW, Strategy.TRAPPED, Strategy.MACRO_MICRO)


@dataclass
class ComparisonResult:
    """Verdicts of all four strategies for every (tick, base grid)."""

    rows: list[tuple[int, GridId, dict[Strategy, bool]]]
    causes: dict[tuple[int, GridId], str]

    def present(self, strategy: Strategy) -> list[tuple[int, GridId]]:
        return [(t, g) for t, g, v in self.rows if v[strategy]]

    def grid_flags(self, strategy: Strategy, grid: GridId) -> list[bool]:
        return [v[strategy] for t, g, v in self.rows if g == grid]

    def summary(self) -> dict:
        out = {}
        for s in STRATEGIES:
            hits = self.present(s)
            out[s.value] = {
                "present_anywhere": bool(hits),
                "ticks_with_presence": len({t for t, _ in hits}),
                "grids_ever_congested": sorted({tuple(g.to_json()) for _, g in hits}),
            }
        return out

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        mpath = out / "comparison.csv"
        with open(mpath, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["tick", "column", "row"] + [s.value for s in STRATEGIES] + ["cause"])
            for t, g, v in self.rows:
                w.writerow([t, g.column, g.row] + [int(v[s]) for s in STRATEGIES]
                           + [self.causes.get((t, g), "")])
        spath = out / "summary.json"
        spath.write_text(json.dumps(self.summary(), indent=2) + "\n", encoding="utf-8")
        return {"matrix": mpath, "summary": spath}


def compare_strategies(scenario: Scenario, ticks: int | None = None,
                       workers: int = 1) -> ComparisonResult:
    """Run all four detectors side by side on the same uncontrolled snapshots."""
    ticks = ticks or scenario.compare_ticks
    part = scenario.partition
    dparams = scenario.detection
    grids = list(part.grids(Layer.BASE))
    world = initial_world(scenario)
    window = max(1, round(dparams.flow_window / scenario.dt))
    history: deque[Snapshot] = deque([world.snapshot()], maxlen=window + 1)
    rows = []
    causes = {}
    for tick in range(1, ticks + 1):
        world = step(world, scenario.dt)
        snap = world.snapshot()
        history.append(snap)
        analysis = analyze(snap, dparams, part)
        checks = {s: grid_checker(s, snap, history[0], part, dparams, analysis)
                  for s in STRATEGIES}
        flags = scan_grids(grids, lambda g: {s: checks[s](g) for s in STRATEGIES}, workers)
        for g, v in zip(grids, flags):
            rows.append((tick, g, v))
            if v[Strategy.MACRO_MICRO]:
                causes[(tick, g)] = detect_macro_micro(snap, g, dparams, part, analysis).cause.value
        if not snap.pedestrians:
            break
    return ComparisonResult(rows, causes)
