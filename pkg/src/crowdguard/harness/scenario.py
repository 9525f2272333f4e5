"""Scenario files: JSON with an explicit schema version, validated on load."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from ..control import ControlParams
from ..core import (
    CircleObstacle,
    ExitSegment,
    FieldConfig,
    Goal,
    InvalidArgument,
    Pedestrian,
    RectObstacle,
    Vec2,
    build_partition,
)
from ..detection import DetectionParams, Strategy
from ..dynamics import ForceKind, ForceParams, ScenarioForce

SCHEMA_VERSION = 1
MIN_SEPARATION = 0.2
ANGLE_FIELDS = {"theta_dir", "tol_angle", "arc_step"}  # degrees in files, radians in memory


class ScenarioError(ValueError):
    """Parse or validation failure; ``problems`` lists every violation found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Scenario:
    name: str
    field: FieldConfig
    cell_size: float
    pedestrians: tuple[Pedestrian, ...]
    scenario_force: ScenarioForce = ScenarioForce()
    forces: ForceParams = ForceParams()
    detection: DetectionParams = DetectionParams()
    control: ControlParams = ControlParams()
    control_enabled: bool = True
    strategy: Strategy = Strategy.MACRO_MICRO
    dt: float = 0.1
    seed: int = 0
    tick_budget: int = 3000
    disobedience_probability: float = 0.0
    detection_stride: int = 1
    compare_ticks: int = 100
    description: str = ""

    @property
    def partition(self):
        return build_partition(self.field, self.cell_size)

    def to_json(self) -> dict:
        """Fully expanded form (defaults filled in), as echoed into trace headers."""
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "description": self.description,
            "field": _field_to_json(self.field),
            "cell_size": self.cell_size,
            "pedestrians": [_ped_to_json(p) for p in self.pedestrians],
            "scenario_force": _force_to_json(self.scenario_force),
            "forces": asdict(self.forces),
            "detection": _params_to_json(self.detection),
            "control": {"enabled": self.control_enabled, **_params_to_json(self.control)},
            "strategy": self.strategy.value,
            "dt": self.dt,
            "seed": self.seed,
            "tick_budget": self.tick_budget,
            "disobedience_probability": self.disobedience_probability,
            "detection_stride": self.detection_stride,
            "compare_ticks": self.compare_ticks,
        }


def _params_to_json(obj) -> dict:
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = math.degrees(v) if f.name in ANGLE_FIELDS and v is not None else v
    return out


def _field_to_json(fc: FieldConfig) -> dict:
    obstacles = []
    for ob in fc.obstacles:
        if isinstance(ob, RectObstacle):
            obstacles.append({"type": "rect", "x0": ob.x0, "y0": ob.y0, "x1": ob.x1, "y1": ob.y1})
        else:
            obstacles.append({"type": "circle", "cx": ob.cx, "cy": ob.cy, "r": ob.r})
    exits = [{"x0": e.x0, "y0": e.y0, "x1": e.x1, "y1": e.y1} for e in fc.exits]
    return {"width": fc.width, "height": fc.height, "obstacles": obstacles, "exits": exits}


def _force_to_json(sf: ScenarioForce) -> dict:
    out: dict[str, Any] = {"kind": sf.kind.value, "gain": sf.gain}
    if sf.target is not None:
        out["target"] = [sf.target.x, sf.target.y]
    return out


def _ped_to_json(p: Pedestrian) -> dict:
    return {
        "id": p.id,
        "position": [p.position.x, p.position.y],
        "velocity": [p.velocity.x, p.velocity.y],
        "goal": p.goal.to_json(),
        "group": p.group_hint,
        "v_max": p.v_max,
        "desired_speed": p.desired_speed,
        "obedient": p.obedient,
    }


# -- parsing -------------------------------------------------------------------

def _vec(raw, where: str, problems: list[str]) -> Vec2 | None:
    try:
        x, y = raw
        return Vec2(float(x), float(y))
    except (TypeError, ValueError):
        problems.append(f"{where}: expected [x, y], got {raw!r}")
        return None


def _goal(raw, where: str, problems: list[str]) -> Goal | None:
    if not isinstance(raw, dict) or len(raw) != 1 or next(iter(raw)) not in ("point", "heading"):
        problems.append(f"{where}: goal must be {{'point': [x, y]}} or {{'heading': [x, y]}}")
        return None
    key, val = next(iter(raw.items()))
    v = _vec(val, f"{where}.{key}", problems)
    if v is None:
        return None
    try:
        return Goal(point=v) if key == "point" else Goal(heading=v)
    except InvalidArgument as e:
        problems.append(f"{where}: {e}")
        return None


def _params(cls, raw: dict | None, where: str, problems: list[str], skip=()):
    raw = dict(raw or {})
    for k in skip:
        raw.pop(k, None)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    for k in unknown:
        problems.append(f"{where}: unknown key {k!r}")
    kwargs = {}
    for k in sorted(set(raw) & known):
        v = raw[k]
        if k in ANGLE_FIELDS and v is not None:
            v = math.radians(float(v))
        kwargs[k] = v
    try:
        return cls(**kwargs)
    except (InvalidArgument, TypeError, ValueError) as e:
        problems.append(f"{where}: {e}")
        return cls()


def _block(gen: dict, next_id: int, where: str, problems: list[str]) -> list[dict]:
    """Rectangular lattice of pedestrians sharing a goal and group."""
    origin = _vec(gen.get("origin"), f"{where}.origin", problems)
    goal = gen.get("goal")
    if origin is None:
        return []
    rows, cols = int(gen.get("rows", 1)), int(gen.get("cols", 1))
    sp = float(gen.get("spacing", 1.0))
    vel = gen.get("velocity", [0.0, 0.0])
    out = []
    for r in range(rows):
        for c in range(cols):
            out.append({
                "id": next_id + len(out),
                "position": [origin.x + c * sp, origin.y + r * sp],
                "velocity": vel,
                "goal": goal,
                "group": gen.get("group", 0),
                "v_max": gen.get("v_max", 1.3),
                **({"desired_speed": gen["desired_speed"]} if "desired_speed" in gen else {}),
                **({"obedient": gen["obedient"]} if "obedient" in gen else {}),
            })
    return out


def converging_layout(center: Vec2, sizes: list[int], radius: float, spacing: float,
                      v_max: float, start_angle: float = math.pi / 2,
                      initial_speed: float | None = None, first_id: int = 0,
                      disobedient: int = 0) -> list[dict]:
    """Groups evenly spaced on a ring, each a compact block heading through ``center``.

    ``disobedient`` marks that many pedestrians (spread over the groups,
    round robin) as not obedient.
    """
    out = []
    k = len(sizes)
    v0 = v_max if initial_speed is None else initial_speed
    pid = first_id
    for gi, n in enumerate(sizes):
        theta = start_angle + 2 * math.pi * gi / k
        u = Vec2(math.cos(theta), math.sin(theta))   # outward
        h = -u                                        # heading toward the centre
        side = Vec2(-h.y, h.x)
        cols = math.ceil(math.sqrt(n))
        for m in range(n):
            r, c = divmod(m, cols)
            lateral = (c - (cols - 1) / 2) * spacing
            back = r * spacing
            p = center + u * (radius + back) + side * lateral
            out.append({
                "id": pid,
                "position": [p.x, p.y],
                "velocity": [h.x * v0, h.y * v0],
                "goal": {"heading": [h.x, h.y]},
                "group": gi,
                "v_max": v_max,
            })
            pid += 1
    if disobedient:
        # round robin over the groups so every group gets its share
        rank = {}
        seen: dict[int, int] = {}
        for i, p in enumerate(out):
            rank[i] = (seen.get(p["group"], 0), p["group"])
            seen[p["group"]] = seen.get(p["group"], 0) + 1
        order = sorted(range(len(out)), key=lambda i: rank[i])
        for i in order[:disobedient]:
            out[i]["obedient"] = False
        for p in out:
            p.setdefault("obedient", True)
    return out


def _converging(gen: dict, next_id: int, where: str, problems: list[str]) -> list[dict]:
    center = _vec(gen.get("center"), f"{where}.center", problems)
    if center is None:
        return []
    sizes = gen.get("sizes")
    if sizes is None:
        humans, groups = int(gen.get("humans", 0)), int(gen.get("groups", 0))
        if groups < 1:
            problems.append(f"{where}: needs 'sizes' or positive 'groups'")
            return []
        sizes = [humans // groups + (1 if i < humans % groups else 0) for i in range(groups)]
    return converging_layout(
        center, [int(s) for s in sizes], float(gen.get("radius", 6.0)),
        float(gen.get("spacing", 0.8)), float(gen.get("v_max", 1.3)),
        math.radians(float(gen.get("start_angle", 90.0))),
        gen.get("initial_speed"), next_id, int(gen.get("disobedient", 0)),
    )


GENERATORS = {"block": _block, "converging": _converging}


def parse_scenario(raw: dict, source: str = "<scenario>") -> Scenario:
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ScenarioError([f"{source}: top level must be an object"])
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        problems.append(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")

    f = raw.get("field") or {}
    obstacles = []
    for i, ob in enumerate(f.get("obstacles", [])):
        try:
            if ob.get("type") == "rect":
                obstacles.append(RectObstacle(float(ob["x0"]), float(ob["y0"]),
                                              float(ob["x1"]), float(ob["y1"])))
            elif ob.get("type") == "circle":
                obstacles.append(CircleObstacle(float(ob["cx"]), float(ob["cy"]), float(ob["r"])))
            else:
                problems.append(f"field.obstacles[{i}]: type must be 'rect' or 'circle'")
        except (KeyError, TypeError, ValueError) as e:
            problems.append(f"field.obstacles[{i}]: bad or missing {e}")
    exits = []
    for i, ex in enumerate(f.get("exits", [])):
        try:
            exits.append(ExitSegment(float(ex["x0"]), float(ex["y0"]),
                                     float(ex["x1"]), float(ex["y1"])))
        except (KeyError, TypeError, ValueError) as e:
            problems.append(f"field.exits[{i}]: bad or missing {e}")
    try:
        fc = FieldConfig(float(f["width"]), float(f["height"]), tuple(obstacles), tuple(exits))
        problems.extend(f"field: {p}" for p in fc.problems())
    except (KeyError, TypeError, ValueError) as e:
        problems.append(f"field: bad or missing {e}")
        fc = None

    cell = raw.get("cell_size", 10.0)
    if fc is not None and not fc.problems():
        try:
            build_partition(fc, float(cell))
        except (InvalidArgument, TypeError, ValueError) as e:
            problems.append(f"cell_size: {e}")

    sf_raw = raw.get("scenario_force") or {"kind": "none"}
    try:
        kind = ForceKind(sf_raw.get("kind", "none"))
        target = sf_raw.get("target")
        sf = ScenarioForce(kind, _vec(target, "scenario_force.target", problems)
                           if target is not None else None, float(sf_raw.get("gain", 0.0)))
    except (ValueError, InvalidArgument) as e:
        problems.append(f"scenario_force: {e}")
        sf = ScenarioForce()
    if sf.kind is ForceKind.EXIT and fc is not None and not fc.exits:
        problems.append("scenario_force: exit attraction needs at least one exit")

    forces = _params(ForceParams, raw.get("forces"), "forces", problems)
    detection = _params(DetectionParams, raw.get("detection"), "detection", problems)
    control_raw = dict(raw.get("control") or {})
    enabled = bool(control_raw.pop("enabled", True))
    control = _params(ControlParams, control_raw, "control", problems)

    # pedestrians: explicit entries plus generated blocks
    entries = list(raw.get("pedestrians", []))
    for i, gen in enumerate(raw.get("generators", [])):
        fn = GENERATORS.get(gen.get("type"))
        if fn is None:
            problems.append(f"generators[{i}]: unknown type {gen.get('type')!r}")
            continue
        next_id = max([int(e.get("id", -1)) for e in entries], default=-1) + 1
        entries.extend(fn(gen, next_id, f"generators[{i}]", problems))

    seed = int(raw.get("seed", 0))
    p_dis = float(raw.get("disobedience_probability", 0.0))
    if not 0.0 <= p_dis <= 1.0:
        problems.append("disobedience_probability must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    peds = []
    seen_ids = set()
    for i, e in enumerate(sorted(entries, key=lambda e: int(e.get("id", -1)))):
        where = f"pedestrian {e.get('id', f'#{i}')}"
        try:
            pid = int(e["id"])
        except (KeyError, TypeError, ValueError):
            problems.append(f"{where}: missing integer id")
            continue
        if pid in seen_ids:
            problems.append(f"{where}: duplicate id")
            continue
        seen_ids.add(pid)
        pos = _vec(e.get("position"), f"{where}.position", problems)
        vel = _vec(e.get("velocity", [0.0, 0.0]), f"{where}.velocity", problems)
        goal = _goal(e.get("goal"), where, problems)
        if pos is None or vel is None or goal is None:
            continue
        obedient = e.get("obedient")
        if obedient is None:
            obedient = bool(rng.random() >= p_dis)
        try:
            ped = Pedestrian(pid, pos, vel, goal, int(e.get("group", 0)), float(e.get("v_max", 1.3)),
                             bool(obedient),
                             None if e.get("desired_speed") is None else float(e["desired_speed"]))
        except (InvalidArgument, TypeError, ValueError) as err:
            problems.append(f"{where}: {err}")
            continue
        if ped.velocity.norm() > ped.v_max + 1e-12:
            problems.append(f"{where}: initial speed exceeds v_max")
        if fc is not None:
            if not fc.in_field(pos):
                problems.append(f"{where}: position outside the field")
            elif any(ob.contains(pos) for ob in fc.obstacles):
                problems.append(f"{where}: position inside an obstacle")
        peds.append(ped)
    for i, a in enumerate(peds):
        for b in peds[i + 1:]:
            if a.position.dist(b.position) < MIN_SEPARATION:
                problems.append(f"pedestrians {a.id} and {b.id} start closer than {MIN_SEPARATION} m")

    try:
        strategy = Strategy(raw.get("strategy", "macromicro"))
    except ValueError:
        problems.append(f"strategy: unknown {raw.get('strategy')!r}")
        strategy = Strategy.MACRO_MICRO
    dt = raw.get("dt", 0.1)
    if not (isinstance(dt, (int, float)) and dt > 0):
        problems.append("dt must be positive")
    for key in ("tick_budget", "detection_stride", "compare_ticks"):
        v = raw.get(key, 1)
        if not (isinstance(v, int) and v > 0):
            problems.append(f"{key} must be a positive integer")
    known = {"schema_version", "name", "description", "field", "cell_size", "pedestrians",
             "generators", "scenario_force", "forces", "detection", "control", "strategy", "dt",
             "seed", "tick_budget", "disobedience_probability", "detection_stride",
             "compare_ticks"}
    for k in sorted(set(raw) - known):
        problems.append(f"unknown top-level key {k!r}")
    if problems:
        raise ScenarioError([f"{source}: {p}" for p in problems])
    return Scenario(
        name=str(raw.get("name", Path(source).stem)),
        description=str(raw.get("description", "")),
        field=fc,
        cell_size=float(cell),
        pedestrians=tuple(peds),
        scenario_force=sf,
        forces=forces,
        detection=detection,
        control=control,
        control_enabled=enabled,
        strategy=strategy,
        dt=float(dt),
        seed=seed,
        tick_budget=int(raw.get("tick_budget", 3000)),
        disobedience_probability=p_dis,
        detection_stride=int(raw.get("detection_stride", 1)),
        compare_ticks=int(raw.get("compare_ticks", 100)),
    )


def load_scenario(path: str | Path, overrides: dict | None = None) -> Scenario:
    """Parse and validate a scenario file.

    ``overrides`` replaces top-level keys before validation, so a different
    ``seed`` re-samples obedience exactly as if it were written in the file.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError([f"{path}: line {e.lineno} column {e.colno}: {e.msg}"]) from None
    if not isinstance(raw, dict):
        raise ScenarioError([f"{path}: top level must be an object"])
    raw.update(overrides or {})
    return parse_scenario(raw, str(path))


DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def bundled(name: str) -> Path:
    """Path of a scenario shipped with the package, e.g. ``bundled('localized')``."""
    p = DATA_DIR / (name if name.endswith(".json") else f"{name}.json")
    if not p.exists():
        raise FileNotFoundError(f"no bundled scenario {name!r}")
    return p


def bundled_names() -> list[str]:
    return sorted(p.stem for p in DATA_DIR.glob("*.json"))
