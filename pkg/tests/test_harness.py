import csv
import json
from dataclasses import replace

import pytest

from crowdguard.core import GridId, Vec2
from crowdguard.detection import Strategy
from crowdguard.dynamics import ForceKind
from crowdguard.harness import (
    RunOptions,
    ScenarioError,
    Trace,
    bundled,
    bundled_names,
    compare_strategies,
    emit_plot_data,
    load_scenario,
    parse_scenario,
    run,
)


def _raw(**kw):
    raw = {
        "schema_version": 1,
        "name": "tiny",
        "field": {"width": 20, "height": 20,
                  "obstacles": [{"type": "circle", "cx": 10, "cy": 10, "r": 2}]},
        "cell_size": 5,
        "pedestrians": [
            {"id": 0, "position": [2, 2], "goal": {"heading": [1, 0]}},
            {"id": 3, "position": [10, 10.5], "goal": {"point": [18, 18]}},
        ],
        "tick_budget": 20,
    }
    raw.update(kw)
    return raw


def test_bundled_fixtures_load():
    for name in bundled_names():
        sc = load_scenario(bundled(name))
        assert sc.name == name


def test_evacuation_fixture():
    sc = load_scenario(bundled("evacuation"))
    assert sc.field.exits and sc.scenario_force.kind is ForceKind.EXIT


def test_localized_fixture():
    sc = load_scenario(bundled("localized"))
    assert sc.scenario_force.kind is ForceKind.FIXED_POINT
    assert len({p.group_hint for p in sc.pedestrians}) == 3


def test_obstacle_start_names_id():
    with pytest.raises(ScenarioError) as err:
        parse_scenario(_raw())
    assert any("pedestrian 3" in p and "obstacle" in p for p in err.value.problems)


def test_all_problems_reported():
    raw = _raw(dt=-1, strategy="psychic", bogus=1)
    raw["pedestrians"][1]["position"] = [4, 4]
    raw["pedestrians"].append({"id": 0, "position": [9, 2], "goal": {"heading": [1, 0]}})
    with pytest.raises(ScenarioError) as err:
        parse_scenario(raw)
    text = "\n".join(err.value.problems)
    for bit in ("dt must be positive", "psychic", "bogus", "duplicate id"):
        assert bit in text


def test_close_start_rejected():
    raw = _raw()
    raw["pedestrians"][1]["position"] = [2.1, 2.0]
    with pytest.raises(ScenarioError, match="closer"):
        parse_scenario(raw)


def test_seed_sets_obedience():
    raw = _raw(disobedience_probability=0.5)
    raw["pedestrians"] = [{"id": i, "position": [1 + i, 1], "goal": {"heading": [1, 0]}}
                          for i in range(15)]
    a = parse_scenario(dict(raw, seed=1))
    b = parse_scenario(dict(raw, seed=1))
    c = parse_scenario(dict(raw, seed=2))
    flags = [p.obedient for p in a.pedestrians]
    assert flags == [p.obedient for p in b.pedestrians]
    assert flags != [p.obedient for p in c.pedestrians]


def test_json_round_trip(localized):
    again = parse_scenario(localized.to_json())
    assert again == localized


def test_parse_error_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"schema_version": 1,\n  "field": oops}')
    with pytest.raises(ScenarioError, match="line 2 column"):
        load_scenario(p)


@pytest.fixture(scope="module")
def controlled():
    return run(load_scenario(bundled("localized")))


def test_controlled_run_resolves(controlled):
    events = [r["event"] for r in controlled.trace.of_type("event")]
    assert "Resolved" in events
    assert controlled.resolved()


def test_metrics_consistent(controlled):
    rows = {r.region: r for r in controlled.metrics.regions}
    for ev in controlled.trace.of_type("event"):
        if ev["event"] == "Resolved":
            row = rows[ev["region"]]
            assert row.resolve_tick == ev["tick"]
            assert row.seconds_to_resolve == pytest.approx(
                (row.resolve_tick - row.detection_tick) * controlled.metrics.dt)
            assert row.humans == 12 and row.conflicting_groups == 3


def test_trace_tick_ordered(controlled):
    ticks = [r["tick"] for r in controlled.trace.records]
    assert ticks == sorted(ticks)
    assert controlled.trace.records[0]["type"] == "header"
    assert controlled.trace.records[-1]["type"] == "metrics"


def test_trace_rejects_out_of_order():
    t = Trace()
    t.add({"type": "x", "tick": 3})
    with pytest.raises(ValueError):
        t.add({"type": "x", "tick": 2})


def test_instructions_traced(controlled):
    insts = controlled.trace.of_type("instruction")
    assert insts
    assert all(r["issue_tick"] == r["tick"] for r in insts)


def test_uncontrolled_run_never_resolves(localized):
    res = run(localized, RunOptions(control=False))
    assert res.trace.of_type("event") == []
    assert res.metrics.regions == []
    assert res.metrics.ticks_run == localized.tick_budget or not res.world.pedestrians


def test_reruns_byte_identical(localized, tmp_path):
    a = run(localized, RunOptions(ticks=300)).write(tmp_path / "a")
    b = run(localized, RunOptions(ticks=300)).write(tmp_path / "b")
    assert a["trace"].read_bytes() == b["trace"].read_bytes()
    assert a["metrics"].read_bytes() == b["metrics"].read_bytes()


def test_trace_file_round_trip(controlled, tmp_path):
    path = controlled.trace.write(tmp_path / "t.ndjson")
    assert Trace.read(path).records == controlled.trace.records


def test_detection_stride(localized):
    sc = replace(localized, detection_stride=5)
    res = run(sc, RunOptions(control=False, ticks=20))
    assert [r["tick"] for r in res.trace.of_type("verdicts")] == [5, 10, 15, 20]


def test_other_strategy_recorded(evacuation):
    res = run(evacuation, RunOptions(strategy=Strategy.NAIVE, control=False, ticks=30))
    assert {r["strategy"] for r in res.trace.of_type("verdicts")} == {"naive"}
    assert any(r["congested"] for r in res.trace.of_type("verdicts"))


def test_empty_field_all_absent():
    cmp = compare_strategies(load_scenario(bundled("empty")), ticks=10)
    assert cmp.rows
    assert all(not any(v.values()) for _, _, v in cmp.rows)


def test_comparison_files(localized, tmp_path):
    cmp = compare_strategies(localized, ticks=10)
    paths = cmp.write(tmp_path)
    with open(paths["matrix"]) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 10 * 25
    hit = [r for r in rows if r["macromicro"] == "1"]
    assert hit and all(r["cause"] == "direction-conflict" for r in hit)
    summary = json.loads(paths["summary"].read_text())
    assert summary["macromicro"]["present_anywhere"]
    assert not summary["naive"]["present_anywhere"]


def test_plot_frames(tmp_path):
    res = run(load_scenario(bundled("localized")), RunOptions(ticks=100))
    files = emit_plot_data(res.trace, tmp_path, stride=10)
    assert [f.name for f in files] == [f"frame_{t:06d}.csv" for t in range(10, 101, 10)]
    peds = {}
    for r in res.trace.of_type("ped"):
        peds.setdefault(r["tick"], []).append(r)
    verdicts = {r["tick"]: {GridId.from_json(g) for g in r["congested"]}
                for r in res.trace.of_type("verdicts")}
    part = load_scenario(bundled("localized")).partition
    leading = {r["tick"] for r in res.trace.of_type("cca")
               if r["phase"] in ("LeadingStraight", "LeadingArc")}
    for f in files:
        t = int(f.stem.split("_")[1])
        with open(f) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(peds[t])
        for row in rows:
            cell = part.locate(Vec2(float(row["x"]), float(row["y"])))
            assert row["congested"] == str(int(cell in verdicts.get(t, set())))
            assert (row["spotlight_x"] != "") == (t in leading)


def test_plot_frames_from_file(controlled, tmp_path):
    path = controlled.trace.write(tmp_path / "trace.ndjson")
    files = emit_plot_data(path, tmp_path / "frames", stride=50)
    assert len(files) == controlled.metrics.ticks_run // 50
    with pytest.raises(ValueError):
        emit_plot_data(path, tmp_path, stride=0)


def test_park_scenario_resolves():
    res = run(load_scenario(bundled("park")))
    assert res.resolved()
