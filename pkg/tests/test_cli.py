import json
import subprocess
import sys

from crowdguard.cli import main
from crowdguard.harness import bundled


def test_run_writes_outputs(tmp_path, capsys):
    code = main(["run", "--scenario", "localized", "--ticks", "50", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "trace.ndjson").exists()
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["ticks_run"] == 50


def test_run_overrides(tmp_path):
    code = main(["run", "--scenario", str(bundled("evacuation")), "--seed", "4", "--dt", "0.05",
                 "--ticks", "20", "--strategy", "trapped", "--control", "off",
                 "--workers", "4", "--out", str(tmp_path)])
    assert code == 0
    header = json.loads((tmp_path / "trace.ndjson").read_text().splitlines()[0])
    assert header["scenario"]["seed"] == 4
    assert header["options"] == {"strategy": "trapped", "control": False, "dt": 0.05,
                                 "ticks": 20, "workers": 4}


def test_compare_and_plot(tmp_path, capsys):
    assert main(["compare", "--scenario", "localized", "--ticks", "5",
                 "--out", str(tmp_path / "cmp")]) == 0
    assert (tmp_path / "cmp" / "comparison.csv").exists()
    assert main(["run", "--scenario", "localized", "--ticks", "30",
                 "--out", str(tmp_path / "run")]) == 0
    assert main(["plot-data", "--trace", str(tmp_path / "run" / "trace.ndjson"),
                 "--stride", "10", "--out", str(tmp_path / "frames")]) == 0
    assert len(list((tmp_path / "frames").glob("frame_*.csv"))) == 3


def test_invalid_scenario_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "schema_version": 1,
        "field": {"width": 10, "height": 10,
                  "obstacles": [{"type": "rect", "x0": 4, "y0": 4, "x1": 6, "y1": 6}]},
        "cell_size": 5,
        "pedestrians": [{"id": 3, "position": [5, 5], "goal": {"heading": [1, 0]}}],
    }))
    proc = subprocess.run([sys.executable, "-m", "crowdguard.cli", "run", "--scenario", str(bad),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "pedestrian 3: position inside an obstacle" in proc.stderr


def test_unparseable_scenario(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{\n  \"field\": [1, 2,\n")
    assert main(["compare", "--scenario", str(bad), "--out", str(tmp_path)]) == 2
    assert "line" in capsys.readouterr().err


def test_missing_trace(tmp_path, capsys):
    assert main(["plot-data", "--trace", str(tmp_path / "nope"), "--out", str(tmp_path)]) == 1
