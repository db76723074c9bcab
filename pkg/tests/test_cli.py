import json
import subprocess
import sys

from veisim.cli import main
from veisim.experiment import read_results_csv

SMALL_GRID = """\
symbols:
  x_veh2_init: [-85.0, -65.0, 10.0]
  r_fov: [10.0, 20.0, 10.0]
"""


def test_run_writes_artifacts(tmp_path, capsys):
    assert main(["run", "--scenario", "intersection", "--out", str(tmp_path), "--times", "0,3,7.5"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["outcome"] == "collision"
    assert info["collided_with"] == "veh2"
    for name in ("trajectory.csv", "episode.json", "strip.svg"):
        assert (tmp_path / name).is_file()


def test_run_normal_behavior(capsys):
    assert main(["run", "--scenario", "intersection", "--behavior", "normal"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["outcome"] == "timeout" and info["final_mode"] == "wait"


def test_sweep_small_grid(tmp_path, capsys):
    grid = tmp_path / "grid.yaml"
    grid.write_text(SMALL_GRID)
    out = tmp_path / "out"
    assert main(["sweep", "--scenario", "intersection", "--grid", str(grid), "--out", str(out)]) == 0
    rows = read_results_csv(out / "results.csv")
    assert len(rows) == 12
    assert [r["behavior"] for r in rows] == ["aggressive"] * 6 + ["normal"] * 6
    assert (out / "summary.json").is_file() and (out / "outcomes.svg").is_file()
    assert "one_vehicle_crossing" in capsys.readouterr().out


def test_render_from_log(tmp_path):
    main(["run", "--scenario", "straight_road", "--out", str(tmp_path)])
    out = tmp_path / "frames" / "strip.svg"
    assert main(["render", "--log", str(tmp_path / "trajectory.csv"), "--times", "0,3.0,6.1,7.5",
                 "--out", str(out)]) == 0
    assert out.read_text().count('id="f3-escooter"') == 1


def test_render_out_of_range_is_an_error(tmp_path, capsys):
    main(["run", "--scenario", "intersection", "--out", str(tmp_path)])
    code = main(["render", "--log", str(tmp_path / "trajectory.csv"), "--times", "99", "--out",
                 str(tmp_path / "x.svg")])
    assert code == 2
    assert "99" in capsys.readouterr().err


def test_bad_scenario_is_an_error(capsys):
    assert main(["run", "--scenario", "nowhere"]) == 2
    assert "nowhere" in capsys.readouterr().err


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "intersection" in out and "one_vehicle_passing" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "veisim", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "straight_road" in proc.stdout
