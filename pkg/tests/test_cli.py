import subprocess
import sys

from swarmlearn.cli import main
from swarmlearn.config import load_config
from swarmlearn.harness import read_csv

from conftest import small_config


def test_run_with_config_and_overrides(tmp_path, capsys):
    cfg_path = tmp_path / "c.yaml"
    cfg_path.write_text(small_config().dumps())
    rc = main(["run", "--config", str(cfg_path), "--preset", "IL", "--out", str(tmp_path / "o"),
               "--seed", "9", "--set", "run.max_iterations=200"])
    assert rc == 0
    saved = load_config(tmp_path / "o" / "config.yaml")
    assert saved.run.seed == 9 and saved.run.max_iterations == 200 and saved.learn.variant == "IL"
    assert str(tmp_path / "o") in capsys.readouterr().out


def test_run_then_report(tmp_path, capsys):
    cfg_path = tmp_path / "c.yaml"
    cfg_path.write_text(small_config(**{"run.runs": 3, "run.max_iterations": 200, "env.token_count": 600}).dumps())
    for v in ("Baseline", "EVO"):
        assert main(["run", "--config", str(cfg_path), "--preset", v, "--out", str(tmp_path / v)]) == 0
    assert main(["report", "--in", str(tmp_path / "Baseline"), str(tmp_path / "EVO"),
                 "--out", str(tmp_path / "rep")]) == 0
    assert "median=" in capsys.readouterr().out
    assert read_csv(tmp_path / "rep" / "variants.csv")[0]["comparison"] == "Baseline vs EVO"
    assert (tmp_path / "rep" / "end_values.png").exists()


def test_sweep_command(tmp_path, capsys):
    sw = tmp_path / "sw.yaml"
    sw.write_text("sweep.counts: [5]\nsweep.values: [10, 5000]\nsweep.iterations: 50\n"
                  "sweep.runs: 1\nrobot.count: 4\n")
    assert main(["sweep", "--config", str(sw), "--out", str(tmp_path / "s")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "count,value,median_delta_E,neutral_flag" and len(out) == 3
    assert (tmp_path / "s" / "surface.png").exists()


def test_errors_exit_2(tmp_path, capsys):
    assert main(["run", "--preset", "desk:tropical", "--out", str(tmp_path / "x")]) == 2
    assert main(["run", "--set", "nonsense", "--out", str(tmp_path / "x")]) == 2
    assert main(["report", "--in", str(tmp_path / "missing"), "--out", str(tmp_path / "r")]) == 2
    assert "error:" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "swarmlearn", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "sweep" in res.stdout
