import csv
import json
import subprocess
import sys

import pytest

from multihop_aoi.cli import main

CONFIG = """
[graph]
nodes = 3

[link 0-1]
dist = exp 1.0
buffer = 1

[link 1-2]
dist = exp 2.0
buffer = 1

[arrivals]
process = poisson
rate = 0.8

[run]
horizon = 200
replications = 2
policies = prmp-lgfs, fcfs

[harness]
pairs = prmp-lgfs:fcfs

[output]
formats = csv, manifest, dat
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(CONFIG)
    return path


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(config), "--out-dir", str(out), "--seed", "5"]) == 0
    rows = read_rows(out / "results.csv")
    assert {(r["policy"], r["node"]) for r in rows} == {(p, n) for p in ("prmp-lgfs", "fcfs") for n in ("1", "2")}
    assert json.loads((out / "manifest.json").read_text())["seed"] == 5
    assert str(out / "results.csv") in capsys.readouterr().out


def test_sweep_overrides(config, tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", str(config), "--lambda", "0.5:1.0:0.5", "--reps", "3", "--out-dir", str(out)]) == 0
    rows = read_rows(out / "results.csv")
    assert {r["lambda"] for r in rows} == {"0.5", "1.0"}
    assert {r["reps"] for r in rows} == {"3"}


def test_couple(config, tmp_path, capsys):
    out = tmp_path / "couple"
    assert main(["couple", str(config), "--out-dir", str(out)]) == 0
    assert "prmp-lgfs>fcfs: dominance held on 2/2 seeds" in capsys.readouterr().out
    assert len(read_rows(out / "dominance.csv")) == 2


def test_preset_round_trip(tmp_path, capsys):
    path = tmp_path / "presets" / "fig5.ini"
    assert main(["preset", "fig5", "--out", str(path), "--gamma-shape", "4"]) == 0
    text = path.read_text()
    assert "gamma 4.0 0.25" in text


def test_check_dist(capsys):
    assert main(["check-dist", "gamma", "0.5", "2"]) == 0
    assert "NBU=no NWU=yes" in capsys.readouterr().out
    assert main(["check-dist", "erlang 2 1"]) == 0
    assert "NBU=yes NWU=no" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "does-not-exist.ini"],
        ["check-dist", "cauchy", "1"],
        ["sweep", "{config}", "--lambda", "1:2"],
        ["run", "{config}", "--reps", "0"],
        ["couple", "{config}", "--pairs", "fcfs"],
        ["preset", "fig9", "--out", "x.ini"],
        [],
    ],
)
def test_invalid_input_exits_1(argv, config, capsys):
    argv = [a.format(config=config) for a in argv]
    assert main(argv) == 1
    capsys.readouterr()


def test_bad_config_exits_1(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(CONFIG.replace("horizon = 200\n", ""))
    assert main(["run", str(path)]) == 1
    assert "run.horizon" in capsys.readouterr().err


def test_runtime_failure_exits_2(config, tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    # the output directory cannot be created under a regular file
    assert main(["run", str(config), "--out-dir", str(blocker / "sub")]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "multihop_aoi", "check-dist", "exp", "1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "NBU=yes NWU=yes" in res.stdout
