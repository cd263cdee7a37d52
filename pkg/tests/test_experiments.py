import csv
import json
import math
import os

import numpy as np
import pytest

from multihop_aoi.distributions import Exponential, Gamma, ShiftedExponential
from multihop_aoi.errors import ParseError, UnknownKey, ValidationError
from multihop_aoi.experiments import (
    CSV_HEADER,
    DOMINANCE_HEADER,
    SWEEP_GRID,
    OutputSpec,
    PolicyEntry,
    SweepTable,
    config_hash,
    config_to_text,
    derive_seed,
    emit_results,
    load_config,
    parse_config,
    parse_lambda_range,
    preset_fig4,
    preset_fig5,
    run_dominance,
    run_sweep,
    save_config,
)
from multihop_aoi.model import INF, Packets, TwoPointDelay

MINIMAL = """
[graph]
nodes = 2

[link 0-1]
dist = exp 1.0

[run]
horizon = 100
policies = fcfs
"""


def small(cfg, directory, **changes):
    out = OutputSpec(str(directory), cfg.output.formats, cfg.output.nodes, cfg.output.metrics)
    return cfg.replace(output=out, **changes)


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.graph.node_count == 2
    link = cfg.graph.links[0]
    assert link.key == (0, 1) and link.buffer == INF and link.dist == Exponential(1.0)
    assert cfg.horizon == 100.0 and cfg.replications == 1 and cfg.seed == 0
    assert cfg.policies == (PolicyEntry("fcfs"),)
    assert cfg.arrivals.process == "erlang2" and cfg.arrivals.rate == 1.0
    assert cfg.harness.coupling == "auto"
    assert cfg.output.nodes == (1,) and cfg.output.metrics == ("avg-age",)
    assert cfg.sweep_values == (1.0,)


def test_missing_horizon():
    text = MINIMAL.replace("horizon = 100\n", "")
    with pytest.raises(ValidationError) as err:
        parse_config(text)
    assert err.value.field == "run.horizon"


def test_unknown_keys_and_sections():
    with pytest.raises(UnknownKey):
        parse_config(MINIMAL + "colour = blue\n")
    with pytest.raises(UnknownKey):
        parse_config(MINIMAL + "\n[plots]\nstyle = dark\n")


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as err:
        parse_config("[graph]\nnodes = 2\nthis line has no separator\n")
    assert err.value.line == 3
    with pytest.raises(ParseError):
        parse_config("nodes = 2\n")


@pytest.mark.parametrize(
    "edit, field",
    [
        (("horizon = 100", "horizon = -1"), "run.horizon"),
        (("policies = fcfs", "policies = sjf"), "run.policies"),
        (("policies = fcfs", "policies = fcfs, fcfs"), "run.policies"),
        (("dist = exp 1.0", "dist = exp -1"), "link 0-1.dist"),
        (("nodes = 2", "nodes = two"), "graph.nodes"),
    ],
)
def test_validation_fields(edit, field):
    with pytest.raises(ValidationError) as err:
        parse_config(MINIMAL.replace(*edit))
    assert err.value.field == field


def test_explicit_packets():
    cfg = parse_config(MINIMAL + "\n[arrivals]\npackets = 0.5:1.0, 1.0:1.0\n")
    assert cfg.arrivals == Packets.from_pairs([(0.5, 1.0), (1.0, 1.0)])
    assert parse_config(config_to_text(cfg)) == cfg


def test_policy_entries():
    assert PolicyEntry.parse("np-lgfs@1") == PolicyEntry("np-lgfs", 1)
    assert PolicyEntry.parse("fcfs@inf").label == "fcfs@inf"
    assert PolicyEntry.parse("prmp-lgfs").label == "prmp-lgfs"


def test_lambda_ranges():
    assert parse_lambda_range("0.5:1.0:0.25") == (0.5, 0.75, 1.0)
    assert parse_lambda_range("0.3, 0.7") == (0.3, 0.7)
    assert SWEEP_GRID[0] == 0.1 and SWEEP_GRID[-1] == 2.0 and len(SWEEP_GRID) == 20
    with pytest.raises(ValueError):
        parse_lambda_range("1:2")


def test_fig4_preset():
    cfg = preset_fig4()
    means = {l.key: l.dist.mean for l in cfg.graph.links}
    assert means == {(0, 1): 1.0, (0, 2): 0.5, (1, 2): 1.0}
    assert all(isinstance(l.dist, Exponential) for l in cfg.graph.links)
    assert cfg.arrivals.delay == TwoPointDelay(1.0, 100.0, 0.5)
    assert cfg.arrivals.process == "erlang2"
    assert {p.label for p in cfg.policies} == {
        f"{n}@{b}" for n in ("prmp-lgfs", "np-lgfs", "np-lcfs", "fcfs") for b in ("1", "inf")
    }
    assert cfg.output.nodes == (2,) and cfg.output.metrics == ("avg-peak-age",)
    assert cfg.sweep_values == SWEEP_GRID


def test_fig5_preset():
    cfg = preset_fig5()
    links = {l.key: l.dist for l in cfg.graph.links}
    assert set(links) == {(0, 1), (1, 3), (0, 2), (1, 2), (2, 3)}
    for key in ((0, 1), (1, 3)):
        assert isinstance(links[key], Gamma) and links[key].mean == pytest.approx(1.0, abs=1e-15)
        assert links[key].shape == 2.0
    for key in ((0, 2), (1, 2), (2, 3)):
        assert links[key] == ShiftedExponential(0.5, 2.0)
    assert {p.name for p in cfg.policies} == {"fcfs", "np-lcfs", "np-lgfs"}
    assert cfg.output.nodes == (3,) and cfg.output.metrics == ("avg-age",)
    assert preset_fig5(0.5).graph.links[0].dist.mean == pytest.approx(1.0)


@pytest.mark.parametrize("make", [preset_fig4, preset_fig5, lambda: parse_config(MINIMAL)])
def test_config_round_trip(make, tmp_path):
    cfg = make()
    path = tmp_path / "c.ini"
    save_config(cfg, path)
    again = load_config(path)
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_sweep_shape(tmp_path):
    cfg = small(parse_config(MINIMAL), tmp_path)
    table = run_sweep(cfg, [0.5], replications=1, seed=3)
    assert len(table.rows) == 1
    row = table.rows[0]
    assert (row.lam, row.policy, row.node, row.metric, row.reps) == (0.5, "fcfs", 1, "avg-age", 1)
    assert row.ci_low == row.mean == row.ci_high


def test_sweep_is_deterministic_and_bytes_match(tmp_path):
    cfg = small(preset_fig4(), tmp_path / "a", horizon=200.0)
    a = run_sweep(cfg, [0.5, 1.0], replications=3, seed=7)
    b = run_sweep(cfg, [0.5, 1.0], replications=3, seed=7)
    assert a.rows == b.rows
    emit_results(a, cfg.output)
    emit_results(b, OutputSpec(str(tmp_path / "b"), ("csv",)))
    with open(tmp_path / "a" / "results.csv", "rb") as x, open(tmp_path / "b" / "results.csv", "rb") as y:
        assert x.read() == y.read()
    for r in a.rows:
        assert r.ci_low <= r.mean <= r.ci_high
    assert a.lookup(0.5, "fcfs@1", 2, "avg-peak-age").reps == 3


def test_seeds_are_derived_per_cell():
    seeds = {derive_seed(0, li, r) for li in range(5) for r in range(40)}
    assert len(seeds) == 200
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2) != derive_seed(1, 1, 2)


def test_empty_table_gives_header_only_csv(tmp_path):
    cfg = parse_config(MINIMAL)
    paths = emit_results(SweepTable((), cfg, 0, {}), OutputSpec(str(tmp_path), ("csv",)))
    with open(paths[0]) as fh:
        assert fh.read() == CSV_HEADER + "\n"


def test_fig4_emission(tmp_path):
    cfg = small(preset_fig4(), tmp_path, horizon=100.0, seed=42)
    cfg = cfg.replace(output=OutputSpec(str(tmp_path), ("csv", "manifest", "dat"), (2,), ("avg-peak-age",)))
    table = run_sweep(cfg, [0.5, 1.0], replications=2)
    paths = emit_results(table, cfg.output, config=cfg)
    names = sorted(os.path.basename(p) for p in paths)
    assert names == ["manifest.json", "node2_avg-peak-age.dat", "results.csv"]
    with open(tmp_path / "results.csv") as fh:
        rows = list(csv.reader(fh))
    assert ",".join(rows[0]) == CSV_HEADER and len(rows) == 1 + 2 * 8
    with open(tmp_path / "manifest.json") as fh:
        manifest = json.load(fh)
    assert manifest["seed"] == 42
    assert manifest["config_sha256"] == config_hash(cfg)
    assert manifest["ci"] == "normal 95%" and manifest["replications"] == 2
    dat = np.loadtxt(tmp_path / "node2_avg-peak-age.dat")
    assert dat.shape == (2, 1 + 3 * 8)


def test_dominance_rows(tmp_path):
    cfg = small(preset_fig4(), tmp_path, horizon=300.0)
    rows = run_dominance(cfg, [("prmp-lgfs@1", "fcfs@1"), ("fcfs@1", "prmp-lgfs@1")], replications=5, lam=1.0)
    forward = [r for r in rows if r.pair == "prmp-lgfs@1>fcfs@1"]
    assert len(forward) == 5 and all(r.holds and r.first_violation_t is None for r in forward)
    backward = [r for r in rows if r.pair == "fcfs@1>prmp-lgfs@1"]
    assert not any(r.holds for r in backward)
    paths = emit_results(None, OutputSpec(str(tmp_path), ()), reports=rows)
    with open(paths[0]) as fh:
        assert fh.readline().strip() == DOMINANCE_HEADER


def test_dominance_pairs_need_equal_buffers():
    with pytest.raises(ValidationError):
        run_dominance(preset_fig4(), [("prmp-lgfs@1", "fcfs@inf")], replications=1)


def test_ci_width_shrinks_with_replications():
    cfg = parse_config(MINIMAL).replace(horizon=200.0)
    narrow = run_sweep(cfg, [0.7], replications=400, seed=1).rows[0]
    wide = run_sweep(cfg, [0.7], replications=100, seed=2).rows[0]
    ratio = (wide.ci_high - wide.ci_low) / (narrow.ci_high - narrow.ci_low)
    assert abs(ratio - 2.0) <= 0.4
