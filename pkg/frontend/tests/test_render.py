"""Rendering gate: real simulator outputs in, byte-stable figures out.

Inputs are produced by invoking the simulator CLI (the external interface);
no simulator internals are imported.  One fixture run covers the
three-curve trajectory panel and the sweep heat map.
"""

import json
import shutil
import subprocess

import pytest

from mirrorqed_plots import SchemaError, load_spec, render
from mirrorqed_plots.cli import main

HAVE_SIM = shutil.which("mirrorqed") is not None

RUN_CFG = """
[system]
model = feedback
tau = 2.0
phi = 6.283185307179586
nPhotons = {n}
initialState = ground_with_pulse

[pulse]
kind = rectangular
t0 = 0.0
tD = 2.0

[grid]
dt = 0.02
horizon = 8.0

[output]
path = {out}

[oracle]
nBins = 60
"""

SWEEP_CFG = """
[system]
model = feedback
tau = 1.0
phi = 6.283185307179586
nPhotons = 2
initialState = ground_with_pulse

[sweep]
family = rectangular
widths = 1.0:2.0:3
taus = 0.5:1.5:3

[output]
path = {out}
"""


@pytest.fixture(scope="module")
def sim_outputs(tmp_path_factory):
    if not HAVE_SIM:
        pytest.skip("mirrorqed CLI not installed")
    root = tmp_path_factory.mktemp("sim")
    # three curves from the benchmark-style outputs: the n=1 run plus the
    # n=2 hierarchy/oracle pair emitted by `mirrorqed benchmark`
    out1 = root / "traj_n1.csv"
    cfg1 = root / "run_n1.cfg"
    cfg1.write_text(RUN_CFG.format(n=1, out=out1))
    subprocess.run(["mirrorqed", "--fast-brackets", "run", str(cfg1)],
                   check=True, capture_output=True)
    out2 = root / "bench_n2.csv"
    cfg2 = root / "bench_n2.cfg"
    cfg2.write_text(RUN_CFG.format(n=2, out=out2))
    subprocess.run(["mirrorqed", "--fast-brackets", "benchmark", str(cfg2)],
                   check=True, capture_output=True)
    trajs = [out1, root / "bench_n2_hierarchy.csv", root / "bench_n2_oracle.csv"]
    sweep = root / "sweep.csv"
    cfg = root / "sweep.cfg"
    cfg.write_text(SWEEP_CFG.format(out=sweep))
    subprocess.run(["mirrorqed", "--threads", "2", "sweep", str(cfg)],
                   check=True, capture_output=True)
    return trajs, sweep


def test_trajectory_panel_renders_and_is_byte_stable(sim_outputs, tmp_path):
    trajs, _ = sim_outputs
    spec_path = tmp_path / "panel.json"
    spec_path.write_text(json.dumps({
        "kind": "trajectories",
        "inputs": [str(p) for p in trajs],
        "labels": ["one photon", "two photons", "two photons, brute force"],
        "output": str(tmp_path / "panel.png"),
        "title": "rectangular pulse, feedback at G tau = 2",
    }))
    out = render(load_spec(spec_path))
    assert out.exists() and out.stat().st_size > 5000
    first = out.read_bytes()
    render(load_spec(spec_path))
    assert out.read_bytes() == first


def test_heatmap_renders_with_hatched_unconverged_cells(sim_outputs, tmp_path):
    _, sweep = sim_outputs
    spec_path = tmp_path / "map.json"
    spec_path.write_text(json.dumps({
        "kind": "heatmap",
        "inputs": [str(sweep)],
        "output": str(tmp_path / "map.png"),
    }))
    out = render(load_spec(spec_path))
    assert out.exists() and out.stat().st_size > 5000
    first = out.read_bytes()
    render(load_spec(spec_path))
    assert out.read_bytes() == first


def test_cli_round_trip(sim_outputs, tmp_path, capsys):
    trajs, _ = sim_outputs
    spec_path = tmp_path / "p.json"
    spec_path.write_text(json.dumps({
        "kind": "trajectories",
        "inputs": [str(trajs[0])],
        "output": str(tmp_path / "one.png"),
    }))
    assert main([str(spec_path)]) == 0
    assert (tmp_path / "one.png").exists()


def test_schema_mismatch_fails_loudly(sim_outputs, tmp_path):
    trajs, sweep = sim_outputs
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "heatmap", "inputs": [str(trajs[0])],
                               "output": str(tmp_path / "x.png")}))
    assert main([str(bad)]) == 1
    mixed = tmp_path / "mixed.json"
    mixed.write_text(json.dumps({"kind": "trajectories", "inputs": [str(sweep)],
                                 "output": str(tmp_path / "y.png")}))
    with pytest.raises(SchemaError, match="trajectory"):
        render(load_spec(mixed))


def test_spec_validation_errors(tmp_path):
    for doc, msg in (
        ({"kind": "surface", "inputs": ["a.csv"], "output": "o.png"}, "kind"),
        ({"kind": "heatmap", "inputs": ["a.csv", "b.csv"], "output": "o.png"}, "exactly one"),
        ({"kind": "trajectories", "inputs": [], "output": "o.png"}, "non-empty"),
        ({"kind": "trajectories", "inputs": ["a.csv"], "labels": ["x", "y"],
          "output": "o.png"}, "labels"),
    ):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(SchemaError, match=msg):
            load_spec(path)


def test_malformed_csv_rejected(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,population\n0.0,1.0\n")       # missing meta line
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"kind": "trajectories", "inputs": [str(bad)],
                                "output": str(tmp_path / "o.png")}))
    assert main([str(spec)]) == 1
