"""Config parsing, output formats, CLI end-to-end."""

import json
import subprocess
import sys

import numpy as np
import pytest

from mirrorqed import grid as G
from mirrorqed import output
from mirrorqed.cli import main
from mirrorqed.config import ConfigError, parse_config
from mirrorqed.experiments import run_scenario
from mirrorqed.system import SystemParams

MINIMAL_VACUUM = """
[system]
model = feedback
tau = 2.0
phi = 0.0
nPhotons = 0
initialState = excited_vacuum

[grid]
dt = 0.01
horizon = 5.0

[output]
path = {out}
"""


def test_parse_minimal_vacuum_config():
    cfg = parse_config(MINIMAL_VACUUM.format(out="x.csv"))
    assert cfg.params.initial_state == "excited_vacuum"
    assert cfg.model == "feedback"
    assert not cfg.warnings


def test_unsupported_photon_number_reported():
    text = MINIMAL_VACUUM.format(out="x.csv").replace("nPhotons = 0", "nPhotons = 4")
    with pytest.raises(ConfigError, match="unsupported excitation number"):
        parse_config(text)


def test_unknown_key_reported_with_line():
    text = MINIMAL_VACUUM.format(out="x.csv") + "\n[system]\nwibble = 2\n"
    try:
        parse_config(text)
    except ConfigError as exc:
        assert any("wibble" in v and "line" in v for v in exc.violations)
    else:
        pytest.fail("expected ConfigError")


def test_all_violations_collected():
    text = """
[system]
model = bogus
nPhotons = 7
tau = -1

[grid]
dt = -0.5
horizon = 0
"""
    try:
        parse_config(text)
    except ConfigError as exc:
        assert len(exc.violations) >= 4
    else:
        pytest.fail("expected ConfigError")


def test_dt_adjustment_warning():
    text = MINIMAL_VACUUM.format(out="x.csv").replace("dt = 0.01", "dt = 0.013")
    cfg = parse_config(text)
    assert any("adjusted" in w and "77" in w for w in cfg.warnings)


def test_unresolvable_delay_is_an_error():
    text = MINIMAL_VACUUM.format(out="x.csv").replace("dt = 0.01", "dt = 1.5")
    with pytest.raises(ConfigError, match="unresolvable"):
        parse_config(text)


def _vacuum_traj(horizon=2.0):
    p = SystemParams(gamma=1.0, tau=1.0, phi=0.0, n_photons=0,
                     initial_state="excited_vacuum")
    g = G.build(0.01, horizon, 1.0)
    return run_scenario(p, None, g)


def test_trajectory_csv_shape_and_meta(tmp_path):
    traj = _vacuum_traj()
    path = output.emit(traj, str(tmp_path / "t.csv"))
    meta, t, pop = output.read_trajectory_csv(path)
    assert t.size == traj.grid.n_steps + 1
    assert meta["dt"] == pytest.approx(traj.grid.dt)
    assert meta["element_count"] >= 1
    assert "memory_bytes" in meta
    text = path.read_text()
    assert text.startswith("# meta: ")
    assert "\r" not in text


def test_emission_is_byte_stable(tmp_path):
    a = output.emit(_vacuum_traj(), str(tmp_path / "a.csv"))
    b = output.emit(_vacuum_traj(), str(tmp_path / "b.csv"))
    assert a.read_bytes() == b.read_bytes()


def test_json_mirror(tmp_path):
    traj = _vacuum_traj()
    path = output.emit(traj, str(tmp_path / "t.json"), fmt="json")
    doc = json.loads(path.read_text())
    assert doc["meta"]["initialState"] == "excited_vacuum"
    assert len(doc["t"]) == len(doc["population"])


def test_outdir_override(tmp_path, monkeypatch):
    monkeypatch.setenv("MIRRORQED_OUTDIR", str(tmp_path / "elsewhere"))
    path = output.emit(_vacuum_traj(), "ignored_dir/run.csv")
    assert path.parent == tmp_path / "elsewhere"
    assert path.exists()


def test_cli_run_end_to_end(tmp_path, capsys):
    out = tmp_path / "run.csv"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(MINIMAL_VACUUM.format(out=out))
    assert main(["run", str(cfg)]) == 0
    assert out.exists()
    meta, t, pop = output.read_trajectory_csv(out)
    assert pop[0] == pytest.approx(1.0)
    # rerun reproduces the bytes
    data1 = out.read_bytes()
    assert main(["run", str(cfg)]) == 0
    assert out.read_bytes() == data1


def test_cli_benchmark_reports_discrepancy(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    cfg = tmp_path / "bench.cfg"
    cfg.write_text("""
[system]
model = feedback
tau = 2.0
phi = 0.0
nPhotons = 1
initialState = ground_with_pulse

[pulse]
kind = rectangular
t0 = 0.0
tD = 2.0

[grid]
dt = 0.0125
horizon = 6.0

[output]
path = %s

[oracle]
nBins = 64
""" % out)
    assert main(["benchmark", str(cfg)]) == 0
    captured = capsys.readouterr().out
    assert "sup-norm=" in captured and "L2=" in captured
    assert (tmp_path / "bench_hierarchy.csv").exists()
    assert (tmp_path / "bench_oracle.csv").exists()


def test_cli_oracle_compare(tmp_path, capsys):
    out = tmp_path / "oc.csv"
    cfg = tmp_path / "oc.cfg"
    cfg.write_text(MINIMAL_VACUUM.format(out=out).replace("horizon = 5.0", "horizon = 6.0")
                   + "\n[oracle]\nnBins = 40\n")
    assert main(["oracle-compare", str(cfg)]) == 0
    doc = json.loads((tmp_path / "oc.json").read_text())
    assert doc["halving_gain"] > 1.5
    assert doc["residue_limit"] == pytest.approx(1.0 / 9.0)


def test_cli_sweep_small(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("""
[system]
model = feedback
tau = 1.0
phi = 6.283185307179586
nPhotons = 2
initialState = ground_with_pulse

[sweep]
family = rectangular
widths = 0.8:1.6:2
taus = 0.5:1.5:2

[output]
path = %s
""" % out)
    assert main(["--threads", "2", "sweep", str(cfg)]) == 0
    meta, rows = output.read_sweep_csv(out)
    assert rows.shape == (4, 4)
    assert np.all(rows[:, 2] >= 0.0)


def test_tabulated_pulse_from_file(tmp_path):
    t = np.linspace(1.0, 6.0, 401)
    f = np.exp(-((t - 3.0) ** 2))
    table = tmp_path / "pulse.txt"
    np.savetxt(table, np.column_stack([t, f, np.zeros_like(t)]))
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"""
[system]
model = feedback
tau = 2.0
phi = 6.283185307179586
nPhotons = 1
initialState = ground_with_pulse

[pulse]
kind = tabulated
file = {table.name}

[grid]
dt = 0.01
horizon = 12.0

[output]
path = {tmp_path / 'tab.csv'}
""")
    assert main(["run", str(cfg)]) == 0      # file resolved relative to the config
    meta, tt, pop = output.read_trajectory_csv(tmp_path / "tab.csv")
    assert meta["pulse_kind"] == "tabulated"
    assert 0.05 < np.max(pop) <= 1.0


def test_cli_enginebench(tmp_path, capsys):
    out = tmp_path / "eb.csv"
    cfg = tmp_path / "eb.cfg"
    cfg.write_text(MINIMAL_VACUUM.format(out=out).replace("nPhotons = 0", "nPhotons = 2")
                   .replace("initialState = excited_vacuum",
                            "initialState = ground_with_pulse")
                   + "\n[pulse]\nkind = rectangular\nt0 = 0.0\ntD = 2.0\n")
    assert main(["enginebench", str(cfg)]) == 0
    text = capsys.readouterr().out
    assert "python" in text
    if "compiled" in text:
        assert "max |compiled - python|" in text


def test_cli_entry_point_installed():
    proc = subprocess.run([sys.executable, "-m", "mirrorqed.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "benchmark" in proc.stdout
