import hashlib
import json
import xml.etree.ElementTree as ET

import pytest

from mmwpower.cli import main
from mmwpower.scenario import parse_scenario

NS = "{http://www.w3.org/2000/svg}"
SHORT = "[run]\nduration_s = 4.0\n"


@pytest.fixture
def scen(tmp_path):
    path = tmp_path / "s.ini"
    path.write_text(SHORT)
    return path


def polylines(path):
    return len(ET.parse(path).getroot().findall(f"{NS}polyline"))


def test_run_default(tmp_path, scen):
    out = tmp_path / "o"
    assert main(["run", str(scen), "--out", str(out), "--quiet"]) == 0
    rows = (out / "trace.csv").read_text().splitlines()
    assert rows[0] == "t_s,p_rf_dbm,p_est_dbm,e_db,u_raw_db,u_applied_db,link_atten_db"
    assert len(rows) == 1 + 401
    manifest = json.loads((out / "manifest.json").read_text())
    ini = (out / "scenario.ini").read_bytes()
    assert manifest["scenario_sha256"] == hashlib.sha256(ini).hexdigest()
    assert manifest["files"]["trace.csv"] == hashlib.sha256((out / "trace.csv").read_bytes()).hexdigest()
    assert parse_scenario(ini.decode()).scenario.duration_s == 4.0
    metrics = dict(line.split(" = ") for line in (out / "metrics.txt").read_text().splitlines())
    assert metrics["settled"] == "true"
    assert polylines(out / "power.svg") == 1


def test_run_is_byte_reproducible(tmp_path, scen):
    for name in ("a", "b"):
        assert main(["run", str(scen), "--out", str(tmp_path / name), "--quiet"]) == 0
    for f in ("trace.csv", "metrics.txt", "manifest.json", "power.svg"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_run_compare(tmp_path, scen, capsys):
    out = tmp_path / "o"
    assert main(["run", str(scen), "--compare", "i,fi", "--out", str(out)]) == 0
    assert (out / "trace_0_i.csv").exists() and (out / "trace_1_fi.csv").exists()
    assert polylines(out / "compare_power.svg") == 2
    assert "ratio" in capsys.readouterr().out


def test_compare_both_directions(tmp_path):
    out = tmp_path / "o"
    assert main(["compare", "--both", "--out", str(out), "--quiet"]) == 0
    text = (out / "metrics.txt").read_text()
    assert "reverse.fi.settling_ratio" in text and "forward.i.settling_ratio = 1" in text


def test_malformed_key_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\nseed = 1\n[plant]\nalpah = 1\n")
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "bad.ini:4" in capsys.readouterr().err


def test_overrides(tmp_path, scen):
    out = tmp_path / "o"
    assert main(["run", str(scen), "--ts", "0.02", "--seed", "7", "--no-plots", "--out", str(out), "--quiet"]) == 0
    assert len((out / "trace.csv").read_text().splitlines()) == 1 + 201
    assert not (out / "power.svg").exists()
    assert "seed = 7" in (out / "scenario.ini").read_text()
    assert main(["run", str(scen), "--ts", "0.03", "--out", str(out)]) == 2
    assert main(["run", str(scen), "--ts", "-1", "--out", str(out)]) == 2


def test_simulation_fault_exit_3(tmp_path, scen, monkeypatch):
    from mmwpower import controllers

    def boom(*a, **k):
        raise controllers.ControllerFault("injected")

    monkeypatch.setattr(controllers.Controller, "step", boom)
    assert main(["run", str(scen), "--out", str(tmp_path / "o"), "--quiet"]) == 3
    assert main(["run", str(scen), "--compare", "i,fi", "--out", str(tmp_path / "p"), "--quiet"]) == 3


def test_io_errors_exit_4(tmp_path, scen):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(scen), "--out", str(blocker / "sub")]) == 4
    assert main(["run", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "o")]) == 4


def test_sweep_evm(tmp_path):
    out = tmp_path / "o"
    assert main(["sweep-evm", "--out", str(out), "--quiet"]) == 0
    assert polylines(out / "evm.svg") == 3
    svg = (out / "evm.svg").read_text()
    assert "knee" in svg
    metrics = (out / "metrics.txt").read_text()
    knee = float(metrics.splitlines()[0].split(" = ")[1])
    assert abs(knee - -30) <= 2


def test_sweep_evm_linear(tmp_path):
    out = tmp_path / "o"
    assert main(["sweep-evm", "--no-compression", "--out", str(out), "--quiet"]) == 0
    rows = (out / "evm_curves.csv").read_text().splitlines()[1:]
    assert max(float(r.split(",")[2]) for r in rows) < 1e-6
    assert "none" in (out / "metrics.txt").read_text()


def test_calibrate_synthetic(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["calibrate", "--synthetic", "--noise-mv", "0", "--out", str(out)]) == 0
    assert "R2 = 1.000000" in capsys.readouterr().out
    assert main(["calibrate", "--synthetic", "--out", str(out), "--quiet"]) == 0
    r2 = float((out / "calibration.txt").read_text().splitlines()[2].split(" = ")[1])
    assert r2 >= 0.998
    root = ET.parse(out / "calibration.svg").getroot()
    assert len(root.findall(f"{NS}polyline")) == 1 and len(root.findall(f"{NS}circle")) == 21


def test_calibrate_csv_and_errors(tmp_path):
    out = tmp_path / "o"
    assert main(["calibrate", "--synthetic", "--out", str(out), "--quiet"]) == 0
    assert main(["calibrate", str(out / "sweep.csv"), "--out", str(tmp_path / "p"), "--quiet"]) == 0
    two = tmp_path / "two.csv"
    two.write_text("p_in_dbm,v_out_volts\n-40,0.1\n-30,0.4\n")
    assert main(["calibrate", str(two), "--out", str(out)]) == 2
    assert main(["calibrate", "--out", str(out)]) == 2
    assert main(["calibrate", "--synthetic", "--points", "2", "--out", str(out)]) == 2


def test_find_unstable_pid(tmp_path):
    out = tmp_path / "o"
    scen = tmp_path / "s.ini"
    scen.write_text("[run]\nduration_s = 6.0\n")
    assert main(["find-unstable-pid", str(scen), "--out", str(out), "--quiet", "--jobs", "2"]) == 0
    text = (out / "metrics.txt").read_text()
    assert "transition.0" in text
    assert polylines(out / "pid_power.svg") == 2


def test_bad_arguments_exit_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["run", "--compare", "i,fi", "--jobs", "3"])
    assert info.value.code == 2
    assert main(["run", "--compare", "i,xx", "--out", str(tmp_path / "o")]) == 2
