import csv
import json
import subprocess
import sys

import pytest

from ceam import __version__
from ceam.cli import fmt, main


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


SWEEP = {"mode": "sweep", "system": {"units": "internal", "n_atoms": 10, "detuning": 1.0}, "grid": {"points": 51}}


def test_fmt_round_trips():
    for v in (0.1, 1 / 3, 2.0**-1074, 1e300, -7.25):
        assert float(fmt(v)) == v
    assert fmt(3) == "3"
    assert fmt(True) == "1"


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_schema(capsys):
    assert main(["--schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert schema["additionalProperties"] is False


def test_sweep_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["sweep", "--config", write(tmp_path, SWEEP), "--out-dir", str(out)]) == 0
    raw = (out / "sweep.csv").read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode("utf-8").splitlines()))
    assert rows[0] == ["kx", "theta_unwrapped", "dtheta_dkx", "abs_R"]
    assert len(rows) == 52
    assert all(abs(float(r[3]) - 1) < 1e-12 for r in rows[1:])
    meta = json.loads((out / "sweep.json").read_text())
    assert meta["version"] == __version__
    assert meta["config"]["grid"]["points"] == 51
    assert meta["outputs"] == ["sweep.csv"]
    assert meta["master_seed"] == 0


def test_scaling_metadata(tmp_path, config_dir):
    assert main(["scaling", "--config", str(config_dir / "scaling.json"), "--out-dir", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "scaling.json").read_text())
    assert meta["results"]["fit_slope_restricted"] == pytest.approx(2.0, abs=0.05)


def test_bad_config_exit_2(tmp_path, capsys):
    bad = dict(SWEEP, extra=1)
    assert main(["sweep", "--config", write(tmp_path, bad)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"
    assert err["exit_code"] == 2


def test_empty_file_exit_2(tmp_path, capsys):
    p = tmp_path / "empty.json"
    p.write_text("")
    assert main(["sweep", "--config", str(p)]) == 2
    assert "not valid JSON" in json.loads(capsys.readouterr().err)["message"]


def test_usage_error_is_json(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense-mode", "--config", "x.json"])
    assert exc.value.code == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[0])["error"] == "usage"


def test_missing_config_flag(capsys):
    assert main(["sweep"]) == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    doc = {"mode": "working-point", "system": {"units": "internal", "n_atoms": 4, "detuning": 0.0,
                                               "boundary_distance": 0.3}}
    assert main(["working-point", "--config", write(tmp_path, doc), "--out-dir", str(tmp_path)]) == 3
    assert json.loads(capsys.readouterr().err)["exit_code"] == 3


def test_partial_failure_exit_4(tmp_path):
    doc = {"mode": "estimate", "system": {"units": "internal", "n_atoms": 4, "detuning": 1.0},
           "estimation": {"shots": 1, "repetitions": 5}}
    assert main(["estimate", "--config", write(tmp_path, doc), "--out-dir", str(tmp_path)]) == 4
    meta = json.loads((tmp_path / "estimate.json").read_text())
    assert meta["results"]["failures"] == 5


def test_sidecar_regenerates_output(tmp_path):
    first = tmp_path / "a"
    assert main(["sweep", "--config", write(tmp_path, SWEEP), "--out-dir", str(first)]) == 0
    meta = json.loads((first / "sweep.json").read_text())
    second = tmp_path / "b"
    assert main(["sweep", "--config", write(tmp_path, meta["config"], "regen.json"), "--out-dir", str(second)]) == 0
    assert (first / "sweep.csv").read_bytes() == (second / "sweep.csv").read_bytes()


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ceam.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert __version__ in res.stdout
