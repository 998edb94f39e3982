import json

import pytest

from ceam.config import ConfigError, load_config, output_directory, resolve


def test_bundled_transmon_config_loads(config_dir):
    cfg = load_config(config_dir / "fig3_delta1.json")
    assert cfg.mode == "disorder"
    assert cfg.master_seed == 2026
    assert cfg.system.n_atoms == 10
    assert cfg.disorder.n_samples == 20
    assert cfg.disorder.sigma_omega == pytest.approx(1 / 3)
    assert cfg.resolved["grid"]["points"] == 2001


@pytest.mark.parametrize("name", ["fig3_delta05", "sweep_n10", "scaling", "working_point", "estimate",
                                  "linear_response"])
def test_all_bundled_configs_load(config_dir, name):
    cfg = load_config(config_dir / f"{name}.json")
    assert cfg.resolved["mode"] == cfg.mode


def test_empty_file_is_parse_error(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text("")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(p)


def test_unknown_key_names_path():
    doc = {"mode": "sweep", "system": {"units": "internal", "n_atoms": 3, "detuning": 1.0, "detunnig": 2}}
    with pytest.raises(ConfigError) as exc:
        resolve(doc)
    assert exc.value.path == "system"
    assert "detunnig" in str(exc.value)


def test_mixed_units_rejected():
    doc = {"mode": "sweep", "system": {"units": "si", "n_atoms": 3, "detuning": 1.0}}
    with pytest.raises(ConfigError):
        resolve(doc)


def test_wrong_type_names_field():
    doc = {"mode": "sweep", "system": {"units": "internal", "n_atoms": "ten", "detuning": 1.0}}
    with pytest.raises(ConfigError) as exc:
        resolve(doc)
    assert exc.value.path == "system/n_atoms"


def test_mode_resolution():
    doc = {"mode": "sweep", "system": {"units": "internal", "n_atoms": 3, "detuning": 1.0}}
    with pytest.raises(ConfigError, match="mode"):
        resolve(doc, mode="scaling")
    with pytest.raises(ConfigError, match="requires"):
        resolve({"system": doc["system"]}, mode="estimate")
    with pytest.raises(ConfigError, match="no mode"):
        resolve({"system": doc["system"]})


def test_seed_override_and_defaults():
    doc = {"mode": "estimate", "master_seed": 1, "system": {"units": "internal", "n_atoms": 3, "detuning": 1.0},
           "estimation": {}}
    cfg = resolve(doc, seed=99)
    assert cfg.master_seed == 99
    assert cfg.resolved["estimation"] == {"shots": 100_000, "repetitions": 500}
    assert cfg.resolved["system"]["boundary_distance"] == pytest.approx(cfg.system.boundary_distance)
    # the resolved document is itself a valid config that reproduces the run
    again = resolve(json.loads(json.dumps(cfg.resolved)))
    assert again.system == cfg.system


def test_output_directory_precedence(monkeypatch, tmp_path):
    doc = {"mode": "sweep", "system": {"units": "internal", "n_atoms": 3, "detuning": 1.0}}
    cfg = resolve(doc)
    monkeypatch.setenv("CEAM_SIM_OUT_DIR", str(tmp_path / "env"))
    assert output_directory(None, cfg) == tmp_path / "env"
    assert output_directory("cli", cfg).name == "cli"
    monkeypatch.delenv("CEAM_SIM_OUT_DIR")
    assert output_directory(None, cfg).name == "ceam-out"
