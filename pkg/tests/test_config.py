import pytest

from ghzpump.config import ConfigError, RunConfig, from_dict, load, with_overrides


def test_defaults_are_valid():
    cfg = from_dict({})
    assert cfg == RunConfig()
    assert cfg.n_values == (3,)


def test_hash_is_canonical():
    a = from_dict({"system": {"n_qubits": 4, "g": 1.0}, "seed": 1})
    b = from_dict({"seed": 1, "system": {"g": 1, "n_qubits": 4}})
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != from_dict({"system": {"n_qubits": 5}}).config_hash()


def test_integer_accepted_for_float_field():
    cfg = from_dict({"integrator": {"t_max": 50}})
    assert isinstance(cfg.integrator.t_max, float)


@pytest.mark.parametrize("raw, key", [
    ({"system": {"bogus": 1}}, "system.bogus"),
    ({"bogus": {}}, "bogus"),
    ({"system": {"n_qubits": 1}}, "system.n_qubits"),
    ({"system": {"n_qubits": 2.5}}, "system.n_qubits"),
    ({"system": {"n_qubits": True}}, "system.n_qubits"),
    ({"drive": {"source": "magic"}}, "drive.source"),
    ({"drive": {"error": 1.5}}, "drive.error"),
    ({"drive": {"dynamical": "yes"}}, "drive.dynamical"),
    ({"model": {"kind": "full-k3"}}, "model.kind"),
    ({"integrator": {"method": "euler"}}, "integrator.method"),
    ({"integrator": {"t_max": -1.0}}, "integrator.t_max"),
    ({"target": {"fidelity": 1.0}}, "target.fidelity"),
    ({"command": "plot"}, "command"),
    ({"seed": -1}, "seed"),
    ({"system": []}, "system"),
    ({"drive": {"source": "explicit", "omega_z": [0.1, 0.1]}}, "system.gamma_e"),
    ({"drive": {"source": "explicit", "omega_z": [0.1]}, "system": {"gamma_e": 0.1}}, "drive.omega_z"),
    ({"drive": {"omega_z": ["a"]}}, "drive.omega_z"),
    ({"ratemodel": {"n_list": []}}, "ratemodel.n_list"),
    ({"optimizer": {"restarts": 0}}, "optimizer.restarts"),
])
def test_invalid_configs_name_the_key(raw, key):
    with pytest.raises(ConfigError) as exc:
        from_dict(raw)
    assert key in str(exc.value)


def test_load_toml(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('command = "sweep"\n[system]\nn_list = [2, 3]\n[drive]\nalpha = 0.5\n')
    cfg = load(path)
    assert cfg.command == "sweep" and cfg.n_values == (2, 3) and cfg.drive.alpha == 0.5


def test_load_dotted_keys(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('system.n_qubits = 4\nmodel.kind = "full-k1"\n')
    cfg = load(path)
    assert cfg.system.n_qubits == 4 and cfg.model.kind == "full-k1"


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("system = [\n")
    with pytest.raises(ConfigError):
        load(bad)


def test_overrides_revalidate():
    cfg = with_overrides(RunConfig(), "params", 7)
    assert cfg.command == "params" and cfg.seed == 7
    with pytest.raises(ConfigError):
        with_overrides(RunConfig(), "simulate", -2)
