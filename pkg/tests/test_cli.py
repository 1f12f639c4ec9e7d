import csv
import json

import pytest

from ghzpump import __version__
from ghzpump.cli import main
from ghzpump.config import from_dict


def _write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


SIM = """
[system]
n_qubits = 2
[integrator]
t_max = 1500.0
sample_stride = 15.0
"""


def test_simulate_effective_n2(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--config", _write(tmp_path, SIM), "--out", str(out)]) == 0
    rows = _rows(out / "ghzpump_simulate.csv")
    fid = [float(r["F_GHZ"]) for r in rows]
    assert len(rows) == 101
    half = len(fid) // 2
    assert all(b >= a - 1e-4 for a, b in zip(fid[half:], fid[half + 1:]))
    summary = json.loads((out / "ghzpump_simulate.json").read_text())
    cfg_hash = from_dict({"system": {"n_qubits": 2},
                          "integrator": {"t_max": 1500.0, "sample_stride": 15.0}}).config_hash()
    assert summary["config_hash"] == cfg_hash == rows[0]["config_hash"]
    assert summary["version"] == __version__ == rows[-1]["version"]
    assert summary["monotone_tail"] is True
    assert summary["final_fidelity"] == pytest.approx(fid[-1])


def test_simulate_zero_drive_keeps_fidelity(tmp_path):
    text = """
[system]
n_qubits = 3
gamma_e = 0.1
[drive]
source = "explicit"
omega_z = [0.0, 0.0]
[integrator]
t_max = 100.0
sample_stride = 10.0
"""
    out = tmp_path / "out"
    assert main(["simulate", "--config", _write(tmp_path, text), "--out", str(out)]) == 0
    fid = {float(r["F_GHZ"]) for r in _rows(out / "ghzpump_simulate.csv")}
    assert max(fid) - min(fid) < 1e-15


def test_malformed_key_exit_code(tmp_path, capsys):
    path = _write(tmp_path, "[system]\nn_qbits = 3\n")
    assert main(["simulate", "--config", path, "--out", str(tmp_path)]) == 2
    assert "system.n_qbits" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.toml")]) == 2


def test_invalid_threads_exit_code(tmp_path, monkeypatch):
    monkeypatch.setenv("GHZPUMP_THREADS", "many")
    assert main(["ratemodel", "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    text = """
[system]
n_qubits = 2
[model]
kind = "full-k1"
[integrator]
t_max = 100.0
rtol = 1e-14
atol = 1e-300
initial_step = 1e-300
"""
    code = main(["simulate", "--config", _write(tmp_path, text), "--out", str(tmp_path)])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


SWEEP = """
command = "sweep"
[system]
n_list = [2, 3]
[integrator]
t_max = 2000.0
sample_stride = 10.0
"""


def test_sweep_rows_and_bound(tmp_path):
    out = tmp_path / "a"
    assert main(["sweep", "--config", _write(tmp_path, SWEEP), "--out", str(out)]) == 0
    rows = _rows(out / "ghzpump_sweep.csv")
    assert [r["N"] for r in rows] == ["2", "3"]
    assert all(r["status"] == "ok" and float(r["ratio"]) <= 1 for r in rows)


def test_sweep_single_entry(tmp_path):
    text = SWEEP.replace("[2, 3]", "[2]")
    assert main(["sweep", "--config", _write(tmp_path, text), "--out", str(tmp_path)]) == 0
    assert len(_rows(tmp_path / "ghzpump_sweep.csv")) == 1


def test_sweep_byte_identical_serial_and_parallel(tmp_path):
    path = _write(tmp_path, SWEEP)
    assert main(["sweep", "--config", path, "--out", str(tmp_path / "a"), "--seed", "4"]) == 0
    assert main(["sweep", "--config", path, "--out", str(tmp_path / "b"), "--seed", "4",
                 "--threads", "2"]) == 0
    for name in ("ghzpump_sweep.csv", "ghzpump_sweep.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_records_per_entry_failure(tmp_path):
    text = """
command = "sweep"
[system]
n_list = [2, 3]
[model]
kind = "compartment"
[integrator]
t_max = 5000.0
"""
    assert main(["sweep", "--config", _write(tmp_path, text), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "ghzpump_sweep.csv")
    assert rows[0]["status"] == "failed" and "N >= 3" in rows[0]["message"]
    assert rows[1]["status"] == "ok" and float(rows[1]["tau_prep"]) > 0


def test_ratemodel_tables(tmp_path):
    text = "[ratemodel]\nn_list = [2, 3, 4, 10, 50, 100]\n"
    assert main(["ratemodel", "--config", _write(tmp_path, text), "--out", str(tmp_path)]) == 0
    rows = {int(r["N"]): r for r in _rows(tmp_path / "ghzpump_ratemodel.csv")}
    assert abs(float(rows[50]["b"]) - 17) <= 1 and abs(float(rows[50]["kappa"]) - 0.40) <= 0.01
    assert abs(float(rows[2]["b"]) - 55) <= 1 and abs(float(rows[100]["kappa"]) - 0.41) <= 0.01
    assert all(float(r["E_exact"]) > 0 for r in rows.values())


def test_ratemodel_without_loss(tmp_path):
    text = "[ratemodel]\nn_list = [3, 5]\ngamma_minus_ratio = 0.0\n"
    assert main(["ratemodel", "--config", _write(tmp_path, text), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "ghzpump_ratemodel.csv")
    assert all(float(r["E_exact"]) == 0 and float(r["E_approx"]) == 0 for r in rows)


def test_params_prints_json(tmp_path, capsys):
    text = "[system]\nn_list = [3, 4]\n[drive]\ndynamical = true\n"
    assert main(["params", "--config", _write(tmp_path, text), "--out", str(tmp_path)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert [p["N"] for p in printed] == [3, 4]
    assert printed[0]["stationary_error"] == pytest.approx(0.0620624, rel=1e-5)
    assert "dynamical" in printed[0]


def test_optimize_small_budget(tmp_path):
    text = "[system]\nn_list = [2]\n[optimizer]\nmax_evals = 15\nrestarts = 1\n"
    assert main(["optimize", "--config", _write(tmp_path, text), "--out", str(tmp_path)]) == 0
    row = _rows(tmp_path / "ghzpump_optimize.csv")[0]
    assert float(row["time"]) <= float(row["seed_time"])
    assert json.loads(row["params"])["a_f"]


def test_full_model_and_trotter_simulate(tmp_path):
    text = """
[system]
n_qubits = 2
[model]
kind = "full-k1"
[integrator]
t_max = 40.0
sample_stride = 20.0
"""
    assert main(["simulate", "--config", _write(tmp_path, text), "--out", str(tmp_path / "f")]) == 0
    trot = SIM.replace("sample_stride = 15.0", 'sample_stride = 150.0\nmethod = "trotter"')
    assert main(["simulate", "--config", _write(tmp_path, trot, "t.toml"),
                 "--out", str(tmp_path / "t")]) == 0
    bad = text.replace("sample_stride = 20.0", 'sample_stride = 20.0\nmethod = "trotter"')
    assert main(["simulate", "--config", _write(tmp_path, bad, "b.toml"),
                 "--out", str(tmp_path / "b")]) == 2
