import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from qmemnet.cli import main
from qmemnet.config import RunConfig, dump_config, load_config
from qmemnet.errors import ConfigError, NotHermitian

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


SINGLE = """
system:
  preset: single-mode
  params: {kappa: 2.0}
input:
  kind: single_photon
  coefficients: [1]
"""


def test_analyze_single_mode(tmp_path, capsys):
    code, out, _ = run(["analyze", "--config", write(tmp_path, SINGLE), "--out", str(tmp_path)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["hurwitz"] is True
    assert np.allclose(rep["zeros"], [[1.0, 0.0]])


def test_analyze_atomic_dark(tmp_path, capsys):
    cfg = "system:\n  preset: atomic-network\n  params: {kappa: 2, g: 1, delta: 0}\n"
    code, out, _ = run(["analyze", "--config", write(tmp_path, cfg), "--out", str(tmp_path)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["hurwitz"] is False and rep["memory_dim"] == 2


def test_analyze_active(tmp_path, capsys):
    code, out, _ = run(["analyze", "--config", str(CONFIGS / "active_opo.yaml"), "--out", str(tmp_path)], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["transfer_amplitude"] == pytest.approx(np.sqrt(6 / 7))


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("system:\n  preset: nope\n", "system.preset"),
        ("system:\n  preset: single-mode\n  params: {kappa: x}\n", "system.params.kappa"),
        ("system:\n  preset: single-mode\n  params: {kappa: [1}\n", "line 3"),
        ("input: {}\n", "'system'"),
        ("system:\n  omega: [[0]]\n  c: [[1, 2, 3]]\n", "system.c[0]"),
        ("system:\n  preset: single-mode\nnumerics: {h: -1}\n", "numerics.h"),
        ("system:\n  preset: single-mode\nextra: 1\n", "unknown key"),
    ],
)
def test_malformed_config(tmp_path, capsys, text, fragment):
    code, _, err = run(["analyze", "--config", write(tmp_path, text), "--out", str(tmp_path)], capsys)
    assert code == 2
    assert fragment in err


def test_missing_config_file(tmp_path, capsys):
    code, _, err = run(["analyze", "--config", str(tmp_path / "none.yaml")], capsys)
    assert code == 2 and "cannot read" in err


def test_model_error_exit_code(tmp_path, capsys):
    cfg = "system:\n  preset: single-mode\n  params: {kappa: 0}\n"
    code, _, _ = run(["analyze", "--config", write(tmp_path, cfg), "--out", str(tmp_path)], capsys)
    assert code == 2


def test_numerical_error_exit_code(tmp_path, capsys):
    cfg = "system:\n  preset: atomic-network\n  params: {delta: 0}\n"
    code, _, err = run(["synthesize", "--config", write(tmp_path, cfg), "--out", str(tmp_path)], capsys)
    assert code == 3 and "Hurwitz" in err


def test_schedule_error_exit_code(tmp_path, capsys):
    text = (CONFIGS / "atomic_protocol.yaml").read_text().replace("t2: 5.0", "t2: -5.0")
    code, _, _ = run(["protocol", "--config", write(tmp_path, text), "--out", str(tmp_path)], capsys)
    assert code == 2


def test_synthesize_single_mode(tmp_path, capsys):
    code, out, _ = run(["synthesize", "--config", write(tmp_path, SINGLE), "--out", str(tmp_path)], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["gramian_residual"]["writing"] <= 1e-6
    data = np.genfromtxt(rep["files"]["writing"], delimiter=",", names=True)
    assert np.allclose(data["nu1_re"], -np.sqrt(2) * np.exp(data["t"]), atol=1e-12)


def test_simulate_coherent(tmp_path, capsys):
    code, out, _ = run(["simulate", "--config", str(CONFIGS / "atomic_coherent.yaml"), "--out", str(tmp_path)], capsys)
    rep = json.loads(out)
    assert code == 0
    assert np.allclose(rep["mean_final"], [[0, 0], [0, 0], [1, 0], [0, 1]], atol=1e-6)
    assert rep["covariance_max"] <= 1e-10
    assert rep["zero_output_max"] <= 1e-6


def test_simulate_empty_input(tmp_path, capsys):
    text = SINGLE.replace("coefficients: [1]", "coefficients: [0]")
    code, out, _ = run(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["photon_numbers_final"] == [0.0] and rep["zero_output_max"] == 0.0


def test_protocol_exit_codes(tmp_path, capsys):
    code, out, _ = run(["protocol", "--config", str(CONFIGS / "atomic_protocol.yaml"), "--out", str(tmp_path / "a")], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["retrieval_fidelity"] >= 0.999
    code, out, _ = run(
        ["protocol", "--config", str(CONFIGS / "atomic_early_switch.yaml"), "--out", str(tmp_path / "b"), "--step", "0.01"],
        capsys,
    )
    rep = json.loads(out)
    assert code == 1 and rep["retrieval_fidelity"] < 0.999
    assert "early_switch" in rep


def test_env_overrides_out(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("QMEMNET_OUT", str(tmp_path / "env"))
    code, _, _ = run(["analyze", "--config", write(tmp_path, SINGLE), "--out", str(tmp_path / "flag")], capsys)
    assert code == 0
    assert (tmp_path / "env" / "analyze.json").exists()
    assert not (tmp_path / "flag").exists()


def test_json_format(tmp_path, capsys):
    code, out, _ = run(["synthesize", "--config", write(tmp_path, SINGLE), "--out", str(tmp_path), "--format", "json"], capsys)
    rep = json.loads(out)
    assert rep["files"]["writing"].endswith(".json")
    table = json.loads(Path(rep["files"]["writing"]).read_text())
    assert set(table) >= {"t", "abs1", "nu1_re", "nu1_im"}


def test_output_is_deterministic(tmp_path, monkeypatch):
    monkeypatch.delenv("QMEMNET_OUT", raising=False)
    cfg = write(tmp_path, SINGLE)
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        subprocess.run(
            [sys.executable, "-m", "qmemnet", "simulate", "--config", cfg, "--out", str(d)],
            check=True,
            capture_output=True,
        )
        outs.append(d)
    for name in ("photon_numbers.csv", "io_trajectory.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_csv_format(tmp_path, capsys):
    run(["simulate", "--config", write(tmp_path, SINGLE), "--out", str(tmp_path)], capsys)
    raw = (tmp_path / "photon_numbers.csv").read_bytes()
    assert b"\r" not in raw
    header, first = raw.decode().splitlines()[:2]
    assert header.startswith("t,n1,trace")
    assert float(first.split(",")[0]) == pytest.approx(-np.log(1e8), rel=2e-3)


def test_config_round_trip(tmp_path):
    for path in sorted(CONFIGS.glob("*.yaml")):
        cfg = load_config(path)
        again = RunConfig.from_dict(yaml.safe_load(dump_config(cfg)))
        assert again == cfg
        assert again.to_dict() == cfg.to_dict()


def test_explicit_system_round_trip():
    raw = {"system": {"omega": [[0, [0, 1]], [[0, -1], 1]], "c": [1, [0, 0.5]]}}
    cfg = RunConfig.from_dict(raw)
    sys_ = cfg.system.build()
    assert sys_.omega[0, 1] == 1j
    assert RunConfig.from_dict(yaml.safe_load(dump_config(cfg))) == cfg


def test_non_hermitian_explicit_system():
    with pytest.raises(NotHermitian):
        RunConfig.from_dict({"system": {"omega": [[0, 1], [0, 0]], "c": [1, 0]}}).system.build()
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"system": {"omega": [[0, 1], [0]], "c": [1, 0]}})


def test_reproduce_targets(tmp_path, capsys):
    expect = {"fig5": 0, "single-mode": 0, "darkstate": 0, "early-switch": 1}
    for target, code_expected in expect.items():
        code, out, _ = run(["reproduce", target, "--out", str(tmp_path)], capsys)
        assert code == code_expected, target
        assert json.loads(out)["passed"] is (code_expected == 0)
