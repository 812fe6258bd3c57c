"""Tests for the dcs-lab command line."""

import json
from pathlib import Path

import pytest

from dcs_lab.cli import main, preset_config
from dcs_lab.utils.state import ExperimentConfig

TINY_CONFIG = {
    "name": "cli",
    "model": "jsm1",
    "n": 24,
    "J": 3,
    "k_C": 3,
    "k_I": 1,
    "m_values": [12],
    "trials": 2,
    "algorithms": ["doi", "separate"],
}


@pytest.fixture(autouse=True)
def _clean_environment(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    for name in ("DCS_LAB_SEED", "DCS_LAB_THREADS", "DCS_LAB_OUTPUT_DIR", "LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def _write_config(tmp_path: Path, **overrides: object) -> Path:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({**TINY_CONFIG, **overrides}))
    return path


def test_rate(capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["rate", "--J", "100", "--m", "40", "--R", "8", "--m1", "125", "--R1", "8"])
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["total_bits"] == 32680
    assert report["m_prime"] == pytest.approx(40.85, abs=1e-12)
    assert report["delta_m"] == pytest.approx(0.85, abs=1e-12)


def test_rate_rejects_zero(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["rate", "--J", "0", "--m", "40", "--R", "8", "--m1", "125", "--R1", "8"]) == 2


def test_run_writes_results(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "out"
    code = main(["run", "--config", str(_write_config(tmp_path)), "--out", str(out)])
    assert code == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 2
    assert (out / "plot_mse.py").exists()
    assert str(out / "results.csv") in capsys.readouterr().out


def test_run_is_reproducible(tmp_path: Path) -> None:
    config = _write_config(tmp_path)
    for out in ("a", "b"):
        args = ["run", "--config", str(config), "--out", str(tmp_path / out)]
        assert main([*args, "--deterministic-csv"]) == 0
    first = (tmp_path / "a" / "results.csv").read_bytes()
    assert first == (tmp_path / "b" / "results.csv").read_bytes()


def test_seed_from_environment(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    config = _write_config(tmp_path, algorithms=["separate"], m_values=[6])
    args = ["run", "--config", str(config), "--deterministic-csv", "--out"]
    assert main([*args, str(tmp_path / "base")]) == 0
    monkeypatch.setenv("DCS_LAB_SEED", "987654321")
    assert main([*args, str(tmp_path / "env")]) == 0
    base = (tmp_path / "base" / "results.csv").read_text()
    assert base != (tmp_path / "env" / "results.csv").read_text()


def test_invalid_config_exit_code(tmp_path: Path) -> None:
    assert main(["run", "--config", str(_write_config(tmp_path, m_values=[99]))]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_unwritable_output_exit_code(tmp_path: Path) -> None:
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    args = ["run", "--config", str(_write_config(tmp_path)), "--out", str(blocker / "out")]
    assert main(args) == 3


def test_verify_rate_accounting_only(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["verify", "--only", "6"]) == 0
    assert "PASSED" in capsys.readouterr().out


@pytest.mark.parametrize("kind", ["jsm1", "jsm3"])
def test_presets_are_valid_configs(kind: str, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["preset", kind]) == 0
    config = ExperimentConfig.model_validate_json(capsys.readouterr().out)
    assert config == preset_config(kind)
    assert config.n == 256 and config.J == 100 and config.R == 8
