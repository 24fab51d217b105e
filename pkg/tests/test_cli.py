import json
from pathlib import Path

import pytest

from oracles import characteristic_root
from roughdelay.cli import SEED_ENV, load_config, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


DELAY = """
[noise]
seed = 1
steps_per_delay = 16
refinement = 4
[field]
name = pure_delay
a = -0.3
[run]
k = 2
n_steps = 80
x0 = 1.0
n_segments = 3
"""


def test_validate_success(tmp_path):
    cfg = write(tmp_path, DELAY)
    assert main(["validate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "validate.json").read_text())
    assert rep["valid"] is True


def test_validate_failure_writes_report(tmp_path):
    cfg = write(tmp_path, DELAY + "[exponents]\nalpha = 0.45\nbeta = 0.46\ngamma = 0.47\n")
    out = tmp_path / "o"
    assert main(["validate", "--config", str(cfg), "--out", str(out)]) == 2
    rep = json.loads((out / "failure.json").read_text())
    assert rep["command"] == "validate" and rep["failures"][0]["valid"] is False
    assert sorted(p.name for p in out.iterdir()) == ["failure.json"]


def test_missing_config(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["solve", "--config", str(tmp_path / "nope.ini"), "--out", str(out)]) == 1
    assert not out.exists()
    assert "not found" in capsys.readouterr().err


def test_unknown_keys_listed(tmp_path, capsys):
    cfg = write(tmp_path, DELAY + "bogus = 1\n[field2]\nx = 1\n")
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "[run] bogus" in err and "[field2]" in err
    assert not out.exists()


def test_bad_value_type(tmp_path):
    cfg = write(tmp_path, DELAY.replace("k = 2", "k = two"))
    assert main(["lyapunov", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = write(tmp_path, DELAY)
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert load_config(cfg).noise["seed"] == 1
    monkeypatch.setenv(SEED_ENV, "7")
    assert load_config(cfg).noise["seed"] == 7
    assert load_config(cfg, seed_override=9).noise["seed"] == 9


def test_lyapunov_delay_equation(tmp_path):
    cfg = write(tmp_path, DELAY.replace("n_steps = 80", "n_steps = 150")
                .replace("steps_per_delay = 16", "steps_per_delay = 32"))
    assert main(["lyapunov", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "lyapunov.json").read_text())
    assert rep["mean_exponents"][0] == pytest.approx(characteristic_root(-0.3), abs=2e-2)
    assert rep["runs"][0]["seed"] == 1


def test_csv_format(tmp_path):
    cfg = write(tmp_path, DELAY)
    out = tmp_path / "o"
    assert main(["lyapunov", "--config", str(cfg), "--out", str(out), "--format", "csv"]) == 0
    lines = (out / "lyapunov.csv").read_text().splitlines()
    assert lines[0] == "seed,index,exponent,converged" and len(lines) == 3
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--format", "csv"]) == 0
    assert (out / "trajectory_seed1.csv").read_text().startswith("segment,t,y0,dy0_0")


def test_stationary_rejects_delayed_drift(tmp_path):
    cfg = write(tmp_path, DELAY)
    assert main(["stationary", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_probe_needs_zero_fixed_point(tmp_path, capsys):
    cfg = write(tmp_path, DELAY.replace("a = -0.3", "a = -0.3\ns = 0.5").replace(
        "pure_delay", "ou_additive").replace("a = -0.3\n", "c = -1.0\n"))
    assert main(["probe-stable", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "vanishing at 0" in capsys.readouterr().err


@pytest.mark.parametrize("name", sorted(p.stem for p in CONFIGS.glob("*.ini")))
def test_shipped_configs_parse(name):
    cfg = load_config(CONFIGS / f"{name}.ini")
    assert cfg.seeds()


def test_inline_comments(tmp_path):
    cfg = write(tmp_path, DELAY.replace("k = 2", "k = 2          ; number of exponents"))
    assert load_config(cfg).run["k"] == 2
