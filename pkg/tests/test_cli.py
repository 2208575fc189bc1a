import json
from pathlib import Path

import pytest

from cgl_vortex.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def small(tmp_path):
    (tmp_path / "pair.json").write_text((CONFIGS / "pair.json").read_text())
    p = tmp_path / "small.toml"
    p.write_text(
        'delta = 0.5\neps = [0.08]\nt_final = 0.005\nsamples = 2\nvortices = "pair.json"\n'
        f'output = "{tmp_path / "out"}"\n[grid]\nL = 3.2\ncells_per_eps = 3\n'
    )
    return p


def _json_lines(text):
    return [json.loads(line) for line in text.splitlines() if line.startswith("{")]


def test_shipped_configs_load():
    from cgl_vortex.harness import load_config

    for name in ("pair_gp.toml", "pair_cgl.toml", "dipole.toml"):
        cfg = load_config(CONFIGS / name)
        assert cfg.eps_list and len(cfg.vortices) == 2


def test_profile_command(tmp_path, capsys):
    assert main(["profile", "--out", str(tmp_path)]) == EXIT_OK
    info = json.loads(capsys.readouterr().out)
    assert abs(info["slope0"] - 0.5831894949) < 1e-6
    assert (tmp_path / "profile.csv").exists()


def test_ode_command(small, tmp_path, capsys):
    assert main(["ode", "--config", str(small), "--out", str(tmp_path / "ode")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["reason"] == "completed"
    assert (tmp_path / "ode" / "ode.csv").exists()


def test_prepare_simulate_track_energy(small, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["prepare", "--config", str(small)]) == EXIT_OK
    assert (out / "u0_eps0.08.cglf").exists() and (out / "vortices.json").exists()
    assert main(["simulate", "--config", str(small), "--stride", "5"]) == EXIT_OK
    info = _json_lines(capsys.readouterr().out)[-1]
    assert info["energy_nonincreasing"]
    run = out / "run_eps0.08"
    assert main(["track", "--run", str(run)]) == EXIT_OK
    tr = json.loads(capsys.readouterr().out)
    assert tr["vortices"] == 2 and tr["terminated"] is None
    snap = sorted(run.glob("t_*.cglf"))[-1]
    assert main(["energy", "--config", str(small), "--snapshot", str(snap), "--radius", "1.5"]) == EXIT_OK
    e = json.loads(capsys.readouterr().out)
    assert e["total"] == pytest.approx(e["gradient_part"] + e["potential_part"])


def test_compare_command(small, capsys):
    code = main(["compare", "--config", str(small), "--eps", "0.08,0.04"])
    lines = _json_lines(capsys.readouterr().out)
    assert [r["eps"] for r in lines[:2]] == [0.08, 0.04]
    assert code in (EXIT_OK, EXIT_FAIL)
    assert code == (EXIT_OK if lines[-1]["errors_decreasing"] else EXIT_FAIL)


def test_verify_command(tmp_path, capsys):
    cfg = tmp_path / "v.toml"
    cfg.write_text('[verify]\nchecks = ["ode_lyapunov", "energy_split"]\n')
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    ledger = json.loads(capsys.readouterr().out)
    assert ledger["status"] == "pass" and len(ledger["entries"]) == 2
    assert (tmp_path / "ledger.json").exists()
    empty = tmp_path / "empty.toml"
    empty.write_text("")
    assert main(["verify", "--config", str(empty)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["status"] == "nothing verified"
    strict = tmp_path / "strict.toml"
    strict.write_text('[verify]\nchecks = ["jacobian_mass"]\ntolerance_scale = 1e-9\n')
    assert main(["verify", "--config", str(strict)]) == EXIT_FAIL


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--grid", "abc"],
        ["compare", "--eps", "x,y"],
        ["frobnicate"],
        ["track", "--run", "/nonexistent/run"],
        ["ode", "--config", "/nonexistent.toml"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_unknown_check_is_a_usage_error(tmp_path, capsys):
    cfg = tmp_path / "v.toml"
    cfg.write_text('[verify]\nchecks = ["no_such_check"]\n')
    assert main(["verify", "--config", str(cfg)]) == EXIT_USAGE
