import json

import numpy as np
import pytest

from astar.cli import bundled_config, main
from astar.config import RunConfig, load_config, parse_config
from astar.errors import ConfigError


def test_parse_and_echo_round_trip():
    cfg = parse_config("units.c = 2.0  # speed of light\n\neos.gamma = 1.5\neos.upsilon_coeffs = 0.1, -0.2\n"
                       "grid.nw = 32\nsolver.equatorial_symmetry = no\n")
    assert cfg.c == 2.0 and cfg.eos_gamma == 1.5 and cfg.eos_upsilon == (0.1, -0.2)
    assert cfg.nw == 32 and cfg.equatorial_symmetry is False
    again = parse_config(cfg.echo())
    assert again == cfg and again.echo() == cfg.echo()


def test_defaults_echo_every_key():
    keys = {line.split(" = ")[0] for line in RunConfig().echo().splitlines()}
    assert keys == set(RunConfig.KEYS) - {"omega.scale", "solver.seed_radius"}


@pytest.mark.parametrize("text", [
    "grid.nwx = 3\n",
    "eos.gamma = 2.0\n",
    "grid.nw = 8\n",
    "units.c = -1\n",
    "solver.theta = 1.5\n",
    "solver.frame = rotating\n",
    "omega.kind = profile\n",
    "grid.nw = many\n",
    "solver.equatorial_symmetry = maybe\n",
    "just words\n",
])
def test_invalid_config_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_bundled_configs_load():
    for name in ("vacuum.cfg", "weakstar.cfg"):
        cfg = load_config(bundled_config(name))
        assert cfg.eos_kind == "barotropic"
    with pytest.raises(ConfigError):
        load_config("/nonexistent/x.cfg")


def test_verify_exit_codes(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--seed", "42", "--points", "200", "--tol", "1e-10", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and rep["points"] == 200
    assert main(["verify", "--points", "20", "--tol", "0"]) == 1
    assert '"passed": false' in capsys.readouterr().out
    assert main(["verify", "--points", "-1"]) == 64
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--points", "abc"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 64


def test_verify_failure_names_replayable_point(tmp_path):
    out = tmp_path / "f.json"
    assert main(["verify", "--points", "20", "--tol", "0", "--out", str(out)]) == 1
    rep = json.loads(out.read_text())
    ff = rep["first_failure"]
    assert ff["check"] in rep["checks"] and 0 <= ff["index"] < 20
    assert set(ff["inputs"]) == {"F", "A", "K", "Pi", "rho", "P", "eps", "Omega"}


def test_reports_are_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["verify", "--seed", "7", "--points", "50", "--out", str(a)])
    main(["verify", "--seed", "7", "--points", "50", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_jobs_environment_override(tmp_path, monkeypatch, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["ricci-oracle", "--fields", "4", "--h", "1e-2", "5e-3"]
    assert main(["--jobs", "1", *args, "--out", str(a)]) == 0
    monkeypatch.setenv("ASTAR_JOBS", "3")
    assert main([*args, "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    monkeypatch.setenv("ASTAR_JOBS", "lots")
    assert main(args) == 64
    assert "order" in capsys.readouterr().out


def test_solve_vacuum_then_corotate_and_export(tmp_path):
    run = tmp_path / "vac"
    assert main(["solve", "vacuum.cfg", "--out", str(run)]) == 0
    rep = json.loads((run / "report.json").read_text())
    assert rep["converged"] and rep["outer_iters"] == 1
    assert (run / "fields.csv").read_text().splitlines()[0] == "w,z,F,A,K,Pi,rho,P"
    assert load_config(run / "config-echo.cfg") == load_config(bundled_config("vacuum.cfg"))
    assert main(["corotate", str(run)]) == 0
    npz = tmp_path / "f.npz"
    assert main(["export", str(run), "--format", "npz", "--out", str(npz)]) == 0
    data = np.load(npz)
    assert data["F"].shape == (65, 33) and np.all(data["rho"] == 0)
    js = tmp_path / "f.json"
    assert main(["export", str(run), "--format", "json", "--out", str(js)]) == 0
    assert np.array_equal(np.array(json.loads(js.read_text())["Pi"]), data["Pi"])


def test_solve_causal_limit_exits_2(tmp_path):
    cfg = tmp_path / "fast.cfg"
    cfg.write_text("omega.value = 0.3\ngrid.wmax = 4.0\ngrid.nw = 16\ngrid.nz = 16\n")
    assert main(["solve", str(cfg), "--out", str(tmp_path / "run")]) == 2
    rep = json.loads((tmp_path / "run" / "report.json").read_text())
    assert not rep["converged"] and "causal" in rep["message"]


def test_solve_missing_config_exits_64(tmp_path):
    assert main(["solve", str(tmp_path / "none.cfg")]) == 64
    bad = tmp_path / "bad.cfg"
    bad.write_text("grid.nw = 4\n")
    assert main(["solve", str(bad)]) == 64
