import json
import math

import numpy as np
import pytest

from outwave import cli
from outwave.grid_core import RadialField, RadialGrid, write_field_csv
from outwave.projections import outgoing_velocity


def test_parse_eps_range():
    assert cli.parse_eps("2^-4..2^-6") == [2**-4, 2**-5, 2**-6]
    assert cli.parse_eps("0.1, 0.05") == [0.1, 0.05]


def test_parse_eps_garbage():
    with pytest.raises(cli.ConfigError):
        cli.parse_eps("tiny")


def test_bad_scenario_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[scenario]\nkind = "spiral"\n')
    assert cli.main(["simulate", "--scenario", str(bad)]) == cli.EXIT_CONFIG
    assert "unknown scenario kind" in capsys.readouterr().err


def test_missing_csv_exit_code(tmp_path):
    assert cli.main(["norms", "--data", str(tmp_path / "none.csv")]) == cli.EXIT_CONFIG


def test_scenario_run_writes_report(tmp_path):
    sc = tmp_path / "s.toml"
    sc.write_text("""
[scenario]
kind = "outgoing_shell"
amplitude = 0.01
width = 1.0
[solver]
T = 0.5
grid_n = 1025
r_max = 5.0
method = "picard"
[diagnostics]
list = ["projection"]
""")
    out = tmp_path / "out"
    assert cli.main(["simulate", "--scenario", str(sc), "--out", str(out)]) == cli.EXIT_OK
    doc = json.loads((out / "report.json").read_text())
    assert doc["passed"] and doc["scenario"]["kind"] == "outgoing_shell"


def test_shell_sweep_cli(tmp_path, capsys):
    code = cli.main(["shell-sweep", "--alpha", "0.1", "--eps", "2^-3..2^-5", "--horizon", "1.0",
                     "--no-picard", "--out", str(tmp_path)])
    text = capsys.readouterr().out
    assert "weighted_sup: slope" in text
    assert code in (cli.EXIT_OK, cli.EXIT_FAIL)
    assert (tmp_path / "plotdata" / "weighted_sup.csv").exists()


def _field_csv(tmp_path, name="u0.csv"):
    g = RadialGrid(8.0, 513)
    u = RadialField(g, np.exp(-((g.r - 4.0) / 0.5) ** 2))
    path = tmp_path / name
    write_field_csv(u, path)
    return u, path


def test_project_outgoing_csv(tmp_path, capsys):
    u, path = _field_csv(tmp_path)
    vel = tmp_path / "u1.csv"
    write_field_csv(outgoing_velocity(u), vel)
    assert cli.main(["project", "--data", str(path), "--vel", str(vel)]) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["outgoing"] and doc["residual"] < 1e-10


def test_norms_csv(tmp_path, capsys):
    _, path = _field_csv(tmp_path)
    assert cli.main(["norms", "--data", str(path), "--spec", "Lp:p=inf"]) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["values"]["Lp(p=inf)"] == 1.0


def test_norms_bad_spec(tmp_path):
    _, path = _field_csv(tmp_path)
    assert cli.main(["norms", "--data", str(path), "--spec", "Besov:s=1"]) == cli.EXIT_CONFIG


def test_choquet_indicator(capsys):
    bumps = json.dumps([{"center": [0, 0, 0], "profile": "indicator", "scale": 1.0}])
    assert cli.main(["choquet", "--alpha", "1", "--p", "2", "--levels", "2",
                     "--bumps", bumps]) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["L^{p,inf}"] == pytest.approx(math.sqrt(2 * math.pi), rel=1e-12)
    assert doc["argmax_center"] == pytest.approx([0, 0, 0], abs=1e-9)


@pytest.mark.parametrize("bumps", ["not json", '[{"profile": "gaussian"}]',
                                   '[{"center": [0, 0, 0], "profile": "triangle"}]'])
def test_choquet_bad_bumps(bumps):
    assert cli.main(["choquet", "--bumps", bumps]) == cli.EXIT_CONFIG


def test_choquet_needs_bumps():
    assert cli.main(["choquet"]) == cli.EXIT_CONFIG
