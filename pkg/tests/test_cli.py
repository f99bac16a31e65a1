import json
import subprocess
import sys

import numpy as np
import pytest

from bundlecurv import cli
from bundlecurv import profile as P
from bundlecurv.errors import ParameterError


def call(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_profile_csv(tmp_path):
    code, text = call(tmp_path, "profile", "--alpha", "0", "--a", "1", "--r-max", "4", "--step", "1e-3")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("# profile ") and lines[1] == "r,H,Hp,conservation_residual"
    data = np.loadtxt(lines[2:], delimiter=",")
    assert data.shape == (4001, 4)
    assert np.all(data[:, 3] <= 1e-8)
    assert "\r" not in text


def test_profile_round_trips_exactly(tmp_path):
    code, _ = call(tmp_path, "profile", "--alpha", "0.3", "--a", "1.1", "--r-max", "1", "--step", "1e-2", name="p.csv")
    assert code == 0
    p = cli.read_profile_csv(tmp_path / "p.csv")
    q = P.integrate(P.OdeParams(0.3, 1.1, 1.0, 1e-2))
    assert np.array_equal(p.H, q.H) and np.array_equal(p.Hp, q.Hp)


def test_deterministic(tmp_path):
    args = ("profile", "--alpha", "1", "--a", "0.5", "--r-max", "2", "--step", "1e-2")
    _, a = call(tmp_path, *args, name="a")
    _, b = call(tmp_path, *args, name="b")
    assert a == b


def test_classify_json(tmp_path):
    code, text = call(tmp_path, "classify", "--genus", "0", "--degree", "2")
    assert code == 0
    rec = json.loads(text)
    assert rec["H"] == -1 and rec["space_kind"] == "lens(2,1)"


def test_flatness_from_profile_file(tmp_path):
    call(tmp_path, "profile", "--alpha", "0", "--a", "1", "--r-max", "6", "--step", "1e-3", name="p.csv")
    code, text = call(tmp_path, "flatness", "--profile", str(tmp_path / "p.csv"), "--c", "1")
    assert code == 0
    rep = json.loads(text)
    assert set(rep) >= {"alpha", "hess_residual", "constraint_residual", "trace_residual", "dnabla_s", "window"}
    assert len(rep["dnabla_s"]) == 6
    assert max(rep["dnabla_s"]) <= 1e-6


def test_example_json(tmp_path):
    code, text = call(tmp_path, "example", "--alpha", "0", "--a", "1", "--c", "1")
    assert code == 0
    ex = json.loads(text)
    assert set(ex) == {"r", "g_phiphi", "g_phit", "H", "l"}
    r, H = np.array(ex["r"]), np.array(ex["H"])
    assert np.allclose(ex["g_phit"], 0.5 * H**2)


def test_cotton_and_holonomy(tmp_path):
    code, text = call(tmp_path, "cotton", "--metric", "flat", "--grid", "3")
    assert code == 0 and json.loads(text)["sup_norm"] <= 1e-10
    code, text = call(tmp_path, "holonomy", "--genus", "1", "--coeffs", "6.283185307179586,1")
    assert code == 0
    h = json.loads(text)
    assert h["reduced"][0] == 0.0 and h["reduced"][1] == 1.0


def test_nonexistence(tmp_path):
    box = json.dumps({"A": [-5, 5], "B": [-5, 5], "alpha": [-25, 25], "c": [0.1, 10], "min_gap": 0.1})
    code, text = call(tmp_path, "nonexistence", "--box", box, "--grid", "50")
    assert code == 0
    cert = json.loads(text)
    assert cert["conclusion"] is True and cert["grid_min_residual"] > 0


def test_exit_codes(tmp_path, capsys):
    code, text = call(tmp_path, "profile", "--alpha", "0", "--a", "1", "--step", "0")
    assert code == 2 and text is None
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and err.startswith("bundlecurv: parameter:")
    code, _ = call(tmp_path, "classify", "--genus", "2", "--degree", "1")
    assert code == 1
    code, _ = call(tmp_path, "nonexistence", "--box", '{"A": [1, 1]}')
    assert code == 2
    code, _ = call(tmp_path, "classify", "--genus", "0", "--degree", "1", "--format", "csv")
    assert code == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["profile", "--alpha", "x", "--a", "1"])
    assert e.value.code == 2


def test_run_config_validation():
    with pytest.raises(ParameterError):
        cli.RunConfig("profile", {"alpha": 0.0, "bogus": 1})
    with pytest.raises(ParameterError):
        cli.RunConfig("profile", {"alpha": float("nan")})
    with pytest.raises(ParameterError):
        cli.RunConfig("nope")


def test_seventeen_digits():
    assert cli.fmt(0.1) == "0.10000000000000001"
    assert float(cli.fmt(1 / 3)) == 1 / 3
    assert cli._to_json({"x": [float("inf"), 2]}) == '{"x": [null, 2]}'


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "bundlecurv", "classify", "--genus", "3", "--degree", "0"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(res.stdout)["moduli_dim"] == 6
