import json
import math

import numpy as np
import pytest

from pluridim import cli
from pluridim.endomorphism import to_spec
from pluridim.verifier import VerificationReport

from conftest import skew, z2


def _write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


def _cfg(tmp_path, F=None, **extra):
    raw = {"map": to_spec(F or z2()), "seed": 3, "n_points": 2500, "cocycle_length": 20}
    raw.update(extra)
    return _write(tmp_path, raw)


def _report(out):
    with open(out / "report.json") as fh:
        return json.load(fh)


def test_full_pipeline_circle(tmp_path):
    out = tmp_path / "o"
    code = cli.main(["run", "--config", _cfg(tmp_path), "--out", str(out), "--svg"])
    assert code == 0
    rep = _report(out)
    res = rep["results"]
    assert res["lyapunov"]["lambda_max"] == pytest.approx(math.log(2), abs=0.01)
    assert res["dimension"]["correlation_dim"] == pytest.approx(1, abs=0.1)
    assert all(b["pass"] for b in res["lyapunov"]["bounds"].values())
    # n = 1 sits on the equality case of the dimension bound, so that check is reported, not asserted
    assert set(res["dimension"]["checks"]) == {"correlation_le_bound", "knn_le_bound"}
    assert rep["version"] and rep["seed"] == 3 and len(rep["config_hash"]) == 64
    assert sorted(rep["artifacts"]) == ["points.csv", "points.svg"]
    svg = (out / "points.svg").read_text()
    assert 'width="1000" height="1000"' in svg and "href" not in svg


def test_csv_format(tmp_path):
    out = tmp_path / "o"
    cli.main(["sample", "--config", _cfg(tmp_path, F=skew()), "--out", str(out)])
    lines = (out / "points.csv").read_text().splitlines()
    assert lines[0] == "re_z1,im_z1,re_z2,im_z2"
    assert len(lines) == 2501
    data = np.loadtxt(out / "points.csv", delimiter=",", skiprows=1)
    assert data.shape == (2500, 4)
    # 17 significant digits round-trip doubles exactly
    assert all(len(v.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 17
               for v in lines[1].split(","))


def test_degree_one_map_exit_2(tmp_path, capsys):
    raw = {"map": {"variant": "one_d", "coefficients": [[0, 0], [1, 0]]}}
    code = cli.main(["run", "--config", _write(tmp_path, raw), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "degree must be >= 2" in capsys.readouterr().err


def test_schema_violation_exit_2(tmp_path):
    raw = {"map": to_spec(z2()), "n_points": "many"}
    assert cli.main(["sample", "--config", _write(tmp_path, raw)]) == 2
    raw = {"map": to_spec(z2()), "unknown_key": 1}
    assert cli.main(["sample", "--config", _write(tmp_path, raw)]) == 2
    assert cli.main(["sample", "--config", str(tmp_path / "missing.json")]) == 2


def test_irregular_map_exit_2(tmp_path):
    raw = {"map": {"variant": "skew2d", "coefficients": {
        "p": [[0, 0], [0, 0], [1, 0]],
        "q": [[[0, 0], [0, 0], [0, 0]], [[0, 0], [1, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]]]}}}
    assert cli.main(["sample", "--config", _write(tmp_path, raw), "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_3(tmp_path):
    dense = {"variant": "dense", "degree": 2,
             "coefficients": [[[[2, 0], [1, 0]]], [[[0, 2], [1, 0]]]]}
    out = tmp_path / "o"
    code = cli.main(["sample", "--config", _write(tmp_path, {"map": dense}), "--out", str(out)])
    assert code == 3
    rep = _report(out)
    assert rep["status"] == "error" and rep["error"]["type"] == "NotImplementedError"


def test_verify_failure_exit_1(tmp_path, monkeypatch):
    failing = VerificationReport("covering", False, {"growth_factor": 99.0}, {"growth_bound": 3.0},
                                 {"growth": False})
    monkeypatch.setattr(cli, "covering_statistics", lambda *a, **k: failing)
    monkeypatch.setattr(cli.Run, "lyapunov", lambda self: None)
    code = cli.main(["verify-covering", "--config", _cfg(tmp_path), "--out", str(tmp_path / "o")])
    assert code == 1
    assert _report(tmp_path / "o")["status"] == "fail"


def test_byte_identical_reruns(tmp_path):
    cfg = _cfg(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", cfg, "--out", str(a), "--workers", "1"]) == 0
    assert cli.main(["run", "--config", cfg, "--out", str(b), "--workers", "4"]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "points.csv").read_bytes() == (b / "points.csv").read_bytes()


def test_seed_flag_and_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("PLURIDIM_N_POINTS", "300")
    monkeypatch.setenv("PLURIDIM_LEMMA2__M", "3")
    out = tmp_path / "o"
    assert cli.main(["sample", "--config", _cfg(tmp_path), "--seed", "11", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["seed"] == 11 and rep["config"]["n_points"] == 300
    assert rep["config"]["lemma2"]["m"] == 3


def test_env_override_parsing():
    raw = {"map": {}, "dimension": {"k": 10}}
    out = cli.apply_env_overrides(raw, {"PLURIDIM_DIMENSION__K": "12", "PLURIDIM_OUT": "dir",
                                        "OTHER": "x"})
    assert out["dimension"]["k"] == 12 and out["out"] == "dir"
    assert raw["dimension"]["k"] == 10


def test_green_subcommand(tmp_path):
    out = tmp_path / "o"
    raw = {"map": to_spec(z2()), "green": {"shape": [4, 3], "re_range": [1.5, 3], "im_range": [0, 1]}}
    assert cli.main(["green", "--config", _write(tmp_path, raw), "--out", str(out)]) == 0
    data = np.loadtxt(out / "green.csv", delimiter=",", skiprows=1)
    assert data.shape == (12, 3)
    assert np.allclose(data[:, 2], np.log(np.hypot(data[:, 0], data[:, 1])), atol=1e-8)


@pytest.mark.parametrize("command", ["verify-lemma1", "verify-lemma2", "verify-covering"])
def test_verify_subcommands_pass(tmp_path, command):
    out = tmp_path / "o"
    cfg = _cfg(tmp_path, n_points=5000, lemma1={"n_trials": 2, "n_test_points": 500})
    assert cli.main([command, "--config", cfg, "--out", str(out)]) == 0
    assert _report(out)["results"]["pass"]


def test_dimension_subcommand_fields(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["dimension", "--config", _cfg(tmp_path), "--out", str(out)]) == 0
    res = _report(out)["results"]
    for key in ("correlation_dim", "knn_dim", "correlation_stderr", "knn_stderr", "mane",
                "conjecture2", "theorem_bound", "pass"):
        assert key in res
