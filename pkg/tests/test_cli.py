import json

import numpy as np
import pytest

from bmjet.cli import main
from bmjet.errors import ConfigError
from bmjet.runner import RunConfig, run_eval, run_geodesic, run_verify


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _run(tmp_path, argv):
    out = tmp_path / "out.json"
    code = main(argv + ["--out", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


FLAT3 = {"geometry": {"n": 3, "sigma": "0", "h11": "1"}, "points": [{"t": 0, "x": [0, 0, 0], "y": [1, 1, 1]}]}


def test_eval_reports_scalar_curvature(tmp_path):
    code, report = _run(tmp_path, ["eval", "--config", _write(tmp_path, FLAT3)])
    assert code == 0
    pt = report["points"][0]
    assert pt["Sc"] == pytest.approx(-2.0)
    assert np.max(np.abs(pt["em_tensor"])) == 0.0
    for key in ("fstar", "g", "g_inv", "spray", "nonlinear", "cartan", "torsion", "curvature"):
        assert key in pt
    for key in ("ricci_R", "ricci_R_transpose", "ricci_S", "Y11", "einstein", "stress_energy"):
        assert key in pt


def test_eval_continues_past_bad_point(tmp_path):
    cfg = dict(FLAT3, points=FLAT3["points"] + [{"t": 0, "x": [0, 0, 0], "y": [1, -1, 1]}])
    code, report = _run(tmp_path, ["eval", "--config", _write(tmp_path, cfg)])
    assert code == 2
    assert "Sc" in report["points"][0]
    assert "error" in report["points"][1]


def test_malformed_sigma(tmp_path, capsys):
    code = main(["eval", "--config", _write(tmp_path, {"geometry": {"n": 3, "sigma": "x1*"}})])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["offset"] == 3


def test_verify_passes_and_is_deterministic(tmp_path):
    argv = ["verify", "--samples", "5", "--seed", "7"]
    code1, r1 = _run(tmp_path, list(argv))
    first = (tmp_path / "out.json").read_bytes()
    code2, _ = _run(tmp_path, list(argv))
    assert code1 == code2 == 0
    assert first == (tmp_path / "out.json").read_bytes()
    assert all(c["pass"] for c in r1["checks"])
    assert {"name", "anchor", "max_dev", "tol", "pass"} <= set(r1["checks"][0])
    assert r1["meta"]["seed"] == 7


def test_seed_changes_report(tmp_path):
    _run(tmp_path, ["verify", "--samples", "3", "--seed", "1"])
    a = (tmp_path / "out.json").read_bytes()
    _run(tmp_path, ["verify", "--samples", "3", "--seed", "2"])
    assert a != (tmp_path / "out.json").read_bytes()


def test_corrupted_tolerance_fails(tmp_path):
    cfg = {"verify": {"samples": 3, "seed": 1, "tolerances": {"oracle.metric": 1e-30}}}
    code, report = _run(tmp_path, ["verify", "--config", _write(tmp_path, cfg)])
    assert code == 1
    bad = [c for c in report["checks"] if not c["pass"]]
    assert [c["name"] for c in bad] == ["oracle.metric"]


def test_unknown_tolerance_name_is_config_error(tmp_path):
    cfg = {"verify": {"tolerances": {"no.such.check": 1.0}}}
    assert main(["verify", "--config", _write(tmp_path, cfg)]) == 2


def test_geodesic_straight_line(tmp_path):
    cfg = {
        "geometry": {"n": 3, "sigma": "0", "h11": "1"},
        "geodesic": {"t0": 0, "t1": 2, "steps": 100, "x0": [1, 0, 0], "y0": [1, 2, 4]},
    }
    code, report = _run(tmp_path, ["geodesic", "--config", _write(tmp_path, cfg)])
    assert code == 0
    np.testing.assert_allclose(report["trajectory"][-1]["x"], [3, 4, 8], atol=1e-10)
    assert report["meta"]["el_residual"] <= 1e-10


def test_geodesic_linear_sigma(tmp_path):
    cfg = {
        "geometry": {"n": 3, "sigma": "x1", "h11": "1"},
        "geodesic": {"t0": 0, "t1": 1, "steps": 200, "x0": [0, 0, 0], "y0": [1, 1, 1]},
    }
    code, report = _run(tmp_path, ["geodesic", "--config", _write(tmp_path, cfg)])
    assert code == 0
    y1 = [s["y"][0] for s in report["trajectory"]]
    assert np.all(np.diff(y1) < 0)
    assert report["meta"]["el_residual"] < 1e-3


def test_geodesic_domain_exit(tmp_path):
    cfg = {
        "geometry": {"n": 2, "sigma": "5*x1", "h11": "1"},
        "geodesic": {"t0": 0, "t1": 1, "steps": 100, "x0": [0, 0], "y0": [-1, -1]},
    }
    code, report = _run(tmp_path, ["geodesic", "--config", _write(tmp_path, cfg)])
    assert code == 2
    assert report["errors"] and "last_valid" in report["errors"][0]
    assert len(report["trajectory"]) > 1


@pytest.mark.parametrize("block", [None, {"steps": 0, "y0": [1, 1, 1]}])
def test_geodesic_config_errors(tmp_path, block):
    cfg = {} if block is None else {"geodesic": block}
    assert main(["geodesic", "--config", _write(tmp_path, cfg)]) == 2


@pytest.mark.parametrize(
    "raw",
    [
        {"bogus": 1},
        {"geometry": {"n": 1}},
        {"geometry": {"n": 3.0}},
        {"verify": {"samples": 0}},
        {"points": [{"x": [0, 0], "y": [1, 1]}]},
        {"points": [{"t": 0}]},
    ],
)
def test_run_config_validation(raw):
    with pytest.raises((ConfigError, ValueError)):
        RunConfig.from_dict(raw)


def test_missing_config_file(tmp_path):
    assert main(["eval", "--config", str(tmp_path / "nope.json")]) == 2


def test_reports_in_process():
    rc = RunConfig.from_dict({"verify": {"samples": 2, "seed": 3}})
    assert run_verify(rc, suites=["metric"]).passed
    ev = run_eval(rc)
    assert len(ev.points) == 1
    with pytest.raises(ConfigError):
        run_geodesic(rc)


def test_output_key_in_config(tmp_path):
    out = tmp_path / "from_cfg.json"
    cfg = dict(FLAT3, output=str(out))
    assert main(["eval", "--config", _write(tmp_path, cfg)]) == 0
    assert json.loads(out.read_text())["points"][0]["Sc"] == pytest.approx(-2.0)
