import json
import math

import pytest

from nlsrot.cli import main, parse_angle
from nlsrot.fieldio import read_field, write_field
from nlsrot.spectral import Grid

from conftest import gaussian


@pytest.fixture(autouse=True)
def output(tmp_path, monkeypatch):
    monkeypatch.setenv("NLSROT_OUTPUT", str(tmp_path / "out"))
    return tmp_path / "out"


def _last_json(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("text,value", [("1.5", 1.5), ("pi", math.pi), ("pi/2", math.pi / 2), ("-pi/4", -math.pi / 4), ("2pi/3", 2 * math.pi / 3)])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value)


def test_eigenstate(output, capsys):
    assert main(["eigenstate", "--nu", "-1.5"]) == 0
    payload = _last_json(capsys)
    assert payload["converged"] and payload["sign"] == "focusing"
    assert payload["relative_residual"] < 1e-7
    f = read_field(output / "eigenstate" / "nu-1.5.field")
    assert f.grid == Grid(1, 12.0, 1024)


def test_propagate(tmp_path, capsys):
    src = write_field(tmp_path / "u0.field", gaussian(Grid(1, 12.0, 256), 0.5))
    out = tmp_path / "final.field"
    assert main(["propagate", "--in", str(src), "--eq", "harmonic", "--t1", "0.5", "--dt", "1e-2", "--out", str(out)]) == 0
    payload = _last_json(capsys)
    assert payload["steps"] == 50 and not payload["blew_up"]
    assert payload["mass_drift"] < 1e-12
    assert read_field(out).grid.N == 256


def test_scatter_lens_and_direct(output, capsys):
    assert main(["scatter", "--amplitude", "0.2", "--dt", "1e-3"]) == 0
    lens = _last_json(capsys)
    assert lens["method"] == "lens" and lens["l2_defect"] < 1e-7
    assert main(["scatter", "--method", "direct", "--amplitude", "0.2", "--T", "10"]) == 0
    direct = _last_json(capsys)
    assert direct["method"] == "direct"
    a = read_field(output / "scatter" / "u_plus_lens.field")
    b = read_field(output / "scatter" / "u_plus_direct.field")
    assert (a - b).norm() < 1e-4


def test_rotate_check(output, capsys):
    assert main(["rotate-check", "--theta", "pi/2", "--j", "1"]) == 0
    rep = _last_json(capsys)
    assert rep["nu"] == pytest.approx(2.0)
    assert rep["defect"] < 1e-4
    assert {"theta", "j", "nu", "defect", "l2", "grad_l2", "mass_threshold_pass", "runtime"} <= set(rep)
    assert list((output / "rotate-check").glob("u_plus_*.field"))


def test_rotate_check_threshold_sets_exit_code(capsys):
    assert main(["rotate-check", "--dt", "0.05", "--threshold", "1e-12"]) == 1


def test_perturbation(output, capsys):
    assert main(["perturbation", "--eps-list", "0.15,0.2,0.3"]) == 0
    payload = _last_json(capsys)
    assert all(abs(r["first_order_ratio"] - 1) < 0.05 for r in payload["rows"])
    assert payload["residual_slope"] >= 7
    assert (output / "perturbation" / "perturbation.csv").exists()


def test_stability(capsys):
    assert main(["stability", "--eps", "1e-3", "--trials", "2", "--dt", "1e-2"]) == 0
    payload = _last_json(capsys)
    assert payload["blowups"] == 0 and payload["trials"] == 2


def test_resolution_study_linear(output, capsys):
    # F(phi) has exponential tails, so round-off needs the wider box
    assert main(["resolution-study", "--linear", "--grid", "24,1024", "--thetas", "pi"]) == 0
    rows = _last_json(capsys)["rows"]
    assert len(rows) == 2
    assert all(r["defect"] < 1e-11 for r in rows)
    assert (output / "resolution-study" / "resolution.csv").exists()


def test_identity_suite(capsys):
    assert main(["identity-suite", "--data", "hermite2"]) == 0
    payload = _last_json(capsys)
    assert payload["worst"] < 1e-5


def test_config_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nu": 2.5, "grid": "12,512"}))
    assert main(["eigenstate", "--nu", "-1.5", "--config", str(cfg)]) == 0
    payload = _last_json(capsys)
    assert payload["nu"] == 2.5 and payload["sign"] == "defocusing"


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    with pytest.raises(SystemExit):
        main(["eigenstate", "--nu", "2.5", "--config", str(cfg)])


def test_library_errors_exit_2(tmp_path, capsys):
    assert main(["scatter", "--in", str(tmp_path / "missing.field")]) == 2
    assert "FieldFormatError" in capsys.readouterr().err


def test_empty_experiment(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"name": "empty", "thetas": [], "js": []}))
    assert main(["run", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out == ""


def test_experiment_is_deterministic(tmp_path, capsys):
    texts = []
    for k in range(2):
        cfg = tmp_path / f"exp{k}.json"
        out = tmp_path / f"run{k}"
        cfg.write_text(json.dumps({"thetas": ["pi"], "js": [1], "dt": 1e-2, "output_dir": str(out)}))
        assert main(["run", "--config", str(cfg)]) == 0
        data = json.loads((out / "reports.json").read_text())
        for r in data["reports"]:
            r.pop("runtime")
        data["config"].pop("output_dir")
        texts.append(json.dumps(data, sort_keys=True))
        field = sorted(out.glob("u_plus_*.csv"))[0].read_bytes()
        texts.append(field)
    assert texts[0] == texts[2]
    assert texts[1] == texts[3]
