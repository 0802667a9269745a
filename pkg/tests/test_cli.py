import csv
import io
import json

import numpy as np
import pytest

from diracdelay.cli import main

POT = {
    "p": [{"from": "a", "to": "3*a", "shape": "constant", "value": 0.5}],
    "q": [{"from": "3*a/2", "to": "5*a/2", "shape": "cosine", "amplitude": [0.3, 0.1], "angular_frequency": 2}],
}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_charfn_zero_potential(tmp_path, capsys):
    cfg = write(tmp_path, {"a": 1.0, "command": {"lambda": [0, 0.5, 1]}})
    assert main(["charfn", cfg]) == 0
    out = rows(capsys.readouterr().out)
    assert out[0] == ["re_lambda", "im_lambda", "re_d1", "im_d1", "re_d2", "im_d2"]
    assert np.allclose([float(r[2]) for r in out[1:]], [0, 1, 0], atol=1e-12)


def test_charfn_engines_agree_and_deterministic(tmp_path, capsys):
    cfg = write(tmp_path, {"a": 0.8, "potential": POT, "command": {"lambda": {"min": -5, "max": 5, "count": 11}}})
    outs = {}
    for eng in ("solver", "series"):
        assert main(["charfn", cfg, "--engine", eng, "--out", str(tmp_path / f"{eng}.csv")]) == 0
        outs[eng] = np.array([[float(v) for v in r] for r in rows((tmp_path / f"{eng}.csv").read_text())[1:]])
    assert np.allclose(outs["solver"], outs["series"], atol=1e-8)
    first = (tmp_path / "solver.csv").read_bytes()
    main(["charfn", cfg, "--out", str(tmp_path / "again.csv")])
    assert (tmp_path / "again.csv").read_bytes() == first


def test_spectrum_and_hadamard(tmp_path, capsys):
    cfg = write(tmp_path, {"a": 1.0, "command": {"j": 1, "n_max": 40, "lambda": [0.5, 2.0]}})
    spec = tmp_path / "spec.json"
    assert main(["spectrum", cfg, "--out", str(spec)]) == 0
    doc = json.loads(spec.read_text())
    assert doc["j"] == 1 and len(doc["entries"]) == 81
    assert main(["hadamard", cfg, "--spectrum", str(spec)]) == 0
    out = rows(capsys.readouterr().out)
    assert out[0][-1] == "abs_error"
    assert abs(float(out[1][2]) - 1.0) < 1e-2
    assert abs(float(out[2][2])) < 1e-12
    listed = next([e["re"], e["im"]] for e in doc["entries"] if e["n"] == 2)
    cfg2 = write(tmp_path, {"a": 1.0, "command": {"lambda": [listed]}}, "at_root.json")
    assert main(["hadamard", cfg2, "--spectrum", str(spec)]) == 0
    out = rows(capsys.readouterr().out)
    assert float(out[1][2]) == 0.0 and float(out[1][-1]) < 1e-12


def test_hadamard_flagged_spectrum_exit_2(tmp_path, capsys):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"j": 1, "n_max": 1, "entries": [{"n": -1, "re": -1}, {"n": 0, "re": 0}, {"n": 1, "flag": "count=0"}]}))
    cfg = write(tmp_path, {"a": 1.0, "command": {"lambda": [0.5], "spectrum": "s.json"}})
    assert main(["hadamard", cfg]) == 2


def test_trace_and_asymptotic(tmp_path, capsys):
    cfg = write(tmp_path, {"a": 0.8, "potential": POT, "command": {"lambda": 1.5, "n_samples": 11}})
    assert main(["trace", cfg, "--m", "16"]) == 0
    out = rows(capsys.readouterr().out)
    assert out[0] == ["x", "re_s1", "im_s1", "re_s2", "im_s2"]
    assert float(out[1][3]) == -1.0 and abs(float(out[-1][0]) - np.pi) < 1e-15
    assert main(["asymptotic", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["within_bound"] and doc["target_slope"] == pytest.approx(np.pi - 1.6)


def test_ambarzumian(tmp_path, capsys):
    cfg = write(tmp_path, {"a": 1.3, "potential": {"q": [{"from": 1.5, "to": 2.5, "shape": "constant", "value": 0.8}]},
                           "command": {"n_max": 4}})
    code = main(["ambarzumian", cfg])
    captured = capsys.readouterr()
    doc = json.loads(captured.out)
    assert "2 pi/5" in captured.err and doc["warnings"]
    assert doc["baseline"]["residual"] < 1e-9
    assert doc["potential"]["residual"] > 1e-3
    assert code in (0, 2)


ISO_TUNE = {
    "mode": "both",
    "samples": [[0, 0], [1, 1]],
    "lambda": {"min": -5, "max": 5, "count": 11},
    "tune": {
        "h0": [{"from": "5*a/2", "to": "3*a", "shape": "constant", "value": 1}],
        "h1": [{"from": "5*a/2", "to": "3*a", "shape": "cosine", "amplitude": 1, "angular_frequency": "2*pi/a",
                "phase": "-5*pi"}],
        "theta_range": [-8, -4],
    },
    "potential_csv": "family.csv",
}


def test_iso_tuned(tmp_path, capsys):
    cfg = write(tmp_path, {"a": 0.8, "command": ISO_TUNE})
    assert main(["iso", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"] and doc["tuning"]["scale"] > 0
    assert (tmp_path / "family.csv").read_text().startswith("x,re_p,im_p,re_q,im_q")
    assert main(["iso", cfg, "--tol", "1e-30"]) == 2


def test_iso_missing_sign_exit_1(tmp_path, capsys):
    cmd = {"mode": "both", "samples": [[1, 1]], "h": [{"from": "5*a/2", "to": "3*a", "shape": "constant", "value": 1}]}
    cfg = write(tmp_path, {"a": 0.8, "command": cmd})
    assert main(["iso", cfg]) == 1
    assert "+1" in capsys.readouterr().err


@pytest.mark.parametrize(
    "doc, needle",
    [
        ({"a": 0.8, "potential": {"p": [{"from": 0.1, "to": 0.5, "shape": "constant", "value": 1}]}}, "potential"),
        ({"a": 0.8, "command": {"lambda": {"min": 0, "max": 1}}}, "command.lambda.count"),
        ({"a": 9}, "a:"),
    ],
)
def test_config_errors_exit_1(tmp_path, capsys, doc, needle):
    assert main(["charfn", write(tmp_path, doc)]) == 1
    assert needle in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert main(["nope", "x.json"]) == 1
    assert main(["charfn", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["charfn", str(bad)]) == 1
    assert "line 1" in capsys.readouterr().err
