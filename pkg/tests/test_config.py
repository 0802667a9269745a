import json

import numpy as np
import pytest

from diracdelay import PI
from diracdelay.config import eval_expr, load_config, parse_config, parse_lambda_grid
from diracdelay.errors import ValidationError


def test_eval_expr():
    names = {"a": 0.8, "pi": PI}
    assert eval_expr("5*a/2", names, "x") == pytest.approx(2.0)
    assert eval_expr("-pi/2 + 1", names, "x") == pytest.approx(1 - PI / 2)
    assert eval_expr(3, names, "x") == 3.0
    for bad in ("__import__('os')", "a.real", "b", "1/0", "2**2000.0", True):
        with pytest.raises(ValidationError):
            eval_expr(bad, names, "field")


def test_parse_config_fields():
    doc = {
        "a": 0.8,
        "potential": {
            "p": [{"from": "a", "to": "2*a", "shape": "constant", "value": [0.5, 0.25]}],
            "q": [{"from": "3*a/2", "to": "5*a/2", "shape": "cosine", "amplitude": 1, "angular_frequency": 2}],
        },
        "command": {"lambda": {"min": -1, "max": 1, "count": 3}},
    }
    rc = parse_config(doc)
    assert rc.cfg.a == 0.8 and rc.has_potential
    assert rc.potential.p.evaluate(1.0) == 0.5 + 0.25j
    assert rc.potential.q.evaluate(1.5) == pytest.approx(np.cos(3.0))
    assert np.allclose(parse_lambda_grid(rc.command["lambda"]), [-1, 0, 1])


@pytest.mark.parametrize(
    "doc, where",
    [
        ({"potential": {}}, "config.a"),
        ({"a": 5}, "a:"),
        ({"a": 0.8, "potential": {"p": [{"from": 0.1, "to": 0.5, "shape": "constant", "value": 1}]}}, "potential"),
        ({"a": 0.8, "potential": {"q": [{"from": 1, "to": 2, "shape": "blob"}]}}, "potential.q[0].shape"),
        ({"a": 0.8, "potential": {"q": [{"from": 1, "to": 2, "shape": "constant"}]}}, "potential.q[0].value"),
        ({"a": 0.8, "potential": {"q": [{"from": 2, "to": 1}]}}, "potential.q[0]"),
    ],
)
def test_parse_config_errors_name_field(doc, where):
    with pytest.raises(ValidationError) as info:
        parse_config(doc)
    assert str(info.value).startswith(where)


def test_lambda_grid_forms():
    assert np.allclose(parse_lambda_grid([1, [2, 3]]), [1, 2 + 3j])
    assert np.allclose(parse_lambda_grid({"min": 0, "max": 1, "count": 2, "imag": 0.5}), [0.5j, 1 + 0.5j])
    with pytest.raises(ValidationError):
        parse_lambda_grid({"min": 0, "max": 1, "count": 0})
    with pytest.raises(ValidationError):
        parse_lambda_grid([])


def test_load_config_reports_json_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"a": \n')
    with pytest.raises(ValidationError, match="line 2"):
        load_config(p)
    with pytest.raises(ValidationError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"a": 1.0}))
    rc = load_config(good)
    assert rc.potential.is_zero and not rc.has_potential


def test_expression_values():
    doc = {"a": 0.8, "potential": {"q": [{"from": "a", "to": "2*a", "shape": "constant", "value": ["pi/a", "-a"]}]}}
    rc = parse_config(doc)
    assert rc.potential.q.evaluate(1.0) == pytest.approx(PI / 0.8 - 0.8j)
    assert np.allclose(parse_lambda_grid(["pi", ["1/2", 2]]), [PI, 0.5 + 2j])
