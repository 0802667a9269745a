"""JSON run configurations.

A configuration has the top-level keys ``a``, ``potential`` and
``command``.  Segment endpoints may be numbers or arithmetic expressions in
``a`` and ``pi`` such as ``"5*a/2"``.  Every error names the offending
field, e.g. ``potential.q[1].to``.
"""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    PI,
    Constant,
    Cosine,
    DelayConfig,
    Legendre,
    PiecewiseFunction,
    PotentialPair,
    Samples,
    Sum,
    Zero,
    complex_from_json,
    make_delay_config,
    validate_potential,
)
from .errors import ValidationError

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def eval_expr(expr, names: dict, where: str) -> float:
    """Evaluate a number or a restricted arithmetic expression."""
    if isinstance(expr, bool):
        raise ValidationError(f"{where}: expected a number, got {expr!r}")
    if isinstance(expr, (int, float)):
        return float(expr)
    if not isinstance(expr, str):
        raise ValidationError(f"{where}: expected a number or expression, got {expr!r}")
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ValidationError(f"{where}: cannot parse expression {expr!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in names:
            return float(names[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ValidationError(f"{where}: unsupported element in expression {expr!r}")

    try:
        val = ev(tree)
    except ZeroDivisionError as exc:
        raise ValidationError(f"{where}: division by zero in {expr!r}") from exc
    except OverflowError as exc:
        raise ValidationError(f"{where}: expression {expr!r} overflows") from exc
    if not math.isfinite(val):
        raise ValidationError(f"{where}: expression {expr!r} is not finite")
    return val


def _complex(v, where: str, names: dict | None = None) -> complex:
    """Complex number from a number, ``[re, im]``, ``{"re", "im"}`` or expressions thereof."""
    if names is not None:
        if isinstance(v, str):
            return complex(eval_expr(v, names, where))
        if isinstance(v, list) and len(v) == 2 and any(isinstance(u, str) for u in v):
            return complex(eval_expr(v[0], names, f"{where}[0]"), eval_expr(v[1], names, f"{where}[1]"))
    try:
        return complex_from_json(v)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: expected an object")
    if key not in doc:
        raise ValidationError(f"{where}.{key}: missing required field")
    return doc[key]


def parse_shape(seg: dict, names: dict, where: str):
    kind = seg.get("shape", "zero")
    try:
        if kind == "zero":
            return Zero()
        if kind == "constant":
            return Constant(_complex(_require(seg, "value", where), f"{where}.value", names))
        if kind == "cosine":
            return Cosine(
                _complex(_require(seg, "amplitude", where), f"{where}.amplitude", names),
                eval_expr(_require(seg, "angular_frequency", where), names, f"{where}.angular_frequency"),
                eval_expr(seg.get("phase", 0.0), names, f"{where}.phase"),
            )
        if kind == "samples":
            nodes = _require(seg, "nodes", where)
            values = _require(seg, "values", where)
            return Samples(
                tuple(eval_expr(x, names, f"{where}.nodes[{i}]") for i, x in enumerate(nodes)),
                tuple(_complex(v, f"{where}.values[{i}]", names) for i, v in enumerate(values)),
            )
        if kind == "legendre":
            return Legendre(
                tuple(_complex(c, f"{where}.coeffs[{i}]", names) for i, c in enumerate(_require(seg, "coeffs", where))),
                eval_expr(_require(seg, "lo", where), names, f"{where}.lo"),
                eval_expr(_require(seg, "hi", where), names, f"{where}.hi"),
            )
        if kind == "sum":
            terms = _require(seg, "terms", where)
            return Sum(tuple(parse_shape(t, names, f"{where}.terms[{i}]") for i, t in enumerate(terms)))
    except ValidationError as exc:
        if str(exc).startswith(where):
            raise
        raise ValidationError(f"{where}: {exc}") from exc
    raise ValidationError(f"{where}.shape: unknown shape {kind!r}")


def parse_function(segs, names: dict, where: str) -> PiecewiseFunction:
    """Piecewise function from a list of segment objects; gaps are zero."""
    if segs is None:
        return PiecewiseFunction.zero()
    if not isinstance(segs, list):
        raise ValidationError(f"{where}: expected a list of segments")
    pieces = []
    for i, seg in enumerate(segs):
        w = f"{where}[{i}]"
        if not isinstance(seg, dict):
            raise ValidationError(f"{w}: expected an object")
        x0 = eval_expr(_require(seg, "from", w), names, f"{w}.from")
        x1 = eval_expr(_require(seg, "to", w), names, f"{w}.to")
        if not (0 <= x0 < x1 <= PI + 1e-12):
            raise ValidationError(f"{w}: need 0 <= from < to <= pi, got [{x0!r}, {x1!r}]")
        pieces.append((x0, min(x1, PI), parse_shape(seg, names, w)))
    try:
        return PiecewiseFunction.from_pieces(pieces)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def parse_potential(doc, cfg: DelayConfig, where: str = "potential") -> PotentialPair:
    names = {"a": cfg.a, "pi": PI}
    if doc is None:
        return PotentialPair.zero()
    if not isinstance(doc, dict):
        raise ValidationError(f"{where}: expected an object with keys p and q")
    pp = PotentialPair(parse_function(doc.get("p"), names, f"{where}.p"),
                       parse_function(doc.get("q"), names, f"{where}.q"))
    try:
        validate_potential(pp, cfg)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc
    return pp


def parse_lambda_grid(spec, where: str = "command.lambda") -> np.ndarray:
    """``{"min", "max", "count"[, "imag"]}`` or an explicit list of numbers / ``[re, im]`` pairs."""
    if isinstance(spec, dict):
        lo = eval_expr(_require(spec, "min", where), {"pi": PI}, f"{where}.min")
        hi = eval_expr(_require(spec, "max", where), {"pi": PI}, f"{where}.max")
        count = _require(spec, "count", where)
        if not isinstance(count, int) or count < 1:
            raise ValidationError(f"{where}.count: expected a positive integer, got {count!r}")
        im = eval_expr(spec.get("imag", 0.0), {"pi": PI}, f"{where}.imag")
        return np.linspace(lo, hi, count) + 1j * im
    if isinstance(spec, list) and spec:
        return np.array([_complex(v, f"{where}[{i}]", {"pi": PI}) for i, v in enumerate(spec)], dtype=complex)
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return np.array([complex(spec)])
    raise ValidationError(f"{where}: expected {{min, max, count}} or a non-empty list")


@dataclass(frozen=True)
class RunConfig:
    cfg: DelayConfig
    potential: PotentialPair
    command: dict = field(default_factory=dict)
    has_potential: bool = True
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict, repr=False)


def parse_config(doc: dict, base_dir: Path = Path(".")) -> RunConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config: expected a JSON object at top level")
    a = eval_expr(_require(doc, "a", "config"), {"pi": PI}, "a")
    try:
        cfg = make_delay_config(a)
    except ValidationError as exc:
        raise ValidationError(f"a: {exc}") from exc
    pp = parse_potential(doc.get("potential"), cfg)
    cmd = doc.get("command", {})
    if not isinstance(cmd, dict):
        raise ValidationError("command: expected an object")
    return RunConfig(cfg, pp, cmd, "potential" in doc, Path(base_dir), doc)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {str(path)!r}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {str(path)!r} is not valid JSON: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc, path.parent)
