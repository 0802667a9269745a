"""Command-line front end.

Usage::

    diracdelay COMMAND CONFIG.json [--engine solver|series] [--out PATH]
                                   [--m M] [--g G] [--tol TOL]

Exit codes: 0 success, 1 usage / configuration / construction error,
2 numerical flag (unresolved eigenvalue, flagged spectrum, failed check).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .charfn import AsymptoticFitOptions, asymptotic_remainder_fit
from .config import RunConfig, load_config, parse_function, parse_lambda_grid
from .core import PI, PotentialPair, Spectrum, complex_to_json
from .errors import (
    DiracDelayError,
    FamilyConstructionError,
    KernelTuningError,
    PreconditionError,
    SpectrumIncompleteError,
    ValidationError,
)
from .isofamily import build_family, combine_h, family_eigenpairs, tune_h_for_pair, verify_isospectrality
from .series import QuadratureRule, SeriesEvaluator
from .solver import SolverEvaluator, SolverOptions, evolve_fundamental
from .spectrum import RootSearchOptions, ambarzumian_residual, hadamard_delta, locate_eigenvalues, window_transforms

EXIT_OK, EXIT_CONFIG, EXIT_FLAG = 0, 1, 2


class _Flagged(Exception):
    """Output was written but carries a numerical flag."""


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _num(x: float) -> str:
    return repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([_num(v) if isinstance(v, (float, np.floating, int)) and not isinstance(v, bool) else v for v in r])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _solver_opts(args, cmd: dict) -> SolverOptions:
    m = args.m if args.m is not None else int(cmd.get("m", 64))
    return SolverOptions(m=m, m_max=max(1024, m))


def _evaluator(args, rc: RunConfig, cmd: dict, pp: PotentialPair | None = None):
    pp = rc.potential if pp is None else pp
    if args.engine == "series":
        g = args.g if args.g is not None else int(cmd.get("g", 48))
        K = int(cmd.get("K", 2))
        ev = SeriesEvaluator(pp, rc.cfg, K=K, rule=QuadratureRule(g))
        if not ev.exact:
            sys.stderr.write(f"warning: terms beyond K = {K} may not vanish; series result is truncated\n")
        return ev
    return SolverEvaluator(pp, rc.cfg, _solver_opts(args, cmd))


def _root_opts(args, cmd: dict) -> RootSearchOptions:
    kw = {k: cmd[k] for k in ("disk_radius", "contour_points", "max_newton", "strip_halfwidth") if k in cmd}
    if args.tol is not None:
        kw["newton_tol"] = args.tol
    elif "newton_tol" in cmd:
        kw["newton_tol"] = cmd["newton_tol"]
    return RootSearchOptions(**kw)


def _int_field(cmd: dict, key: str, default=None) -> int:
    v = cmd.get(key, default)
    if v is None:
        raise ValidationError(f"command.{key}: missing required field")
    if not isinstance(v, int) or isinstance(v, bool):
        raise ValidationError(f"command.{key}: expected an integer, got {v!r}")
    return v


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_charfn(args, rc: RunConfig) -> str:
    cmd = rc.command
    lams = parse_lambda_grid(cmd.get("lambda"), "command.lambda")
    ev = _evaluator(args, rc, cmd)
    vals = ev(lams)
    rows = [(z.real, z.imag, d1.real, d1.imag, d2.real, d2.imag) for z, d1, d2 in zip(lams, vals[0], vals[1])]
    return _csv(["re_lambda", "im_lambda", "re_d1", "im_d1", "re_d2", "im_d2"], rows)


def cmd_spectrum(args, rc: RunConfig) -> str:
    cmd = rc.command
    j = _int_field(cmd, "j")
    n_max = _int_field(cmd, "n_max")
    method = cmd.get("method", "disk")
    spec = locate_eigenvalues(_evaluator(args, rc, cmd), j, n_max, _root_opts(args, cmd), method=method)
    text = _json(spec.to_json())
    if not spec.complete:
        raise _Flagged(text)
    return text


def _iso_kernel(rc: RunConfig, cmd: dict):
    names = {"a": rc.cfg.a, "pi": PI}
    tune = cmd.get("tune")
    if tune is not None:
        h0 = parse_function(tune.get("h0"), names, "command.tune.h0")
        h1 = parse_function(tune.get("h1"), names, "command.tune.h1")
        rng = tune.get("theta_range")
        if not (isinstance(rng, list) and len(rng) == 2):
            raise ValidationError("command.tune.theta_range: expected [lo, hi]")
        pair = tuple(tune.get("pair", [0, -1]))
        theta, scale = tune_h_for_pair(rc.cfg, h0, h1, rng, pair=pair, M=int(cmd.get("M", 200)))
        return combine_h(h0, h1, theta, scale), {"theta": theta, "scale": scale}
    if "h" not in cmd:
        raise ValidationError("command.h: missing required field (or give command.tune)")
    return parse_function(cmd["h"], names, "command.h"), None


def cmd_iso(args, rc: RunConfig) -> str:
    cmd = rc.command
    mode = cmd.get("mode")
    if mode not in ("p_only", "q_only", "both"):
        raise ValidationError(f"command.mode: expected p_only, q_only or both, got {mode!r}")
    samples = cmd.get("samples")
    if not isinstance(samples, list) or not samples:
        raise ValidationError("command.samples: expected a non-empty list of [alpha, beta]")
    params = []
    for i, s in enumerate(samples):
        if not (isinstance(s, list) and len(s) == 2):
            raise ValidationError(f"command.samples[{i}]: expected [alpha, beta]")
        params.append((complex_from(s[0], f"command.samples[{i}][0]"), complex_from(s[1], f"command.samples[{i}][1]")))
    lams = parse_lambda_grid(cmd.get("lambda", {"min": -15, "max": 15, "count": 61}))
    tol = args.tol if args.tol is not None else float(cmd.get("tol", 1e-6))
    M = int(cmd.get("M", 200))
    h, tuned = _iso_kernel(rc, cmd)
    family_eigenpairs(rc.cfg, h, mode, M)  # raises with the missing sign
    rep = verify_isospectrality(h, rc.cfg, params, lams, tol=tol, mode=mode, M=M,
                                solver_opts=_solver_opts(args, cmd), g=args.g or int(cmd.get("g", 48)))
    doc = rep.to_json()
    doc["a"] = rc.cfg.a
    doc["h"] = h.to_json()
    if tuned:
        doc["tuning"] = tuned
    if cmd.get("potential_csv"):
        alpha, beta = params[-1]
        _, pp = build_family(rc.cfg, h, mode, alpha, beta, M)
        xs = np.linspace(0.0, PI, int(cmd.get("potential_points", 629)))
        p, q = pp.evaluate(xs)
        Path(rc.base_dir, cmd["potential_csv"]).write_text(
            _csv(["x", "re_p", "im_p", "re_q", "im_q"], zip(xs, p.real, p.imag, q.real, q.imag))
        )
    text = _json(doc)
    if not rep.passed:
        raise _Flagged(text)
    return text


def complex_from(v, where):
    from .config import _complex

    return _complex(v, where)


def cmd_ambarzumian(args, rc: RunConfig) -> str:
    cmd = rc.command
    n_max = _int_field(cmd, "n_max", 10)
    method = cmd.get("method", "global")
    opts = _root_opts(args, cmd)
    warnings = []
    if rc.cfg.a >= 2 * PI / 5:
        warnings.append("a >= 2 pi/5 lies outside the regime of the uniqueness theorem")
        sys.stderr.write("warning: " + warnings[-1] + "\n")
    doc = {"a": rc.cfg.a, "n_max": n_max, "method": method, "warnings": warnings}
    flagged = False
    for label, pp in (("potential", rc.potential), ("baseline", PotentialPair.zero())):
        part = {}
        res = []
        for j in (1, 2):
            spec = locate_eigenvalues(_evaluator(args, rc, cmd, pp), j, n_max, opts, method=method)
            r = ambarzumian_residual(spec, allow_flagged=True, disk_radius=opts.disk_radius)
            part[f"residual_j{j}"] = r
            part[f"flags_j{j}"] = {str(n): f for n, f in sorted(spec.flags.items())}
            flagged |= label == "potential" and bool(spec.flags) and method == "global"
            res.append(r)
        part["residual"] = max(res)
        doc[label] = part
    windows = []
    lams = parse_lambda_grid(cmd.get("window_lambda", [0.0, 1.0]), "command.window_lambda")
    for nu in cmd.get("nu", [0]):
        for lam in lams:
            try:
                wt = window_transforms(rc.potential, rc.cfg, nu, lam)
                windows.append({"nu": nu, "lambda": complex_to_json(lam), "F": complex_to_json(wt.F),
                                "G": complex_to_json(wt.G)})
            except PreconditionError as exc:
                windows.append({"nu": nu, "lambda": complex_to_json(lam), "error": str(exc)})
    doc["window_transforms"] = windows
    text = _json(doc)
    if flagged:
        raise _Flagged(text)
    return text


def cmd_hadamard(args, rc: RunConfig) -> str:
    cmd = rc.command
    path = args.spectrum or cmd.get("spectrum")
    if not path:
        raise ValidationError("command.spectrum: missing path to a spectrum JSON file (or pass --spectrum)")
    p = Path(path) if args.spectrum else Path(rc.base_dir, path)
    try:
        spec = Spectrum.from_json(json.loads(p.read_text()))
    except OSError as exc:
        raise ValidationError(f"command.spectrum: cannot read {str(p)!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"command.spectrum: {str(p)!r} is not valid JSON ({exc.msg})") from exc
    lams = parse_lambda_grid(cmd.get("lambda"), "command.lambda")
    rec = np.atleast_1d(hadamard_delta(spec, lams, tail_order=int(cmd.get("tail_order", 1))))
    direct = _evaluator(args, rc, cmd)(lams)[spec.j - 1]
    rows = [(z.real, z.imag, r.real, r.imag, d.real, d.imag, abs(r - d)) for z, r, d in zip(lams, rec, direct)]
    header = ["re_lambda", "im_lambda", "re_reconstructed", "im_reconstructed", "re_direct", "im_direct", "abs_error"]
    return _csv(header, rows)


def cmd_trace(args, rc: RunConfig) -> str:
    cmd = rc.command
    lam = parse_lambda_grid(cmd.get("lambda", 0.0), "command.lambda")[0]
    opts = SolverOptions(m=args.m if args.m is not None else int(cmd.get("m", 64)), auto_refine=False)
    tr = evolve_fundamental(rc.potential, rc.cfg, lam, opts)
    return _csv(["x", "re_s1", "im_s1", "re_s2", "im_s2"], tr.to_rows())


def cmd_asymptotic(args, rc: RunConfig) -> str:
    cmd = rc.command
    kw = {k: cmd[k] for k in ("t_min", "t_max", "n_samples", "method") if k in cmd}
    if args.m is not None:
        kw["m"] = args.m
    fit = asymptotic_remainder_fit(rc.potential, rc.cfg, AsymptoticFitOptions(**kw))
    if cmd.get("format", "json") == "csv":
        return fit.to_csv()
    slope = fit.fitted_slope
    return _json({
        "a": rc.cfg.a,
        "method": fit.method,
        "fitted_slope": slope if math.isfinite(slope) else None,
        "target_slope": fit.target_slope,
        "degenerate": fit.degenerate,
        "within_bound": fit.within(),
        "notes": list(fit.notes),
        "samples": [[t, y if math.isfinite(y) else None] for t, y in fit.samples],
    })


COMMANDS = {
    "charfn": cmd_charfn,
    "spectrum": cmd_spectrum,
    "iso": cmd_iso,
    "ambarzumian": cmd_ambarzumian,
    "hadamard": cmd_hadamard,
    "trace": cmd_trace,
    "asymptotic": cmd_asymptotic,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diracdelay", description="Spectral tools for Dirac-type systems with a delay.")
    ap.add_argument("command", choices=sorted(COMMANDS), help="experiment to run")
    ap.add_argument("config", help="JSON configuration file")
    ap.add_argument("--engine", choices=("solver", "series"), default="solver",
                    help="characteristic-function engine (default: solver)")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--m", type=int, help="solver steps per delay interval")
    ap.add_argument("--g", type=int, help="Gauss-Legendre points per panel for the series engine")
    ap.add_argument("--tol", type=float, help="command tolerance (iso: deviation; spectrum: Newton)")
    ap.add_argument("--spectrum", help="spectrum JSON for the hadamard command")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        rc = load_config(args.config)
        text = COMMANDS[args.command](args, rc)
    except _Flagged as fl:
        _emit(str(fl.args[0]), args.out)
        sys.stderr.write("numerical flag: see output\n")
        return EXIT_FLAG
    except (ValidationError, FamilyConstructionError, KernelTuningError, PreconditionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except SpectrumIncompleteError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FLAG
    except DiracDelayError as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return EXIT_FLAG
    except TypeError as exc:
        sys.stderr.write(f"error: malformed configuration ({exc})\n")
        return EXIT_CONFIG
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
