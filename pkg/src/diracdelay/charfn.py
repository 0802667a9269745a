"""Combinations of the characteristic functions and growth diagnostics.

``L`` and ``M`` combine values at ``lam`` and ``-lam`` so that they vanish
identically for the unperturbed problem; ``L1`` and ``M1`` are the first-order
exponential transforms of ``p`` and ``q``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import PI, XTOL, DelayConfig, PotentialPair, as_lambda_array, unique_sorted, validate_potential
from .errors import SolverOverflowError, ValidationError
from .series import QuadratureRule, SeriesEvaluator
from .solver import SolverEvaluator, SolverOptions, order_terms


def _pair(delta_eval, lam: complex) -> np.ndarray:
    out = np.asarray(delta_eval(np.array([complex(lam)])) if _is_vectorised(delta_eval) else delta_eval(lam),
                     dtype=complex)
    return out.reshape(2, -1)[:, 0]


def _is_vectorised(ev) -> bool:
    return isinstance(ev, (SolverEvaluator, SeriesEvaluator)) or getattr(ev, "vectorised", False)


def lm_at(delta_eval, lam: complex) -> tuple:
    """Evaluate ``(L(lam), M(lam))``.

    Parameters
    ----------
    delta_eval : callable
        Either a vectorised evaluator (``SolverEvaluator``, ``SeriesEvaluator``
        or any callable with ``vectorised = True``) returning shape ``(2, n)``,
        or a scalar function ``lam -> (Delta_1, Delta_2)``.
    """
    lam = complex(lam)
    d1p, d2p = _pair(delta_eval, lam)
    d1m, d2m = _pair(delta_eval, -lam)
    L = 0.5 * (d1p + d1m + 1j * (d2p - d2m))
    M = np.exp(1j * lam * PI) + 0.5 * (d2p + d2m + 1j * (-d1p + d1m))
    return complex(L), complex(M)


def parity(k: int) -> int:
    """``phi(2k) = 0`` and ``phi(2k - 1) = 1``."""
    return k % 2


def lm_terms(ev: SeriesEvaluator, lam: complex) -> np.ndarray:
    """Per-order contributions ``(L_k, M_k)``, shape ``(K + 1, 2)``.

    Odd orders (``parity(k) = 1``) carry cosine/sine pairs shifted by ``a``,
    even orders sine/cosine pairs; the exponential of ``M`` belongs to order 0,
    so ``L_0 = M_0 = 0`` and the rows sum to ``lm_at(ev, lam)``.
    """
    lam = complex(lam)
    tp = ev.terms(np.array([lam]))[:, :, 0]
    tm = ev.terms(np.array([-lam]))[:, :, 0]
    out = np.zeros((ev.K + 1, 2), dtype=complex)
    for k in range(ev.K + 1):
        (d1p, d2p), (d1m, d2m) = tp[k], tm[k]
        out[k, 0] = 0.5 * (d1p + d1m + 1j * (d2p - d2m))
        out[k, 1] = 0.5 * (d2p + d2m + 1j * (-d1p + d1m)) + (np.exp(1j * lam * PI) if k == 0 else 0.0)
    return out


def _panel_rule(pieces, lam_abs: float, rule: QuadratureRule):
    xs, ws = [], []
    for x0, x1 in pieces:
        n_sub = max(1, math.ceil(lam_abs * (x1 - x0) / 8.0))
        edges = np.linspace(x0, x1, n_sub + 1)
        for lo, hi in zip(edges, edges[1:]):
            x, w = rule.on(lo, hi)
            xs.append(x)
            ws.append(w)
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def _smooth_pieces(pp: PotentialPair, lo: float, hi: float) -> list:
    cuts = unique_sorted([lo, hi] + [b for b in pp.breakpoints() if lo < b < hi])
    return [(x0, x1) for x0, x1 in zip(cuts, cuts[1:]) if x1 - x0 > XTOL]


def l1_m1(pp: PotentialPair, cfg: DelayConfig, lam: complex, rule: QuadratureRule = QuadratureRule()) -> tuple:
    """First-order transforms ``L1 = int_a^pi p(t) exp(i lam (pi - 2t + a)) dt``
    and ``M1`` likewise with ``q``."""
    validate_potential(pp, cfg)
    lam = complex(lam)
    x, w = _panel_rule(_smooth_pieces(pp, cfg.a, PI), abs(lam), rule)
    if x.size == 0:
        return 0j, 0j
    kern = w * np.exp(1j * lam * (PI - 2 * x + cfg.a))
    p, q = pp.evaluate(x)
    return complex(np.sum(p * kern)), complex(np.sum(q * kern))


@dataclass(frozen=True)
class AsymptoticFitOptions:
    t_min: float = 2.0
    t_max: float = 12.0
    n_samples: int = 41
    m: int = 256
    method: str = "split"

    def __post_init__(self):
        if not self.t_max > self.t_min:
            raise ValidationError("t_max must exceed t_min")
        if self.n_samples < 6:
            raise ValidationError("at least 6 ray samples are needed")
        if self.method not in ("split", "direct"):
            raise ValidationError(f"method must be 'split' or 'direct', not {self.method!r}")


@dataclass(frozen=True)
class AsymptoticFit:
    """Growth of the remainder ``R`` along the ray ``lam = i t``.

    ``samples`` holds ``(t, log|R|)``; ``fitted_slope`` is the least-squares
    slope over the last half of the samples with finite logarithm.  When
    ``R`` vanishes identically the fit is ``degenerate`` and the slope is
    ``-inf``.
    """

    samples: tuple
    fitted_slope: float
    target_slope: float
    degenerate: bool = False
    method: str = "split"
    notes: tuple = field(default=())

    def within(self, slack: float = 0.05) -> bool:
        return self.fitted_slope <= self.target_slope + slack

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "log_abs_remainder"])
        for t, y in self.samples:
            wr.writerow([repr(float(t)), repr(float(y))])
        return buf.getvalue()


def _remainder_split(pp, cfg, lams, opts):
    terms = order_terms(pp, cfg, lams, m=opts.m)
    return terms[2:, 0].sum(axis=0) if terms.shape[0] > 2 else np.zeros(lams.size, dtype=complex)


def _remainder_direct(pp, cfg, lams, opts):
    d1 = SolverEvaluator(pp, cfg, SolverOptions(m=opts.m, auto_refine=False))(lams)[0]
    first = SeriesEvaluator(pp, cfg, K=1).terms(lams)
    return d1 - first[0, 0] - first[1, 0]


def asymptotic_remainder_fit(pp: PotentialPair, cfg: DelayConfig,
                             opts: AsymptoticFitOptions = AsymptoticFitOptions()) -> AsymptoticFit:
    """Fit the exponential growth rate of ``Delta_1 - sin(lam pi) - s_{1,1}``.

    ``method='split'`` marches orders two and higher directly, so the
    remainder carries no cancellation against the leading terms.
    ``method='direct'`` subtracts from the full solution and is limited by
    roundoff of size ``eps * exp(pi t)``.
    """
    validate_potential(pp, cfg)
    ts = np.linspace(opts.t_min, opts.t_max, opts.n_samples)
    fn = _remainder_split if opts.method == "split" else _remainder_direct
    notes = []
    vals = []
    for t in ts:
        try:
            r = complex(fn(pp, cfg, np.array([1j * t]), opts)[0])
        except SolverOverflowError:
            notes.append(f"overflow at t = {t:.4g}; ray truncated")
            break
        if not np.isfinite(r):
            notes.append(f"non-finite remainder at t = {t:.4g}; ray truncated")
            break
        vals.append(r)
    if len(vals) < 6:
        raise SolverOverflowError(float("nan"), 1j * ts[len(vals)])
    ts = ts[: len(vals)]
    mags = np.abs(np.array(vals))
    with np.errstate(divide="ignore"):
        logs = np.log(mags)
    samples = tuple((float(t), float(y)) for t, y in zip(ts, logs))
    target = PI - 2 * cfg.a
    tail = slice(len(ts) // 2, None)
    tt, yy = ts[tail], logs[tail]
    ok = np.isfinite(yy)
    if ok.sum() < 2:
        notes.append("remainder vanishes identically on the ray")
        return AsymptoticFit(samples, -math.inf, target, True, opts.method, tuple(notes))
    slope = float(np.polyfit(tt[ok], yy[ok], 1)[0])
    return AsymptoticFit(samples, slope, target, False, opts.method, tuple(notes))
