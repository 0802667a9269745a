"""Successive-approximation terms of ``S(pi, lam)`` by nested Gauss-Legendre
quadrature.

The k-th term is an integral over the chain region

    ka < t_k + (k-1)a < ... ,  t_1 in (ka, pi),  t_{l+1} in ((k-l)a, t_l - a),

of ``Q(t_1)...Q(t_k)`` applied to a rotating vector whose phase is
``lam (pi - 2 t_1 + 2 t_2 - ... + a [k odd])``.  The integrands are entire in
``t`` between breakpoints, so composite Gauss-Legendre panels aligned with the
breakpoints (and their shifts by multiples of ``a``) converge spectrally.

This module is an oracle for the marching solver, not a production path:
depth is capped at 3 and ``|lam| <= 40``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import PI, XTOL, DelayConfig, PotentialPair, as_lambda_array, unique_sorted, validate_potential
from .errors import SeriesDepthError, SeriesRangeError, ValidationError

MAX_DEPTH = 3
MAX_ABS_LAMBDA = 40.0


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule with ``g`` points on [-1, 1]."""

    g: int = 48
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.g) != self.g or self.g < 1:
            raise ValidationError(f"quadrature order g must be a positive integer, got {self.g!r}")
        x, w = np.polynomial.legendre.leggauss(int(self.g))
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)

    def on(self, lo: float, hi: float):
        """Nodes and weights mapped to ``[lo, hi]``."""
        half = 0.5 * (hi - lo)
        return lo + half * (self.nodes + 1.0), half * self.weights

    def composite(self, cuts):
        """Concatenated rule over consecutive panels ``cuts[i], cuts[i+1]``."""
        xs, ws = [], []
        for lo, hi in zip(cuts, cuts[1:]):
            if hi - lo > XTOL:
                x, w = self.on(lo, hi)
                xs.append(x)
                ws.append(w)
        if not xs:
            return np.zeros(0), np.zeros(0)
        return np.concatenate(xs), np.concatenate(ws)


def nonzero_intervals(pp: PotentialPair) -> list:
    """Merged intervals on which ``p`` or ``q`` has a non-zero shape."""
    ivs = sorted((s.x0, s.x1) for f in (pp.p, pp.q) for s in f.nonzero_segments())
    merged = []
    for lo, hi in ivs:
        if merged and lo <= merged[-1][1] + XTOL:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [tuple(iv) for iv in merged]


def region_is_empty(pp: PotentialPair, cfg: DelayConfig, k: int) -> bool:
    """Structural test that the k-th term vanishes identically.

    The term is non-zero only if there is a chain ``t_k < t_{k-1} - a < ...``
    with every ``t_l`` in the support of ``Q`` and in its own limits.  The
    earliest admissible chain is built greedily from the innermost variable
    outwards over the merged support intervals.
    """
    if k == 0:
        return False
    a = cfg.a
    if k * a >= PI - XTOL:
        return True
    ivs = nonzero_intervals(pp)
    if not ivs:
        return True
    t = -np.inf
    for level in range(k, 0, -1):
        # variable t_level has lower limit (k - level + 1) a, and t_level >= t_{level+1} + a
        lower = max((k - level + 1) * a, t + a if np.isfinite(t) else -np.inf)
        nxt = None
        for lo, hi in ivs:
            start = max(lo, lower)
            if hi - start > XTOL:
                nxt = start
                break
        if nxt is None:
            return True
        t = nxt
    return not (t < PI - XTOL)


def _q_matrices(pp: PotentialPair, t: np.ndarray) -> np.ndarray:
    p, q = pp.evaluate(t)
    out = np.empty(t.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = p
    out[..., 0, 1] = q
    out[..., 1, 0] = q
    out[..., 1, 1] = -p
    return out


def qk_entry(pp: PotentialPair, points, row: int, col: int) -> complex:
    """Entry ``(row, col)`` (1-based) of ``Q(t_1) Q(t_2) ... Q(t_k)``."""
    if row not in (1, 2) or col not in (1, 2):
        raise ValidationError(f"matrix indices must be 1 or 2, got ({row!r}, {col!r})")
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if not 1 <= pts.size <= MAX_DEPTH:
        raise SeriesDepthError(f"products of 1 to {MAX_DEPTH} factors are supported, got {pts.size}")
    if np.any(pts <= 0) or np.any(pts >= PI):
        raise ValidationError("points must lie inside (0, pi)")
    prod = np.eye(2, dtype=complex)
    for m in _q_matrices(pp, pts):
        prod = prod @ m
    return complex(prod[row - 1, col - 1])


def _level_cuts(pp: PotentialPair, cfg: DelayConfig, k: int, level: int) -> list:
    """Panel boundaries for variable ``t_level`` of the k-th term."""
    a = cfg.a
    base = [s.x0 for f in (pp.p, pp.q) for s in f.segments] + pp.breakpoints() + [PI]
    base += [lo for lo, _ in nonzero_intervals(pp)] + [hi for _, hi in nonzero_intervals(pp)]
    cuts = []
    for r in range(0, k - level + 1):
        cuts += [b + r * a for b in base]
        cuts += [(k - level + 1 + r) * a]
    return unique_sorted(cuts)


def _panels(lo: float, hi: float, cuts: list, ivs: list) -> list:
    """Split ``(lo, hi)`` at ``cuts`` and keep only pieces inside ``ivs``."""
    out = []
    for ilo, ihi in ivs:
        x0, x1 = max(lo, ilo), min(hi, ihi)
        if x1 - x0 <= XTOL:
            continue
        pts = [x0] + [c for c in cuts if x0 + XTOL < c < x1 - XTOL] + [x1]
        out.extend(zip(pts, pts[1:]))
    return out


def chain_nodes(pp: PotentialPair, cfg: DelayConfig, k: int, rule: QuadratureRule):
    """Tensor quadrature over the k-th chain region restricted to ``supp Q``.

    Returns
    -------
    T : ndarray, shape (n, k)
    W : ndarray, shape (n,)
    """
    if region_is_empty(pp, cfg, k):
        return np.zeros((0, k)), np.zeros(0)
    a = cfg.a
    ivs = nonzero_intervals(pp)
    cuts = [_level_cuts(pp, cfg, k, lvl) for lvl in range(1, k + 1)]

    def expand(prefix_t, prefix_w, level, upper):
        lower = (k - level + 1) * a
        panels = _panels(lower, upper, cuts[level - 1], ivs)
        if not panels:
            return [], []
        xs, ws = [], []
        for lo, hi in panels:
            xx, ww = rule.on(lo, hi)
            xs.append(xx)
            ws.append(ww)
        x, w = np.concatenate(xs), np.concatenate(ws)
        if level == k:
            T = np.column_stack([np.broadcast_to(prefix_t, (x.size, len(prefix_t))), x]) if prefix_t else x[:, None]
            return [T], [prefix_w * w]
        Ts, Ws = [], []
        for xi, wi in zip(x, w):
            t_sub, w_sub = expand(prefix_t + [xi], prefix_w * wi, level + 1, xi - a)
            Ts += t_sub
            Ws += w_sub
        return Ts, Ws

    Ts, Ws = expand([], 1.0, 1, PI)
    if not Ts:
        return np.zeros((0, k)), np.zeros(0)
    return np.concatenate(Ts), np.concatenate(Ws)


@dataclass
class _TermData:
    phase: np.ndarray  # real multiplier of lam
    c1: np.ndarray  # weighted Q^k_{j,1}, shape (2, n)
    c2: np.ndarray  # weighted Q^k_{j,2}
    odd: bool


def _term_data(pp: PotentialPair, cfg: DelayConfig, k: int, rule: QuadratureRule) -> _TermData | None:
    T, W = chain_nodes(pp, cfg, k, rule)
    if T.shape[0] == 0:
        return None
    prod = np.broadcast_to(np.eye(2, dtype=complex), (T.shape[0], 2, 2))
    for lvl in range(k):
        prod = prod @ _q_matrices(pp, T[:, lvl])
    keep = np.any(prod != 0, axis=(1, 2))
    T, W, prod = T[keep], W[keep], prod[keep]
    if T.shape[0] == 0:
        return None
    signs = np.array([(-1) ** (lvl + 1) for lvl in range(k)], dtype=float)
    phase = PI + 2.0 * (T @ signs) + (cfg.a if k % 2 else 0.0)
    c1 = (prod[:, :, 0] * W[:, None]).T
    c2 = (prod[:, :, 1] * W[:, None]).T
    return _TermData(phase=phase, c1=c1, c2=c2, odd=bool(k % 2))


def _apply_term(data: _TermData | None, lams: np.ndarray) -> np.ndarray:
    out = np.zeros((2, lams.size), dtype=complex)
    if data is None:
        return out
    step = max(1, 2_000_000 // max(1, data.phase.size))
    for s in range(0, lams.size, step):
        lam = lams[s:s + step]
        psi = np.outer(lam, data.phase)
        if data.odd:
            f1, f2 = np.cos(psi), -np.sin(psi)
        else:
            f1, f2 = np.sin(psi), -np.cos(psi)
        out[:, s:s + step] = (f1 @ data.c1.T + f2 @ data.c2.T).T
    return out


def _check_lambda(lams: np.ndarray):
    if lams.size and np.max(np.abs(lams)) > MAX_ABS_LAMBDA:
        raise SeriesRangeError(
            f"|lambda| = {np.max(np.abs(lams)):.4g} exceeds {MAX_ABS_LAMBDA:g}; nested quadrature "
            "loses accuracy for oscillatory integrands, use the marching solver"
        )


def _check_depth(k: int):
    if not 0 <= k <= MAX_DEPTH:
        raise SeriesDepthError(
            f"series depth {k} is not implemented (0..{MAX_DEPTH}); use the marching solver for deeper terms"
        )


def series_term(pp: PotentialPair, cfg: DelayConfig, k: int, lam: complex,
                rule: QuadratureRule = QuadratureRule()) -> tuple:
    """``S_k(pi, lam)`` as ``(s_{1,k}, s_{2,k})``.

    Returns exactly ``(0, 0)`` when the chain region meets no support.
    """
    _check_depth(k)
    lams = as_lambda_array(lam)
    _check_lambda(lams)
    if k == 0:
        return complex(np.sin(lams[0] * PI)), complex(-np.cos(lams[0] * PI))
    out = _apply_term(_term_data(pp, cfg, k, rule), lams)
    return complex(out[0, 0]), complex(out[1, 0])


class SeriesCharfn(NamedTuple):
    delta1: complex
    delta2: complex
    exact: bool


def truncation_is_exact(pp: PotentialPair, cfg: DelayConfig, K: int) -> bool:
    """True when every term of order above ``K`` vanishes structurally."""
    return all(region_is_empty(pp, cfg, k) for k in range(K + 1, cfg.N + 1))


def series_charfn(pp: PotentialPair, cfg: DelayConfig, lam: complex, K: int = 2,
                  rule: QuadratureRule = QuadratureRule()) -> SeriesCharfn:
    """Partial sum of the successive-approximation series at ``x = pi``.

    ``exact`` is False when terms beyond ``K`` could not be ruled out; the
    value is then only a truncation.
    """
    ev = SeriesEvaluator(pp, cfg, K=K, rule=rule)
    out = ev(np.array([complex(lam)]))
    return SeriesCharfn(complex(out[0, 0]), complex(out[1, 0]), ev.exact)


class SeriesEvaluator:
    """Vectorised ``lam -> [Delta_1, Delta_2]`` from the truncated series.

    Quadrature point sets are built once per instance.
    """

    def __init__(self, pp: PotentialPair, cfg: DelayConfig, K: int = 2,
                 rule: QuadratureRule = QuadratureRule()):
        _check_depth(K)
        validate_potential(pp, cfg)
        self.pp, self.cfg, self.K, self.rule = pp, cfg, K, rule
        self.exact = truncation_is_exact(pp, cfg, K)
        self._data = [_term_data(pp, cfg, k, rule) for k in range(1, K + 1)]

    @property
    def coarse(self) -> "SeriesEvaluator":
        return self

    def terms(self, lams) -> np.ndarray:
        """Individual terms, shape ``(K + 1, 2, n)``."""
        lams = as_lambda_array(lams)
        _check_lambda(lams)
        out = np.zeros((self.K + 1, 2, lams.size), dtype=complex)
        out[0, 0] = np.sin(lams * PI)
        out[0, 1] = -np.cos(lams * PI)
        for k, data in enumerate(self._data, start=1):
            out[k] = _apply_term(data, lams)
        return out

    def __call__(self, lams) -> np.ndarray:
        return self.terms(lams).sum(axis=0)
