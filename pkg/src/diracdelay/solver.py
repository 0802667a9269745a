"""Fundamental solution of the delay system by the method of steps.

The grid has step ``d = a/m`` so that ``x - a`` of every node is again a
node.  The first delay window uses the closed form ``(sin lam x, -cos lam x)``;
afterwards each cell is advanced by an integrating-factor fourth-order
Runge-Kutta step (see ``_march_py`` for the scheme).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    PI,
    CharfnTable,
    DelayConfig,
    PotentialPair,
    SolutionTrace,
    as_lambda_array,
    grid_cells,
    validate_potential,
)
from .errors import SolverOverflowError, ValidationError


@dataclass(frozen=True)
class SolverOptions:
    """Grid and refinement controls.

    Attributes
    ----------
    m : int
        Steps per delay interval (grid step ``a/m``).
    auto_refine : bool
        Double ``m`` until two successive results agree to ``refine_tol``
        (relative to ``max(1, |Delta|)``) or ``m_max`` is reached.
    """

    m: int = 64
    auto_refine: bool = True
    m_max: int = 1024
    refine_tol: float = 1e-9
    integrator_order: int = 4

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 8:
            raise ValidationError(f"steps per delay interval m must be an integer >= 8, got {self.m!r}")
        if self.m_max < self.m:
            raise ValidationError("m_max must not be smaller than m")
        if self.integrator_order != 4:
            raise ValidationError("only the fourth-order integrator is available")


def cell_samples(pp: PotentialPair, a: float, m: int):
    """Sample ``q - i p`` and ``q + i p`` at start, midpoint and end of each cell.

    Returns
    -------
    d, frac, qm, qp
        Cell length, trailing fraction and two ``(C, 3)`` complex arrays.
        Cells inside the first delay window are zero.
    """
    d = a / m
    K, frac = grid_cells(a, m)
    C = K + (1 if frac > 0 else 0)
    x0 = d * np.arange(C)
    x1 = np.minimum(x0 + d, PI)
    x1[-1] = PI
    xm = 0.5 * (x0 + x1)
    qm = np.zeros((C, 3), dtype=complex)
    qp = np.zeros((C, 3), dtype=complex)
    for col, (xs, side) in enumerate(((x0, "right"), (xm, "right"), (x1, "left"))):
        p, q = pp.evaluate(xs[m:], side)
        qm[m:, col] = q - 1j * p
        qp[m:, col] = q + 1j * p
    return d, frac, qm, qp


def _to_s(z, w):
    return 0.5 * (z + w), (z - w) / 2j


class _Grid:
    """Per-``m`` cache of cell samples for one potential."""

    def __init__(self, pp: PotentialPair, a: float):
        self.pp = pp
        self.a = a
        self._cache = {}

    def __call__(self, m: int):
        if m not in self._cache:
            self._cache[m] = cell_samples(self.pp, self.a, m)
        return self._cache[m]


def _overflow_x(lam: complex, m: int, d: float, frac: float, qm, qp) -> float:
    z, w, *_ = kernels.march(np.array([lam]), m, d, frac, qm, qp, store=True)
    bad = ~(np.isfinite(z[0]) & np.isfinite(w[0]))
    k = int(np.argmax(bad))
    return min(k * d, PI)


def _endpoints(grid: _Grid, m: int, lams: np.ndarray) -> np.ndarray:
    d, frac, qm, qp = grid(m)
    with np.errstate(all="ignore"):
        z, w = kernels.march(lams, m, d, frac, qm, qp)
    ok = np.isfinite(z) & np.isfinite(w)
    if not ok.all():
        lam = complex(lams[int(np.argmin(ok))])
        with np.errstate(all="ignore"):
            x = _overflow_x(lam, m, d, frac, qm, qp)
        raise SolverOverflowError(x, lam)
    s1, s2 = _to_s(z, w)
    out = np.empty((2, lams.size), dtype=complex)
    out[0], out[1] = s1, s2
    return out


def _refined(grid: _Grid, lams: np.ndarray, opts: SolverOptions):
    m = opts.m
    cur = _endpoints(grid, m, lams)
    if not opts.auto_refine:
        return cur, m
    while 2 * m <= opts.m_max:
        nxt = _endpoints(grid, 2 * m, lams)
        m *= 2
        scale = np.maximum(1.0, np.abs(nxt))
        done = np.max(np.abs(nxt - cur) / scale) < opts.refine_tol
        cur = nxt
        if done:
            break
    return cur, m


def evolve_fundamental(pp: PotentialPair, cfg: DelayConfig, lam: complex,
                       opts: SolverOptions = SolverOptions()) -> SolutionTrace:
    """Sample ``S(x, lam)`` on the delay-aligned grid of step ``a/opts.m``.

    Raises
    ------
    SolverOverflowError
        If a value stops being finite; carries the abscissa of failure.
    """
    validate_potential(pp, cfg)
    m = opts.m
    d, frac, qm, qp = cell_samples(pp, cfg.a, m)
    with np.errstate(all="ignore"):
        z, w, *_ = kernels.march(np.array([complex(lam)]), m, d, frac, qm, qp, store=True)
    z, w = z[0], w[0]
    C = qm.shape[0]
    x = d * np.arange(C + 1)
    x[-1] = PI
    ok = np.isfinite(z) & np.isfinite(w)
    if not ok.all():
        raise SolverOverflowError(float(x[int(np.argmin(ok))]), complex(lam))
    s1, s2 = _to_s(z, w)
    values = np.stack([s1, s2], axis=1)
    values[0] = (0.0, -1.0)
    return SolutionTrace(x_grid=x, values=values, lam=complex(lam), m=m)


def charfn_at(pp: PotentialPair, cfg: DelayConfig, lam: complex,
              opts: SolverOptions = SolverOptions()) -> tuple:
    """Return ``(Delta_1(lam), Delta_2(lam)) = (s1(pi, lam), s2(pi, lam))``."""
    out = SolverEvaluator(pp, cfg, opts)(np.array([complex(lam)]))
    return complex(out[0, 0]), complex(out[1, 0])


def charfn_table(pp: PotentialPair, cfg: DelayConfig, lambda_grid,
                 opts: SolverOptions = SolverOptions()) -> CharfnTable:
    """Tabulate both characteristic functions on ``lambda_grid``."""
    lams = as_lambda_array(lambda_grid)
    if lams.size == 0:
        raise ValidationError("lambda grid is empty")
    out = SolverEvaluator(pp, cfg, opts)(lams)
    return CharfnTable(lambda_grid=lams, delta1=out[0], delta2=out[1])


class SolverEvaluator:
    """Vectorised ``lam -> [Delta_1, Delta_2]`` backed by the marching solver.

    Calling with an array of shape ``(n,)`` returns shape ``(2, n)``.  The
    ``coarse`` attribute is a fixed-grid evaluator (no refinement) suited for
    winding-number counts.  ``last_m`` records the grid used by the most
    recent call.
    """

    def __init__(self, pp: PotentialPair, cfg: DelayConfig, opts: SolverOptions = SolverOptions(),
                 _grid: _Grid | None = None):
        validate_potential(pp, cfg)
        self.pp = pp
        self.cfg = cfg
        self.opts = opts
        self._grid = _grid if _grid is not None else _Grid(pp, cfg.a)
        self.last_m = opts.m

    @property
    def coarse(self) -> "SolverEvaluator":
        o = SolverOptions(m=self.opts.m, auto_refine=False, m_max=self.opts.m_max)
        return SolverEvaluator(self.pp, self.cfg, o, _grid=self._grid)

    def __call__(self, lams) -> np.ndarray:
        lams = as_lambda_array(lams)
        if lams.size == 0:
            return np.zeros((2, 0), dtype=complex)
        out, self.last_m = _refined(self._grid, lams, self.opts)
        return out


def order_terms(pp: PotentialPair, cfg: DelayConfig, lams, m: int = 256, k_max: int | None = None) -> np.ndarray:
    """Successive-approximation orders of ``S(pi, lam)`` computed by marching.

    Order 0 is the closed form; order ``r`` is marched with the delayed
    forcing taken from the stored order ``r - 1`` trace, so each term is
    obtained without cancellation against the others.

    Returns
    -------
    ndarray, shape (k_max + 1, 2, n)
    """
    validate_potential(pp, cfg)
    lams = as_lambda_array(lams)
    k_max = cfg.N if k_max is None else int(k_max)
    d, frac, qm, qp = cell_samples(pp, cfg.a, m)
    zero = np.zeros_like(qm)
    out = np.zeros((k_max + 1, 2, lams.size), dtype=complex)
    with np.errstate(all="ignore"):
        trace = kernels.march(lams, m, d, frac, zero, zero, store=True)
        out[0, 0], out[0, 1] = np.sin(lams * PI), -np.cos(lams * PI)
        for r in range(1, k_max + 1):
            trace = kernels.march(lams, m, d, frac, qm, qp, src=trace, closed_start=False, store=True)
            out[r] = _to_s(trace[0][:, -1], trace[1][:, -1])
    if not np.all(np.isfinite(out)):
        raise SolverOverflowError(float("nan"), complex(lams[np.argmin(np.isfinite(out).all(axis=(0, 1)))]))
    return out
