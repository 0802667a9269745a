"""Iso-bispectral potential families built from a Hankel-type operator.

For ``h`` supported in ``(5a/2, 3a)`` the operator

    (M_h f)(x) = int_{3a/2}^{7a/2 - x} f(t) h(t + x - a/2) dt,   x in (3a/2, 2a),

is compact and symmetric on ``L2(3a/2, 2a)``.  If ``e_1`` and ``e_0`` are
eigenfunctions with eigenvalues -1 and +1, the potentials

    p = alpha e_1 on (3a/2, 2a),    q = beta e_0 on (3a/2, 2a) and h on (5a/2, 3a)

share both characteristic functions for all ``alpha, beta``.

With ``u = x - 3a/2`` and ``v = t - 3a/2`` the kernel is
``h(u + v + 5a/2) [u + v <= a/2]`` on ``(0, a/2)^2``.  The default
discretisation is a Galerkin projection on orthonormal Legendre
polynomials, integrated along the anti-diagonals ``u + v = sigma`` so that
the cut ``u + v = a/2`` is a panel edge; this converges spectrally for
smooth ``h``.  A midpoint Nystrom matrix is kept as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.optimize import brentq

from .core import (
    PI,
    XTOL,
    Constant,
    Cosine,
    DelayConfig,
    Legendre,
    PiecewiseFunction,
    PotentialPair,
    Samples,
    Shape,
    Sum,
    Zero,
    as_lambda_array,
    linear_combination,
    unique_sorted,
)
from .errors import (
    DegenerateKernelError,
    DomainError,
    FamilyConstructionError,
    KernelTuningError,
    PreconditionError,
    ValidationError,
)

MODES = ("p_only", "q_only", "both")


# ---------------------------------------------------------------------------
# kernels h
# ---------------------------------------------------------------------------


def _check_h(h: PiecewiseFunction, cfg: DelayConfig):
    a = cfg.a
    if 3 * a > PI + XTOL:
        raise PreconditionError(f"the construction needs 3a < pi, got a = {a:.6g}")
    for s in h.nonzero_segments():
        if s.x0 < 2.5 * a - XTOL or s.x1 > 3 * a + XTOL:
            raise ValidationError(
                f"h has a non-zero {s.shape.kind} segment [{s.x0:.6g}, {s.x1:.6g}) outside (5a/2, 3a)"
            )


def constant_h(cfg: DelayConfig, c: float) -> PiecewiseFunction:
    """``h = c`` on ``(5a/2, 3a)``."""
    a = cfg.a
    return PiecewiseFunction.from_pieces([(2.5 * a, 3 * a, Constant(c))])


def cosine_h(cfg: DelayConfig, amplitude: float, harmonic: int) -> PiecewiseFunction:
    """``h = amplitude cos(2 pi harmonic (x - 5a/2)/a)`` on ``(5a/2, 3a)``."""
    a = cfg.a
    w = 2 * PI * harmonic / a
    return PiecewiseFunction.from_pieces([(2.5 * a, 3 * a, Cosine(amplitude, w, -w * 2.5 * a))])


def rescale_h(h: PiecewiseFunction, eta: float, target: int = 1) -> PiecewiseFunction:
    """Scale ``h`` so that the eigenvalue ``eta`` of ``M_h`` becomes ``target`` (+1 or -1)."""
    if target not in (1, -1):
        raise ValidationError("target must be +1 or -1")
    if eta == 0:
        raise DegenerateKernelError("cannot rescale by a zero eigenvalue")
    return h.scaled(target / eta)


def combine_h(h0: PiecewiseFunction, h1: PiecewiseFunction, theta: float, scale: float = 1.0) -> PiecewiseFunction:
    """``scale * (h0 + theta * h1)``."""
    return linear_combination(h0, h1, scale, scale * theta)


# ---------------------------------------------------------------------------
# operator
# ---------------------------------------------------------------------------


def _legendre_basis(u: np.ndarray, L: float, M: int) -> np.ndarray:
    """Orthonormal Legendre functions on (0, L); trailing axis of length M."""
    norms = np.sqrt((2 * np.arange(M) + 1) / L)
    return npleg.legvander(2.0 * u / L - 1.0, M - 1) * norms


def _h_real(h: PiecewiseFunction, x: np.ndarray, side: str = "right") -> np.ndarray:
    v = np.asarray(h.evaluate(x, side))
    return v.real


def _sigma_cuts(h: PiecewiseFunction, a: float) -> list:
    L = a / 2
    lo = 2.5 * a
    return unique_sorted([0.0, L] + [b - lo for b in h.breakpoints() if lo < b < lo + L])


def galerkin_matrix(h: PiecewiseFunction, a: float, M: int, extra: int = 32) -> np.ndarray:
    """Legendre-Galerkin matrix of ``M_h`` (symmetric, ``M x M``)."""
    L = a / 2
    lo = 2.5 * a
    ns = M + extra
    nu = M + 2
    xo, wo = npleg.leggauss(ns)
    xi, wi = npleg.leggauss(nu)
    A = np.zeros((M, M))
    cuts = _sigma_cuts(h, a)
    for s0, s1 in zip(cuts, cuts[1:]):
        half = 0.5 * (s1 - s0)
        sig = s0 + half * (xo + 1)
        W = half * wo * _h_real(h, sig + lo)
        for c0 in range(0, ns, 64):
            sg = sig[c0:c0 + 64]
            u = (0.5 * sg[:, None] * (xi[None, :] + 1)).ravel()
            wu = (0.5 * sg[:, None] * wi[None, :] * W[c0:c0 + 64, None]).ravel()
            PU = _legendre_basis(u, L, M)
            PV = _legendre_basis(np.repeat(sg, nu) - u, L, M)
            A += (PU * wu[:, None]).T @ PV
    return 0.5 * (A + A.T)


def midpoint_matrix(h: PiecewiseFunction, a: float, M: int) -> np.ndarray:
    """Midpoint Nystrom matrix ``w h(t_q + x_p - a/2) [t_q <= 7a/2 - x_p]``."""
    L = a / 2
    w = L / M
    k = np.arange(M)
    s = k[:, None] + k[None, :] + 1  # (x_p + t_q - 3a) / w
    inside = s <= M
    arg = 2.5 * a + s * w
    vals = _h_real(h, np.minimum(arg, 3 * a), side="left")
    K = np.where(inside, w * vals, 0.0)
    return 0.5 * (K + K.T)


@dataclass(frozen=True)
class HankelKernelOp:
    """Discretised ``M_h`` on ``L2(3a/2, 2a)``.

    Attributes
    ----------
    M : int
        Basis size (``galerkin``) or grid size (``midpoint``).
    method : {'galerkin', 'midpoint'}
    grid : ndarray
        Midpoints of ``M`` equal cells of ``(3a/2, 2a)``; eigenfunction
        samples are reported there.
    matrix : ndarray
        Symmetric ``M x M`` matrix.
    """

    cfg: DelayConfig
    h: PiecewiseFunction
    M: int = 200
    method: str = "galerkin"
    grid: np.ndarray = field(init=False, repr=False, compare=False)
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_h(self.h, self.cfg)
        if self.method not in ("galerkin", "midpoint"):
            raise ValidationError(f"method must be 'galerkin' or 'midpoint', not {self.method!r}")
        if int(self.M) != self.M or self.M < 8:
            raise ValidationError("M must be an integer >= 8")
        a = self.cfg.a
        L = a / 2
        grid = 1.5 * a + (np.arange(self.M) + 0.5) * L / self.M
        mat = (galerkin_matrix if self.method == "galerkin" else midpoint_matrix)(self.h, a, int(self.M))
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "matrix", mat)

    @property
    def domain(self) -> tuple:
        a = self.cfg.a
        return 1.5 * a, 2.0 * a


def _as_callable(op: HankelKernelOp, f):
    if isinstance(f, (Shape, PiecewiseFunction)) or callable(f):
        return f
    vals = np.asarray(f)
    if vals.shape != op.grid.shape:
        raise ValidationError(f"sampled function must have {op.grid.size} values on the operator grid")
    return Samples(tuple(op.grid), tuple(vals))


def apply_Mh(op: HankelKernelOp, f, x, points: int | None = None):
    """``(M_h f)(x)`` by Gauss-Legendre quadrature split at the kinks of ``h``.

    ``f`` is a callable of absolute abscissae (shape, piecewise function or
    any vectorised function) or samples on ``op.grid``.
    """
    a = op.cfg.a
    lo, hi = op.domain
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < lo - XTOL) or np.any(xs > hi + XTOL):
        raise DomainError(f"x must lie in [3a/2, 2a] = [{lo:.6g}, {hi:.6g}]")
    fn = _as_callable(op, f)
    n = points or (op.M + 32)
    xg, wg = npleg.leggauss(n)
    hb = [b for b in op.h.breakpoints() if 2.5 * a < b < 3 * a]
    fb = list(fn.kinks()) if isinstance(fn, Shape) else []
    # gather every quadrature node first so f and h are evaluated once
    ts, ws, hs, owner = [], [], [], []
    for i, xv in enumerate(xs):
        top = 3.5 * a - xv
        cuts = unique_sorted([lo, top] + [b - xv + a / 2 for b in hb] + fb)
        cuts = [c for c in cuts if lo - XTOL <= c <= top + XTOL]
        for t0, t1 in zip(cuts, cuts[1:]):
            if t1 - t0 <= XTOL:
                continue
            half = 0.5 * (t1 - t0)
            t = t0 + half * (xg + 1)
            ts.append(t)
            ws.append(half * wg)
            hs.append(np.minimum(t + xv - a / 2, PI))
            owner.append(np.full(n, i))
    out = np.zeros(xs.size, dtype=complex)
    if ts:
        t = np.concatenate(ts)
        vals = np.concatenate(ws) * np.asarray(fn(t)) * op.h.evaluate(np.concatenate(hs))
        np.add.at(out, np.concatenate(owner), vals)
    if np.all(out.imag == 0):
        out = out.real
    return out[0] if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue ``mu`` with its L2-normalised eigenfunction.

    ``e`` holds samples on the operator grid; ``shape`` evaluates the
    eigenfunction anywhere on ``[3a/2, 2a]``.
    """

    mu: float
    e: np.ndarray
    residual: float
    shape: Shape

    def to_json(self) -> dict:
        return {"mu": self.mu, "residual": self.residual, "shape": self.shape.to_json()}


def _normalise_sign(vals: np.ndarray) -> float:
    big = np.flatnonzero(np.abs(vals) > 1e-8 * np.max(np.abs(vals)))
    return -1.0 if big.size and vals[big[0]] < 0 else 1.0


def _eigen_shape(op: HankelKernelOp, vec: np.ndarray) -> Shape:
    a = op.cfg.a
    if op.method == "galerkin":
        L = a / 2
        coeffs = vec * np.sqrt((2 * np.arange(op.M) + 1) / L)
        keep = np.flatnonzero(np.abs(coeffs) > 1e-17 * np.max(np.abs(coeffs)))
        coeffs = coeffs[: keep[-1] + 1]
        return Legendre(tuple(float(c) for c in coeffs), 1.5 * a, 2.0 * a)
    w = (a / 2) / op.M
    return Samples(tuple(float(t) for t in op.grid), tuple(float(v) for v in vec / math.sqrt(w)))


def _residual(op: HankelKernelOp, mu: float, shape: Shape) -> float:
    lo, hi = op.domain
    n = 2 * op.M
    xf = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    ef = np.asarray(shape(xf)).real
    r = np.asarray(apply_Mh(op, shape, xf)).real - mu * ef
    return float(np.linalg.norm(r) / max(np.linalg.norm(ef), 1e-300))


def nystrom_eigs(op: HankelKernelOp, count: int = 4) -> list:
    """The ``count`` largest-|mu| eigenpairs of ``M_h``.

    Each pair carries the relative residual ``||M_h e - mu e|| / ||e||``
    measured with ``apply_Mh`` on a grid twice as fine as ``op.grid``.

    Raises
    ------
    DegenerateKernelError
        If every eigenvalue is below 1e-12 in magnitude.
    """
    if op.M < 64:
        raise ValidationError("nystrom_eigs needs M >= 64")
    mus, vecs = np.linalg.eigh(op.matrix)
    if np.max(np.abs(mus)) < 1e-12:
        raise DegenerateKernelError("M_h is numerically zero; h vanishes")
    order = np.argsort(-np.abs(mus), kind="stable")[: int(count)]
    out = []
    for k in order:
        shape = _eigen_shape(op, vecs[:, k])
        samples = np.asarray(shape(op.grid)).real
        sgn = _normalise_sign(samples)
        shape = shape.scaled(sgn)
        shape = _real_shape(shape)
        mu = float(mus[k])
        out.append(EigenPair(mu=mu, e=sgn * samples, residual=_residual(op, mu, shape), shape=shape))
    return out


def _real_shape(shape: Shape) -> Shape:
    if isinstance(shape, Legendre):
        return Legendre(tuple(complex(c).real for c in shape.coeffs), shape.lo, shape.hi)
    if isinstance(shape, Samples):
        return Samples(shape.nodes, tuple(complex(v).real for v in shape.values))
    return shape


def find_pair(op: HankelKernelOp, target: int, tol: float = 1e-7) -> EigenPair | None:
    """Eigenpair with ``|mu - target| <= tol`` or ``None``."""
    mus, vecs = np.linalg.eigh(op.matrix)
    k = int(np.argmin(np.abs(mus - target)))
    if abs(mus[k] - target) > tol:
        return None
    shape = _eigen_shape(op, vecs[:, k])
    samples = np.asarray(shape(op.grid)).real
    sgn = _normalise_sign(samples)
    shape = _real_shape(shape.scaled(sgn))
    return EigenPair(mu=float(mus[k]), e=sgn * samples, residual=_residual(op, float(mus[k]), shape), shape=shape)


# ---------------------------------------------------------------------------
# tuning for the two-parameter family
# ---------------------------------------------------------------------------


def tune_h_for_pair(cfg: DelayConfig, h0: PiecewiseFunction, h1: PiecewiseFunction, theta_range,
                    pair: tuple = (0, -1), M: int = 200, xtol: float = 1e-14) -> tuple:
    """Find ``theta, scale`` so that ``M_{scale (h0 + theta h1)}`` has eigenvalues +1 and -1.

    With eigenvalues of ``M_{h0 + theta h1}`` sorted decreasingly, the
    eigenvalues at positions ``pair`` must have opposite signs; ``theta``
    solves ``mu_i(theta) + mu_j(theta) = 0`` and ``scale = 1 / mu_i(theta)``.

    Raises
    ------
    KernelTuningError
        If ``mu_i + mu_j`` does not change sign on ``theta_range`` or the
        pair does not have opposite signs at the root.
    """
    A0 = HankelKernelOp(cfg, h0, M).matrix
    A1 = HankelKernelOp(cfg, h1, M).matrix
    i, j = pair

    def g(theta):
        mu = np.linalg.eigvalsh(A0 + theta * A1)[::-1]
        return mu[i] + mu[j]

    lo, hi = map(float, theta_range)
    glo, ghi = g(lo), g(hi)
    if not (np.isfinite(glo) and np.isfinite(ghi)) or glo * ghi > 0 or (glo == 0 and ghi == 0):
        raise KernelTuningError(
            f"mu[{i}] + mu[{j}] does not change sign on theta in [{lo:g}, {hi:g}] "
            f"(values {glo:.3g}, {ghi:.3g}); try a different index pair or range"
        )
    theta = brentq(g, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    mu = np.linalg.eigvalsh(A0 + theta * A1)[::-1]
    if not (mu[i] > 0 > mu[j]):
        raise KernelTuningError(f"eigenvalues at {pair} do not have opposite signs at theta = {theta:.6g}")
    return float(theta), float(1.0 / mu[i])


# ---------------------------------------------------------------------------
# family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsoFamilySpec:
    cfg: DelayConfig
    h: PiecewiseFunction
    mode: str
    alpha: complex = 0j
    beta: complex = 0j
    pair_minus: EigenPair | None = None
    pair_plus: EigenPair | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, not {self.mode!r}")
        if self.mode == "p_only" and (self.pair_minus is None or self.beta != 0):
            raise ValidationError("p_only needs the mu = -1 pair and beta = 0")
        if self.mode == "q_only" and (self.pair_plus is None or self.alpha != 0):
            raise ValidationError("q_only needs the mu = +1 pair and alpha = 0")
        if self.mode == "both" and (self.pair_minus is None or self.pair_plus is None):
            raise ValidationError("both needs the mu = +1 and mu = -1 pairs")

    def to_json(self) -> dict:
        from .core import complex_to_json

        return {
            "a": self.cfg.a,
            "mode": self.mode,
            "alpha": complex_to_json(self.alpha),
            "beta": complex_to_json(self.beta),
            "h": self.h.to_json(),
            "pair_minus": self.pair_minus.to_json() if self.pair_minus else None,
            "pair_plus": self.pair_plus.to_json() if self.pair_plus else None,
        }


def family_eigenpairs(cfg: DelayConfig, h: PiecewiseFunction, mode: str, M: int = 200, tol: float = 1e-7):
    """Eigenpairs ``(pair_minus, pair_plus)`` required by ``mode``.

    Raises
    ------
    FamilyConstructionError
        Naming the sign whose eigenvalue is missing.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, not {mode!r}")
    op = HankelKernelOp(cfg, h, M)
    minus = find_pair(op, -1, tol) if mode in ("p_only", "both") else None
    plus = find_pair(op, +1, tol) if mode in ("q_only", "both") else None
    missing = []
    if mode in ("p_only", "both") and minus is None:
        missing.append("-1 (needed for p)")
    if mode in ("q_only", "both") and plus is None:
        missing.append("+1 (needed for q)")
    if missing:
        mus = np.linalg.eigvalsh(op.matrix)
        top = ", ".join(f"{m:.6g}" for m in sorted(mus, key=lambda v: -abs(v))[:4])
        raise FamilyConstructionError(
            f"M_h has no eigenvalue {' and '.join(missing)} within {tol:g}; "
            f"largest eigenvalues are {top}; rescale h or use tune_h_for_pair"
        )
    return minus, plus


def build_family(cfg: DelayConfig, h: PiecewiseFunction, mode: str, alpha: complex = 0, beta: complex = 0,
                 M: int = 200, tol: float = 1e-7, pairs=None):
    """Construct ``(IsoFamilySpec, PotentialPair)`` for one parameter sample.

    ``pairs`` may carry precomputed ``(pair_minus, pair_plus)``.
    """
    _check_h(h, cfg)
    alpha, beta = complex(alpha), complex(beta)
    minus, plus = pairs if pairs is not None else family_eigenpairs(cfg, h, mode, M, tol)
    spec = IsoFamilySpec(cfg, h, mode, alpha, beta, minus, plus)
    a = cfg.a
    p_pieces = []
    q_pieces = []
    if minus is not None and alpha != 0:
        p_pieces.append((1.5 * a, 2 * a, minus.shape.scaled(alpha)))
    if plus is not None and beta != 0:
        q_pieces.append((1.5 * a, 2 * a, plus.shape.scaled(beta)))
    q_pieces += [(s.x0, s.x1, s.shape) for s in h.nonzero_segments()]
    pp = PotentialPair(PiecewiseFunction.from_pieces(p_pieces), PiecewiseFunction.from_pieces(q_pieces))
    return spec, pp


# ---------------------------------------------------------------------------
# kernels K1, K2
# ---------------------------------------------------------------------------


def k_kernels(pp: PotentialPair, cfg: DelayConfig, x, g: int = 64) -> tuple:
    """The reduced kernels ``K1(x)``, ``K2(x)`` for ``x`` in ``(a/2, 5a/2)``.

    On ``(a, 2a)``::

        K1(x) = p(x + a/2) - int_{x+a}^{3a} [p(t) q(t-x) - q(t) p(t-x)] dt
        K2(x) = q(x + a/2) - int_{x+a}^{3a} [p(t) p(t-x) + q(t) q(t-x)] dt

    and ``K1 = p(x + a/2)``, ``K2 = q(x + a/2)`` elsewhere.
    """
    a = cfg.a
    sup = pp.support()
    if 3 * a > PI + XTOL or (sup is not None and (sup[0] < a - XTOL or sup[1] > 3 * a + XTOL)):
        raise PreconditionError("k_kernels needs the potential supported in (a, 3a) with 3a <= pi")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < a / 2 - XTOL) or np.any(xs > 2.5 * a + XTOL):
        raise DomainError(f"x must lie in [a/2, 5a/2] = [{a / 2:.6g}, {2.5 * a:.6g}]")
    xn, wn = npleg.leggauss(g)
    bps = pp.breakpoints()
    K1 = np.asarray(pp.p.evaluate(np.clip(xs + a / 2, 0, PI)), dtype=complex).copy()
    K2 = np.asarray(pp.q.evaluate(np.clip(xs + a / 2, 0, PI)), dtype=complex).copy()
    for i, xv in enumerate(xs):
        if not (a < xv < 2 * a):
            continue
        lo, hi = xv + a, 3 * a
        cuts = unique_sorted([lo, hi] + [b for b in bps if lo < b < hi] + [b + xv for b in bps if lo < b + xv < hi])
        i1 = i2 = 0j
        for t0, t1 in zip(cuts, cuts[1:]):
            if t1 - t0 <= XTOL:
                continue
            half = 0.5 * (t1 - t0)
            t = t0 + half * (xn + 1)
            w = half * wn
            pt, qt = pp.evaluate(t)
            ps, qs = pp.evaluate(t - xv)
            i1 += np.sum(w * (pt * qs - qt * ps))
            i2 += np.sum(w * (pt * ps + qt * qs))
        K1[i] -= i1
        K2[i] -= i2
    if np.ndim(x) == 0:
        return complex(K1[0]), complex(K2[0])
    return K1, K2


# ---------------------------------------------------------------------------
# closed-form characteristic functions
# ---------------------------------------------------------------------------


def _phi1(z):
    """``(exp(z) - 1)/z`` with a series for small ``|z|``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-3
    zs = z[small]
    out[small] = 1 + zs / 2 + zs * zs / 6 + zs ** 3 / 24
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def _exp_terms(shape: Shape):
    """Write ``shape(x)`` as ``sum c_k exp(i w_k x)`` when possible."""
    if isinstance(shape, Zero):
        return []
    if isinstance(shape, Constant):
        return [(complex(shape.value), 0.0)]
    if isinstance(shape, Cosine):
        A, w, ph = complex(shape.amplitude), shape.angular_frequency, shape.phase
        return [(0.5 * A * np.exp(1j * ph), w), (0.5 * A * np.exp(-1j * ph), -w)]
    if isinstance(shape, Sum):
        out = []
        for t in shape.terms:
            sub = _exp_terms(t)
            if sub is None:
                return None
            out += sub
        return out
    return None


def _exp_integral(shape: Shape, x0: float, x1: float, alpha: np.ndarray, beta: np.ndarray, g: int = 64):
    """``int_{x0}^{x1} shape(x) exp(alpha + beta x) dx`` for arrays ``alpha, beta``."""
    terms = _exp_terms(shape)
    if terms is not None:
        out = np.zeros(np.shape(beta), dtype=complex)
        for c, w in terms:
            b = beta + 1j * w
            out += c * (x1 - x0) * np.exp(alpha + b * x0) * _phi1(b * (x1 - x0))
        return out
    cuts = unique_sorted([x0, x1] + [k for k in shape.kinks() if x0 < k < x1])
    xn, wn = npleg.leggauss(g)
    out = np.zeros(np.shape(beta), dtype=complex)
    bmax = float(np.max(np.abs(beta))) if np.size(beta) else 0.0
    for c0, c1 in zip(cuts, cuts[1:]):
        n_sub = max(1, math.ceil(bmax * (c1 - c0) / 8.0))
        edges = np.linspace(c0, c1, n_sub + 1)
        for u0, u1 in zip(edges, edges[1:]):
            half = 0.5 * (u1 - u0)
            t = u0 + half * (xn + 1)
            vals = half * wn * np.asarray(shape(t))
            out += np.exp(alpha[..., None] + beta[..., None] * t) @ vals
    return out


def family_charfn_closed(h: PiecewiseFunction, cfg: DelayConfig, lam):
    """Characteristic functions shared by the whole family generated by ``h``.

    ``Delta_1 = sin(lam pi) - int h(x) sin(lam (pi - 2x + a)) dx`` and
    ``Delta_2 = -cos(lam pi) + int h(x) cos(lam (pi - 2x + a)) dx`` over
    ``(5a/2, 3a)``; exponential-sum shapes are integrated analytically.
    """
    _check_h(h, cfg)
    lams = as_lambda_array(lam)
    a = cfg.a
    ep = np.zeros(lams.size, dtype=complex)  # int h exp(+i lam (pi + a - 2x))
    em = np.zeros(lams.size, dtype=complex)  # int h exp(-i lam (pi + a - 2x))
    for s in h.nonzero_segments():
        ep += _exp_integral(s.shape, s.x0, s.x1, 1j * lams * (PI + a), -2j * lams)
        em += _exp_integral(s.shape, s.x0, s.x1, -1j * lams * (PI + a), 2j * lams)
    int_sin = (ep - em) / 2j
    int_cos = (ep + em) / 2
    d1 = np.sin(lams * PI) - int_sin
    d2 = -np.cos(lams * PI) + int_cos
    if np.ndim(lam) == 0:
        return complex(d1[0]), complex(d2[0])
    return d1, d2


class ClosedFormEvaluator:
    """Vectorised evaluator of ``family_charfn_closed``."""

    vectorised = True

    def __init__(self, h: PiecewiseFunction, cfg: DelayConfig):
        _check_h(h, cfg)
        self.h, self.cfg = h, cfg

    def __call__(self, lams) -> np.ndarray:
        d1, d2 = family_charfn_closed(self.h, self.cfg, as_lambda_array(lams))
        return np.stack([d1, d2])


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleReport:
    alpha: complex
    beta: complex
    dev_solver: float
    dev_series: float
    passed: bool
    error: str | None = None


@dataclass(frozen=True)
class IsoReport:
    mode: str
    tol: float
    samples: tuple
    pair_minus_mu: float | None = None
    pair_plus_mu: float | None = None
    residuals: tuple = ()

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.samples)

    @property
    def max_deviation(self) -> float:
        return max((max(s.dev_solver, s.dev_series) for s in self.samples), default=0.0)

    def to_json(self) -> dict:
        from .core import complex_to_json

        return {
            "mode": self.mode,
            "tol": self.tol,
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "pair_minus_mu": self.pair_minus_mu,
            "pair_plus_mu": self.pair_plus_mu,
            "eigen_residuals": list(self.residuals),
            "samples": [
                {
                    "alpha": complex_to_json(s.alpha),
                    "beta": complex_to_json(s.beta),
                    "dev_solver": s.dev_solver,
                    "dev_series": s.dev_series,
                    "passed": s.passed,
                    **({"error": s.error} if s.error else {}),
                }
                for s in self.samples
            ],
        }


def infer_mode(param_samples) -> str:
    alphas = [complex(s[0]) for s in param_samples]
    betas = [complex(s[1]) for s in param_samples]
    if all(b == 0 for b in betas):
        return "p_only"
    if all(al == 0 for al in alphas):
        return "q_only"
    return "both"


def verify_isospectrality(h: PiecewiseFunction, cfg: DelayConfig, param_samples, lambda_grid, tol: float = 1e-6,
                          mode: str | None = None, M: int = 200, solver_opts=None, g: int = 48) -> IsoReport:
    """Compare solver and series characteristic functions of family members
    against the closed form.

    Deviations are ``max |Delta - Delta_closed| / max(1, |Delta_closed|)``
    over both ``j`` and the grid.  A construction failure for the implied
    mode raises; per-sample numerical failures become report entries.
    """
    from .series import QuadratureRule, SeriesEvaluator
    from .solver import SolverEvaluator, SolverOptions

    mode = mode or infer_mode(param_samples)
    lams = as_lambda_array(lambda_grid)
    pairs = family_eigenpairs(cfg, h, mode, M)
    d1c, d2c = family_charfn_closed(h, cfg, lams)
    ref = np.stack([d1c, d2c])
    scale = np.maximum(1.0, np.abs(ref))
    rule = QuadratureRule(g)
    opts = solver_opts or SolverOptions()
    rows = []
    for alpha, beta in param_samples:
        try:
            _, pp = build_family(cfg, h, mode, alpha, beta, M, pairs=pairs)
            dv = float(np.max(np.abs(SolverEvaluator(pp, cfg, opts)(lams) - ref) / scale))
            ds = float(np.max(np.abs(SeriesEvaluator(pp, cfg, K=2, rule=rule)(lams) - ref) / scale))
            rows.append(SampleReport(complex(alpha), complex(beta), dv, ds, max(dv, ds) < tol))
        except Exception as exc:  # numerical failures are reported, not raised
            rows.append(SampleReport(complex(alpha), complex(beta), math.inf, math.inf, False, str(exc)))
    minus, plus = pairs
    return IsoReport(
        mode=mode,
        tol=tol,
        samples=tuple(rows),
        pair_minus_mu=minus.mu if minus else None,
        pair_plus_mu=plus.mu if plus else None,
        residuals=tuple(p.residual for p in (minus, plus) if p is not None),
    )
