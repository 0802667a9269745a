"""Eigenvalue location, Hadamard reconstruction and the Ambarzumian harness.

Two locators share the argument-principle machinery:

``disk``
    One disk of radius ``disk_radius`` per index around the asymptotic
    center ``n + (1 - j)/2``; entries whose disk does not hold exactly one
    zero are flagged.
``global``
    One rectangle around all centers, recursively bisected until every box
    holds one zero; zeros are indexed by their order along the real axis.
    Suited to strong potentials whose zeros wander far from the centers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .core import PI, XTOL, DelayConfig, PotentialPair, Spectrum, as_lambda_array, spectrum_center
from .errors import PreconditionError, SpectrumIncompleteError, ValidationError


@dataclass(frozen=True)
class RootSearchOptions:
    """Controls for both locators.

    Attributes
    ----------
    disk_radius : float
        Radius of the per-index disks, in (0, 1/2).
    near_zero : float
        Estimated distance from a contour to a zero below which the winding
        number is considered ill-conditioned and the contour is moved.
    strip_halfwidth : float
        Half-height of the rectangle used by the global locator.
    """

    disk_radius: float = 0.25
    newton_tol: float = 1e-11
    max_newton: int = 60
    contour_points: int = 256
    fd_step: float = 1e-6
    max_retries: int = 3
    near_zero: float = 1e-8
    strip_halfwidth: float = 2.0
    points_per_unit: int = 64
    min_box: float = 1e-3
    max_contour_points: int = 8192

    def __post_init__(self):
        if not 0.0 < self.disk_radius < 0.5:
            raise ValidationError(f"disk_radius must lie in (0, 1/2), got {self.disk_radius!r}")
        if self.contour_points < 16 or self.max_newton < 1:
            raise ValidationError("contour_points must be >= 16 and max_newton >= 1")


# ---------------------------------------------------------------------------
# evaluator plumbing
# ---------------------------------------------------------------------------


class ComponentEvaluator:
    """``Delta_j`` on arrays from a vectorised pair evaluator."""

    def __init__(self, delta_eval, j: int):
        if j not in (1, 2):
            raise ValidationError(f"boundary index j must be 1 or 2, not {j!r}")
        self.ev = delta_eval
        self.j = j

    def __call__(self, z) -> np.ndarray:
        z = as_lambda_array(z)
        out = np.asarray(self.ev(z), dtype=complex)
        if out.ndim == 2 and out.shape[0] == 2:
            return out[self.j - 1]
        if out.shape == z.shape:
            return out
        raise ValidationError("evaluator must return shape (2, n) or (n,)")

    @property
    def coarse(self) -> "ComponentEvaluator":
        c = getattr(self.ev, "coarse", None)
        return ComponentEvaluator(c, self.j) if c is not None else self


def vectorise(fn):
    """Wrap a scalar ``lam -> (Delta_1, Delta_2)`` function as a vectorised evaluator."""

    def ev(lams):
        lams = as_lambda_array(lams)
        out = np.empty((2, lams.size), dtype=complex)
        for k, lam in enumerate(lams):
            out[:, k] = fn(complex(lam))
        return out

    ev.vectorised = True
    return ev


# ---------------------------------------------------------------------------
# argument principle
# ---------------------------------------------------------------------------


@dataclass
class _Winding:
    count: int
    resolved: bool
    near: bool
    estimate: complex | None


def _winding(z: np.ndarray, f: np.ndarray, near_zero: float) -> _Winding:
    """Winding data of ``f`` along the closed polygon ``z`` (last point omitted)."""
    zz = np.append(z, z[0])
    ff = np.append(f, f[0])
    if not np.all(np.isfinite(ff)):
        return _Winding(0, False, True, None)
    if np.any(ff == 0):
        return _Winding(0, True, True, None)
    ratio = ff[1:] / ff[:-1]
    darg = np.angle(ratio)
    total = darg.sum() / (2 * PI)
    count = int(round(total))
    resolved = abs(total - count) < 0.05 and np.max(np.abs(darg)) < PI / 3
    # distance-to-zero estimate |f| / |f'| along the contour
    dz = np.abs(np.diff(zz))
    deriv = np.abs(np.diff(ff)) / np.where(dz > 0, dz, 1.0)
    dist = np.abs(ff[:-1]) / np.maximum(deriv, 1e-300)
    near = bool(np.min(dist) < near_zero)
    est = None
    if count == 1 and resolved:
        dlog = np.log(np.abs(ratio)) + 1j * darg
        est = complex(np.sum(0.5 * (zz[1:] + zz[:-1]) * dlog) / (2j * PI))
    return _Winding(count, bool(resolved), near, est)


def _circle(c: complex, r: float, n: int) -> np.ndarray:
    return c + r * np.exp(2j * PI * (np.arange(n) + 0.5) / n)


def _rect(x0: float, x1: float, y0: float, y1: float, per_unit: int) -> np.ndarray:
    def edge(p, q):
        n = max(16, int(math.ceil(abs(q - p) * per_unit)))
        return p + (q - p) * np.arange(n) / n

    c = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    return np.concatenate([edge(c[i], c[(i + 1) % 4]) for i in range(4)])


def count_zeros_rect(delta_eval, j: int, re_range, im_range, opts: RootSearchOptions = RootSearchOptions()) -> int:
    """Number of zeros of ``Delta_j`` inside a rectangle (argument principle).

    Raises
    ------
    ValidationError
        If the boundary passes too close to a zero or the winding cannot be
        resolved with ``max_contour_points`` samples.
    """
    f = ComponentEvaluator(delta_eval, j).coarse
    per_unit = opts.points_per_unit
    while True:
        z = _rect(*re_range, *im_range, per_unit)
        w = _winding(z, f(z), opts.near_zero)
        if w.near:
            raise ValidationError("rectangle boundary passes within near_zero of a zero; move it")
        if w.resolved:
            return w.count
        per_unit *= 2
        if z.size * 2 > opts.max_contour_points * 4:
            raise ValidationError("winding number not resolved; increase max_contour_points")


# ---------------------------------------------------------------------------
# Newton refinement (batched)
# ---------------------------------------------------------------------------


def _newton(f, z0: np.ndarray, opts: RootSearchOptions):
    """Batched Newton iteration with central-difference derivatives.

    Returns the iterates and a convergence mask.
    """
    z = np.asarray(z0, dtype=complex).copy()
    done = np.zeros(z.size, dtype=bool)
    h = opts.fd_step
    for _ in range(opts.max_newton):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        za = z[act]
        vals = f(np.concatenate([za, za + h, za - h]))
        n = act.size
        fz, fp, fm = vals[:n], vals[n:2 * n], vals[2 * n:]
        deriv = (fp - fm) / (2 * h)
        with np.errstate(all="ignore"):
            step = np.where(fz == 0, 0.0, fz / deriv)
        bad = ~np.isfinite(step)
        step[bad] = 0.0
        z[act] = za - step
        conv = np.abs(step) <= opts.newton_tol * np.maximum(1.0, np.abs(za))
        done[act[conv & ~bad]] = True
        if bad.any():
            done[act[bad]] = True  # cannot progress; left unconverged
            z[act[bad]] = np.nan
    return z, done & np.isfinite(z)


# ---------------------------------------------------------------------------
# locators
# ---------------------------------------------------------------------------


def _locate_disk(f, fc, j: int, n_max: int, opts: RootSearchOptions) -> Spectrum:
    idx = list(range(-n_max, n_max + 1))
    centers = {n: spectrum_center(n, j) for n in idx}
    radius = {n: opts.disk_radius for n in idx}
    npts = {n: opts.contour_points for n in idx}
    tries = {n: 0 for n in idx}
    pending = list(idx)
    result = {}
    flags = {}
    while pending:
        pts = [_circle(centers[n], radius[n], npts[n]) for n in pending]
        vals = fc(np.concatenate(pts))
        offs = np.cumsum([0] + [p.size for p in pts])
        nxt = []
        for k, n in enumerate(pending):
            w = _winding(pts[k], vals[offs[k]:offs[k + 1]], opts.near_zero)
            if w.near:
                tries[n] += 1
                if tries[n] > opts.max_retries:
                    flags[n] = "contour passes through a zero"
                    continue
                sign = 1 if tries[n] % 2 else -1
                radius[n] = opts.disk_radius * (1 + sign * 0.05 * ((tries[n] + 1) // 2))
                nxt.append(n)
            elif not w.resolved:
                if npts[n] * 2 > opts.max_contour_points:
                    flags[n] = "winding number not resolved"
                    continue
                npts[n] *= 2
                nxt.append(n)
            else:
                result[n] = w
        pending = nxt

    ones = [n for n in idx if n in result and result[n].count == 1]
    for n in idx:
        if n in result and result[n].count != 1:
            flags[n] = f"count={result[n].count}"
    starts = np.array([result[n].estimate if result[n].estimate is not None else centers[n] for n in ones],
                      dtype=complex)
    roots, conv = _newton(f, starts, opts) if ones else (np.zeros(0, complex), np.zeros(0, bool))
    entries = {}
    for k, n in enumerate(ones):
        if not conv[k]:
            flags[n] = "newton did not converge"
        elif abs(roots[k] - centers[n]) >= radius[n] * (1 + 1e-9):
            flags[n] = "newton left the disk"
            entries[n] = complex(roots[k])
        else:
            entries[n] = complex(roots[k])
    return Spectrum(j=j, n_max=n_max, entries=entries, flags=flags, method="disk")


def _locate_global(f, fc, j: int, n_max: int, opts: RootSearchOptions) -> Spectrum:
    lo = spectrum_center(-n_max, j) - 0.5
    hi = spectrum_center(n_max, j) + 0.5
    H = opts.strip_halfwidth
    expected = 2 * n_max + 1

    # top-level box; nudge the edges if they pass next to a zero
    top = None
    for k in range(opts.max_retries + 1):
        s = 0.0 if k == 0 else 0.013 * k * (-1) ** k
        box = (lo + s, hi - s, -H - abs(s), H + abs(s))
        per_unit = opts.points_per_unit
        while True:
            z = _rect(*box, per_unit)
            w = _winding(z, fc(z), opts.near_zero)
            if w.resolved or z.size * 2 > opts.max_contour_points * 8:
                break
            per_unit *= 2
        if not w.near and w.resolved:
            top = (box, w.count, per_unit)
            break
    if top is None:
        flags = {n: "bounding rectangle could not be resolved" for n in range(-n_max, n_max + 1)}
        return Spectrum(j=j, n_max=n_max, entries={}, flags=flags, method="global")

    box, total, per_unit = top
    singles = []  # (box, estimate)
    multiple = []
    stack = [(box, total)]
    while stack:
        # split every box of the current level, count children in one batch
        children = []
        for (x0, x1, y0, y1), cnt in stack:
            if cnt == 0:
                continue
            if cnt == 1:
                singles.append(((x0, x1, y0, y1), None))
                continue
            if max(x1 - x0, y1 - y0) < opts.min_box:
                multiple.append(((x0, x1, y0, y1), cnt))
                continue
            children.append((x0, x1, y0, y1))
        stack = []
        if not children:
            break
        halves = []
        for x0, x1, y0, y1 in children:
            split = _split_box(fc, (x0, x1, y0, y1), per_unit, opts)
            halves.extend(split)
        pts = [_rect(*b, per_unit) for b in halves]
        vals = fc(np.concatenate(pts))
        offs = np.cumsum([0] + [p.size for p in pts])
        for k, b in enumerate(halves):
            w = _winding(pts[k], vals[offs[k]:offs[k + 1]], opts.near_zero)
            cnt = w.count
            if not w.resolved:
                pu = per_unit
                while not w.resolved and pu < per_unit * 64:
                    pu *= 2
                    zz = _rect(*b, pu)
                    w = _winding(zz, fc(zz), opts.near_zero)
                cnt = w.count
            stack.append((b, cnt))

    # Newton from box centres (or the moment estimate on a fine contour)
    starts = []
    for (x0, x1, y0, y1), _ in singles:
        zz = _rect(x0, x1, y0, y1, max(per_unit, int(64 / max(x1 - x0, y1 - y0, 1e-3))))
        w = _winding(zz, fc(zz), opts.near_zero)
        starts.append(w.estimate if w.estimate is not None else complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)))
    roots, conv = _newton(f, np.array(starts, dtype=complex), opts) if starts else (np.zeros(0, complex), np.zeros(0, bool))
    found = []
    notes = []
    for k, ((x0, x1, y0, y1), _) in enumerate(singles):
        r = roots[k]
        margin = 1e-6 + 0.05 * max(x1 - x0, y1 - y0)
        if conv[k] and x0 - margin <= r.real <= x1 + margin and y0 - margin <= r.imag <= y1 + margin:
            found.append(complex(r))
        else:
            notes.append("newton did not converge inside its box")
    for b, cnt in multiple:
        c = complex(0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3]))
        found.extend([c] * cnt)
        notes.append(f"cluster of {cnt} zeros near {c:.6g}")
    # clean numerical noise on real roots before sorting
    found = [complex(z.real, 0.0) if abs(z.imag) < 1e-12 else z for z in found]
    found.sort(key=lambda z: (round(z.real, 9), z.imag))

    entries, flags = {}, {}
    idx = list(range(-n_max, n_max + 1))
    for n, z in zip(idx, found):
        entries[n] = z
    if total != expected or len(found) != expected or notes:
        reason = f"global count {len(found)} of {total} zeros, expected {expected}"
        if notes:
            reason += "; " + notes[0]
        for n in idx:
            flags[n] = reason
    return Spectrum(j=j, n_max=n_max, entries=entries, flags=flags, method="global")


def _split_box(fc, box, per_unit, opts):
    """Bisect ``box`` along its longer side, nudging the cut away from zeros."""
    x0, x1, y0, y1 = box
    for k in range(opts.max_retries + 2):
        t = 0.5 + (0.0 if k == 0 else 0.07 * k * (-1) ** k)
        if x1 - x0 >= y1 - y0:
            c = x0 + t * (x1 - x0)
            cut = np.linspace(complex(c, y0), complex(c, y1), max(16, int(per_unit * (y1 - y0))))
            halves = [(x0, c, y0, y1), (c, x1, y0, y1)]
        else:
            c = y0 + t * (y1 - y0)
            cut = np.linspace(complex(x0, c), complex(x1, c), max(16, int(per_unit * (x1 - x0))))
            halves = [(x0, x1, y0, c), (x0, x1, c, y1)]
        v = fc(cut)
        dz = np.abs(cut[1] - cut[0])
        deriv = np.abs(np.diff(v)) / dz
        dist = np.abs(v[:-1]) / np.maximum(deriv, 1e-300)
        if np.all(np.isfinite(v)) and np.min(dist) > 10 * dz:
            return halves
    return halves


def locate_eigenvalues(delta_eval, j: int, n_max: int, opts: RootSearchOptions = RootSearchOptions(),
                       method: str = "disk") -> Spectrum:
    """Locate the eigenvalues ``lambda_{n,j}`` for ``|n| <= n_max``.

    Parameters
    ----------
    delta_eval : callable
        Vectorised evaluator returning ``[Delta_1, Delta_2]`` with shape
        ``(2, n)``.  If it has a ``coarse`` attribute, that cheaper evaluator
        is used for winding numbers; Newton always uses ``delta_eval``.
    method : {'disk', 'global'}
    """
    if int(n_max) != n_max or n_max < 1:
        raise ValidationError("n_max must be a positive integer")
    f = ComponentEvaluator(delta_eval, j)
    fc = f.coarse
    if method == "disk":
        return _locate_disk(f, fc, j, int(n_max), opts)
    if method == "global":
        return _locate_global(f, fc, j, int(n_max), opts)
    raise ValidationError(f"method must be 'disk' or 'global', not {method!r}")


# ---------------------------------------------------------------------------
# Hadamard products
# ---------------------------------------------------------------------------


def hadamard_delta(spec: Spectrum, lam, tail_order: int = 1):
    """Reconstruct ``Delta_j(lam)`` from its zeros.

    Factors are paired symmetrically (``n`` with ``-n`` for ``j = 1``, ``n``
    with ``1 - n`` for ``j = 2``) and normalised by the unperturbed centers,
    so the product for the unperturbed spectrum is ``sin(lam pi)`` or
    ``-cos(lam pi)``.  With ``tail_order = 1`` the omitted factors are
    approximated by ``exp(-lam^2 sum 1/c_n^2)`` over the missing centers,
    which removes the ``O(lam^2 / n_max)`` truncation error.

    Returns exactly 0 when ``lam`` equals a stored eigenvalue.
    """
    spec.require_complete()
    if tail_order not in (0, 1):
        raise ValidationError("tail_order must be 0 or 1")
    lam_arr = as_lambda_array(lam)
    N = spec.n_max
    e = spec.entries
    out = np.empty(lam_arr.size, dtype=complex)
    for i, z in enumerate(lam_arr):
        if any(z == v for v in e.values()):
            out[i] = 0.0
            continue
        if spec.j == 1:
            val = PI * (e[0] - z)
            for n in range(1, N + 1):
                val *= (e[n] - z) * (e[-n] - z) / (-(n * n))
            s2 = zeta(2.0, N + 1.0)
        else:
            val = 1.0 + 0j
            for n in range(1, N + 1):
                c = n - 0.5
                val *= (e[n] - z) * (e[1 - n] - z) / (-(c * c))
            s2 = zeta(2.0, N + 0.5)
        if tail_order == 1:
            val *= np.exp(-z * z * s2)
        out[i] = -val
    return complex(out[0]) if np.ndim(lam) == 0 else out


# ---------------------------------------------------------------------------
# Ambarzumian harness
# ---------------------------------------------------------------------------


def ambarzumian_residual(spec: Spectrum, allow_flagged: bool = False, disk_radius: float = 0.25) -> float:
    """``max_n |lambda_{n,j} - (n + (1 - j)/2)|``.

    With ``allow_flagged``, a disk flagged with ``count=0`` contributes
    ``disk_radius`` (no zero lies that close to its center); other flagged
    entries contribute their located value if any.
    """
    if not allow_flagged:
        spec.require_complete()
    res = 0.0
    for n in spec.indices:
        c = spectrum_center(n, spec.j)
        if n in spec.entries:
            res = max(res, abs(spec.entries[n] - c))
        elif spec.flags.get(n) == "count=0":
            res = max(res, disk_radius)
        elif not allow_flagged:
            raise SpectrumIncompleteError(f"entry n = {n} is missing")
    return float(res)


@dataclass(frozen=True)
class WindowTransforms:
    nu: int
    F: complex
    G: complex
    lam: complex


def window_transforms(pp: PotentialPair, cfg: DelayConfig, nu: int, lam: complex, g: int = 48) -> WindowTransforms:
    """Window transforms ``F`` (from ``p``) and ``G`` (from ``q``).

    ``F = exp(i lam (2 pi - (nu + 1) a)) int_{pi-(nu+1)a/2}^{pi-nu a/2} p(t) exp(-2 i lam t) dt``.

    Raises
    ------
    PreconditionError
        If ``nu > 2N - 3``, if the potential does not vanish on
        ``(pi - nu a/2, pi)``, or if ``pi - nu a/2 <= 2a``.
    """
    a = cfg.a
    nu = int(nu)
    if nu < 0 or nu > 2 * cfg.N - 3:
        raise PreconditionError(f"nu = {nu} must satisfy 0 <= nu <= 2N - 3 = {2 * cfg.N - 3}")
    top = PI - nu * a / 2
    if not top > 2 * a + XTOL:
        raise PreconditionError(
            f"pi - nu a/2 = {top:.6g} must exceed 2a = {2 * a:.6g}; this is the terminal case"
        )
    for name, fn in (("p", pp.p), ("q", pp.q)):
        for s in fn.nonzero_segments():
            if s.x1 > top + XTOL:
                raise PreconditionError(
                    f"{name} has a non-zero {s.shape.kind} segment [{s.x0:.6g}, {s.x1:.6g}) "
                    f"overlapping (pi - nu a/2, pi) = ({top:.6g}, {PI:.6g})"
                )
    lo = PI - (nu + 1) * a / 2
    lam = complex(lam)
    cuts = sorted({lo, top, *(b for b in pp.breakpoints() if lo < b < top)})
    nodes, weights = np.polynomial.legendre.leggauss(g)
    F = G = 0j
    for x0, x1 in zip(cuts, cuts[1:]):
        n_sub = max(1, math.ceil(abs(lam) * (x1 - x0) / 8.0))
        edges = np.linspace(x0, x1, n_sub + 1)
        for u0, u1 in zip(edges, edges[1:]):
            half = 0.5 * (u1 - u0)
            t = u0 + half * (nodes + 1)
            w = half * weights * np.exp(-2j * lam * t)
            p, q = pp.evaluate(t)
            F += np.sum(p * w)
            G += np.sum(q * w)
    phase = np.exp(1j * lam * (2 * PI - (nu + 1) * a))
    return WindowTransforms(nu=nu, F=complex(phase * F), G=complex(phase * G), lam=lam)
