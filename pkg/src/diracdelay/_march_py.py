"""Pure-numpy marching kernel, vectorised over the spectral parameter.

Mirrors ``_march.pyx`` exactly; used when the compiled extension is absent.

State is kept in the rotating basis ``z = y1 + i y2``, ``w = y1 - i y2`` in
which the delay system reads

    z'(x) =  i lam z(x) + (q - i p)(x) w(x - a)
    w'(x) = -i lam w(x) + (q + i p)(x) z(x - a).

Each cell is advanced with the integrating-factor form of the classical
fourth-order Runge-Kutta scheme.  The forcing does not depend on the current
state, so the stages reduce to Simpson weights on the exponential kernel.
Delayed values at half nodes come from cubic Hermite interpolation on the
source cell, using the one-sided derivatives stored for it.
"""

import numpy as np

_CHUNK = 128


def _hermite(y0, dy0, y1, dy1, h, t):
    t2 = t * t
    t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * dy0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * dy1)


def _march_block(lam, m, d, frac, qm, qp, src, closed_start):
    nl = lam.shape[0]
    C = qm.shape[0]
    il = 1j * lam[:, None]
    z = np.zeros((nl, C + 1), dtype=complex)
    w = np.zeros((nl, C + 1), dtype=complex)
    dzs = np.zeros((nl, C), dtype=complex)
    dze = np.zeros((nl, C), dtype=complex)
    dws = np.zeros((nl, C), dtype=complex)
    dwe = np.zeros((nl, C), dtype=complex)

    if closed_start:
        x = d * np.arange(m + 1)
        z[:, : m + 1] = -1j * np.exp(il * x[None, :])
        w[:, : m + 1] = 1j * np.exp(-il * x[None, :])
        dzs[:, :m] = il * z[:, :m]
        dze[:, :m] = il * z[:, 1 : m + 1]
        dws[:, :m] = -il * w[:, :m]
        dwe[:, :m] = -il * w[:, 1 : m + 1]

    if src is None:
        sz, sw, sdzs, sdze, sdws, sdwe = z, w, dzs, dze, dws, dwe
    else:
        sz, sw, sdzs, sdze, sdws, sdwe = src

    lam1 = lam
    full = tuple(np.exp(c * lam1 * d) for c in (1j, 0.5j, -1j, -0.5j))
    for k in range(m, C):
        partial = frac > 0.0 and k == C - 1
        h = frac * d if partial else d
        if partial:
            E, Eh, Ei, Eih = (np.exp(c * lam1 * h) for c in (1j, 0.5j, -1j, -0.5j))
        else:
            E, Eh, Ei, Eih = full
        j = k - m
        zs, ws = sz[:, j], sw[:, j]
        if partial:
            zm = _hermite(sz[:, j], sdzs[:, j], sz[:, j + 1], sdze[:, j], d, 0.5 * frac)
            wm = _hermite(sw[:, j], sdws[:, j], sw[:, j + 1], sdwe[:, j], d, 0.5 * frac)
            ze = _hermite(sz[:, j], sdzs[:, j], sz[:, j + 1], sdze[:, j], d, frac)
            we = _hermite(sw[:, j], sdws[:, j], sw[:, j + 1], sdwe[:, j], d, frac)
        else:
            zm = 0.5 * (sz[:, j] + sz[:, j + 1]) + 0.125 * d * (sdzs[:, j] - sdze[:, j])
            wm = 0.5 * (sw[:, j] + sw[:, j + 1]) + 0.125 * d * (sdws[:, j] - sdwe[:, j])
            ze, we = sz[:, j + 1], sw[:, j + 1]
        gzs, gzm, gze = qm[k, 0] * ws, qm[k, 1] * wm, qm[k, 2] * we
        gws, gwm, gwe = qp[k, 0] * zs, qp[k, 1] * zm, qp[k, 2] * ze
        z[:, k + 1] = E * z[:, k] + (h / 6.0) * (E * gzs + 4.0 * Eh * gzm + gze)
        w[:, k + 1] = Ei * w[:, k] + (h / 6.0) * (Ei * gws + 4.0 * Eih * gwm + gwe)
        dzs[:, k] = 1j * lam1 * z[:, k] + gzs
        dze[:, k] = 1j * lam1 * z[:, k + 1] + gze
        dws[:, k] = -1j * lam1 * w[:, k] + gws
        dwe[:, k] = -1j * lam1 * w[:, k + 1] + gwe
    return z, w, dzs, dze, dws, dwe


def march(lam, m, d, frac, qm, qp, src=None, closed_start=True, store=False):
    """Advance the delay system over all cells for every ``lam``.

    Parameters
    ----------
    lam : complex ndarray, shape (nl,)
    m : int
        Cells per delay interval.
    d : float
        Cell length ``a/m``.
    frac : float
        Length of the trailing partial cell in units of ``d`` (0 if none).
    qm, qp : complex ndarray, shape (C, 3)
        ``q - i p`` and ``q + i p`` at the start (right limit), midpoint and
        end (left limit) of every cell.
    src : tuple of six arrays, optional
        Stored trace supplying the delayed values.  ``None`` marches the
        system on itself.
    closed_start : bool
        Fill the first delay window with the unperturbed solution; otherwise
        it is zero.
    store : bool
        Return the full trace ``(z, w, dzs, dze, dws, dwe)`` instead of the
        endpoint pair ``(z[:, -1], w[:, -1])``.
    """
    lam = np.ascontiguousarray(lam, dtype=complex)
    qm = np.ascontiguousarray(qm, dtype=complex)
    qp = np.ascontiguousarray(qp, dtype=complex)
    if store:
        return _march_block(lam, m, d, frac, qm, qp, src, closed_start)
    if src is not None:
        out = _march_block(lam, m, d, frac, qm, qp, src, closed_start)
        return out[0][:, -1], out[1][:, -1]
    zs, ws = [], []
    for start in range(0, lam.shape[0], _CHUNK):
        out = _march_block(lam[start:start + _CHUNK], m, d, frac, qm, qp, None, closed_start)
        zs.append(out[0][:, -1])
        ws.append(out[1][:, -1])
    if not zs:
        return np.zeros(0, dtype=complex), np.zeros(0, dtype=complex)
    return np.concatenate(zs), np.concatenate(ws)
