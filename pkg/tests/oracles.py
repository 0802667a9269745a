"""Independent reference computations used by the tests."""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from diracdelay import PI

BINV = np.array([[0.0, -1.0], [1.0, 0.0]])


def steps_oracle(pp, a, lam, rtol=1e-12, atol=1e-13):
    """``(Delta_1, Delta_2)`` by method of steps with an adaptive DOP853 integrator.

    Works in the original variables ``y`` and looks the delayed value up in
    the dense output of earlier pieces; cuts are placed at every join of the
    potential shifted by multiples of ``a``.
    """
    lam = complex(lam)
    bps = [b for b in pp.breakpoints() if 0 < b < PI]
    cuts = {a, PI}
    for k in range(int(PI / a) + 2):
        cuts.add(k * a)
        cuts.update(b + k * a for b in bps)
    cuts = sorted(c for c in cuts if a <= c <= PI)
    pieces = []

    def delayed(x):
        xd = x - a
        if xd <= a:
            return np.array([np.sin(lam * xd), -np.cos(lam * xd)])
        for lo, hi, sol in pieces:
            if lo - 1e-14 <= xd <= hi + 1e-14:
                return sol(xd)
        raise RuntimeError("history lookup failed")

    y = np.array([np.sin(lam * a), -np.cos(lam * a)])
    for lo, hi in zip(cuts, cuts[1:]):
        if hi - lo < 1e-14:
            continue
        mid = 0.5 * (lo + hi)
        shp = pp.p.segments[int(pp.p._index(np.array([mid]), "right")[0])].shape
        shq = pp.q.segments[int(pp.q._index(np.array([mid]), "right")[0])].shape

        def rhs(x, yy, shp=shp, shq=shq):
            p, q = complex(shp(np.array([x]))[0]), complex(shq(np.array([x]))[0])
            Q = np.array([[p, q], [q, -p]])
            return BINV @ (lam * yy - Q @ delayed(x))

        sol = solve_ivp(rhs, (lo, hi), y, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        pieces.append((lo, hi, sol.sol))
        y = sol.y[:, -1]
    return complex(y[0]), complex(y[1])


def real_roots(fn, lo, hi, step=1e-3):
    """Real zeros of ``fn`` on ``[lo, hi]`` by a sign scan followed by bisection."""
    xs = np.arange(lo, hi + step / 2, step)
    fv = np.array([fn(x) for x in xs])
    idx = np.flatnonzero(np.sign(fv[:-1]) * np.sign(fv[1:]) < 0)
    return np.array([brentq(fn, xs[i], xs[i + 1], xtol=1e-14) for i in idx])
