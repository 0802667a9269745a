import numpy as np
import pytest

from diracdelay import Constant, Cosine, PiecewiseFunction, PotentialPair, make_delay_config


def random_piecewise(rng, a, lo_mult=1.0, hi_mult=3.0, amp=1.0, pieces=3):
    """Random function on (lo_mult a, hi_mult a) with breakpoints on the a/8 lattice and sup <= amp."""
    lo, hi = lo_mult * a, hi_mult * a
    n = int(round((hi - lo) / (a / 8)))
    cuts = np.sort(rng.choice(np.arange(1, n), size=pieces - 1, replace=False))
    edges = [lo] + [lo + c * a / 8 for c in cuts] + [hi]
    out = []
    for x0, x1 in zip(edges, edges[1:]):
        if rng.random() < 0.5:
            z = amp * rng.uniform(0.2, 1.0) * np.exp(2j * np.pi * rng.random())
            out.append((x0, x1, Constant(complex(z))))
        else:
            A = 0.5 * amp * rng.uniform(0.2, 1.0) * np.exp(2j * np.pi * rng.random())
            out.append((x0, x1, Cosine(complex(A), float(rng.uniform(0.5, 4.0)), float(rng.uniform(0, 2 * np.pi)))))
    return PiecewiseFunction.from_pieces(out)


def random_potential(rng, a, lo_mult=1.0, hi_mult=3.0, amp=1.0):
    return PotentialPair(random_piecewise(rng, a, lo_mult, hi_mult, amp), random_piecewise(rng, a, lo_mult, hi_mult, amp))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def cfg08():
    return make_delay_config(0.8)


@pytest.fixture
def cfg10():
    return make_delay_config(1.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
