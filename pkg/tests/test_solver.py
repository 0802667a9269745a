import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracdelay import PI, Constant, PiecewiseFunction, PotentialPair, SolverEvaluator, SolverOptions, make_delay_config
from diracdelay.errors import SolverOverflowError, ValidationError
from diracdelay.solver import cell_samples, charfn_at, charfn_table, evolve_fundamental, order_terms

from conftest import random_potential
from oracles import steps_oracle


@given(st.floats(-30, 30), st.floats(-2, 2))
@settings(max_examples=25, deadline=None)
def test_zero_potential_closed_form(re, im):
    lam = complex(re, im)
    cfg = make_delay_config(1.0)
    d1, d2 = charfn_at(PotentialPair.zero(), cfg, lam)
    assert abs(d1 - np.sin(lam * PI)) <= 1e-12 * max(1, abs(d1))
    assert abs(d2 + np.cos(lam * PI)) <= 1e-12 * max(1, abs(d2))


def test_trace_zero_potential():
    cfg = make_delay_config(0.8)
    tr = evolve_fundamental(PotentialPair.zero(), cfg, 1.7, SolverOptions(m=32, auto_refine=False))
    x = tr.x_grid
    assert x[0] == 0 and x[-1] == PI
    assert np.allclose(x[1:-1] / (0.8 / 32), np.arange(1, x.size - 1))
    assert np.allclose(tr.values[:, 0], np.sin(1.7 * x), atol=1e-12)
    assert np.allclose(tr.values[:, 1], -np.cos(1.7 * x), atol=1e-12)


@pytest.mark.parametrize("a", [0.5, 0.8, 1.0])
def test_solver_matches_independent_oracle(a):
    rng = np.random.default_rng(int(a * 100))
    cfg = make_delay_config(a)
    pp = random_potential(rng, a)
    ev = SolverEvaluator(pp, cfg)
    for lam in (0.3, -4.7, 2 + 0.5j, 11.0):
        ref = np.array(steps_oracle(pp, a, lam))
        got = ev(np.array([lam]))[:, 0]
        assert np.max(np.abs(got - ref)) <= 1e-8 * max(1, np.max(np.abs(ref)))


def test_fourth_order_convergence():
    cfg = make_delay_config(0.8)
    pp = random_potential(np.random.default_rng(3), 0.8)
    lam = np.array([6.3 + 0.2j])
    ref = SolverEvaluator(pp, cfg, SolverOptions(m=1024, auto_refine=False))(lam)
    errs = [np.max(np.abs(SolverEvaluator(pp, cfg, SolverOptions(m=m, auto_refine=False))(lam) - ref))
            for m in (16, 32, 64)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.5)


def test_auto_refine_records_grid():
    cfg = make_delay_config(0.8)
    pp = random_potential(np.random.default_rng(4), 0.8)
    ev = SolverEvaluator(pp, cfg)
    ev(np.linspace(-5, 5, 7))
    assert ev.opts.m < ev.last_m <= ev.opts.m_max
    assert ev.coarse.opts.auto_refine is False


def test_cell_samples_zero_before_delay():
    cfg = make_delay_config(0.8)
    pp = PotentialPair(PiecewiseFunction.from_pieces([(0.8, PI, Constant(1.0))]), PiecewiseFunction.zero())
    d, frac, qm, qp = cell_samples(pp, cfg.a, 16)
    assert d == pytest.approx(0.05)
    assert np.all(qm[:16] == 0) and np.all(qp[:16] == 0)
    assert np.allclose(qm[16:], -1j) and np.allclose(qp[16:], 1j)


def test_order_terms_sum_to_full_solution():
    cfg = make_delay_config(0.8)
    pp = random_potential(np.random.default_rng(5), 0.8)
    lams = np.array([0.5, -3.2, 1 + 1j])
    terms = order_terms(pp, cfg, lams, m=256)
    full = SolverEvaluator(pp, cfg, SolverOptions(m=256, auto_refine=False))(lams)
    assert terms.shape == (cfg.N + 1, 2, 3)
    assert np.allclose(terms.sum(axis=0), full, atol=1e-12)


def test_overflow_raises_with_abscissa():
    cfg = make_delay_config(0.8)
    with pytest.raises(SolverOverflowError) as info:
        charfn_at(PotentialPair.zero(), cfg, 300j)
    assert 0 <= info.value.x <= PI


def test_options_and_table_validation():
    with pytest.raises(ValidationError):
        SolverOptions(m=4)
    with pytest.raises(ValidationError):
        charfn_table(PotentialPair.zero(), make_delay_config(1.0), [])
    tab = charfn_table(PotentialPair.zero(), make_delay_config(1.0), [0.5, 1.0])
    assert np.allclose(tab.delta1, [1, 0], atol=1e-12)
