import numpy as np
import pytest
from scipy.integrate import quad

from diracdelay import PI, Constant, PiecewiseFunction, SolverEvaluator, make_delay_config
from diracdelay.errors import DegenerateKernelError, DomainError, FamilyConstructionError, KernelTuningError, ValidationError
from diracdelay.isofamily import (
    HankelKernelOp,
    apply_Mh,
    build_family,
    combine_h,
    constant_h,
    cosine_h,
    family_charfn_closed,
    family_eigenpairs,
    infer_mode,
    k_kernels,
    nystrom_eigs,
    rescale_h,
    tune_h_for_pair,
    verify_isospectrality,
)
from diracdelay.series import SeriesEvaluator

A = 0.8


@pytest.fixture(scope="module")
def cfg():
    return make_delay_config(A)


@pytest.fixture(scope="module")
def tuned(cfg):
    h0, h1 = constant_h(cfg, 1.0), cosine_h(cfg, 1.0, 1)
    theta, scale = tune_h_for_pair(cfg, h0, h1, (-8, -4))
    return combine_h(h0, h1, theta, scale)


def test_constant_h_eigenvalues(cfg):
    c = 2.0
    pairs = nystrom_eigs(HankelKernelOp(cfg, constant_h(cfg, c), 120), 4)
    for k, pr in enumerate(pairs):
        exact = (-1) ** k * c * A / ((2 * k + 1) * PI)
        assert abs(pr.mu - exact) <= 1e-10 * abs(exact)
        assert pr.residual < 1e-10
        x = np.linspace(1.5 * A, 2 * A, 9)
        ef = (2 / np.sqrt(A)) * np.cos((2 * k + 1) * PI * (x - 1.5 * A) / A)
        assert np.allclose(pr.shape(x), ef, atol=1e-9)


def test_midpoint_cross_check(cfg):
    gal = nystrom_eigs(HankelKernelOp(cfg, constant_h(cfg, 1.0), 64), 2)
    mid = nystrom_eigs(HankelKernelOp(cfg, constant_h(cfg, 1.0), 200, method="midpoint"), 2)
    assert np.allclose([p.mu for p in gal], [p.mu for p in mid], rtol=1e-2)


def test_apply_Mh_constant(cfg):
    c = 1.3
    op = HankelKernelOp(cfg, constant_h(cfg, c), 32)
    x = np.linspace(1.5 * A, 2 * A, 5)
    # (M_h 1)(x) = c (2a - x)
    assert np.allclose(apply_Mh(op, lambda t: np.ones_like(t), x), c * (2 * A - x), atol=1e-13)
    with pytest.raises(DomainError):
        apply_Mh(op, lambda t: t, 1.7)


def test_kernel_validation(cfg):
    bad = PiecewiseFunction.from_pieces([(1.0, 1.5, Constant(1.0))])
    with pytest.raises(ValidationError):
        HankelKernelOp(cfg, bad)
    with pytest.raises(DegenerateKernelError):
        nystrom_eigs(HankelKernelOp(cfg, constant_h(cfg, 0.0), 64))
    with pytest.raises(DegenerateKernelError):
        rescale_h(constant_h(cfg, 1.0), 0.0)


def test_rescale_and_missing_sign(cfg):
    h = constant_h(cfg, 1.0)
    eta = A / PI
    minus, plus = family_eigenpairs(cfg, rescale_h(h, eta, +1), "q_only")
    assert minus is None and abs(plus.mu - 1) < 1e-12
    with pytest.raises(FamilyConstructionError, match="-1"):
        family_eigenpairs(cfg, rescale_h(h, eta, +1), "p_only")
    with pytest.raises(FamilyConstructionError, match=r"\+1"):
        family_eigenpairs(cfg, constant_h(cfg, 3 * PI / A), "both")


def test_tuning(cfg, tuned):
    mus = np.linalg.eigvalsh(HankelKernelOp(cfg, tuned).matrix)
    assert abs(mus.max() - 1) < 1e-7 and abs(mus.min() + 1) < 1e-7
    with pytest.raises(KernelTuningError):
        tune_h_for_pair(cfg, constant_h(cfg, 1.0), cosine_h(cfg, 1.0, 1), (-1, 1))


def test_closed_form_against_quadrature(cfg, tuned):
    for lam in (0.0, 1.7, -4.2 + 0.3j):
        d1, d2 = family_charfn_closed(tuned, cfg, lam)
        f = lambda x, g: tuned.evaluate(x) * g(lam * (PI - 2 * x + A))
        pts = [b for b in tuned.breakpoints() if 2.5 * A < b < 3 * A]

        def cquad(fn):
            re = quad(lambda x: fn(x).real, 2.5 * A, 3 * A, points=pts or None, epsabs=1e-14)[0]
            im = quad(lambda x: fn(x).imag, 2.5 * A, 3 * A, points=pts or None, epsabs=1e-14)[0]
            return re + 1j * im

        assert d1 == pytest.approx(np.sin(lam * PI) - cquad(lambda x: f(x, np.sin)), abs=1e-11)
        assert d2 == pytest.approx(-np.cos(lam * PI) + cquad(lambda x: f(x, np.cos)), abs=1e-11)


def test_family_members_share_charfn(cfg, tuned):
    lams = np.linspace(-10, 10, 21)
    closed = np.array([family_charfn_closed(tuned, cfg, z) for z in lams]).T
    for alpha, beta in ((1, 1), (2, -1), (0.5j, 0)):
        _, pp = build_family(cfg, tuned, "both", alpha, beta)
        assert np.allclose(SolverEvaluator(pp, cfg)(lams), closed, atol=1e-8)
        assert np.allclose(SeriesEvaluator(pp, cfg)(lams), closed, atol=1e-10)


def test_k_kernels_vanish(cfg, tuned):
    _, pp = build_family(cfg, tuned, "both", 1.5, -0.7)
    x = np.linspace(A, 3 * A, 80)[1:-1]
    K1, K2 = k_kernels(pp, cfg, x - A / 2)
    assert np.max(np.abs(K1)) < 1e-9
    low = x < 2.5 * A - 1e-12
    assert np.max(np.abs(K2[low])) < 1e-9
    assert np.allclose(K2[~low], tuned.evaluate(x[~low]), atol=1e-9)


def test_verify_report(cfg, tuned):
    rep = verify_isospectrality(tuned, cfg, [(0, 0), (1, -1)], np.linspace(-5, 5, 11), tol=1e-6)
    assert rep.passed and rep.max_deviation < 1e-6
    doc = rep.to_json()
    assert doc["mode"] == "both" and len(doc["samples"]) == 2
    assert infer_mode([(1, 0), (2, 0)]) == "p_only"
    assert infer_mode([(0, 1)]) == "q_only"
