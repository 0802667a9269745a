"""Acceptance criteria.

Each test records one ``PASS``/``FAIL`` line; the lines are printed in the
pytest terminal summary (see ``conftest.py``) and also when this file is run
directly with ``python3 tests/test_acceptance.py``.
"""

import math
import sys

import numpy as np
import pytest

from diracdelay import PI, PotentialPair, SolverEvaluator, Spectrum, make_delay_config
from diracdelay.charfn import asymptotic_remainder_fit
from diracdelay.isofamily import (
    ClosedFormEvaluator,
    HankelKernelOp,
    build_family,
    combine_h,
    constant_h,
    cosine_h,
    family_eigenpairs,
    k_kernels,
    nystrom_eigs,
    tune_h_for_pair,
    verify_isospectrality,
)
from diracdelay.series import SeriesEvaluator
from diracdelay.spectrum import ambarzumian_residual, hadamard_delta, locate_eigenvalues

from conftest import random_potential
from oracles import real_roots

# tolerances
TOL_UNPERTURBED = 1e-9
TOL_ENGINES = 1e-6
TOL_ISO_SPECTRA = 1e-7
TOL_TUNE = 1e-7
TOL_ISO_TWO = 1e-5
TOL_KERNEL = 1e-8
TOL_NYSTROM_REL = 1e-6
TOL_NYSTROM_RES = 1e-8
TOL_HADAMARD = 1e-2
SLOPE_SLACK = 0.05
TOL_AMBARZUMIAN_ZERO = 1e-9
MIN_AMBARZUMIAN_NONZERO = 1e-3

A_FAMILY = 0.8
RESULTS = {}


def record(k, ok, detail):
    RESULTS[k] = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    assert ok, RESULTS[k]


def test_criterion_1_unperturbed_spectra():
    cfg = make_delay_config(1.0)
    ev = SolverEvaluator(PotentialPair.zero(), cfg)
    err = 0.0
    complete = True
    for j in (1, 2):
        sp = locate_eigenvalues(ev, j, 20)
        complete &= sp.complete
        err = max(err, max(abs(sp.entries[n] - (n + (1 - j) / 2)) for n in sp.entries))
    record(1, complete and err <= TOL_UNPERTURBED,
           f"zero potential, a = 1, |n| <= 20, j = 1, 2: max |lambda - center| = {err:.2e} (tol {TOL_UNPERTURBED:g})")


def test_criterion_2_engine_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for a in (0.5, 0.8, 1.0):
        cfg = make_delay_config(a)
        for _ in range(5):
            pp = random_potential(rng, a, 1.0, 3.0, amp=1.0)
            ser = SeriesEvaluator(pp, cfg, K=2)
            assert ser.exact
            lams = np.sort(rng.uniform(-20, 20, 50))
            ds, dv = ser(lams), SolverEvaluator(pp, cfg)(lams)
            worst = max(worst, float(np.max(np.abs(ds - dv) / np.maximum(1.0, np.abs(dv)))))
    record(2, worst <= TOL_ENGINES,
           f"15 random potentials on (a, 3a), a in {{0.5, 0.8, 1}}, 50 real lambda: "
           f"max relative |series - solver| = {worst:.2e} (tol {TOL_ENGINES:g})")


def _match_closed_form(closed, j, spec):
    """Distance between located real eigenvalues and scan roots; residual at complex ones."""
    fn = lambda x: closed(np.array([x]))[j - 1, 0].real
    vals = spec.values()
    real = np.sort(vals[np.abs(vals.imag) < 1e-9].real)
    cplx = vals[np.abs(vals.imag) >= 1e-9]
    roots = real_roots(fn, real.min() - 0.5, real.max() + 0.5)
    roots = roots[(roots >= real.min() - 1e-6) & (roots <= real.max() + 1e-6)]
    if roots.size != real.size:
        return math.inf, 0, int(cplx.size)
    dist = float(np.max(np.abs(roots - real)))
    if cplx.size:
        dist = max(dist, float(np.max(np.abs(closed(cplx)[j - 1]))))
    return dist, int(real.size), int(cplx.size)


def test_criterion_3_iso_bispectral_one_parameter():
    cfg = make_delay_config(A_FAMILY)
    a = cfg.a
    spread = match = 0.0
    n_complex = 0
    complete = True
    for mode, c in (("p_only", 3 * PI / a), ("q_only", PI / a)):
        h = constant_h(cfg, c)
        pairs = family_eigenpairs(cfg, h, mode)
        closed = ClosedFormEvaluator(h, cfg)
        for j in (1, 2):
            specs = []
            for s in (0, 1, 5):
                alpha, beta = (s, 0) if mode == "p_only" else (0, s)
                _, pp = build_family(cfg, h, mode, alpha, beta, pairs=pairs)
                sp = locate_eigenvalues(SolverEvaluator(pp, cfg), j, 15, method="global")
                complete &= sp.complete
                specs.append(sp)
            if not complete:
                break
            spread = max(spread, max(abs(sp.entries[n] - specs[0].entries[n]) for sp in specs[1:] for n in sp.indices))
            dist, _, nc = _match_closed_form(closed, j, specs[0])
            match = max(match, dist)
            n_complex += nc
    ok = complete and spread <= TOL_ISO_SPECTRA and match <= TOL_ISO_SPECTRA
    record(3, ok, f"a = {a}, p_only c = 3pi/a and q_only c = pi/a, j = 1, 2, |n| <= 15, samples {{0, 1, 5}}: "
                  f"max spread {spread:.2e}, max distance to scan roots {match:.2e} "
                  f"({n_complex} non-real eigenvalues checked by |Delta|) (tol {TOL_ISO_SPECTRA:g})")


@pytest.fixture(scope="module")
def tuned_h():
    cfg = make_delay_config(A_FAMILY)
    h0, h1 = constant_h(cfg, 1.0), cosine_h(cfg, 1.0, 1)
    theta, scale = tune_h_for_pair(cfg, h0, h1, (-8.0, -4.0))
    return combine_h(h0, h1, theta, scale), theta, scale


def test_criterion_4_two_parameter(tuned_h):
    cfg = make_delay_config(A_FAMILY)
    h, theta, scale = tuned_h
    mus = np.linalg.eigvalsh(HankelKernelOp(cfg, h).matrix)
    tune_err = max(abs(mus.max() - 1), abs(mus.min() + 1))
    rep = verify_isospectrality(h, cfg, [(1, 1), (2, -1), (0, 0)], np.linspace(-15, 15, 61), tol=TOL_ISO_TWO,
                                mode="both")
    ok = tune_err <= TOL_TUNE and rep.passed
    record(4, ok, f"theta = {theta:.6f}, scale = {scale:.6f}: eigenvalue error {tune_err:.2e} (tol {TOL_TUNE:g}); "
                  f"max deviation over (1,1), (2,-1), (0,0) = {rep.max_deviation:.2e} (tol {TOL_ISO_TWO:g})")


def test_criterion_5_k_kernels(tuned_h):
    cfg = make_delay_config(A_FAMILY)
    a = cfg.a
    h_both = tuned_h[0]
    cases = [
        (constant_h(cfg, 3 * PI / a), "p_only", 1.0, 0.0),
        (constant_h(cfg, PI / a), "q_only", 0.0, 1.0),
        (h_both, "both", 1.0, 1.0),
        (h_both, "both", 2.0, -1.0),
    ]
    x = np.linspace(a, 3 * a, 402)[1:-1]
    low = x < 2.5 * a - 1e-12
    high = x > 2.5 * a + 1e-12
    worst = 0.0
    for h, mode, alpha, beta in cases:
        _, pp = build_family(cfg, h, mode, alpha, beta)
        K1, K2 = k_kernels(pp, cfg, x - a / 2)
        worst = max(worst, np.max(np.abs(K1)), np.max(np.abs(K2[low])),
                    np.max(np.abs(K2[high] - h.evaluate(x[high]))))
    record(5, worst <= TOL_KERNEL, f"4 family potentials, 400-point grid on (a, 3a): "
                                   f"max |K1|, |K2| on (a, 5a/2), |K2 - h| on (5a/2, 3a) = {worst:.2e} (tol {TOL_KERNEL:g})")


def test_criterion_6_nystrom_oracle():
    rel = res = 0.0
    for a in (0.8, 1.0):
        cfg = make_delay_config(a)
        for c in (1.0, PI / a, 3 * PI / a):
            pairs = nystrom_eigs(HankelKernelOp(cfg, constant_h(cfg, c), 200), 4)
            for k, pr in enumerate(pairs):
                exact = (-1) ** k * c * a / ((2 * k + 1) * PI)
                rel = max(rel, abs(pr.mu - exact) / abs(exact))
                res = max(res, pr.residual)
    ok = rel <= TOL_NYSTROM_REL and res <= TOL_NYSTROM_RES
    record(6, ok, f"constant h, M = 200, k <= 3, a in {{0.8, 1}}, c in {{1, pi/a, 3pi/a}}: "
                  f"max relative eigenvalue error {rel:.2e} (tol {TOL_NYSTROM_REL:g}), "
                  f"max residual {res:.2e} (tol {TOL_NYSTROM_RES:g})")


def test_criterion_7_hadamard():
    ev = SolverEvaluator(PotentialPair.zero(), make_delay_config(1.0))
    full = locate_eigenvalues(ev, 1, 200)
    x = np.linspace(-3, 3, 601)
    errs = {}
    for N in (100, 200):
        sp = Spectrum(1, N, {n: full.entries[n] for n in range(-N, N + 1)})
        errs[N] = float(np.max(np.abs(hadamard_delta(sp, x, tail_order=1) - np.sin(PI * x))))
    ok = full.complete and errs[200] <= TOL_HADAMARD and errs[200] < errs[100]
    record(7, ok, f"zero-potential spectrum, lambda in [-3, 3]: max error n_max = 200: {errs[200]:.2e} "
                  f"(tol {TOL_HADAMARD:g}), n_max = 100: {errs[100]:.2e}")


def test_criterion_8_asymptotic_remainder():
    rng = np.random.default_rng(88)
    fits = []
    for a in (0.5, 0.8, 1.0):
        cfg = make_delay_config(a)
        for _ in range(2):
            fits.append(asymptotic_remainder_fit(random_potential(rng, a, 1.0, 2.0), cfg))
    ok = all(f.within(SLOPE_SLACK) for f in fits)
    degenerate = sum(f.degenerate for f in fits)
    # wider support, where the remainder does not vanish
    extra = []
    for a in (0.5, 0.8, 1.0):
        f = asymptotic_remainder_fit(random_potential(rng, a, 1.0, 3.0), make_delay_config(a))
        extra.append(f.fitted_slope - f.target_slope)
    worst = max((f.fitted_slope - f.target_slope for f in fits), default=-math.inf)
    record(8, ok, f"6 potentials on (a, 2a): max slope - (pi - 2a) = {worst:.3g} (slack {SLOPE_SLACK:g}; "
                  f"{degenerate} with remainder identically zero); on (a, 3a): max = {max(extra):.3g}")


def test_criterion_9_ambarzumian():
    rng = np.random.default_rng(99)
    zero_res = 0.0
    low = math.inf
    for a in (0.8, 1.0):
        cfg = make_delay_config(a)
        ev = SolverEvaluator(PotentialPair.zero(), cfg)
        zero_res = max(zero_res, max(ambarzumian_residual(locate_eigenvalues(ev, j, 10)) for j in (1, 2)))
    for i in range(10):
        a = (0.8, 1.0)[i % 2]
        cfg = make_delay_config(a)
        hi = rng.choice([2.0, 3.0])
        pp = random_potential(rng, a, 1.0, hi, amp=float(rng.uniform(0.05, 1.0)))
        x = np.linspace(a, PI, 2001)
        p, q = pp.evaluate(x)
        assert np.max(np.abs(p)) + np.max(np.abs(q)) >= 0.1
        ev = SolverEvaluator(pp, cfg)
        r = max(ambarzumian_residual(locate_eigenvalues(ev, j, 10), allow_flagged=True) for j in (1, 2))
        low = min(low, r)
    ok = zero_res <= TOL_AMBARZUMIAN_ZERO and low >= MIN_AMBARZUMIAN_NONZERO
    record(9, ok, f"n_max = 10, a in {{0.8, 1}}: zero-potential residual {zero_res:.2e} (tol {TOL_AMBARZUMIAN_ZERO:g}); "
                  f"smallest residual over 10 nonzero potentials {low:.2e} (min {MIN_AMBARZUMIAN_NONZERO:g})")


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
