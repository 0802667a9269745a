"""Spectral tools for Dirac-type systems with a constant delay on (0, pi)."""

from .core import (
    PI,
    CharfnTable,
    Constant,
    Cosine,
    DelayConfig,
    Legendre,
    PiecewiseFunction,
    PotentialPair,
    Samples,
    Segment,
    SolutionTrace,
    Spectrum,
    Sum,
    Zero,
    eval_potential,
    make_delay_config,
)
from .kernels import BACKEND
from .solver import SolverEvaluator, SolverOptions, charfn_at, charfn_table, evolve_fundamental

from .series import QuadratureRule, SeriesEvaluator, series_charfn, series_term
from .charfn import AsymptoticFit, AsymptoticFitOptions, asymptotic_remainder_fit, l1_m1, lm_at, lm_terms
from .spectrum import (
    RootSearchOptions,
    ambarzumian_residual,
    count_zeros_rect,
    hadamard_delta,
    locate_eigenvalues,
    window_transforms,
)
from .isofamily import (
    HankelKernelOp,
    apply_Mh,
    build_family,
    family_charfn_closed,
    nystrom_eigs,
    tune_h_for_pair,
    verify_isospectrality,
)

__version__ = "0.1.0"
