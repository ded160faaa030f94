"""Buffon-Laplace intersection probabilities for needles and spherocylinders on a rectangular grid."""

from .analytic import (
    BNP_VARIANTS,
    VARIANTS,
    check_boundary_consistency,
    p2d_array,
    prior_literature_delta,
    prior_literature_square,
    prob_2d_needle,
    prob_2d_sc,
    prob_3d_needle,
    prob_3d_sc,
    prob_bnp,
    probability,
)
from .core import (
    DomainError,
    Embedding,
    GridCell,
    Needle,
    NeedleLabError,
    NegativeLength,
    NonPositiveDimension,
    Probability,
    Regime,
    RegimeKind,
    SigmaExceedsCell,
    Spherocylinder,
    classify_regime,
    thresholds,
    validate_and_canonicalize,
)
from .landscape import (
    AspectSweepSpec,
    MinimaReport,
    StructureNotFound,
    SweepRow,
    find_lambda_thresholds,
    find_minima,
    psi_marginal_oracle,
    sweep_aspect,
    sweep_length,
)
from .montecarlo import RngSpec, SimResult, estimate
from .quadrature import NoConvergence, QuadratureSettings, integral_F, integral_G, refined_simpson

__version__ = "0.1.0"
