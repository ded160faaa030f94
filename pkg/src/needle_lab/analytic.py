"""Closed-form intersection probabilities.

All four variants are written in terms of the sigma-shifted cell
``(a - sigma, b - sigma)`` and its diagonal; a needle is the ``sigma = 0``
case of the matching spherocylinder formula. The 3D forms need the two
tilt-angle integrals from :mod:`needle_lab.quadrature`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    DomainError,
    Embedding,
    GridCell,
    Needle,
    Probability,
    RegimeKind,
    Shape,
    Spherocylinder,
    regime_kind_for,
    thresholds,
    validate_shape,
)
from .quadrature import CLAMP_TOL, DEFAULT_SETTINGS, QuadratureSettings, integral_F, integral_G

PI = math.pi
PI2 = math.pi**2
HALF_PI = math.pi / 2


def _ratio(num: float, den: float) -> float:
    # arcsin/sqrt arguments; tolerate rounding right at a threshold
    r = num / den
    if r > 1.0 and r - 1.0 <= CLAMP_TOL:
        return 1.0
    return r


def _sqrt1m(r: float) -> float:
    return math.sqrt(max(0.0, 1.0 - r * r))


def _cap(sigma: float, a: float, b: float) -> float:
    # probability that the disc of diameter sigma alone touches a wall
    return sigma / a + sigma / b - sigma * sigma / (a * b)


def _check_grid(grid: GridCell) -> None:
    if not isinstance(grid, GridCell):
        raise TypeError(f"expected GridCell, got {type(grid).__name__}")
    if grid.b > grid.a:
        raise DomainError("grid must be canonical (a >= b); use validate_and_canonicalize")


def _check_length(l: float, sigma: float = 0.0) -> Shape:
    if sigma:
        return validate_shape(Spherocylinder(l, sigma))
    return validate_shape(Needle(l))


# ---------------------------------------------------------------------------
# 2D
# ---------------------------------------------------------------------------


def _p2d(l: float, sigma: float, a: float, b: float, kind: RegimeKind) -> float:
    A, B = a - sigma, b - sigma
    ab = a * b
    cap = _cap(sigma, a, b)
    if kind is RegimeKind.SHORT:
        return 2 / PI * (B / b) * (l / a) + 2 / PI * (A / a) * (l / b) - l * l / (PI * ab) + cap
    rb = _ratio(B, l)
    if kind is RegimeKind.MID_B:
        return (
            B * B / (PI * ab)
            + 2 / PI * (A / a) * (l / b) * (1 - _sqrt1m(rb))
            + 2 / PI * (A / a) * (B / b) * (HALF_PI - math.asin(rb))
            + cap
        )
    if kind is RegimeKind.MID_A:
        ra = _ratio(A, l)
        D2 = A * A + B * B
        return (
            (D2 + l * l) / (PI * ab)
            - 2 / PI * ((B / b) * (l / a) * _sqrt1m(ra) + (A / a) * (l / b) * _sqrt1m(rb))
            + 2 / PI * (A / a) * (B / b) * (PI - math.asin(ra) - math.asin(rb))
            + cap
        )
    return 1.0


def _prob_2d(l: float, sigma: float, grid: GridCell) -> Probability:
    a, b = grid.a, grid.b
    if sigma >= b:
        return Probability(1.0, RegimeKind.LONG)
    shape = Spherocylinder(l, sigma) if sigma else Needle(l)
    bounds = thresholds(shape, grid)
    kind = regime_kind_for(l, bounds)
    if l >= bounds[2]:
        return Probability(1.0, kind)
    p = _p2d(l, sigma, a, b, kind)
    return Probability(min(1.0, max(0.0, p)), kind)


def prob_2d_needle(l: float, grid: GridCell) -> Probability:
    """Probability that a planar needle of length ``l`` crosses a grid line."""
    _check_grid(grid)
    shape = _check_length(l)
    return _prob_2d(shape.l, 0.0, grid)


def prob_2d_sc(l: float, sigma: float, grid: GridCell) -> Probability:
    """Planar spherocylinder (stadium) of axis length ``l`` and width ``sigma``.

    Certain contact once ``sigma >= b`` or ``l`` exceeds the shrunk diagonal.
    """
    _check_grid(grid)
    shape = _check_length(l, sigma)
    return _prob_2d(shape.l, shape.sigma, grid)


def p2d_array(l, sigma, a, b) -> np.ndarray:
    """Vectorised 2D probability; arguments broadcast, and ``a >= b`` is assumed."""
    l, sigma, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (l, sigma, a, b)))
    A, B = a - sigma, b - sigma
    D = np.hypot(A, B)
    ab = a * b
    cap = sigma / a + sigma / b - sigma * sigma / ab
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        safe_l = np.where(l > 0, l, 1.0)
        rb = np.clip(B / safe_l, 0.0, 1.0)
        ra = np.clip(A / safe_l, 0.0, 1.0)
        short = 2 / PI * (B / b) * (l / a) + 2 / PI * (A / a) * (l / b) - l * l / (PI * ab) + cap
        midb = (
            B * B / (PI * ab)
            + 2 / PI * (A / a) * (l / b) * (1 - np.sqrt(1 - rb * rb))
            + 2 / PI * (A / a) * (B / b) * (HALF_PI - np.arcsin(rb))
            + cap
        )
        mida = (
            (A * A + B * B + l * l) / (PI * ab)
            - 2 / PI * ((B / b) * (l / a) * np.sqrt(1 - ra * ra) + (A / a) * (l / b) * np.sqrt(1 - rb * rb))
            + 2 / PI * (A / a) * (B / b) * (PI - np.arcsin(ra) - np.arcsin(rb))
            + cap
        )
    out = np.where(l <= B, short, np.where(l <= A, midb, np.where(l < D, mida, 1.0)))
    out = np.where(sigma >= b, 1.0, out)
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# 3D
# ---------------------------------------------------------------------------


def _tilt_bracket(l, s_this, s_other, this, other, lo_ratio, upper, settings):
    """Contribution from crossings of the walls spaced ``this`` apart.

    ``s_this``/``s_other`` are the sigma-shifted spacings.
    """
    t = lo_ratio
    lo = math.asin(t)
    F = integral_F(lo, upper, t, settings)
    G = integral_G(lo, upper, t, settings)
    w = (s_other / other) * (l / this)
    return 4 / PI2 * (w - w * F + (s_this / this) * (s_other / other) * G)


def _corner_term(l, s_this, this, other, ratio):
    ab = this * other
    return (
        l * l / (PI2 * ab) * math.asin(ratio)
        + 3 / PI2 * (s_this / this) * (l / other) * _sqrt1m(ratio)
        - 2 / PI2 * s_this * s_this / ab * (HALF_PI - math.asin(ratio))
    )


def _p3d(l: float, sigma: float, a: float, b: float, kind: RegimeKind, settings: QuadratureSettings) -> float:
    A, B = a - sigma, b - sigma
    ab = a * b
    cap = _cap(sigma, a, b)
    if kind is RegimeKind.SHORT:
        return 4 / PI2 * (B / b) * (l / a) + 4 / PI2 * (A / a) * (l / b) - l * l / (2 * PI * ab) + cap
    rb = _ratio(B, l)
    if kind is RegimeKind.MID_B:
        return (
            4 / PI2 * (B / b) * (l / a)
            + _tilt_bracket(l, B, A, b, a, rb, HALF_PI, settings)
            - _corner_term(l, B, b, a, rb)
            + cap
        )
    ra = _ratio(A, l)
    if kind is RegimeKind.MID_A:
        return (
            _tilt_bracket(l, A, B, a, b, ra, HALF_PI, settings)
            + _tilt_bracket(l, B, A, b, a, rb, HALF_PI, settings)
            - _corner_term(l, A, a, b, ra)
            - _corner_term(l, B, b, a, rb)
            + l * l / (2 * PI * ab)
            + cap
        )
    D = math.hypot(A, B)
    rd = _ratio(D, l)
    upper = math.asin(rd)
    return (
        _tilt_bracket(l, A, B, a, b, ra, upper, settings)
        + _tilt_bracket(l, B, A, b, a, rb, upper, settings)
        - _corner_term(l, A, a, b, ra)
        - _corner_term(l, B, b, a, rb)
        + (l * l / ab * math.asin(rd) - l * D / ab * _sqrt1m(rd) - 2 * D * D / ab * (HALF_PI - upper)) / PI2
        + 2 / PI * (A / a) * (B / b) * (HALF_PI - upper)
        + cap
    )


def _prob_3d(l: float, sigma: float, grid: GridCell, settings: QuadratureSettings) -> Probability:
    a, b = grid.a, grid.b
    if sigma >= b:
        return Probability(1.0, RegimeKind.LONG)
    shape = Spherocylinder(l, sigma) if sigma else Needle(l)
    kind = regime_kind_for(l, thresholds(shape, grid))
    p = _p3d(l, sigma, a, b, kind, settings)
    return Probability(min(1.0, max(0.0, p)), kind)


def prob_3d_needle(l: float, grid: GridCell, settings: QuadratureSettings = DEFAULT_SETTINGS) -> Probability:
    """Needle of length ``l`` with uniform tilt, judged by its projection."""
    _check_grid(grid)
    shape = _check_length(l)
    return _prob_3d(shape.l, 0.0, grid, settings)


def prob_3d_sc(
    l: float, sigma: float, grid: GridCell, settings: QuadratureSettings = DEFAULT_SETTINGS
) -> Probability:
    _check_grid(grid)
    shape = _check_length(l, sigma)
    return _prob_3d(shape.l, shape.sigma, grid, settings)


# ---------------------------------------------------------------------------
# single line family (a -> infinity)
# ---------------------------------------------------------------------------


def prob_bnp(
    shape: Shape, embedding: Embedding, b: float, settings: QuadratureSettings = DEFAULT_SETTINGS
) -> Probability:
    """Limit of the grid probability when the vertical lines recede to infinity."""
    if not (math.isfinite(b) and b > 0):
        raise DomainError(f"b must be finite and > 0, got {b}")
    shape = validate_shape(shape)
    l, sigma = shape.l, shape.sigma
    if sigma >= b:
        return Probability(1.0, RegimeKind.LONG)
    B = b - sigma
    if l <= B:
        coef = 2 / PI if embedding is Embedding.TWO_D else 4 / PI2
        return Probability(min(1.0, coef * l / b + sigma / b), RegimeKind.SHORT)
    r = _ratio(B, l)
    if embedding is Embedding.TWO_D:
        p = 2 / PI * (l / b) * (1 - _sqrt1m(r)) + 2 / PI * (B / b) * (HALF_PI - math.asin(r)) + sigma / b
    else:
        lo = math.asin(r)
        F = integral_F(lo, HALF_PI, r, settings)
        G = integral_G(lo, HALF_PI, r, settings)
        p = 4 / PI2 * (l / b) * (1 - F) + 4 / PI2 * (B / b) * G + sigma / b
    return Probability(min(1.0, max(0.0, p)), RegimeKind.MID_B)


# ---------------------------------------------------------------------------
# variant dispatch
# ---------------------------------------------------------------------------

VARIANTS = ("2d-needle", "2d-sc", "3d-needle", "3d-sc")
BNP_VARIANTS = tuple("bnp-" + v for v in VARIANTS)


def variant_parts(variant: str) -> tuple[Embedding, bool, bool]:
    """Split a variant tag into (embedding, is_spherocylinder, is_bnp)."""
    bnp = variant.startswith("bnp-")
    base = variant[4:] if bnp else variant
    if base not in VARIANTS:
        raise DomainError(f"unknown variant {variant!r}; expected one of {VARIANTS + BNP_VARIANTS}")
    emb = Embedding.TWO_D if base.startswith("2d") else Embedding.THREE_D
    return emb, base.endswith("-sc"), bnp


def probability(
    variant: str,
    l: float,
    a: float,
    b: float,
    sigma: float = 0.0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> Probability:
    """Evaluate any variant; ``a = inf`` (or a ``bnp-*`` tag) uses the single-family limit."""
    from .core import validate_and_canonicalize

    emb, is_sc, bnp = variant_parts(variant)
    if not is_sc:
        sigma = 0.0
    shape: Shape = Spherocylinder(l, sigma) if is_sc else Needle(l)
    if bnp or math.isinf(a):
        return prob_bnp(shape, emb, b, settings)
    grid, shape = validate_and_canonicalize(a, b, shape)
    if emb is Embedding.TWO_D:
        return _prob_2d(shape.l, shape.sigma, grid)
    return _prob_3d(shape.l, shape.sigma, grid, settings)


# ---------------------------------------------------------------------------
# boundary consistency
# ---------------------------------------------------------------------------

TOL_2D = 1e-12
TOL_3D = 1e-6


@dataclass
class ThresholdCheck:
    name: str
    length: float
    lower_branch: float
    upper_branch: float
    diff: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.diff <= self.tol


@dataclass
class ConsistencyReport:
    variant: str
    a: float
    b: float
    sigma: float
    checks: list[ThresholdCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


Evaluator = Callable[[float, float, float, float, RegimeKind], float]


def check_boundary_consistency(
    variant: str,
    grid: GridCell,
    sigma: float | None = None,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    evaluator: Evaluator | None = None,
) -> ConsistencyReport:
    """Evaluate the two neighbouring branches at each regime threshold.

    At ``L`` (or the shrunk diagonal) the upper 2D branch is the constant 1.
    ``evaluator`` substitutes the branch formula, which lets tests inject a
    deliberately broken one.
    """
    _check_grid(grid)
    emb, is_sc, _ = variant_parts(variant)
    sigma = float(sigma or 0.0) if is_sc else 0.0
    shape = Spherocylinder(1.0, sigma) if sigma else Needle(1.0)
    report = ConsistencyReport(variant, grid.a, grid.b, sigma)
    if sigma >= grid.b:
        return report
    if evaluator is None:
        if emb is Embedding.TWO_D:
            evaluator = _p2d
        else:
            def evaluator(l, s, a, b, kind):
                return _p3d(l, s, a, b, kind, settings)
    tol = TOL_2D if emb is Embedding.TWO_D else TOL_3D
    names = ("b-sigma", "a-sigma", "diag") if sigma else ("b", "a", "L")
    bounds = thresholds(shape, grid)
    for i, (name, l) in enumerate(zip(names, bounds)):
        if i == 1 and bounds[1] == bounds[0]:
            continue  # square cell: the middle regime is empty
        if l <= 0:
            continue
        lower = RegimeKind(i)
        upper = RegimeKind(i + 2) if (i == 0 and bounds[1] == bounds[0]) else RegimeKind(i + 1)
        lo_v = evaluator(l, sigma, grid.a, grid.b, lower)
        hi_v = evaluator(l, sigma, grid.a, grid.b, upper)
        report.checks.append(ThresholdCheck(name, l, lo_v, hi_v, abs(lo_v - hi_v), tol))
    return report


# ---------------------------------------------------------------------------
# comparison with an earlier square-cell formula
# ---------------------------------------------------------------------------


def _square_cell_core(l: float) -> float:
    r = 1.0 / l
    return math.asin(r) - math.acos(r) + 2 * math.sqrt(l * l - 1) - l * l / 2 - 1


def prior_literature_square(l: float) -> float:
    """Earlier square-cell result for ``1 < l <= sqrt(2)`` with the 1/pi coefficient."""
    return 1 - _square_cell_core(l) / PI


def prior_literature_delta(l: float) -> tuple[float, float, float]:
    """Return (ours, prior, prior - ours) on the unit square cell.

    The two agree except for the coefficient on the bracketed term, so the
    difference is ``core(l) / pi``.
    """
    if not (1.0 <= l <= math.sqrt(2.0)):
        raise DomainError(f"l must lie in [1, sqrt(2)] for the square-cell comparison, got {l}")
    ours = _prob_2d(l, 0.0, GridCell(1.0, 1.0)).value
    prior = prior_literature_square(l)
    return ours, prior, prior - ours
