"""Refined Simpson quadrature for the two tilt-angle integrals of the 3D forms.

``integral_F(lo, hi, t)`` is the integral of ``sqrt(sin(psi)**2 - t**2)`` and
``integral_G(lo, hi, t)`` the integral of ``pi/2 - arcsin(t / sin(psi))``,
both over ``psi`` in ``[lo, hi]`` with ``0 <= lo <= hi <= pi/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DomainError, NeedleLabError

# Rounding slack for radicands and arcsin arguments at the lower limit.
CLAMP_TOL = 1e-12


class NoConvergence(NeedleLabError):
    pass


@dataclass(frozen=True)
class QuadratureSettings:
    n_unit: int = 10_000
    epsilon: float = 1e-9
    max_refinements: int = 30

    def __post_init__(self):
        if int(self.n_unit) != self.n_unit or self.n_unit < 1:
            raise NeedleLabError(f"n_unit must be a positive integer, got {self.n_unit!r}")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise NeedleLabError(f"epsilon must be > 0, got {self.epsilon!r}")
        if int(self.max_refinements) != self.max_refinements or self.max_refinements < 1:
            raise NeedleLabError(f"max_refinements must be >= 1, got {self.max_refinements!r}")


DEFAULT_SETTINGS = QuadratureSettings()


def simpson_sum(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int) -> float:
    """Composite Simpson rule on ``n`` (even) equal intervals."""
    x = np.linspace(lo, hi, n + 1)
    y = f(x)
    h = (hi - lo) / n
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def refined_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """Simpson sums on ceil((hi - lo) * n_unit * 2i) intervals, i = 1, 2, ...

    Stops when two successive sums differ by less than ``settings.epsilon``
    and returns the later one. Interval counts are bumped to the next even
    number.
    """
    if hi == lo:
        return 0.0
    width = hi - lo
    prev = None
    for i in range(1, settings.max_refinements + 2):
        n = max(2, math.ceil(width * settings.n_unit * 2 * i))
        n += n % 2
        cur = simpson_sum(f, lo, hi, n)
        if prev is not None and abs(cur - prev) < settings.epsilon:
            return cur
        prev = cur
    raise NoConvergence(
        f"Simpson refinement did not reach epsilon={settings.epsilon} "
        f"after {settings.max_refinements} refinements on [{lo}, {hi}]"
    )


def _check_domain(lo: float, hi: float, t: float) -> None:
    if not all(math.isfinite(v) for v in (lo, hi, t)):
        raise DomainError("limits and t must be finite")
    if lo > hi:
        raise DomainError(f"lower limit {lo} exceeds upper limit {hi}")
    if lo < -CLAMP_TOL or hi > math.pi / 2 + CLAMP_TOL:
        raise DomainError(f"limits must lie in [0, pi/2], got [{lo}, {hi}]")
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if math.sin(lo) < t - CLAMP_TOL:
        raise DomainError(f"sin(lo)={math.sin(lo)} < t={t}: integrand not real on the interval")


def _f_integrand(t: float) -> Callable[[np.ndarray], np.ndarray]:
    t2 = t * t

    def f(psi):
        s = np.sin(psi)
        return np.sqrt(np.maximum(s * s - t2, 0.0))

    return f


def _g_integrand(t: float) -> Callable[[np.ndarray], np.ndarray]:
    def g(psi):
        s = np.sin(psi)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(s > 0, t / s, 0.0 if t == 0 else 1.0)
        return np.pi / 2 - np.arcsin(np.clip(r, -1.0, 1.0))

    return g


def _integrate(f, lo: float, hi: float, t: float, settings: QuadratureSettings) -> float:
    _check_domain(lo, hi, t)
    hi = min(hi, math.pi / 2)
    lo = min(max(lo, 0.0), hi)
    try:
        return refined_simpson(f, lo, hi, settings)
    except NoConvergence:
        # For tiny t both integrands climb within ~t of lo, a layer the
        # interval schedule cannot resolve. Retry with psi = lo + s**2,
        # which flattens the square-root onset.
        return refined_simpson(lambda s: f(lo + s * s) * 2 * s, 0.0, math.sqrt(hi - lo), settings)


def integral_F(lo: float, hi: float, t: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    return _integrate(_f_integrand(t), lo, hi, t, settings)


def integral_G(lo: float, hi: float, t: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    return _integrate(_g_integrand(t), lo, hi, t, settings)
