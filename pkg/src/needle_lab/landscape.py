"""Parameter sweeps and the probability landscape over the cell aspect ratio.

Aspect sweeps hold ``lam = l**2 / (a*b)`` and ``sigma_l = sigma / l`` fixed
and vary ``t = a / b``; since the probabilities depend only on length
ratios, every point is evaluated at ``l = 1``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .analytic import p2d_array, probability, variant_parts
from .core import (
    Embedding,
    GridCell,
    NeedleLabError,
    RegimeKind,
    Spherocylinder,
    Needle,
    regime_kind_for,
    thresholds,
)
from .quadrature import DEFAULT_SETTINGS, QuadratureSettings, refined_simpson

# Golden-section stopping width in t, and the probe step used to decide
# whether the left end of the t range is a minimum.
T_TOL = 1e-6
DEFAULT_A_OVER_B = (1.0, 1.5, 2.0, 4.0, math.inf)


class StructureNotFound(NeedleLabError):
    pass


@dataclass(frozen=True)
class AspectSweepSpec:
    lam: float
    sigma_l: float = 0.0
    t_min: float = 1.0
    t_max: float = 8.0
    t_steps: int = 2000
    variant: str = "2d-needle"

    def __post_init__(self):
        emb, is_sc, bnp = variant_parts(self.variant)
        if bnp:
            raise NeedleLabError("aspect sweeps need a finite cell; bnp variants are not allowed")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise NeedleLabError(f"lambda must be > 0, got {self.lam}")
        if self.sigma_l < 0 or (self.sigma_l > 0 and not is_sc):
            raise NeedleLabError("sigma_l must be >= 0 and only set for spherocylinder variants")
        if not (1.0 <= self.t_min < self.t_max):
            raise NeedleLabError(f"need 1 <= t_min < t_max, got [{self.t_min}, {self.t_max}]")
        if self.t_steps < 3:
            raise NeedleLabError("t_steps must be >= 3")

    def params(self, t):
        """``(l, sigma, a, b)`` at aspect ratio ``t`` with ``l = 1``."""
        t = np.asarray(t, dtype=float)
        a = np.sqrt(t / self.lam)
        b = 1.0 / np.sqrt(self.lam * t)
        return 1.0, self.sigma_l, a, b

    def grid(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.t_steps)


@dataclass(frozen=True)
class SweepRow:
    abscissa: float
    p: float
    regime: str
    series: float | None = None
    p_mc: float | None = None
    std_err: float | None = None


@dataclass
class MinimaReport:
    minima: list[tuple[float, float]] = field(default_factory=list)
    global_min: int | None = None

    @property
    def count(self) -> int:
        return len(self.minima)

    @property
    def global_t(self) -> float:
        return self.minima[self.global_min][0]


def _regime_label(variant: str, l: float, sigma: float, a: float, b: float) -> str:
    if math.isinf(a):
        return RegimeKind.SHORT.label if l <= b - sigma else RegimeKind.MID_B.label
    if sigma >= b:
        return RegimeKind.LONG.label
    shape = Spherocylinder(l, sigma) if sigma else Needle(l)
    return regime_kind_for(l, thresholds(shape, GridCell(a, b))).label


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sweep_length(
    variant: str,
    l_over_b: Sequence[float],
    a_over_b: Sequence[float] = DEFAULT_A_OVER_B,
    sigma_over_b: float = 0.0,
    b: float = 3.0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    threads: int = 1,
) -> list[SweepRow]:
    """Probability against ``l / b`` for each requested ``a / b`` (``inf`` allowed).

    Rows come back grouped by ``a / b`` in the order given, each group
    sorted by ``l / b``.
    """
    _, is_sc, _ = variant_parts(variant)
    sigma = sigma_over_b * b if is_sc else 0.0
    xs = sorted(float(x) for x in l_over_b)
    jobs = [(r, x) for r in a_over_b for x in xs]

    def one(job):
        r, x = job
        a = math.inf if math.isinf(r) else r * b
        l = x * b
        p = probability(variant, l, a, b, sigma, settings).value
        return SweepRow(x, p, _regime_label(variant, l, sigma, a, b), series=r)

    return _map(one, jobs, threads)


def evaluate_aspect(spec: AspectSweepSpec, ts, settings: QuadratureSettings = DEFAULT_SETTINGS,
                    threads: int = 1) -> np.ndarray:
    emb, is_sc, _ = variant_parts(spec.variant)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    l, sigma, a, b = spec.params(ts)
    if emb is Embedding.TWO_D:
        return p2d_array(l, sigma, a, b)

    def one(i):
        return probability(spec.variant, l, float(a[i]), float(b[i]), sigma, settings).value

    return np.array(_map(one, range(len(ts)), threads))


def sweep_aspect(spec: AspectSweepSpec, settings: QuadratureSettings = DEFAULT_SETTINGS,
                 threads: int = 1) -> list[SweepRow]:
    ts = spec.grid()
    ps = evaluate_aspect(spec, ts, settings, threads)
    l, sigma, a, b = spec.params(ts)
    return [
        SweepRow(float(t), float(p), _regime_label(spec.variant, l, sigma, float(ai), float(bi)), series=spec.lam)
        for t, p, ai, bi in zip(ts, ps, a, b)
    ]


def _golden(f, lo: float, mid: float, hi: float) -> tuple[float, float]:
    try:
        res = minimize_scalar(f, bracket=(lo, mid, hi), method="golden",
                              options={"xtol": T_TOL / (2 * max(abs(mid), 1.0))})
    except ValueError:
        # flat right neighbour: not a strict bracket
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": T_TOL})
    if not lo <= res.x <= hi:
        return mid, f(mid)
    return float(res.x), float(res.fun)


def find_minima(spec: AspectSweepSpec, settings: QuadratureSettings = DEFAULT_SETTINGS,
                threads: int = 1) -> MinimaReport:
    """Local minima of P(t) on ``[t_min, t_max]``, refined to about 1e-6 in t.

    Interior minima are bracketed on the dense grid and then polished by
    golden-section search. The left end counts as a minimum when P rises
    immediately to its right (probed 1e-6 away for the exact 2D forms, one
    grid step away for the quadrature-backed 3D forms); the right end is
    never reported.
    """
    emb, _, _ = variant_parts(spec.variant)

    def f(t):
        return float(evaluate_aspect(spec, [t], settings)[0])

    ts = spec.grid()
    ps = evaluate_aspect(spec, ts, settings, threads)
    found: list[tuple[float, float]] = []
    p0 = ps[0]
    probe = ps[1] if emb is Embedding.THREE_D else f(spec.t_min + T_TOL)
    if probe > p0:
        found.append((float(ts[0]), float(p0)))
    for i in range(1, len(ts) - 1):
        if ps[i] < ps[i - 1] and ps[i] <= ps[i + 1]:
            t_star, p_star = _golden(f, ts[i - 1], ts[i], ts[i + 1])
            if found and abs(found[-1][0] - t_star) <= 2 * T_TOL:
                continue
            found.append((t_star, p_star))
    report = MinimaReport(found)
    if found:
        report.global_min = int(np.argmin([p for _, p in found]))
    return report


# structural predicates for the 2D needle scenario
def _has_interior_min(rep: MinimaReport, t_min: float) -> bool:
    return any(t > t_min + 10 * T_TOL for t, _ in rep.minima)


def _global_moved(rep: MinimaReport, t_min: float) -> bool:
    return rep.global_min is not None and rep.global_t > t_min + 10 * T_TOL


def _edge_min_gone(rep: MinimaReport, t_min: float) -> bool:
    return not any(t <= t_min + 10 * T_TOL for t, _ in rep.minima)


@dataclass(frozen=True)
class LambdaThresholds:
    lambda1: float
    lambda2: float
    lambda3: float
    tol: float
    search_interval: tuple[float, float]


def find_lambda_thresholds(
    variant: str = "2d-needle",
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    lam_lo: float = 0.5,
    lam_hi: float = 1.2,
    tol: float = 1e-4,
    t_max: float = 8.0,
    t_steps: int = 2000,
) -> LambdaThresholds:
    """Bisect on lambda for the three structural changes of the minima of P(t).

    In order: a second minimum appears at some t > 1; the global minimum
    leaves t = 1; the minimum at t = 1 disappears.
    """
    if variant != "2d-needle":
        raise NeedleLabError(f"thresholds are only defined for 2d-needle, got {variant!r}")

    def report(lam):
        return find_minima(AspectSweepSpec(lam, 0.0, 1.0, t_max, t_steps, variant), settings)

    def bisect(pred, name):
        lo, hi = lam_lo, lam_hi
        if pred(report(lo), 1.0) or not pred(report(hi), 1.0):
            raise StructureNotFound(f"{name} does not change on lambda in [{lam_lo}, {lam_hi}]")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if pred(report(mid), 1.0):
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    return LambdaThresholds(
        bisect(_has_interior_min, "second minimum"),
        bisect(_global_moved, "global minimum location"),
        bisect(_edge_min_gone, "minimum at t=1"),
        tol,
        (lam_lo, lam_hi),
    )


def psi_marginal_oracle(l: float, sigma: float | None, grid: GridCell,
                        settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """3D probability as the tilt average of the 2D probability at length ``l sin(psi)``.

    The psi range is split where ``l sin(psi)`` crosses a regime threshold
    so that each Simpson panel sees a smooth integrand.
    """
    sigma = float(sigma or 0.0)
    if l < 0:
        raise NeedleLabError(f"l must be >= 0, got {l}")
    if l == 0 or sigma >= grid.b:
        return float(p2d_array(0.0, sigma, grid.a, grid.b)) if l == 0 else 1.0
    shape = Spherocylinder(l, sigma) if sigma else Needle(l)
    cuts = sorted({math.asin(th / l) for th in thresholds(shape, grid) if 0 < th < l})
    edges = [0.0] + cuts + [math.pi / 2]

    def integrand(psi):
        return p2d_array(l * np.sin(psi), sigma, grid.a, grid.b)

    total = sum(refined_simpson(integrand, lo, hi, settings) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo)
    return 2 / math.pi * total
