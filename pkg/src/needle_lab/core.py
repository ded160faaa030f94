"""Domain types, validation and regime classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union


class NeedleLabError(ValueError):
    """Base class for input errors raised by this package."""


class NonPositiveDimension(NeedleLabError):
    pass


class NegativeLength(NeedleLabError):
    pass


class SigmaExceedsCell(NeedleLabError):
    pass


class DomainError(NeedleLabError):
    pass


class Embedding(enum.Enum):
    TWO_D = "2d"
    THREE_D = "3d"


class RegimeKind(enum.IntEnum):
    SHORT = 0
    MID_B = 1
    MID_A = 2
    LONG = 3

    @property
    def label(self) -> str:
        return {0: "Short", 1: "MidB", 2: "MidA", 3: "Long"}[int(self)]


@dataclass(frozen=True)
class GridCell:
    """Unit cell of the line grid; ``a`` is the width, ``b`` the height."""

    a: float
    b: float

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise NonPositiveDimension(f"{name} must be finite and > 0, got {v!r}")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.a, self.b)

    def shrunk_diagonal(self, sigma: float) -> float:
        """Longest spherocylinder axis that still fits inside the cell."""
        return math.hypot(self.a - sigma, self.b - sigma)


@dataclass(frozen=True)
class Needle:
    l: float

    @property
    def sigma(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Spherocylinder:
    l: float
    sigma: float


Shape = Union[Needle, Spherocylinder]


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    lower: float
    upper: float


@dataclass(frozen=True)
class Probability:
    value: float
    regime: RegimeKind | None = None

    def __float__(self) -> float:
        return self.value


def _check_finite(name: str, v: float) -> None:
    if not isinstance(v, (int, float)) or math.isnan(v) or math.isinf(v):
        raise NeedleLabError(f"{name} must be a finite number, got {v!r}")


def validate_shape(shape: Shape) -> Shape:
    _check_finite("l", shape.l)
    if shape.l < 0:
        raise NegativeLength(f"l must be >= 0, got {shape.l}")
    if isinstance(shape, Spherocylinder):
        _check_finite("sigma", shape.sigma)
        if shape.sigma < 0:
            raise NonPositiveDimension(f"sigma must be > 0, got {shape.sigma}")
        if shape.sigma == 0:
            return Needle(float(shape.l))
        return Spherocylinder(float(shape.l), float(shape.sigma))
    if isinstance(shape, Needle):
        return Needle(float(shape.l))
    raise TypeError(f"unsupported shape {shape!r}")


def validate_and_canonicalize(a: float, b: float, shape: Shape) -> tuple[GridCell, Shape]:
    """Validate inputs and return a grid with ``a >= b``.

    A spherocylinder with zero diameter comes back as a :class:`Needle`.
    Swapping the axes is safe because the pose distribution is invariant
    under a quarter-turn relabelling of the cell.
    """
    for name, v in (("a", a), ("b", b)):
        _check_finite(name, v)
        if v <= 0:
            raise NonPositiveDimension(f"{name} must be > 0, got {v}")
    shape = validate_shape(shape)
    a, b = float(a), float(b)
    if b > a:
        a, b = b, a
    return GridCell(a, b), shape


def thresholds(shape: Shape, grid: GridCell) -> tuple[float, float, float]:
    """Regime boundaries (b, a, L), shifted by sigma for spherocylinders."""
    s = shape.sigma
    if s == 0:
        return grid.b, grid.a, grid.diagonal
    return grid.b - s, grid.a - s, grid.shrunk_diagonal(s)


def regime_kind_for(l: float, bounds: tuple[float, float, float]) -> RegimeKind:
    t1, t2, t3 = bounds
    if l <= t1:
        return RegimeKind.SHORT
    if l <= t2:
        return RegimeKind.MID_B
    if l <= t3:
        return RegimeKind.MID_A
    return RegimeKind.LONG


def classify_regime(shape: Shape, grid: GridCell) -> Regime:
    """Return the length regime containing ``shape.l``.

    Upper bounds are inclusive, so a length sitting exactly on a threshold
    belongs to the lower regime.
    """
    if shape.sigma >= grid.b:
        raise SigmaExceedsCell(f"sigma={shape.sigma} >= b={grid.b}: regimes undefined")
    bounds = thresholds(shape, grid)
    kind = regime_kind_for(shape.l, bounds)
    edges = (0.0,) + bounds + (math.inf,)
    return Regime(kind, edges[int(kind)], edges[int(kind) + 1])
