"""Monte Carlo estimation of intersection probabilities.

Every trial owns one Philox4x64-10 block: trial ``i`` uses the four 64-bit
words produced at counter ``i`` under key ``(seed, stream_index)``, mapped
to doubles in [0, 1). A 2D trial reads ``(x, y, phi)`` from the first three
words, a 3D trial reads ``(x, y, psi, phi)``. Draws therefore depend only
on ``(seed, stream_index, i)`` and any split of the trial range into chunks
or workers produces the same tally.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import Embedding, GridCell, NeedleLabError, Shape, validate_shape

RNG_ALGORITHM = "philox4x64-10/counter-per-trial"
WORDS_PER_TRIAL = 4
CHUNK = 1 << 20
THREADS_ENV = "NEEDLE_LAB_THREADS"


@dataclass(frozen=True)
class RngSpec:
    seed: int = 0
    stream_index: int = 0
    algorithm: str = RNG_ALGORITHM

    def __post_init__(self):
        if self.algorithm != RNG_ALGORITHM:
            raise NeedleLabError(f"unsupported RNG algorithm {self.algorithm!r}")
        if not 0 <= self.seed < 2**64:
            raise NeedleLabError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0 <= self.stream_index < 2**64:
            raise NeedleLabError(f"stream_index must be a 64-bit unsigned integer, got {self.stream_index}")

    @property
    def key(self) -> int:
        return self.seed | (self.stream_index << 64)


def uniform_block(rng: RngSpec, start: int, n: int) -> np.ndarray:
    """Uniform draws for trials ``start .. start + n - 1``, shape ``(n, 4)``."""
    bitgen = np.random.Philox(key=rng.key, counter=start)
    return np.random.Generator(bitgen).random((n, WORDS_PER_TRIAL))


@dataclass(frozen=True)
class Config2D:
    x_u: float
    y_u: float
    phi: float


@dataclass(frozen=True)
class Config3D:
    x_u: float
    y_u: float
    psi: float
    phi: float


def sample_config(draws, grid: GridCell, embedding: Embedding) -> Config2D | Config3D:
    """Scale one trial's uniform draws into a pose.

    ``draws`` is read in the order ``(x, y, phi)`` for 2D and
    ``(x, y, psi, phi)`` for 3D; trailing values are ignored.
    """
    if embedding is Embedding.TWO_D:
        ux, uy, uphi = draws[0], draws[1], draws[2]
        return Config2D(grid.a * ux, grid.b * uy, math.pi * uphi)
    ux, uy, upsi, uphi = draws[0], draws[1], draws[2], draws[3]
    return Config3D(grid.a * ux, grid.b * uy, math.pi / 2 * upsi, math.pi * uphi)


def sample_configs(u: np.ndarray, a: float, b: float, embedding: Embedding):
    """Vectorised :func:`sample_config`; returns ``(x, y, psi, phi)`` arrays.

    ``psi`` is ``pi/2`` for planar objects so that ``sin(psi) = 1``.
    """
    x = a * u[:, 0]
    y = b * u[:, 1]
    if embedding is Embedding.TWO_D:
        return x, y, np.full_like(x, np.pi / 2), np.pi * u[:, 2]
    return x, y, np.pi / 2 * u[:, 2], np.pi * u[:, 3]


def _effective_length(cfg, l: float) -> float:
    return l * math.sin(cfg.psi) if isinstance(cfg, Config3D) else l


def lower_tip(cfg, l: float) -> tuple[float, float]:
    le = _effective_length(cfg, l)
    return cfg.x_u - le * math.cos(cfg.phi), cfg.y_u - le * math.sin(cfg.phi)


def intersects_needle(cfg, l: float, grid: GridCell) -> bool:
    """True when the (projected) lower tip leaves the cell; the upper tip is inside by construction."""
    xl, yl = lower_tip(cfg, l)
    return xl < 0 or grid.a < xl or yl < 0 or grid.b < yl


def intersects_sc(cfg, l: float, sigma: float, grid: GridCell) -> bool:
    """True when either end disc reaches past a wall."""
    r = sigma / 2
    xl, yl = lower_tip(cfg, l)
    a, b = grid.a, grid.b
    return (
        cfg.x_u - r < 0 or a < cfg.x_u + r
        or cfg.y_u - r < 0 or b < cfg.y_u + r
        or xl - r < 0 or a < xl + r
        or yl - r < 0 or b < yl + r
    )


def hits_array(u: np.ndarray, l: float, sigma: float, a: float, b: float, embedding: Embedding) -> np.ndarray:
    """Plain numpy predicate over a block of draws; ``a = inf`` drops the vertical lines."""
    has_x = math.isfinite(a)
    x, y, psi, phi = sample_configs(u, a if has_x else 1.0, b, embedding)
    le = l * np.sin(psi)
    xl = x - le * np.cos(phi)
    yl = y - le * np.sin(phi)
    r = sigma / 2
    hit = (y - r < 0) | (b < y + r) | (yl - r < 0) | (b < yl + r)
    if has_x:
        hit |= (x - r < 0) | (a < x + r) | (xl - r < 0) | (a < xl + r)
    return hit


@njit(nogil=True, cache=True)
def _count_hits(u, l, r, a, b, three_d, has_x):
    half_pi = 0.5 * np.pi
    hits = 0
    for i in range(u.shape[0]):
        x = a * u[i, 0]
        y = b * u[i, 1]
        if three_d:
            le = l * np.sin(half_pi * u[i, 2])
            phi = np.pi * u[i, 3]
        else:
            le = l
            phi = np.pi * u[i, 2]
        yl = y - le * np.sin(phi)
        if y - r < 0 or b < y + r or yl - r < 0 or b < yl + r:
            hits += 1
            continue
        if has_x:
            xl = x - le * np.cos(phi)
            if x - r < 0 or a < x + r or xl - r < 0 or a < xl + r:
                hits += 1
    return hits


@dataclass(frozen=True)
class SimResult:
    n_all: int
    n_coll: int
    seed: int
    stream_index: int = 0
    rng_algorithm: str = RNG_ALGORITHM

    @property
    def p_hat(self) -> float:
        return self.n_coll / self.n_all

    @property
    def std_err(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1 - p) / self.n_all)

    def as_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "std_err": self.std_err,
            "n_all": self.n_all,
            "n_coll": self.n_coll,
            "seed": self.seed,
            "stream_index": self.stream_index,
            "rng_algorithm": self.rng_algorithm,
        }


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def count_range(shape: Shape, embedding: Embedding, a: float, b: float, rng: RngSpec, start: int, stop: int) -> int:
    """Number of intersecting trials among indices ``[start, stop)``."""
    l, sigma = shape.l, shape.sigma
    has_x = math.isfinite(a)
    total = 0
    for lo in range(start, stop, CHUNK):
        n = min(CHUNK, stop - lo)
        u = uniform_block(rng, lo, n)
        total += int(_count_hits(u, float(l), sigma / 2, a if has_x else 1.0, float(b),
                                 embedding is Embedding.THREE_D, has_x))
    return total


def estimate(
    shape: Shape,
    embedding: Embedding,
    grid: GridCell | float,
    n_all: int,
    rng: RngSpec = RngSpec(),
    threads: int | None = None,
) -> SimResult:
    """Drop ``n_all`` objects and count those touching a grid line.

    ``grid`` may also be a bare ``b`` (float) for the single line family.
    The trial range is split into contiguous blocks, one per worker; the
    tally does not depend on ``threads``.
    """
    if int(n_all) != n_all or n_all < 1:
        raise NeedleLabError(f"n_all must be a positive integer, got {n_all}")
    n_all = int(n_all)
    shape = validate_shape(shape)
    if isinstance(grid, GridCell):
        a, b = grid.a, grid.b
    else:
        a, b = math.inf, float(grid)
        if not (math.isfinite(b) and b > 0):
            raise NeedleLabError(f"b must be finite and > 0, got {b}")
    threads = threads or default_threads()
    threads = max(1, min(threads, math.ceil(n_all / CHUNK)))
    if threads == 1:
        n_coll = count_range(shape, embedding, a, b, rng, 0, n_all)
    else:
        edges = [n_all * k // threads for k in range(threads + 1)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(
                lambda k: count_range(shape, embedding, a, b, rng, edges[k], edges[k + 1]), range(threads)
            )
            n_coll = sum(parts)
    return SimResult(n_all, n_coll, rng.seed, rng.stream_index)
