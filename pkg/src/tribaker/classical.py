"""Classical tribaker map with a partially reflecting opening, and its periodic orbits."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .torus import TorusPoint

OPENING = (1.0 / 3.0, 2.0 / 3.0)
MAX_PERIOD = 8


@dataclass(frozen=True)
class ReflectivityConfig:
    R: float
    opening: tuple[float, float] = OPENING

    def __post_init__(self):
        if not (0.0 <= self.R <= 1.0):
            raise ValueError(f"reflectivity must lie in [0, 1], got {self.R}")

    def in_opening(self, q: float) -> bool:
        lo, hi = self.opening
        return lo < q < hi


@dataclass(frozen=True)
class WeightedTrajectory:
    points: tuple[TorusPoint, ...]
    weight: float


def baker_step(x: TorusPoint) -> TorusPoint:
    q, p = x
    branch = min(int(math.floor(3.0 * q)), 2)
    return TorusPoint(3.0 * q - branch, (p + branch) / 3.0)


def evolve_weighted(x0: TorusPoint, steps: int, cfg: ReflectivityConfig) -> WeightedTrajectory:
    """Iterate the map, damping the weight by R on every visit to the opening.

    The visit is counted at the point of departure, so the final point never
    contributes.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    pts = [x0]
    weight = 1.0
    x = x0
    for _ in range(steps):
        if cfg.in_opening(x.q):
            weight *= cfg.R
        x = baker_step(x)
        pts.append(x)
    return WeightedTrajectory(tuple(pts), weight)


def _ternary_fraction(digits) -> Fraction:
    # value of the purely periodic expansion 0.(d1 d2 ... dT) in base 3
    T = len(digits)
    num = 0
    for d in digits:
        num = 3 * num + d
    return Fraction(num, 3**T - 1)


def _primitive(word: tuple[int, ...]) -> bool:
    T = len(word)
    return all(word != word[d:] + word[:d] for d in range(1, T) if T % d == 0)


def _canonical(word: tuple[int, ...]) -> tuple[int, ...]:
    return min(word[k:] + word[:k] for k in range(len(word)))


def orbit_of_word(word) -> tuple[TorusPoint, ...]:
    """Points of the periodic orbit coded by ``word``, starting at the word itself.

    q reads the word forward and p reads it backward, both as repeating
    ternary fractions; shifting the word gives the next point of the orbit.
    """
    word = tuple(int(a) for a in word)
    pts = []
    for k in range(len(word)):
        w = word[k:] + word[:k]
        q = _ternary_fraction(w)
        p = _ternary_fraction(w[::-1])
        pts.append(TorusPoint(float(q % 1), float(p % 1)))
    return tuple(pts)


def periodic_words(period: int) -> list[tuple[int, ...]]:
    """Primitive ternary words of length ``period``, one per cyclic class."""
    if not (1 <= period <= MAX_PERIOD):
        raise ValueError(f"period must lie in [1, {MAX_PERIOD}], got {period}")
    words = set()
    for w in itertools.product(range(3), repeat=period):
        if _primitive(w):
            words.add(_canonical(w))
    return sorted(words)


def periodic_orbits(period: int) -> list[tuple[TorusPoint, ...]]:
    """All periodic orbits of exact period ``period`` of the closed map.

    The words 0...0 and 2...2 both code the corner (0, 0) of the torus, so
    for period 1 two of the three orbits coincide as torus points.
    """
    return [orbit_of_word(w) for w in periodic_words(period)]


def classical_repeller(cfg: ReflectivityConfig, samples: int = 100_000, steps: int = 20,
                       seed: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Monte-Carlo picture of the weighted trapped set.

    Uniform initial points are iterated ``steps`` times with the damping of
    :func:`evolve_weighted`; the points after ``steps // 2`` iterations are
    returned with the weight of the whole trajectory, so both past and
    future escape suppress them. Returns ``(q, p, weight)`` arrays.
    """
    rng = np.random.default_rng(seed)
    q = rng.random(samples)
    p = rng.random(samples)
    w = np.ones(samples)
    lo, hi = cfg.opening
    mid_q = mid_p = None
    for n in range(steps):
        if n == steps // 2:
            mid_q, mid_p = q.copy(), p.copy()
        w = np.where((q > lo) & (q < hi), w * cfg.R, w)
        branch = np.minimum(np.floor(3.0 * q), 2.0)
        q, p = 3.0 * q - branch, (p + branch) / 3.0
    if mid_q is None:
        mid_q, mid_p = q, p
    return mid_q, mid_p, w


def weighted_density(q: np.ndarray, p: np.ndarray, weight: np.ndarray, n_q: int, n_p: int) -> np.ndarray:
    """Weighted 2D histogram on a cell grid, shape ``(n_p, n_q)``, integrating to one."""
    h, _, _ = np.histogram2d(p, q, bins=(n_p, n_q), range=((0, 1), (0, 1)), weights=weight)
    total = h.sum()
    return h * (n_p * n_q) / total if total > 0 else h
