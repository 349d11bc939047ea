"""Resonance projectors, the quantum repeller, and their phase-space pictures.

All fields are built from coherent-state overlaps on a :class:`PhaseGrid`.
States are normalized to unit norm before any Husimi is taken, so a
Husimi integrates to ``1/N`` over the torus.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .spectral import ResonanceSet
from .torus import CoherentBasis, PhaseGrid

# relative floor below which a scaled field's denominator marks the cell excluded
EXCLUSION_FLOOR = 1e-6


class Kind(str, enum.Enum):
    HUSIMI_R = "HusimiR"
    HUSIMI_L = "HusimiL"
    LR = "LR"
    HUSIMI_AVERAGE = "HusimiAverage"
    REPELLER = "Repeller"
    SCALED_HUSIMI = "ScaledHusimi"
    SCALED_LR = "ScaledLR"
    COHERENT = "Coherent"
    CLASSICAL = "Classical"
    UNIFORM = "Uniform"


@dataclass(frozen=True, eq=False)
class PhaseDistribution:
    grid: PhaseGrid
    values: np.ndarray = field(repr=False)
    kind: Kind
    params: dict = field(default_factory=dict)
    excluded: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values of shape {v.shape} do not fit grid {self.grid.shape}")
        ok = v if self.excluded is None else v[~self.excluded]
        if not np.all(np.isfinite(ok)) or np.any(ok < 0):
            raise ValueError("distribution values must be finite and non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def excluded_count(self) -> int:
        return 0 if self.excluded is None else int(self.excluded.sum())

    def sample_values(self) -> np.ndarray:
        """Values at the cells that are not excluded, row-major."""
        if self.excluded is None:
            return self.values.ravel()
        return self.values[~self.excluded]


@dataclass(frozen=True, eq=False)
class ResonanceProjector:
    """Non-orthogonal projector ``|R><L| / <L|R>`` of one resonance."""

    j: int
    right: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    overlap: complex = 1.0

    def __post_init__(self):
        if abs(self.overlap) <= 1e-12:
            raise ValueError(f"resonance {self.j}: left/right overlap {abs(self.overlap):.2e} too small")

    @classmethod
    def from_resonances(cls, res: ResonanceSet, j: int) -> "ResonanceProjector":
        """Projector of the ``j``-th resonance, counting from 1."""
        _check_index(res, j)
        r = res.right[:, j - 1]
        l = res.left[j - 1, :]
        return cls(j, r, l, complex(l @ r))

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``h|v>`` for a vector, or column by column for a matrix."""
        return np.tensordot(self.right, (self.left @ v) / self.overlap, axes=0)

    def matrix(self) -> np.ndarray:
        return np.outer(self.right, self.left) / self.overlap


def _check_index(res: ResonanceSet, j: int):
    if not (1 <= j <= len(res)):
        raise ValueError(f"resonance index must lie in [1, {len(res)}], got {j}")


class PhaseSpace:
    """Coherent-state machinery for one dimension and grid, with cached overlaps.

    Overlaps of resonance vectors are kept keyed by the resonance set so
    that averages and scaled fields over the same subset reuse them.
    """

    def __init__(self, N: int, grid: PhaseGrid):
        self.N = N
        self.grid = grid
        self.basis = CoherentBasis(N, grid)
        self._cache: dict[tuple[int, str, int], np.ndarray] = {}

    def overlaps(self, vectors: np.ndarray) -> np.ndarray:
        return self.basis.overlaps(vectors)

    def _resonance_overlaps(self, res: ResonanceSet, side: str, count: int) -> np.ndarray:
        # <q,p|R_i> for right, <L_i|q,p> for left, first ``count`` resonances, unnormalized vectors
        key = (id(res), side)
        have = self._cache.get(key)
        if have is None or have.shape[0] < count:
            if side == "right":
                ov = self.overlaps(res.right[:, :count])
            else:
                ov = self.overlaps(res.left[:count, :].conj().T).conj()
            self._cache[key] = ov
            self._cache[(id(res), "owner")] = res
            have = ov
        return have[:count]

    def husimi(self, state: np.ndarray, side: str = "right", kind: Kind | None = None, **params) -> PhaseDistribution:
        v = np.asarray(state, dtype=complex)
        if side == "left":
            v = v.conj()
        elif side != "right":
            raise ValueError(f"side must be 'right' or 'left', got {side!r}")
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("cannot take the Husimi of a zero vector")
        H = np.abs(self.overlaps(v / n)) ** 2
        kind = kind or (Kind.HUSIMI_R if side == "right" else Kind.HUSIMI_L)
        return PhaseDistribution(self.grid, H, kind, dict(N=self.N, **params))

    def resonance_husimis(self, res: ResonanceSet, count: int, side: str = "right") -> np.ndarray:
        ov = self._resonance_overlaps(res, side, count)
        norms = np.linalg.norm(res.right[:, :count], axis=0) if side == "right" else np.linalg.norm(res.left[:count], axis=1)
        return np.abs(ov) ** 2 / (norms**2)[:, None, None]

    def projector_fields(self, res: ResonanceSet, count: int) -> np.ndarray:
        """Complex ``<q,p|h_i|q,p>`` for the first ``count`` resonances."""
        r = self._resonance_overlaps(res, "right", count)
        l = self._resonance_overlaps(res, "left", count)
        return r * l / res.overlaps[:count, None, None]

    def lr(self, proj: ResonanceProjector, **params) -> PhaseDistribution:
        r = self.overlaps(proj.right)
        l = self.overlaps(proj.left.conj()).conj()
        h = np.abs(r * l) / abs(proj.overlap)
        return PhaseDistribution(self.grid, h, Kind.LR, dict(N=self.N, i=proj.j, **params))

    def resonance_lr(self, res: ResonanceSet, i: int) -> PhaseDistribution:
        _check_index(res, i)
        h = np.abs(self.projector_fields(res, i)[i - 1])
        return PhaseDistribution(self.grid, h, Kind.LR, dict(N=res.N, R=res.R, i=i))

    def resonance_husimi(self, res: ResonanceSet, i: int, side: str = "right") -> PhaseDistribution:
        _check_index(res, i)
        H = self.resonance_husimis(res, i, side)[i - 1]
        kind = Kind.HUSIMI_R if side == "right" else Kind.HUSIMI_L
        return PhaseDistribution(self.grid, H, kind, dict(N=res.N, R=res.R, i=i))

    def quantum_repeller(self, res: ResonanceSet, j: int, weighting: str = "equal") -> PhaseDistribution:
        """``|<q,p| (1/j) sum_i h_i |q,p>|`` with the sum taken before the modulus.

        ``weighting="eigenvalue"`` replaces the equal weights by ``|z_i|``
        normalized to sum one.
        """
        _check_index(res, j)
        fields = self.projector_fields(res, j)
        if weighting == "equal":
            w = np.full(j, 1.0 / j)
        elif weighting == "eigenvalue":
            w = np.abs(res.eigenvalues[:j])
            w = w / w.sum()
        else:
            raise ValueError(f"unknown weighting {weighting!r}")
        Q = np.abs(np.tensordot(w, fields, axes=1))
        return PhaseDistribution(self.grid, Q, Kind.REPELLER, dict(N=res.N, R=res.R, j=j, weighting=weighting))

    def husimi_average(self, res: ResonanceSet, j: int) -> PhaseDistribution:
        _check_index(res, j)
        H = self.resonance_husimis(res, j, "right").mean(axis=0)
        return PhaseDistribution(self.grid, H, Kind.HUSIMI_AVERAGE, dict(N=res.N, R=res.R, j=j))

    def scaled_husimi(self, res: ResonanceSet, i: int, j: int) -> PhaseDistribution:
        _check_subset(i, j)
        num = self.resonance_husimi(res, i)
        den = self.husimi_average(res, j)
        return scale(num, den, Kind.SCALED_HUSIMI, dict(N=res.N, R=res.R, i=i, j=j))

    def scaled_lr(self, res: ResonanceSet, i: int, j: int) -> PhaseDistribution:
        _check_subset(i, j)
        num = self.resonance_lr(res, i)
        den = self.quantum_repeller(res, j)
        return scale(num, den, Kind.SCALED_LR, dict(N=res.N, R=res.R, i=i, j=j))

    def coherent_reference(self, center=(0.25, 0.25)) -> PhaseDistribution:
        c = self.basis.state(*center)
        return self.husimi(c, kind=Kind.COHERENT, center=tuple(center))


def _check_subset(i: int, j: int):
    if not (1 <= i <= j):
        raise ValueError(f"state index {i} must lie in [1, {j}]")


def scale(num: PhaseDistribution, den: PhaseDistribution, kind: Kind, params: dict,
          floor: float = EXCLUSION_FLOOR) -> PhaseDistribution:
    """Pointwise quotient; cells where ``den < floor * max(den)`` are excluded."""
    d = den.values
    excluded = d < floor * d.max()
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(excluded, 0.0, num.values / np.where(excluded, 1.0, d))
    return PhaseDistribution(num.grid, w, kind, dict(params, floor=floor), excluded)


# module-level conveniences over a throwaway PhaseSpace

def husimi(state: np.ndarray, side: str, grid: PhaseGrid) -> PhaseDistribution:
    return PhaseSpace(len(state), grid).husimi(state, side)


def lr_representation(proj: ResonanceProjector, grid: PhaseGrid) -> PhaseDistribution:
    return PhaseSpace(len(proj.right), grid).lr(proj)


def quantum_repeller(res: ResonanceSet, j: int, grid: PhaseGrid, weighting: str = "equal") -> PhaseDistribution:
    return PhaseSpace(res.N, grid).quantum_repeller(res, j, weighting)


def husimi_average(res: ResonanceSet, j: int, grid: PhaseGrid) -> PhaseDistribution:
    return PhaseSpace(res.N, grid).husimi_average(res, j)


def scaled_husimi(res: ResonanceSet, i: int, j: int, grid: PhaseGrid) -> PhaseDistribution:
    return PhaseSpace(res.N, grid).scaled_husimi(res, i, j)


def scaled_lr(res: ResonanceSet, i: int, j: int, grid: PhaseGrid) -> PhaseDistribution:
    return PhaseSpace(res.N, grid).scaled_lr(res, i, j)
