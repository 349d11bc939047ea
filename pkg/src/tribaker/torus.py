"""Quantized torus geometry: points, boundary phases, coherent states and grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# image cells kept on each side when periodizing the Gaussian
IMAGE_WINDOW = 4


def _wrap(x: float) -> float:
    # tiny negatives round up to exactly 1.0 under % 1.0
    r = x % 1.0
    return 0.0 if r >= 1.0 else r


@dataclass(frozen=True)
class TorusPoint:
    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise ValueError(f"non-finite torus point ({self.q}, {self.p})")
        object.__setattr__(self, "q", _wrap(float(self.q)))
        object.__setattr__(self, "p", _wrap(float(self.p)))

    def __iter__(self):
        yield self.q
        yield self.p


@dataclass(frozen=True)
class BoundaryPhases:
    chi_q: float = 0.5
    chi_p: float = 0.5

    def __post_init__(self):
        for name in ("chi_q", "chi_p"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ValueError(f"{name} must lie in [0, 1), got {v}")


ANTIPERIODIC = BoundaryPhases(0.5, 0.5)


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform cell-centered grid on the unit torus.

    Points are ordered row-major with q varying fastest, so field arrays
    have shape ``(n_p, n_q)`` and ``values[k, i]`` sits at ``(q_i, p_k)``.
    """

    n_q: int
    n_p: int

    def __post_init__(self):
        if int(self.n_q) < 1 or int(self.n_p) < 1:
            raise ValueError(f"grid needs at least one cell per side, got {self.n_q}x{self.n_p}")

    @classmethod
    def square(cls, n: int) -> "PhaseGrid":
        return cls(n, n)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_p, self.n_q)

    @property
    def size(self) -> int:
        return self.n_q * self.n_p

    @property
    def cell_area(self) -> float:
        return 1.0 / (self.n_q * self.n_p)

    @property
    def q_values(self) -> np.ndarray:
        return (np.arange(self.n_q) + 0.5) / self.n_q

    @property
    def p_values(self) -> np.ndarray:
        return (np.arange(self.n_p) + 0.5) / self.n_p

    def cell_of(self, q: float, p: float) -> tuple[int, int]:
        """Index ``(k, i)`` of the cell containing ``(q, p)``."""
        i = int(math.floor((q % 1.0) * self.n_q)) % self.n_q
        k = int(math.floor((p % 1.0) * self.n_p)) % self.n_p
        return k, i


def grid_points(grid: PhaseGrid) -> list[TorusPoint]:
    qs, ps = grid.q_values, grid.p_values
    return [TorusPoint(q, p) for p in ps for q in qs]


@dataclass(frozen=True)
class CoherentState:
    center: TorusPoint
    N: int
    phases: BoundaryPhases
    coefficients: np.ndarray = field(repr=False)


def position_grid(N: int, phases: BoundaryPhases = ANTIPERIODIC) -> np.ndarray:
    return (np.arange(N) + phases.chi_q) / N


def _image_phases(N: int, p, phases: BoundaryPhases, m: np.ndarray):
    # Bloch factor of image m; makes psi(x + 1) = exp(2 pi i chi_p) psi(x) for the kernel used
    # by the quantum map, together with the momentum boost carried by each image.
    p = np.asarray(p, dtype=float)
    return np.exp(2j * np.pi * (phases.chi_p * m - N * np.multiply.outer(p, m)))


def coherent_state(center: TorusPoint, N: int, phases: BoundaryPhases = ANTIPERIODIC) -> CoherentState:
    """Periodized Gaussian centered at ``center`` with position variance 1/(4 pi N)."""
    if N < 3:
        raise ValueError(f"coherent states need N >= 3, got {N}")
    if not isinstance(center, TorusPoint):
        center = TorusPoint(*center)
    q, p = center.q, center.p
    x = position_grid(N, phases)
    m = np.arange(-IMAGE_WINDOW, IMAGE_WINDOW + 1)
    y = x[:, None] - q - m[None, :]
    terms = np.exp(-np.pi * N * y**2) * _image_phases(N, p, phases, m)[None, :]
    c = np.exp(2j * np.pi * N * p * (x - q)) * terms.sum(axis=1)
    c /= np.linalg.norm(c)
    return CoherentState(center, N, phases, c)


class CoherentBasis:
    """Coherent states of dimension ``N`` at every cell of a grid.

    The states are never stored. Overlaps are computed per image cell as a
    Gaussian matrix in ``(q, x)`` times a plane-wave matrix in ``(x, p)``,
    which costs ``(2W+1) * n_q * N * n_p`` per vector.
    """

    def __init__(self, N: int, grid: PhaseGrid, phases: BoundaryPhases = ANTIPERIODIC):
        if N < 3:
            raise ValueError(f"coherent states need N >= 3, got {N}")
        self.N = N
        self.grid = grid
        self.phases = phases
        x = position_grid(N, phases)
        q = grid.q_values
        p = grid.p_values
        m = np.arange(-IMAGE_WINDOW, IMAGE_WINDOW + 1)
        # drop images whose Gaussian stays below 1e-20 everywhere on this grid
        y = x[None, None, :] - q[None, :, None] - m[:, None, None]
        gauss = np.exp(-np.pi * N * y**2)
        keep = gauss.max(axis=(1, 2)) > 1e-20
        self._m = m[keep]
        self._gauss = gauss[keep]  # (M, n_q, N)
        self._image = _image_phases(N, p, phases, self._m)  # (n_p, M)
        self._wave = np.exp(-2j * np.pi * N * np.outer(x, p))  # (N, n_p)
        self._qp = np.exp(2j * np.pi * N * np.outer(p, q))  # (n_p, n_q)
        # squared norms of the unnormalized states at each cell
        gram = np.einsum("aqj,bqj->abq", self._gauss, self._gauss)
        im = self._image
        norm2 = np.einsum("pa,pb,abq->pq", im.conj(), im, gram).real
        self._inv_norm = 1.0 / np.sqrt(norm2)

    def overlaps(self, vectors: np.ndarray) -> np.ndarray:
        """Return ``<q,p|v>`` on the grid for each column ``v`` of ``vectors``.

        Output shape is ``(k, n_p, n_q)`` for ``k`` input columns, or
        ``(n_p, n_q)`` for a single vector.
        """
        v = np.asarray(vectors, dtype=complex)
        single = v.ndim == 1
        if single:
            v = v[:, None]
        if v.shape[0] != self.N:
            raise ValueError(f"vector length {v.shape[0]} does not match N={self.N}")
        k = v.shape[1]
        n_p, n_q = self.grid.n_p, self.grid.n_q
        out = np.empty((k, n_p, n_q), dtype=complex)
        chunk = max(1, int(2**24 // (self.N * n_p)))
        for start in range(0, k, chunk):
            cols = v[:, start:start + chunk]
            b = (self._wave[:, :, None] * cols[:, None, :]).reshape(self.N, -1)
            acc = np.zeros((n_q, n_p, cols.shape[1]), dtype=complex)
            for a in range(len(self._m)):
                acc += (self._gauss[a] @ b).reshape(n_q, n_p, -1) * self._image[:, a].conj()[None, :, None]
            out[start:start + chunk] = acc.transpose(2, 1, 0)
        out *= self._qp[None] * self._inv_norm[None]
        return out[0] if single else out

    def state(self, q: float, p: float) -> np.ndarray:
        return coherent_state(TorusPoint(q, p), self.N, self.phases).coefficients


def quadrature(values: np.ndarray, gamma: float, cell_area: float | None = None) -> float:
    """Midpoint-rule phase-space norm ``(sum f**gamma * dA)**(1/gamma)``.

    ``values`` may be an array over a uniform grid on the unit torus, or
    any object with ``values`` and ``grid`` attributes (a distribution).
    Masked (excluded) cells, if the object carries a mask, are skipped.
    """
    mask = None
    if hasattr(values, "values") and hasattr(values, "grid"):
        if cell_area is None:
            cell_area = values.grid.cell_area
        mask = getattr(values, "excluded", None)
        values = values.values
    f = np.asarray(values, dtype=float)
    if cell_area is None:
        cell_area = 1.0 / f.size
    if not gamma > 0:
        raise ValueError(f"exponent must be positive, got {gamma}")
    if mask is not None:
        f = f[~mask]
    if not np.all(np.isfinite(f)):
        raise ValueError("field has non-finite values")
    if np.any(f < 0):
        raise ValueError("field has negative values")
    return float((np.sum(f**gamma) * cell_area) ** (1.0 / gamma))
