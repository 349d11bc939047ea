"""Quantum tribaker propagator on the torus and its partial opening."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .torus import ANTIPERIODIC, BoundaryPhases


class Ordering(str, enum.Enum):
    """Where the opening projector sits relative to the closed propagator."""

    UP = "UP"  # U @ P: reflect, then propagate
    PU = "PU"
    SYM = "sym"  # sqrt(P) @ U @ sqrt(P)


@dataclass(frozen=True, eq=False)
class QuantumMap:
    N: int
    phases: BoundaryPhases
    R: float
    matrix: np.ndarray = field(repr=False)
    ordering: Ordering = Ordering.UP

    def __post_init__(self):
        if self.N % 3:
            raise ValueError(f"N must be divisible by 3, got {self.N}")
        self.matrix.setflags(write=False)

    @property
    def closed(self) -> bool:
        return self.R == 1.0


def _check_dimension(N: int):
    if int(N) != N or N < 3 or N % 3:
        raise ValueError(f"N must be a positive multiple of 3, got {N}")


def _check_reflectivity(R: float):
    if not (0.0 <= R <= 1.0):
        raise ValueError(f"reflectivity must lie in [0, 1], got {R}")


def fourier_kernel(N: int, phases: BoundaryPhases = ANTIPERIODIC) -> np.ndarray:
    """``G[k, j] = <p_k|q_j> = exp(-2 pi i (j + chi_q)(k + chi_p) / N) / sqrt(N)``."""
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    j = np.arange(N) + phases.chi_q
    k = np.arange(N) + phases.chi_p
    return np.exp(-2j * np.pi * np.outer(k, j) / N) / np.sqrt(N)


def closed_map(N: int) -> QuantumMap:
    _check_dimension(N)
    G = fourier_kernel(N, ANTIPERIODIC)
    g = fourier_kernel(N // 3, ANTIPERIODIC)
    # G is unitary, so its inverse is the adjoint
    U = G.conj().T @ scipy.linalg.block_diag(g, g, g)
    return QuantumMap(N, ANTIPERIODIC, 1.0, U)


def opening_projector(N: int, R: float) -> np.ndarray:
    _check_dimension(N)
    _check_reflectivity(R)
    d = np.ones(N)
    d[N // 3: 2 * N // 3] = np.sqrt(R)
    return np.diag(d)


def open_map(N: int, R: float, ordering: Ordering | str = Ordering.UP) -> QuantumMap:
    ordering = Ordering(ordering)
    _check_reflectivity(R)
    U = closed_map(N).matrix
    if R == 1.0:
        return QuantumMap(N, ANTIPERIODIC, 1.0, U.copy(), ordering)
    P = np.diag(opening_projector(N, R))
    if ordering is Ordering.UP:
        M = U * P[None, :]
    elif ordering is Ordering.PU:
        M = P[:, None] * U
    else:
        s = np.sqrt(P)
        M = s[:, None] * U * s[None, :]
    return QuantumMap(N, ANTIPERIODIC, float(R), M, ordering)
