"""Biorthogonal eigendecomposition of (partially) open quantum maps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .quantum import Ordering, QuantumMap, closed_map

# condition number of the right-eigenvector matrix beyond which the spectrum is rejected
COND_LIMIT = 1e10
# moduli are compared on this grid so that conjugate pairs tie exactly
MODULUS_DECIMALS = 10
# window searched for the split between resolved and unresolved resonances at R = 0
SPLIT_WINDOW = (1e-4, 1e-2)


class NearDefectiveSpectrumError(ArithmeticError):
    """The eigenvector matrix is too ill-conditioned for a biorthogonal pairing."""

    def __init__(self, cond: float, cluster: np.ndarray):
        self.cond = cond
        self.cluster = cluster
        shown = ", ".join(f"{z:.6g}" for z in cluster[:8])
        super().__init__(
            f"eigenvector condition number {cond:.3g} exceeds {COND_LIMIT:.0e}; "
            f"suspect cluster of {len(cluster)} eigenvalues: {shown}"
        )


@dataclass(frozen=True, eq=False)
class ResonanceSet:
    """Resonances sorted by decreasing modulus.

    ``right[:, j]`` is the right eigenvector of ``eigenvalues[j]`` and
    ``left[j, :]`` the matching left row vector, with ``left @ right = I``
    and equal norms within each pair.
    """

    eigenvalues: np.ndarray
    right: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)
    N: int = 0
    R: float = 1.0
    null_dimension: int = 0

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def overlaps(self) -> np.ndarray:
        """``<L_j|R_j>`` for every pair."""
        return np.einsum("ji,ij->j", self.left, self.right)


def resonance_order(z: np.ndarray) -> np.ndarray:
    """Permutation sorting by |z| descending, then Re z descending, then Im z ascending."""
    mod = np.round(np.abs(z), MODULUS_DECIMALS)
    re = np.round(z.real, MODULUS_DECIMALS)
    return np.lexsort((z.imag, -re, -mod))


def _balance_norms(right: np.ndarray, left: np.ndarray):
    # rescale R -> a R, L -> L / a so that |R| = |L| and <L|R> is unchanged
    nr = np.linalg.norm(right, axis=0)
    nl = np.linalg.norm(left, axis=1)
    a = np.sqrt(nl / nr)
    return right * a[None, :], left / a[:, None]


def _eig_biorthogonal(M: np.ndarray):
    z, V = scipy.linalg.eig(M)
    # unit columns so the condition number reflects the spectrum, not the scaling
    V = V / np.linalg.norm(V, axis=0)[None, :]
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        # the least-singular combination of eigenvectors names the offending cluster
        weak = np.abs(np.linalg.svd(V)[2][-1])
        suspects = z[weak > 0.1 * weak.max()]
        raise NearDefectiveSpectrumError(cond, suspects)
    W = np.linalg.inv(V)
    return z, V, W


def _split_point(moduli: np.ndarray) -> float:
    # threshold at the widest multiplicative gap among sorted moduli inside the window
    lo, hi = SPLIT_WINDOW
    m = np.sort(moduli)[::-1]
    best, tau = 0.0, lo
    for a, b in zip(m[:-1], m[1:]):
        if lo <= b and a <= hi:
            ratio = a / max(b, 1e-300)
            if ratio > best:
                best, tau = ratio, np.sqrt(a * b)
    return tau


def _leading_biorthogonal(C: np.ndarray):
    """Resonances of ``C`` above a spectral gap, with exactly paired left vectors.

    A reordered Schur form moves the resolved eigenvalues to the leading
    block; a Sylvester solve decouples it from the near-zero remainder, so
    the pairing never touches the ill-conditioned small eigenvalues.
    """
    tau = _split_point(np.abs(scipy.linalg.eigvals(C)))
    T, Z, k = scipy.linalg.schur(C, output="complex", sort=lambda z: abs(z) > tau)
    T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
    X = scipy.linalg.solve_sylvester(T11, -T22, -T12)
    z, Y = scipy.linalg.eig(T11)
    Y = Y / np.linalg.norm(Y, axis=0)[None, :]
    cond = np.linalg.cond(Y)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NearDefectiveSpectrumError(cond, z)
    Yinv = np.linalg.inv(Y)
    V = Z[:, :k] @ Y
    W = Yinv @ np.hstack([np.eye(k), -X]) @ Z.conj().T
    return z, V, W


def _unitary_decomposition(M: np.ndarray):
    # complex Schur form of a normal matrix is diagonal with orthonormal Schur vectors,
    # which orthonormalizes every degenerate cluster at once
    T, Z = scipy.linalg.schur(M, output="complex")
    return np.diag(T).copy(), Z, Z.conj().T


def decompose(qmap: QuantumMap) -> ResonanceSet:
    """Full resonance spectrum with biorthonormal left/right pairs.

    For R = 0 the opening annihilates the middle third of positions, leaving
    an exactly zero eigenvalue of multiplicity N/3. That block is split off
    and the nonzero resonances are taken from the map compressed to the
    surviving positions, then lifted back. The compressed map still has a
    cloud of resonances decaying towards zero whose eigenvectors are nearly
    dependent; those below the split are counted in ``null_dimension``
    together with the exact kernel and are not paired.
    """
    M = np.asarray(qmap.matrix)
    N = qmap.N
    null_dim = 0
    if qmap.R == 1.0:
        z, V, W = _unitary_decomposition(M)
    elif qmap.R == 0.0:
        keep = np.r_[0: N // 3, 2 * N // 3: N]
        U = closed_map(N).matrix
        C = U[np.ix_(keep, keep)]
        z, v, w = _leading_biorthogonal(C)
        vext = np.zeros((N, len(z)), complex)
        wext = np.zeros((len(z), N), complex)
        vext[keep] = v
        wext[:, keep] = w
        if qmap.ordering is Ordering.UP:
            # right vectors are U v / z so that <L|R> = w v = 1
            V, W = (U @ vext) / z[None, :], wext
        elif qmap.ordering is Ordering.PU:
            V, W = vext, (wext @ U) / z[:, None]
        else:
            V, W = vext, wext
        null_dim = N - len(z)
    else:
        z, V, W = _eig_biorthogonal(M)
    V, W = _balance_norms(V, W)
    order = resonance_order(z)
    return ResonanceSet(
        eigenvalues=z[order],
        right=V[:, order],
        left=W[order, :],
        order=order,
        N=N,
        R=qmap.R,
        null_dimension=null_dim,
    )


def longest_lived(res: ResonanceSet, j: int) -> ResonanceSet:
    if not (1 <= j <= len(res)):
        raise ValueError(f"subset size must lie in [1, {len(res)}], got {j}")
    return ResonanceSet(
        eigenvalues=res.eigenvalues[:j],
        right=res.right[:, :j],
        left=res.left[:j, :],
        order=res.order[:j],
        N=res.N,
        R=res.R,
        null_dimension=res.null_dimension,
    )


def reconstruct(res: ResonanceSet) -> np.ndarray:
    """``sum_j z_j |R_j><L_j| / <L_j|R_j>``."""
    return (res.right * (res.eigenvalues / res.overlaps)[None, :]) @ res.left
