"""Localization measures: deviation from exponential intensity statistics and the norm ratio."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantum import Ordering, open_map
from .repeller import Kind, PhaseDistribution, PhaseSpace
from .spectral import NearDefectiveSpectrumError, decompose
from .torus import PhaseGrid, quadrature

DEFAULT_SAMPLES = 1000
DEFAULT_BINS = 50
DEFAULT_W_MAX = 6.0
REFERENCE_CENTER = (0.25, 0.25)
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class IntensityHistogram:
    bin_edges: np.ndarray
    density: np.ndarray
    sample_count: int
    excluded_count: int = 0
    overflow: int = 0

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)


@dataclass
class MeasureReport:
    N: int
    R: float
    kind: str
    i: int | None
    j: int
    sigma: float | None
    mu: float
    excluded_fraction: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def mu_over_N(self) -> float:
        return self.mu / self.N


def lattice_indices(shape: tuple[int, int], samples: int) -> np.ndarray:
    """Flat indices of ``samples`` cells picked by a golden-ratio rank-1 lattice.

    Rows advance with a fixed stride and columns with the golden ratio, so
    the picks cover the torus evenly whatever the grid dimensions; a plain
    stride through the row-major array would alias to a few columns.
    """
    n_p, n_q = shape
    total = n_p * n_q
    if samples >= total:
        return np.arange(total)
    k = np.arange(samples)
    rows = ((k + 0.5) * n_p / samples).astype(int)
    cols = (np.mod(k * GOLDEN, 1.0) * n_q).astype(int)
    idx = np.unique(rows * n_q + cols)
    return idx


def histogram_from_values(w: np.ndarray, bins: int = DEFAULT_BINS, w_max: float = DEFAULT_W_MAX,
                          excluded: int = 0) -> IntensityHistogram:
    w = np.asarray(w, dtype=float)
    edges = np.linspace(0.0, w_max, bins + 1)
    inside = w[w <= w_max]
    counts, _ = np.histogram(inside, bins=edges)
    total = counts.sum()
    density = counts / (total * np.diff(edges)) if total else np.zeros(bins)
    return IntensityHistogram(edges, density, len(w), excluded, int(len(w) - len(inside)))


def intensity_histogram(field: PhaseDistribution, samples: int = DEFAULT_SAMPLES, bins: int = DEFAULT_BINS,
                        w_max: float = DEFAULT_W_MAX) -> IntensityHistogram:
    """Density histogram of field values at ``samples`` lattice-sampled grid cells.

    Excluded cells among the picks are dropped rather than replaced.
    """
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    if bins < 10:
        raise ValueError(f"need at least 10 bins, got {bins}")
    if not w_max > 0:
        raise ValueError(f"w_max must be positive, got {w_max}")
    flat = field.values.ravel()
    idx = lattice_indices(field.values.shape, samples)
    if field.excluded is not None:
        mask = field.excluded.ravel()[idx]
        n_excl = int(mask.sum())
        if n_excl > 0.5 * len(idx):
            raise ValueError(f"{n_excl} of {len(idx)} sampled cells are excluded")
        idx = idx[~mask]
    else:
        n_excl = 0
    return histogram_from_values(flat[idx], bins, w_max, n_excl)


def exponential_histogram(bins: int = DEFAULT_BINS, w_max: float = DEFAULT_W_MAX) -> IntensityHistogram:
    """Histogram holding the exact bin masses of the unit exponential law.

    Densities are normalized over ``[0, w_max]`` like any sampled histogram.
    """
    edges = np.linspace(0.0, w_max, bins + 1)
    mass = np.exp(-edges[:-1]) - np.exp(-edges[1:])
    density = mass / (mass.sum() * np.diff(edges))
    return IntensityHistogram(edges, density, 0)


def sigma_measure(hist: IntensityHistogram) -> float:
    """L1 distance ``sum |P(w_i) - exp(-w_i)| dw`` at bin centers."""
    return float(np.sum(np.abs(hist.density - np.exp(-hist.centers)) * hist.widths))


def norm_ratio(field: PhaseDistribution, reference: PhaseDistribution) -> float:
    """``mu = ((|f|_1/|f|_2) / (|rho|_1/|rho|_2))**2`` with grid-quadrature norms.

    ``reference`` is the Husimi of a coherent state on the same grid.
    """
    n1, n2 = quadrature(field, 1), quadrature(field, 2)
    if n2 == 0:
        raise ValueError("norm ratio of an identically zero field")
    r1, r2 = quadrature(reference, 1), quadrature(reference, 2)
    return float(((n1 / n2) / (r1 / r2)) ** 2)


def uniform_field(grid, N: int) -> PhaseDistribution:
    return PhaseDistribution(grid, np.full(grid.shape, 1.0 / N), Kind.UNIFORM, dict(N=N))


SCALED_KINDS = (Kind.SCALED_HUSIMI, Kind.SCALED_LR)
AVERAGE_KINDS = (Kind.HUSIMI_AVERAGE, Kind.REPELLER)


class CellFailure(RuntimeError):
    """A sweep cell that could not be evaluated; recorded, never fatal to the sweep."""

    def __init__(self, N, R, reason: str, diagnostic: bool = False):
        self.N, self.R, self.reason, self.diagnostic = N, R, reason, diagnostic
        super().__init__(f"N={N} R={R}: {reason}")

    def __reduce__(self):
        # rebuilt in the parent when a worker process returns it
        return (CellFailure, (self.N, self.R, self.reason, self.diagnostic))


def measure_cell(N: int, R: float, states, j: int, grid: PhaseGrid, kinds=SCALED_KINDS,
                 ordering: Ordering | str = Ordering.UP, samples: int = DEFAULT_SAMPLES,
                 bins: int = DEFAULT_BINS, w_max: float = DEFAULT_W_MAX):
    """Sigma and mu for every scaled state of one (N, R) cell, plus mu of the two averages.

    Returns ``(reports, averages)``; raises :class:`CellFailure` when the
    spectrum cannot supply ``j`` paired resonances.
    """
    try:
        res = decompose(open_map(N, R, ordering))
    except NearDefectiveSpectrumError as exc:
        raise CellFailure(N, R, str(exc), diagnostic=True) from exc
    if j > len(res):
        raise CellFailure(N, R, f"subset {j} exceeds the {len(res)} resolved resonances")
    ps = PhaseSpace(N, grid)
    ref = ps.coherent_reference(REFERENCE_CENTER)
    cell = dict(grid=f"{grid.n_q}x{grid.n_p}", samples=samples, bins=bins, w_max=w_max, ordering=Ordering(ordering).value)
    reports = []
    for kind in kinds:
        kind = Kind(kind)
        for i in states:
            if kind is Kind.SCALED_HUSIMI:
                f = ps.scaled_husimi(res, i, j)
            elif kind is Kind.SCALED_LR:
                f = ps.scaled_lr(res, i, j)
            else:
                raise ValueError(f"{kind.value} is not a scaled representation")
            hist = intensity_histogram(f, samples, bins, w_max)
            reports.append(MeasureReport(
                N, float(R), kind.value, int(i), int(j), sigma_measure(hist), norm_ratio(f, ref),
                f.excluded_count / grid.size, dict(cell, excluded_samples=hist.excluded_count),
            ))
    averages = []
    for kind, f in ((Kind.HUSIMI_AVERAGE, ps.husimi_average(res, j)), (Kind.REPELLER, ps.quantum_repeller(res, j))):
        averages.append(MeasureReport(N, float(R), kind.value, None, int(j), None, norm_ratio(f, ref), 0.0, dict(cell)))
    return reports, averages


def failed_cell_reports(N, R, states, j, kinds) -> tuple[list, list]:
    nan = float("nan")
    reports = [MeasureReport(N, float(R), Kind(k).value, int(i), int(j), nan, nan, nan) for k in kinds for i in states]
    averages = [MeasureReport(N, float(R), k.value, None, int(j), None, nan, nan) for k in AVERAGE_KINDS]
    return reports, averages


def _cell_task(args):
    N, R, kw = args
    try:
        return measure_cell(N, R, **kw), None
    except CellFailure as exc:
        return None, exc


def measure_sweep(N_list, R_list, states, j: int, grid: PhaseGrid, kinds=SCALED_KINDS,
                  ordering: Ordering | str = Ordering.UP, samples: int = DEFAULT_SAMPLES,
                  bins: int = DEFAULT_BINS, w_max: float = DEFAULT_W_MAX, workers: int = 1):
    """Evaluate every (N, R) cell; output order follows ``N_list`` then ``R_list``.

    Returns ``(reports, averages, failures)``. A failed cell contributes NaN
    rows so the table shape never depends on numerical outcomes.
    """
    kw = dict(states=tuple(states), j=j, grid=grid, kinds=tuple(kinds), ordering=ordering,
              samples=samples, bins=bins, w_max=w_max)
    tasks = [(N, R, kw) for N in N_list for R in R_list]
    if workers > 1 and len(tasks) > 1:
        import multiprocessing
        from concurrent.futures import ProcessPoolExecutor

        # forking after BLAS has started threads can kill the children; spawn is safe
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            results = list(pool.map(_cell_task, tasks))
    else:
        results = [_cell_task(t) for t in tasks]
    reports, averages, failures = [], [], []
    for (N, R, _), (ok, err) in zip(tasks, results):
        if err is not None:
            failures.append(err)
            ok = failed_cell_reports(N, R, states, j, kinds)
        reports.extend(ok[0])
        averages.extend(ok[1])
    return reports, averages, failures
