import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tribaker.measures import (
    DEFAULT_BINS,
    DEFAULT_W_MAX,
    MeasureReport,
    exponential_histogram,
    histogram_from_values,
    intensity_histogram,
    lattice_indices,
    measure_cell,
    measure_sweep,
    norm_ratio,
    sigma_measure,
    uniform_field,
)
from tribaker.repeller import Kind, PhaseDistribution, PhaseSpace
from tribaker.torus import PhaseGrid

from conftest import phase_space


def field(values, kind=Kind.SCALED_LR, excluded=None):
    values = np.asarray(values, dtype=float)
    return PhaseDistribution(PhaseGrid(values.shape[1], values.shape[0]), values, kind, {}, excluded)


def sigma_by_hand(density, edges):
    total = 0.0
    for k in range(len(density)):
        a, b = edges[k], edges[k + 1]
        total += abs(density[k] - math.exp(-(a + b) / 2)) * (b - a)
    return total


def test_lattice_covers_grid_evenly():
    idx = lattice_indices((500, 500), 1000)
    rows, cols = np.divmod(idx, 500)
    assert len(idx) == 1000
    assert len(np.unique(cols // 50)) == 10 and len(np.unique(rows // 50)) == 10
    assert np.array_equal(lattice_indices((4, 5), 1000), np.arange(20))


def test_constant_field_single_bin():
    h = intensity_histogram(field(np.ones((40, 40))))
    occupied = np.flatnonzero(h.density)
    assert len(occupied) == 1
    assert h.bin_edges[occupied[0]] <= 1.0 < h.bin_edges[occupied[0] + 1]
    s = sigma_measure(h)
    assert s == pytest.approx(sigma_by_hand(h.density, h.bin_edges), abs=1e-12)
    assert s > 0.5


def test_zero_field_point_mass_at_zero():
    h = intensity_histogram(field(np.zeros((40, 40))))
    assert h.density[0] > 0 and np.all(h.density[1:] == 0)
    assert sigma_measure(h) > 0.5


def test_histogram_density_integrates_to_one(rng):
    h = intensity_histogram(field(rng.exponential(size=(60, 60))))
    assert np.sum(h.density * h.widths) == pytest.approx(1.0, abs=1e-9)


def test_exponential_sampling_oracle(rng):
    w = -np.log(rng.random((250, 400)))
    h = intensity_histogram(field(w), samples=100_000)
    sel = h.centers <= 4
    assert np.abs(h.density[sel] - np.exp(-h.centers[sel])).max() < 0.05


def test_linear_ramp_is_uniform():
    q = (np.arange(200) + 0.5) / 200
    h = intensity_histogram(field(np.tile(2 * q, (200, 1))))
    sel = h.bin_edges[1:] <= 2
    assert np.allclose(h.density[sel], 0.5, rtol=0.1)
    assert np.all(h.density[h.bin_edges[:-1] >= 2] == 0)


def test_overflow_is_counted_not_binned():
    h = histogram_from_values(np.array([0.5, 1.0, 7.0, 9.0]), bins=10, w_max=6.0)
    assert h.overflow == 2 and h.sample_count == 4
    assert np.sum(h.density * h.widths) == pytest.approx(1.0)


def test_histogram_argument_checks():
    f = field(np.ones((20, 20)))
    with pytest.raises(ValueError):
        intensity_histogram(f, samples=99)
    with pytest.raises(ValueError):
        intensity_histogram(f, bins=9)
    with pytest.raises(ValueError):
        intensity_histogram(f, w_max=0)


def test_mostly_excluded_field_rejected():
    mask = np.zeros((20, 20), bool)
    mask[:, :15] = True
    with pytest.raises(ValueError):
        intensity_histogram(field(np.ones((20, 20)), excluded=mask))


def test_excluded_cells_are_skipped():
    v = np.ones((40, 40))
    v[:, :10] = 5.0
    mask = np.zeros_like(v, bool)
    mask[:, :10] = True
    h = intensity_histogram(field(v, excluded=mask))
    assert h.excluded_count > 0
    assert np.flatnonzero(h.density).tolist() == [8]


def test_exponential_histogram_small_sigma():
    h = exponential_histogram(50, 6.0)
    s = sigma_measure(h)
    assert 0 <= s < 0.02
    assert s == pytest.approx(sigma_by_hand(h.density, h.bin_edges), abs=1e-12)
    assert sigma_measure(exponential_histogram(100, 6.0)) < s


@settings(max_examples=30)
@given(st.lists(st.floats(0, 20), min_size=5, max_size=200))
def test_sigma_nonnegative(values):
    h = histogram_from_values(np.array(values), DEFAULT_BINS, DEFAULT_W_MAX)
    assert sigma_measure(h) >= 0


def test_mu_of_reference_is_one():
    ps = phase_space(96, 64)
    ref = ps.coherent_reference()
    assert norm_ratio(ref, ref) == 1.0


@pytest.mark.parametrize("N", [30, 60, 192])
def test_mu_of_uniform_field(N):
    n = int(np.ceil(4 * np.sqrt(N)))
    ps = PhaseSpace(N, PhaseGrid.square(n))
    mu = norm_ratio(uniform_field(ps.grid, N), ps.coherent_reference())
    assert mu == pytest.approx(N / 2, rel=0.02)


def test_mu_two_coherent_states():
    ps = phase_space(96, 64)
    a = ps.coherent_reference((0.2, 0.3)).values
    b = ps.coherent_reference((0.7, 0.8)).values
    f = PhaseDistribution(ps.grid, a + b, Kind.COHERENT)
    assert norm_ratio(f, ps.coherent_reference()) == pytest.approx(2.0, rel=0.1)


def test_mu_half_torus():
    N = 96
    ps = phase_space(N, 64)
    v = np.zeros(ps.grid.shape)
    v[:, :32] = 1.0
    f = PhaseDistribution(ps.grid, v, Kind.UNIFORM)
    assert norm_ratio(f, ps.coherent_reference()) == pytest.approx(N / 4, rel=0.05)


@settings(max_examples=25)
@given(st.floats(1e-6, 1e6))
def test_mu_scale_invariant(c):
    ps = phase_space(48, 32)
    ref = ps.coherent_reference()
    f = ps.coherent_reference((0.6, 0.1))
    g = PhaseDistribution(ps.grid, c * f.values, f.kind)
    assert norm_ratio(g, ref) == pytest.approx(norm_ratio(f, ref), rel=1e-10)


def test_mu_rejects_zero_field():
    ps = phase_space(48, 32)
    with pytest.raises(ValueError):
        norm_ratio(PhaseDistribution(ps.grid, np.zeros(ps.grid.shape), Kind.LR), ps.coherent_reference())


def test_measure_cell_reports_within_bounds():
    grid = PhaseGrid.square(48)
    reports, averages = measure_cell(48, 0.1, (1, 4), 8, grid)
    assert [(r.kind, r.i) for r in reports] == [
        ("ScaledHusimi", 1), ("ScaledHusimi", 4), ("ScaledLR", 1), ("ScaledLR", 4)]
    assert [a.kind for a in averages] == ["HusimiAverage", "Repeller"]
    for r in reports + averages:
        assert isinstance(r, MeasureReport)
        assert 1 - 1e-6 <= r.mu <= 48 / 2 + 1e-6
        assert r.mu_over_N == pytest.approx(r.mu / 48)
    assert all(r.sigma >= 0 for r in reports)


def test_sweep_records_failed_cells_and_is_deterministic():
    grid = PhaseGrid.square(24)
    args = ((48,), (0.1, 0.0), (1,), 30, grid)
    reports, averages, failures = measure_sweep(*args)
    assert [(f.N, f.R) for f in failures] == [(48, 0.0)]
    assert not failures[0].diagnostic
    assert [r.R for r in reports] == [0.1, 0.1, 0.0, 0.0]
    assert all(math.isnan(r.mu) for r in reports if r.R == 0.0)
    again, _, _ = measure_sweep(*args, workers=2)
    a = [(r.sigma, r.mu) for r in reports if r.R == 0.1]
    b = [(r.sigma, r.mu) for r in again if r.R == 0.1]
    assert a == b
