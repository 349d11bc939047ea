import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tribaker.classical import (
    ReflectivityConfig,
    baker_step,
    classical_repeller,
    evolve_weighted,
    orbit_of_word,
    periodic_orbits,
    periodic_words,
    weighted_density,
)
from tribaker.torus import TorusPoint


def close(x, q, p, tol=1e-12):
    dq = (x.q - q + 0.5) % 1 - 0.5
    dp = (x.p - p + 0.5) % 1 - 0.5
    return abs(dq) < tol and abs(dp) < tol


@pytest.mark.parametrize("x0, image", [
    ((0.1, 0.3), (0.3, 0.1)),
    ((0.5, 0.0), (0.5, 1 / 3)),
    ((0.9, 0.9), (0.7, 29 / 30)),
])
def test_baker_step_branches(x0, image):
    assert close(baker_step(TorusPoint(*x0)), *image)


@pytest.mark.parametrize("x0, steps, R, weight", [
    ((0.1, 0.1), 1, 0.5, 1.0),
    ((0.5, 0.5), 1, 0.5, 0.5),
    ((0.5, 0.5), 3, 0.0, 0.0),
])
def test_evolve_weighted_examples(x0, steps, R, weight):
    t = evolve_weighted(TorusPoint(*x0), steps, ReflectivityConfig(R))
    assert t.weight == weight
    assert len(t.points) == steps + 1


@settings(max_examples=50)
@given(st.floats(0, 0.999), st.floats(0, 0.999), st.integers(0, 12), st.floats(0, 1))
def test_weight_counts_opening_visits(q, p, steps, R):
    cfg = ReflectivityConfig(R)
    t = evolve_weighted(TorusPoint(q, p), steps, cfg)
    visits = sum(cfg.in_opening(x.q) for x in t.points[:-1])
    assert t.weight == pytest.approx(R**visits, abs=1e-15)


def test_opening_endpoints_not_absorbed():
    cfg = ReflectivityConfig(0.0)
    assert not cfg.in_opening(1 / 3) and not cfg.in_opening(2 / 3)
    assert cfg.in_opening(0.5)


def test_reflectivity_range():
    with pytest.raises(ValueError):
        ReflectivityConfig(1.5)
    with pytest.raises(ValueError):
        ReflectivityConfig(-0.1)
    with pytest.raises(ValueError):
        evolve_weighted(TorusPoint(0.1, 0.1), -1, ReflectivityConfig(1))


def test_period_one_fixed_points():
    words = periodic_words(1)
    assert words == [(0,), (1,), (2,)]
    pts = {(round(x.q, 12) % 1, round(x.p, 12) % 1) for orb in periodic_orbits(1) for x in orb}
    assert pts == {(0.0, 0.0), (0.5, 0.5)}
    for orb in periodic_orbits(1):
        assert close(baker_step(orb[0]), orb[0].q, orb[0].p)


def test_period_two_words_and_swap():
    assert periodic_words(2) == [(0, 1), (0, 2), (1, 2)]
    a, b = orbit_of_word((0, 1))
    assert close(a, 1 / 8, 3 / 8) and close(b, 3 / 8, 1 / 8)
    assert close(baker_step(a), b.q, b.p) and close(baker_step(b), a.q, a.p)


@pytest.mark.parametrize("T", range(1, 9))
def test_orbits_are_periodic(T):
    for orb in periodic_orbits(T):
        assert len(orb) == T
        for k, x in enumerate(orb):
            y = x
            for _ in range(T):
                y = baker_step(y)
            assert close(y, x.q, x.p, 1e-9)
            nxt = orb[(k + 1) % T]
            assert close(baker_step(x), nxt.q, nxt.p, 1e-9)


def recursive_count(T, cache={}):
    # words of length T minus those of every proper divisor period, divided by T
    if T not in cache:
        cache[T] = (3**T - sum(d * recursive_count(d) for d in range(1, T) if T % d == 0)) // T
    return cache[T]


@pytest.mark.parametrize("T, expected", [(1, 3), (2, 3), (3, 8), (4, 18), (5, 48), (6, 116), (7, 312), (8, 810)])
def test_orbit_counts(T, expected):
    assert recursive_count(T) == expected
    assert len(periodic_orbits(T)) == expected


def exact_step(q, p):
    b = min(int(3 * q), 2)
    return 3 * q - b, (p + b) / 3


@pytest.mark.parametrize("T", range(1, 5))
def test_orbit_count_matches_brute_force_fixed_points(T):
    # exact search of baker^T(x) = x on the lattice of denominator 3^T - 1, which holds every such point
    D = 3**T - 1
    fixed = set()
    for a, b in itertools.product(range(D), repeat=2):
        q0, p0 = Fraction(a, D), Fraction(b, D)
        q, p = q0, p0
        for _ in range(T):
            q, p = exact_step(q, p)
        if (q % 1, p % 1) == (q0, p0):
            fixed.add((q0, p0))
    listed = {
        (Fraction(round(x.q * D)) / D % 1, Fraction(round(x.p * D)) / D % 1)
        for d in range(1, T + 1) if T % d == 0
        for orb in periodic_orbits(d) for x in orb
    }
    assert listed == fixed
    # 3^T words, minus the duplicate corner coded by 0...0 and 2...2
    assert len(fixed) == 3**T - 1


def test_period_range():
    for T in (0, 9):
        with pytest.raises(ValueError):
            periodic_orbits(T)


def test_area_preservation():
    # cell centers of a 3x finer grid must fill every target cell equally
    n, m = 300, 900
    c = (np.arange(m) + 0.5) / m
    counts = np.zeros((n, n), int)
    for q in c:
        for p in c:
            y = baker_step(TorusPoint(q, p))
            counts[int(y.p * n) % n, int(y.q * n) % n] += 1
    assert (counts > 0).mean() >= 0.99
    assert np.all(counts == 9)


def ternary_digits(x, k):
    out = []
    for _ in range(k):
        x *= 3
        d = int(x)
        out.append(d)
        x -= d
    return out


def test_symbolic_conjugacy(rng):
    for _ in range(100):
        digits = list(rng.integers(0, 3, 40))
        q = sum(Fraction(int(d), 3 ** (k + 1)) for k, d in enumerate(digits))
        p = Fraction(int(rng.integers(0, 3**20)), 3**20)
        x = TorusPoint(float(q), float(p))
        for s in range(10):
            y = baker_step(x)
            assert ternary_digits(y.q, 8) == ternary_digits(x.q, 9)[1:9]
            assert ternary_digits(y.p, 1) == [digits[s]]
            assert abs(y.p - (x.p + digits[s]) / 3) < 1e-9
            x = y


def test_classical_repeller_concentrates_outside_opening():
    q, p, w = classical_repeller(ReflectivityConfig(0.05), samples=50_000, steps=12, seed=3)
    dens = weighted_density(q, p, w, 60, 60)
    assert dens.mean() == pytest.approx(1.0)
    strip = dens[:, 20:40].mean()
    assert strip < dens.mean()


def test_classical_repeller_closed_is_uniform():
    q, p, w = classical_repeller(ReflectivityConfig(1.0), samples=100_000, steps=6, seed=1)
    assert np.all(w == 1)
    dens = weighted_density(q, p, w, 10, 10)
    assert np.abs(dens - 1).max() < 0.15
