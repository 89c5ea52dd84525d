import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

import oracles
from snewton import (
    InsufficientPointsError,
    PotentialField,
    RadialGrid,
    WaveState,
    analytic_gaussian_potential,
    compute_potential,
    gaussian_initial,
    newton_cotes_cumulative,
)


# -- cumulative quadrature ----------------------------------------------------------


@pytest.mark.parametrize("n", [5, 6, 11, 12, 101])
def test_cumulative_constant(n):
    F = newton_cotes_cumulative(np.ones(n), 1.0 / (n - 1))
    assert abs(F[-1] - 1.0) < 1e-14


@pytest.mark.parametrize("n", [5, 6, 11, 12, 101])
def test_cumulative_cubic(n):
    r = np.linspace(0.0, 1.0, n)
    F = newton_cotes_cumulative(r**3, r[1])
    assert abs(F[-1] - 0.25) < 1e-14
    assert np.allclose(F, r**4 / 4, rtol=0, atol=1e-14)


@pytest.mark.parametrize("n", [6, 13])
def test_cumulative_from_outer(n):
    r = np.linspace(0.0, 2.0, n)
    f = 3 * r**2 - r
    F = newton_cotes_cumulative(f, r[1], "from-outer")
    exact = (8 - 2) - (r**3 - r**2 / 2)
    assert np.allclose(F, exact, atol=1e-13)
    assert F[-1] == 0.0


def test_cumulative_fourth_order():
    def max_err(dr):
        r = np.arange(0.0, 6.0 + dr / 2, dr)
        F = newton_cotes_cumulative(np.exp(-(r**2)), dr)
        exact = np.array([integrate.quad(lambda x: math.exp(-x * x), 0, x, epsabs=1e-15)[0] for x in r])
        return np.max(np.abs(F - exact))

    ratio = max_err(0.05) / max_err(0.025)
    assert 16 * 0.8 <= ratio <= 16 * 1.2


def test_cumulative_errors():
    with pytest.raises(InsufficientPointsError):
        newton_cotes_cumulative(np.ones(4), 0.1)
    with pytest.raises(ValueError):
        newton_cotes_cumulative(np.ones(8), 0.1, "sideways")


@given(arrays(np.float64, st.integers(5, 60), elements=st.floats(-10, 10)), st.floats(0.01, 1.0))
def test_cumulative_linear_and_consistent(f, dr):
    F = newton_cotes_cumulative(f, dr)
    G = newton_cotes_cumulative(2.0 * f, dr)
    assert np.allclose(G, 2.0 * F, rtol=1e-12, atol=1e-12)
    assert F[0] == 0.0


# -- compute_potential --------------------------------------------------------------


def test_zero_state_zero_potential():
    grid = RadialGrid(0.1, 64)
    phi = compute_potential(WaveState(grid, np.zeros(64), 1.0))
    assert np.all(phi.phi == 0.0)


def test_gaussian_potential_fourth_order():
    def max_err(dr):
        grid = RadialGrid.from_extent(8.0, dr)
        phi = compute_potential(gaussian_initial(grid, 1.0)).phi
        exact = analytic_gaussian_potential(grid.r, 1.0)
        return np.max(np.abs(phi - exact))

    ratio = max_err(1 / 32) / max_err(1 / 64)
    assert 16 * 0.8 <= ratio <= 16 * 1.2


def test_gaussian_potential_at_origin():
    grid = RadialGrid.from_extent(8.0, 2.0**-9)
    phi = compute_potential(gaussian_initial(grid, 1.0)).phi
    assert abs(phi[0] - (-oracles.TWO_OVER_SQRT_PI)) < 1e-6


@pytest.mark.parametrize("n", [16, 33, 64])
def test_brute_force_oracle(n):
    rng = np.random.default_rng(n)
    grid = RadialGrid(0.17, n)
    u = rng.normal(size=n) + 1j * rng.normal(size=n)
    s = WaveState(grid, u, 1.7)
    direct = oracles.direct_potential(s.u, grid.dr, s.mass)
    assert np.max(np.abs(compute_potential(s).phi - direct) / np.abs(direct)) < 1e-12


@given(arrays(np.float64, 64, elements=st.floats(0.0, 5.0)), st.floats(0.05, 0.5), st.floats(0.1, 4.0))
def test_brute_force_oracle_property(amp, dr, m):
    grid = RadialGrid(dr, 64)
    s = WaveState(grid, amp, m)
    direct = oracles.direct_potential(s.u, dr, m)
    got = compute_potential(s).phi
    scale = np.max(np.abs(direct))
    if scale == 0:
        assert np.all(got == 0)
    else:
        assert np.max(np.abs(got - direct)) <= 1e-12 * scale


bump = st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.01, 1.0))


@given(st.lists(bump, min_size=1, max_size=4), st.integers(24, 160))
def test_potential_sign_and_monotone(bumps, n):
    # nonnegative densities resolved by the grid (features >= 6 points wide);
    # inside hollow regions Phi is flat, so allow quadrature-level noise
    dr = 0.1
    r = np.arange(n) * dr
    R = r[-1]
    u = np.zeros(n)
    for c, w, a in bumps:
        width = 6 * dr + w * (R / 2 - 6 * dr)
        u += a * np.exp(-((r - c * R) ** 2) / (2 * width**2))
    phi = compute_potential(WaveState(RadialGrid(dr, n), r * u, 1.3)).phi
    assert np.all(phi < 0)
    assert np.all(np.diff(phi) >= -1e-7 * np.max(np.abs(phi)))


def test_potential_monotone_centrally_peaked():
    grid = RadialGrid.from_extent(16.0, 1 / 32)
    for sigma in (0.5, 1.0, 2.0):
        phi = compute_potential(gaussian_initial(grid, 1.0, sigma)).phi
        assert np.all(np.diff(phi) >= 0)


def test_far_field_law():
    grid = RadialGrid.from_extent(20.0, 1 / 32)
    s = gaussian_initial(grid, 1.4, sigma=1.5)
    phi = compute_potential(s).phi
    assert grid.r[-1] * phi[-1] == pytest.approx(-1.4 * s.norm(), rel=1e-3)


def test_potential_field_container():
    grid = RadialGrid(0.1, 32)
    f = PotentialField(grid, -np.ones(32))
    assert np.all(f.absorber == 0)
    with pytest.raises(ValueError):
        f.phi[0] = 1.0
    g = f.with_absorber(-np.full(32, 0.5))
    assert np.allclose(g.complex_potential, -1 - 0.5j)
    with pytest.raises(ValueError):
        PotentialField(grid, np.zeros(31))


# -- analytic oracle ------------------------------------------------------------------


def test_analytic_potential_values():
    assert analytic_gaussian_potential(0.0, 1.0) == pytest.approx(-1.1283791671, abs=1e-9)
    assert analytic_gaussian_potential(1.0, 1.0) == pytest.approx(-oracles.erf_series(1.0), abs=1e-9)
    assert analytic_gaussian_potential(1.0, 1.0) == pytest.approx(-0.8427007929, abs=1e-9)
    r = 50.0
    assert r * analytic_gaussian_potential(r, 2.0) == pytest.approx(-2.0, rel=1e-12)
