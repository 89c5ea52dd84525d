"""The frozen reference values agree with their generating computations."""

import math

import pytest

import oracles


def test_shell_fraction_frozen():
    assert oracles.shell_fraction_mp() == pytest.approx(oracles.SHELL_FRACTION, rel=1e-15)
    closed = math.erf(1.0) - 2.0 / math.sqrt(math.pi) * math.exp(-1.0)
    assert closed == pytest.approx(oracles.SHELL_FRACTION, rel=1e-14)


def test_derived_constants_frozen():
    f = oracles.SHELL_FRACTION
    assert f ** (-1 / 3) == pytest.approx(oracles.FORCE_BALANCE_MASS, rel=1e-15)
    assert math.sqrt(2 * f) == pytest.approx(oracles.GAUSSIAN_ESCAPE_VELOCITY, rel=1e-15)
    assert oracles.erf_series(1.0) == pytest.approx(oracles.ERF_ONE, rel=1e-15)
    assert 2 / math.sqrt(math.pi) == pytest.approx(oracles.TWO_OVER_SQRT_PI, rel=1e-15)


def test_code_units_frozen():
    t, m = oracles.code_units_si(oracles.SIGMA_SI)
    assert t == pytest.approx(oracles.TIME_UNIT_SI, rel=1e-14)
    assert m == pytest.approx(oracles.MASS_UNIT_SI, rel=1e-14)


def test_groundstate_coefficient_frozen():
    value = oracles.groundstate_coefficient_dop853()
    assert abs(value - oracles.GROUNDSTATE_COEFFICIENT) < oracles.GROUNDSTATE_COEFFICIENT_TOL
