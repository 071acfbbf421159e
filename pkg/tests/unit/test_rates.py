import pytest

import numpy as np

from qglab.rates import decreasing_within, fit_slope, fitted_line


def test_exact_power_law():
    """Test the fit of values 3 ell**2."""
    ells = [0.2, 0.1, 0.05, 0.025]
    fit = fit_slope("d", ells, [3 * e ** 2 for e in ells])
    assert fit.slope == pytest.approx(2.0)
    assert fit.constant == pytest.approx(3.0)
    assert fit.stderr == pytest.approx(0.0, abs=1e-10)
    assert fit.passed
    assert fitted_line(fit, [0.5]) == pytest.approx([0.75])


def test_slope_below_threshold():
    ells = [0.2, 0.1, 0.05, 0.025]
    fit = fit_slope("d", ells, [e ** 0.5 for e in ells])
    assert fit.slope == pytest.approx(0.5)
    assert fit.passed is False
    assert fit_slope("d", ells, [e ** 0.5 for e in ells], threshold=None).passed is None


def test_too_few_points():
    """Test that fewer than four usable points leave the slope unavailable."""
    fit = fit_slope("d", [0.2, 0.1, 0.05], [0.04, 0.01, 0.0025])
    assert fit.slope is None
    assert fit.points == 3
    assert np.isnan(fitted_line(fit, [0.1])).all()


def test_nonpositive_values_are_dropped():
    fit = fit_slope("d", [0.2, 0.1, 0.05, 0.025, 0.0125], [0.2, 0.1, 0.0, 0.025, 0.0125])
    assert fit.points == 4
    assert fit.x == [0.2, 0.1, 0.025, 0.0125]
    assert fit.slope == pytest.approx(1.0)


def test_max_stderr():
    ells = [0.2, 0.1, 0.05, 0.025]
    noisy = [0.2, 0.13, 0.04, 0.026]
    assert fit_slope("d", ells, noisy, threshold=0.5, max_stderr=1e-6).passed is False


def test_decreasing_within():
    assert decreasing_within([3.0, 2.0, 1.0], 0.0)
    assert not decreasing_within([1.0, 1.5], 0.1)
    assert decreasing_within([1.0, 1.05], 0.1)
    assert decreasing_within([], 0.0)
