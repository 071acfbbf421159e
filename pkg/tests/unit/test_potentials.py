import pytest

import numpy as np

from qglab.errors import InvalidParameterError, ShiftTooSmallError
from qglab.potentials import (
    POTENTIALS,
    assumption_report,
    make_potential,
    sample_on_vertices,
    vertex_couplings,
)


def test_harmonic_values():
    """Test evaluating a registered potential."""
    v = make_potential("harmonic", strength=2.0)
    assert v(np.array([[1.0, 0.0], [1.0, 1.0]])).tolist() == [2.0, 4.0]
    assert float(v(np.array([3.0]))) == 9.0
    assert v.label == "harmonic"
    assert v.params == {"strength": 2.0}
    assert v.certified


def test_well_lower_bound():
    """Test that the well certifies its depth."""
    v = make_potential("well", depth=2.0, width=0.5)
    assert v.lower_bound == -2.0
    assert float(v(np.zeros(1))) == pytest.approx(-2.0)


def test_registry():
    """Test the registered labels."""
    assert set(POTENTIALS) == {"zero", "harmonic", "well", "bump"}


@pytest.mark.parametrize(
    "label,params",
    [("quartic", {}), ("harmonic", {"foo": 1.0}), ("harmonic", {"strength": -1.0}), ("well", {"width": 0.0})],
)
def test_make_potential_rejects(label, params):
    """Test unknown labels and bad parameters."""
    with pytest.raises(InvalidParameterError):
        make_potential(label, **params)


def test_vertex_couplings(line, harmonic):
    """Test alpha_j = ell * V_j."""
    alpha = vertex_couplings(harmonic, line)
    assert np.allclose(alpha, line.ell * line.vertices[:, 0] ** 2)
    assert np.allclose(sample_on_vertices(harmonic, line).values, alpha / line.ell)


def test_assumption_report(harmonic):
    """Test sampled diagnostics of a harmonic potential."""
    report = assumption_report(harmonic, 1.0, [(-1.0, 1.0)], 10)
    assert report.bounded_below_ok
    assert report.sampled_minimum == pytest.approx(0.0, abs=1e-12)
    assert report.c1_estimate >= 1.0
    assert report.modulus_samples[0][0] == 1.0
    assert all(value >= 0 for _, value in report.modulus_samples)
    assert report.region == [(-1.0, 1.0)]


def test_assumption_report_constant_potential(zero):
    """Test that a constant potential has comparability constant 1 and zero modulus."""
    report = assumption_report(zero, 1.0, [(-1.0, 1.0), (-1.0, 1.0)], 4)
    assert report.c1_estimate == pytest.approx(1.0)
    assert all(value == pytest.approx(0.0) for _, value in report.modulus_samples)


def test_shift_too_small():
    """Test that V + M <= 0 is reported with the offending point."""
    v = make_potential("well", depth=1.0, width=0.5)
    with pytest.raises(ShiftTooSmallError):
        assumption_report(v, 0.5, [(-1.0, 1.0)], 10)


@pytest.mark.parametrize("region,density", [([], 10), ([(1.0, -1.0)], 10), ([(-1.0, 1.0)], 0)])
def test_malformed_sampling(harmonic, region, density):
    """Test malformed regions and densities."""
    with pytest.raises(InvalidParameterError):
        assumption_report(harmonic, 1.0, region, density)


def _pair_scan_c1(shifted, radius):
    """max of shifted[j] / shifted[i] over grid pairs at Euclidean index distance <= radius."""
    index = np.indices(shifted.shape).reshape(shifted.ndim, -1).T
    values = shifted.ravel()
    best = 1.0
    for i in range(len(values)):
        near = np.sum((index - index[i]) ** 2, axis=1) <= radius * radius
        best = max(best, float(np.max(values[near]) / values[i]))
    return best


def test_c1_matches_pair_scan_on_the_line(harmonic):
    """Test the comparability constant of x**2 + 1 against an exhaustive pair scan."""
    report = assumption_report(harmonic, 1.0, [(-3.0, 3.0)], 100)
    grid = np.linspace(-3.0, 3.0, 601)
    assert report.c1_estimate == pytest.approx(_pair_scan_c1(grid ** 2 + 1.0, 100), rel=1e-12)
    assert report.c1_estimate == pytest.approx((3.0 + np.sqrt(5.0)) / 2.0, rel=1e-3)


def test_c1_matches_pair_scan_in_the_plane(harmonic):
    report = assumption_report(harmonic, 1.0, [(-1.0, 1.0), (-1.0, 1.0)], 5)
    axis = np.linspace(-1.0, 1.0, 11)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    assert report.c1_estimate == pytest.approx(_pair_scan_c1(x ** 2 + y ** 2 + 1.0, 5), rel=1e-12)
