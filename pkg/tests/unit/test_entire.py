import pytest

import numpy as np
from scipy.integrate import quad

from qglab.entire import cosc, even_real, gauss_legendre, moments, sigma, sinc


@pytest.mark.parametrize("w", [1e-4, 5e-3, 0.3, 2.0, 1.5 + 0.7j, 3j])
def test_closed_forms(w):
    """Test the entire functions on both sides of the series radius."""
    assert complex(sinc(w)) == pytest.approx(np.sin(w) / w, rel=1e-12)
    assert complex(cosc(w)) == pytest.approx(2 * (1 - np.cos(w)) / w ** 2, rel=1e-7)
    assert complex(sigma(w)) == pytest.approx((np.sin(w) - w) / w ** 3, rel=1e-5)


def test_values_at_origin():
    assert complex(sinc(0.0)) == 1.0
    assert complex(cosc(0.0)) == 1.0
    assert complex(sigma(0.0)) == pytest.approx(-1.0 / 6.0)


def test_even_real():
    """Test evaluation through w**2, negative values meaning imaginary w."""
    assert float(even_real(sinc, 4.0)) == pytest.approx(np.sin(2.0) / 2.0)
    assert float(even_real(sinc, -4.0)) == pytest.approx(np.sinh(2.0) / 2.0)


@pytest.mark.parametrize("w", [0.0, 0.5, -0.9j, 2.0 + 1.0j, 8.0])
def test_moments(w):
    """Test the exponential moments against adaptive quadrature."""
    values = moments(np.array([w]))
    for p in range(values.shape[0]):
        real = quad(lambda s: (s ** p * np.exp(w * s)).real, 0.0, 1.0)[0]
        imag = quad(lambda s: (s ** p * np.exp(w * s)).imag, 0.0, 1.0)[0]
        assert values[p, 0] == pytest.approx(real + 1j * imag, rel=1e-9, abs=1e-12)


def test_gauss_legendre_integrates_polynomials():
    nodes, weights = gauss_legendre(4)
    assert np.sum(weights) == pytest.approx(1.0)
    assert np.sum(weights * nodes ** 7) == pytest.approx(1.0 / 8.0)
