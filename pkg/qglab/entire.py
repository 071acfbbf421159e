"""
Entire functions and closed-form edge integrals.

The edge resolvent and the secular equation only involve

    sinc(w) = sin(w) / w
    cosc(w) = (1 - cos(w)) / (w**2 / 2)
    sigma(w) = (sin(w) - w) / w**3

which are entire in w and even, so they are also functions of w**2. Near the
origin they are evaluated from their Taylor series to avoid cancellation.
"""
from functools import lru_cache
from typing import Tuple

import numpy as np

SERIES_RADIUS = 1e-2
_GP_SERIES_RADIUS = 1.0
_GP_SERIES_TERMS = 26
MAX_MOMENT = 4


def _as_complex(w: np.ndarray) -> np.ndarray:
    return np.asarray(w, dtype=complex)


def sinc(w):
    """sin(w)/w for complex w, series below SERIES_RADIUS."""
    w = _as_complex(w)
    w2 = w * w
    small = np.abs(w) < SERIES_RADIUS
    series = 1.0 - w2 / 6.0 + w2 * w2 / 120.0 - w2 ** 3 / 5040.0
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.sin(w) / w
    return np.where(small, series, direct)


def cosc(w):
    """(1 - cos(w)) / (w**2 / 2) for complex w."""
    w = _as_complex(w)
    w2 = w * w
    small = np.abs(w) < SERIES_RADIUS
    series = 1.0 - w2 / 12.0 + w2 * w2 / 360.0 - w2 ** 3 / 20160.0
    with np.errstate(divide="ignore", invalid="ignore"):
        # 1 - cos(w) = 2 sin(w/2)**2 keeps full precision for moderate w
        direct = 4.0 * np.sin(w / 2.0) ** 2 / w2
    return np.where(small, series, direct)


def sigma(w):
    """(sin(w) - w) / w**3 for complex w."""
    w = _as_complex(w)
    w2 = w * w
    small = np.abs(w) < SERIES_RADIUS
    series = -1.0 / 6.0 + w2 / 120.0 - w2 * w2 / 5040.0 + w2 ** 3 / 362880.0
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (np.sin(w) - w) / (w2 * w)
    return np.where(small, series, direct)


def even_real(func, u):
    """
    Evaluate an even entire function at w = sqrt(u) for real u.

    Args:
        func (Callable): One of sinc, cosc, sigma
        u (array_like): Real values of w**2 (negative u means imaginary w)

    Returns:
        np.ndarray: Real function values
    """
    w = np.sqrt(np.asarray(u, dtype=complex))
    return np.real(func(w))


def moments(w, max_power: int = MAX_MOMENT) -> np.ndarray:
    """
    Exponential moments G_p(w) = integral over [0, 1] of s**p exp(w s).

    Args:
        w (array_like): Complex exponents, any shape
        max_power (int): Highest power p

    Returns:
        np.ndarray: Array of shape (max_power + 1,) + w.shape
    """
    w = _as_complex(w)
    out = np.empty((max_power + 1,) + w.shape, dtype=complex)
    small = np.abs(w) < _GP_SERIES_RADIUS

    # series: sum_k w**k / (k! (k + p + 1))
    terms = np.ones_like(w)
    series = np.zeros((max_power + 1,) + w.shape, dtype=complex)
    for k in range(_GP_SERIES_TERMS):
        for p in range(max_power + 1):
            series[p] += terms / (k + p + 1)
        terms = terms * w / (k + 1)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ew = np.exp(w)
        upward = np.empty_like(series)
        upward[0] = np.expm1(w) / w
        for p in range(1, max_power + 1):
            upward[p] = (ew - p * upward[p - 1]) / w

    for p in range(max_power + 1):
        out[p] = np.where(small, series[p], upward[p])
    return out


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights mapped to [0, 1].

    Args:
        order (int): Number of nodes

    Returns:
        Tuple[np.ndarray, np.ndarray]: Nodes and weights on [0, 1]
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return 0.5 * (nodes + 1.0), 0.5 * weights
