"""
Log-log convergence rate fits.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .types import SlopeFit

logger = logging.getLogger(__name__)

MIN_POINTS = 4
SLOPE_THRESHOLD = 0.9


def fit_slope(
    name: str,
    ells: Sequence[float],
    values: Sequence[float],
    threshold: Optional[float] = SLOPE_THRESHOLD,
    max_stderr: Optional[float] = None,
) -> SlopeFit:
    """
    Least-squares fit of log(value) = slope * log(ell) + log(C).

    Args:
        name (str): Measured series
        ells (Sequence[float]): Lattice spacings
        values (Sequence[float]): Positive measurements
        threshold (Optional[float]): Slope the fit must reach
        max_stderr (Optional[float]): Largest acceptable standard error

    Returns:
        SlopeFit: The fit; slope is None when fewer than MIN_POINTS usable points exist
    """
    x = np.asarray(ells, dtype=float)
    y = np.asarray(values, dtype=float)
    usable = (x > 0) & (y > 0) & np.isfinite(y)
    series = {"x": x[usable].tolist(), "y": y[usable].tolist()}
    if np.sum(usable) < MIN_POINTS:
        logger.warning("Slope of %s unavailable: %d usable points (need %d)", name, int(np.sum(usable)), MIN_POINTS)
        return SlopeFit(name=name, points=int(np.sum(usable)), threshold=threshold, **series)

    fit = stats.linregress(np.log(x[usable]), np.log(y[usable]))
    passed = None
    if threshold is not None:
        passed = bool(fit.slope >= threshold and (max_stderr is None or fit.stderr < max_stderr))
    points = int(np.sum(usable))
    half_width = stats.t.ppf(0.975, points - 2) * fit.stderr
    result = SlopeFit(
        name=name,
        slope=float(fit.slope),
        stderr=float(fit.stderr),
        ci_low=float(fit.slope - half_width),
        ci_high=float(fit.slope + half_width),
        constant=float(np.exp(fit.intercept)),
        points=points,
        threshold=threshold,
        passed=passed,
        **series,
    )
    logger.info("%s: slope %.4f +/- %.4f (C=%.4g, n=%d)", name, result.slope, result.stderr, result.constant, result.points)
    return result


def fitted_line(fit: SlopeFit, ells: Sequence[float]) -> np.ndarray:
    """Values C * ell**slope of a fit, NaN when the slope is unavailable."""
    x = np.asarray(ells, dtype=float)
    if fit.slope is None:
        return np.full(x.shape, np.nan)
    return fit.constant * x ** fit.slope


def decreasing_within(values: Sequence[float], band: float) -> bool:
    """Whether a sequence never increases by more than `band`."""
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= band))
