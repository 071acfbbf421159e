"""
Potentials V and sampled diagnostics for the shifted potential V + M.
"""
import logging
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import maximum_filter, maximum_filter1d

from .errors import InvalidParameterError, PreconditionError, ShiftTooSmallError
from .lattice import LatticeGraph
from .spaces import VertexFunction
from .types import AssumptionReport

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], np.ndarray]


class Potential:
    """
    A real, continuous potential on R**nu.

    The evaluator receives points of shape (N, nu) and returns N values; it
    must be pure so that potentials can be shared between worker threads.

    Attributes:
        evaluator (Evaluator): Vectorized V
        lower_bound (Optional[float]): Certified value <= inf V, None if unverified
        label (str): Identifier used in configs and reports
        params (Dict[str, float]): Parameters the potential was built with
    """

    def __init__(
        self,
        evaluator: Evaluator,
        lower_bound: Optional[float] = None,
        label: str = "custom",
        params: Optional[Dict[str, float]] = None,
    ):
        self.evaluator = evaluator
        self.lower_bound = lower_bound
        self.label = label
        self.params = dict(params or {})

    @property
    def certified(self) -> bool:
        """Whether the lower bound is certified."""
        return self.lower_bound is not None

    def __call__(self, points) -> np.ndarray:
        """
        Evaluate V.

        Args:
            points (array_like): One point of shape (nu,) or points of shape (N, nu)

        Returns:
            np.ndarray: Real values, shape (N,) (or a 0-d array for a single point)
        """
        points = np.asarray(points, dtype=float)
        single = points.ndim == 1
        values = np.asarray(self.evaluator(np.atleast_2d(points)), dtype=float)
        return values[0] if single else values

    def __repr__(self) -> str:
        return f"Potential(label={self.label!r}, params={self.params}, lower_bound={self.lower_bound})"


def _squared_norm(x: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", x, x)


def zero_potential() -> Potential:
    """V = 0."""
    return Potential(lambda x: np.zeros(len(x)), 0.0, "zero")


def harmonic_potential(strength: float = 1.0) -> Potential:
    """V(x) = strength * |x|**2."""
    if strength < 0:
        raise InvalidParameterError("harmonic strength must be non-negative")
    return Potential(
        lambda x: strength * _squared_norm(x), 0.0, "harmonic", {"strength": strength}
    )


def well_potential(depth: float = 1.0, width: float = 0.5) -> Potential:
    """Bounded Gaussian well V(x) = -depth * exp(-|x|**2 / width**2)."""
    if depth < 0 or width <= 0:
        raise InvalidParameterError("well depth must be non-negative and width positive")
    return Potential(
        lambda x: -depth * np.exp(-_squared_norm(x) / width ** 2),
        -depth,
        "well",
        {"depth": depth, "width": width},
    )


def bump_potential(height: float = 1.0, width: float = 0.5, shift: float = 0.25) -> Potential:
    """Smooth bump centered at (shift, ..., shift)."""
    if height < 0 or width <= 0:
        raise InvalidParameterError("bump height must be non-negative and width positive")
    return Potential(
        lambda x: height * np.exp(-_squared_norm(x - shift) / width ** 2),
        0.0,
        "bump",
        {"height": height, "width": width, "shift": shift},
    )


POTENTIALS: Dict[str, Callable[..., Potential]] = {
    "zero": zero_potential,
    "harmonic": harmonic_potential,
    "well": well_potential,
    "bump": bump_potential,
}


def make_potential(label: str, **params: float) -> Potential:
    """
    Build a registered potential by label.

    Args:
        label (str): One of the keys of POTENTIALS
        **params: Parameters of the potential

    Returns:
        Potential: The potential

    Raises:
        InvalidParameterError: If the label or a parameter is unknown
    """
    try:
        factory = POTENTIALS[label]
    except KeyError:
        raise InvalidParameterError(
            f"unknown potential {label!r}; choose from {sorted(POTENTIALS)}"
        ) from None
    try:
        return factory(**params)
    except TypeError as e:
        raise InvalidParameterError(f"bad parameters for potential {label!r}: {e}") from e


def sample_on_vertices(v: Potential, g: LatticeGraph) -> VertexFunction:
    """
    Evaluate V at every lattice vertex.

    Args:
        v (Potential): The potential
        g (LatticeGraph): The lattice

    Returns:
        VertexFunction: Real values V_j
    """
    return VertexFunction(g, v(g.vertices))


def _ball_max(field: np.ndarray, radius: int) -> np.ndarray:
    """Maximum of a grid field over the Euclidean ball of `radius` grid steps."""
    fill = -np.inf
    if field.ndim == 1:
        return maximum_filter1d(field, size=2 * radius + 1, mode="constant", cval=fill)
    if field.ndim == 2:
        out = np.full_like(field, fill)
        rows = {}
        n = field.shape[0]
        for dy in range(-radius, radius + 1):
            half = int(np.floor(np.sqrt(radius * radius - dy * dy) + 1e-9))
            if half not in rows:
                rows[half] = maximum_filter1d(field, size=2 * half + 1, axis=1, mode="constant", cval=fill)
            src = rows[half]
            lo, hi = max(0, -dy), min(n, n - dy)
            out[lo:hi] = np.maximum(out[lo:hi], src[lo + dy:hi + dy])
        return out
    offsets = np.indices((2 * radius + 1,) * field.ndim) - radius
    footprint = np.sum(offsets ** 2, axis=0) <= radius * radius
    return maximum_filter(field, footprint=footprint, mode="constant", cval=fill)


def assumption_report(
    v: Potential,
    m_shift: float,
    region: Sequence[Tuple[float, float]],
    sample_density: int,
) -> AssumptionReport:
    """
    Sample V + M on a box and estimate the comparability constant and modulus.

    The box is sampled uniformly with `sample_density` points per unit length
    per axis; ball maxima over the grid replace an explicit pair scan.

    Args:
        v (Potential): The potential
        m_shift (float): The shift M
        region (Sequence[Tuple[float, float]]): One (low, high) interval per axis
        sample_density (int): Points per unit length

    Returns:
        AssumptionReport: The sampled diagnostics

    Raises:
        InvalidParameterError: If the region or density is malformed
        ShiftTooSmallError: If V + M <= 0 at a sample
    """
    region = [(float(lo), float(hi)) for lo, hi in region]
    if not region or any(hi <= lo for lo, hi in region):
        raise InvalidParameterError(f"malformed sampling region {region}")
    if int(sample_density) != sample_density or sample_density < 1:
        raise InvalidParameterError("sample density must be a positive integer")
    if v.certified and m_shift <= -v.lower_bound:
        logger.warning("Shift M=%g does not exceed -lower_bound=%g", m_shift, -v.lower_bound)

    counts = [int(round((hi - lo) * sample_density)) + 1 for lo, hi in region]
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(region, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    values = v(points)
    shifted = (values + m_shift).reshape(counts)

    worst = int(np.argmin(shifted))
    if shifted.flat[worst] <= 0:
        raise ShiftTooSmallError(points[worst], shifted.flat[worst])

    step = 1.0 / sample_density
    radius = int(np.floor(1.0 / step + 1e-9))
    c1 = float(np.max(_ball_max(shifted, radius) / shifted))

    inverse = 1.0 / shifted
    modulus: List[Tuple[float, float]] = []
    delta = 1.0
    while delta >= step - 1e-12:
        r = int(np.floor(delta / step + 1e-9))
        modulus.append((delta, float(np.max(_ball_max(inverse, r) - inverse))))
        delta /= 2.0

    sampled_minimum = float(np.min(values))
    bounded = v.certified and sampled_minimum >= v.lower_bound
    report = AssumptionReport(
        m_shift=m_shift,
        c1_estimate=max(c1, 1.0),
        modulus_samples=modulus,
        bounded_below_ok=bool(bounded),
        sampled_minimum=sampled_minimum,
        region=region,
    )
    logger.info("Assumption report for %s: c1=%.6g, min V=%.6g", v.label, report.c1_estimate, sampled_minimum)
    return report


def vertex_couplings(v: Potential, g: LatticeGraph) -> np.ndarray:
    """
    The delta-coupling strengths alpha_j = ell * V_j.

    Raises:
        PreconditionError: If V is not finite at a vertex
    """
    values = sample_on_vertices(v, g).values
    if not np.all(np.isfinite(values)):
        raise PreconditionError(f"potential {v.label!r} is not finite on the lattice")
    return g.ell * values
