"""
Vertex space, graph space and the identification operators between them.

A GraphFunction stores one profile per edge in vectorized form. Each edge
carries one of three variants:

* linear: endpoint values (start at the smaller vertex, end at the larger one)
* sinusoidal: a S1(x) + b S2(x) + c x/ell + d with S1(x) = sin(k'x)/sin(k'ell)
  and S2(x) = sin(k'(ell-x))/sin(k'ell)
* sampled: m + 1 uniform samples on [0, ell], optionally with derivatives

Integrals of linear and sinusoidal profiles are evaluated in closed form;
sampled profiles are integrated with Gauss-Legendre quadrature on each
sampling sub-interval of their interpolant.
"""
import logging
from math import gcd
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from attrs import define, field
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .entire import gauss_legendre, moments
from .errors import (
    IncompatibleSpacesError,
    InvalidParameterError,
    MissingDerivativeError,
    NotInH1Error,
    UndefinedRatioError,
)
from .lattice import LatticeGraph, interior_mask

logger = logging.getLogger(__name__)

LINEAR, SINUSOIDAL, SAMPLED = 0, 1, 2
KIND_NAMES = {LINEAR: "linear", SINUSOIDAL: "sinusoidal", SAMPLED: "sampled"}
CONTINUITY_TOLERANCE = 1e-9
QUADRATURE_ORDER = 8
DEFAULT_SAMPLES = 16


class VertexFunction:
    """
    An element of the vertex space with norm ell**nu * sum |u_j|**2.

    Attributes:
        graph (LatticeGraph): The lattice the function lives on
        values (np.ndarray): One value per vertex
    """

    def __init__(self, graph: LatticeGraph, values: Union[np.ndarray, Sequence[complex]]):
        """
        Initialize the vertex function.

        Args:
            graph (LatticeGraph): The lattice
            values (array_like): One value per vertex

        Raises:
            IncompatibleSpacesError: If the number of values does not match
        """
        values = np.asarray(values)
        if not np.iscomplexobj(values):
            values = values.astype(float)
        if values.shape != (graph.num_vertices,):
            raise IncompatibleSpacesError(
                f"expected {graph.num_vertices} vertex values, got shape {values.shape}"
            )
        self.graph = graph
        self.values = values

    @classmethod
    def zeros(cls, graph: LatticeGraph) -> "VertexFunction":
        """Create the zero vertex function."""
        return cls(graph, np.zeros(graph.num_vertices))

    def _check(self, other: "VertexFunction") -> None:
        if not self.graph.same_as(other.graph):
            raise IncompatibleSpacesError("vertex functions live on different lattices")

    def inner(self, other: "VertexFunction") -> complex:
        """
        Inner product, conjugate-linear in self.

        Args:
            other (VertexFunction): Second argument

        Returns:
            complex: ell**nu * sum conj(u_j) v_j
        """
        self._check(other)
        return complex(self.graph.cell_volume * np.vdot(self.values, other.values))

    def norm(self) -> float:
        """Vertex space norm."""
        return float(np.sqrt(self.graph.cell_volume) * np.linalg.norm(self.values))

    def restrict(self, mask: np.ndarray) -> "VertexFunction":
        """Zero the values outside a vertex mask."""
        return VertexFunction(self.graph, np.where(mask, self.values, 0))

    def __add__(self, other: "VertexFunction") -> "VertexFunction":
        self._check(other)
        return VertexFunction(self.graph, self.values + other.values)

    def __sub__(self, other: "VertexFunction") -> "VertexFunction":
        self._check(other)
        return VertexFunction(self.graph, self.values - other.values)

    def __mul__(self, scalar: complex) -> "VertexFunction":
        return VertexFunction(self.graph, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "VertexFunction":
        return VertexFunction(self.graph, -self.values)

    def __repr__(self) -> str:
        return f"VertexFunction(n={len(self.values)}, norm={self.norm():.6g})"


# -- single-edge profiles -----------------------------------------------------


def _as_tuple4(values: Iterable[complex]) -> Tuple[complex, complex, complex, complex]:
    out = tuple(complex(v) for v in values)
    if len(out) != 4:
        raise InvalidParameterError("a sinusoidal profile needs four coefficients")
    return out  # type: ignore[return-value]


def _as_samples(values) -> np.ndarray:
    return np.asarray(values, dtype=complex)


def _optional_samples(values) -> Optional[np.ndarray]:
    return None if values is None else np.asarray(values, dtype=complex)


@define(frozen=True)
class LinearProfile:
    """Linear profile from start (at x = 0) to end (at x = ell)."""

    ell: float = field(converter=float)
    start: complex = field(converter=complex)
    end: complex = field(converter=complex)
    kind = "linear"

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.start + (self.end - self.start) * x / self.ell

    def derivative(self, x) -> np.ndarray:
        return np.full(np.shape(x), (self.end - self.start) / self.ell, dtype=complex)

    def second_derivative(self, x) -> np.ndarray:
        return np.zeros(np.shape(x), dtype=complex)


@define(frozen=True)
class SinusoidalProfile:
    """
    Closed-form profile a S1 + b S2 + c x/ell + d with wavenumber k_prime.

    Attributes:
        ell (float): Edge length
        k_prime (complex): Wavenumber
        coefficients (Tuple[complex, ...]): (a, b, c, d)
    """

    ell: float = field(converter=float)
    k_prime: complex = field(converter=complex)
    coefficients: Tuple[complex, complex, complex, complex] = field(converter=_as_tuple4)
    kind = "sinusoidal"

    def _eval(self, x, order: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = sinusoidal_values(
            np.array([self.k_prime]), np.array([self.coefficients]), self.ell, x.ravel(), order
        )
        return out[0].reshape(x.shape)

    def evaluate(self, x) -> np.ndarray:
        return self._eval(x, 0)

    def derivative(self, x) -> np.ndarray:
        return self._eval(x, 1)

    def second_derivative(self, x) -> np.ndarray:
        return self._eval(x, 2)


@define(frozen=True)
class SampledProfile:
    """
    Uniform samples on [0, ell], optionally with derivative samples.

    Attributes:
        ell (float): Edge length
        values (np.ndarray): m + 1 samples, m >= 2
        derivatives (Optional[np.ndarray]): Matching derivative samples
    """

    ell: float = field(converter=float)
    values: np.ndarray = field(converter=_as_samples, eq=False)
    derivatives: Optional[np.ndarray] = field(default=None, converter=_optional_samples, eq=False)
    kind = "sampled"

    def __attrs_post_init__(self) -> None:
        if self.values.ndim != 1 or len(self.values) < 3:
            raise InvalidParameterError("a sampled profile needs m + 1 samples with m >= 2")
        if self.derivatives is not None and self.derivatives.shape != self.values.shape:
            raise InvalidParameterError("derivative samples must match the value samples")

    @property
    def m(self) -> int:
        return len(self.values) - 1

    def _interpolant(self):
        grid = np.linspace(0.0, self.ell, self.m + 1)
        return _interpolant(grid, self.values[:, None], _column(self.derivatives))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._interpolant()(x.ravel())[:, 0].reshape(x.shape)

    def derivative(self, x) -> np.ndarray:
        if self.derivatives is None:
            raise MissingDerivativeError("sampled profile has no derivative samples")
        x = np.asarray(x, dtype=float)
        return self._interpolant()(x.ravel(), 1)[:, 0].reshape(x.shape)


EdgeProfile = Union[LinearProfile, SinusoidalProfile, SampledProfile]


def _column(array: Optional[np.ndarray]) -> Optional[np.ndarray]:
    return None if array is None else array[:, None]


def _interpolant(grid: np.ndarray, values: np.ndarray, derivatives: Optional[np.ndarray]):
    """Piecewise cubic interpolant along axis 0: Hermite with derivatives, spline otherwise."""
    if derivatives is not None:
        return CubicHermiteSpline(grid, values, derivatives, axis=0)
    return CubicSpline(grid, values, axis=0, bc_type="not-a-knot")


# -- vectorized kernels -------------------------------------------------------


def sinusoidal_values(kp: np.ndarray, coef: np.ndarray, ell: float, x: np.ndarray, order: int = 0):
    """
    Evaluate sinusoidal profiles or their derivatives.

    Args:
        kp (np.ndarray): Wavenumbers, shape (R,)
        coef (np.ndarray): Coefficients (a, b, c, d), shape (R, 4)
        ell (float): Edge length
        x (np.ndarray): Points in [0, ell], shape (M,) or (R, M)
        order (int): Derivative order 0, 1 or 2

    Returns:
        np.ndarray: Values of shape (R, M)
    """
    kp = np.asarray(kp, dtype=complex)[:, None]
    a, b, c, d = (np.asarray(coef, dtype=complex)[:, i, None] for i in range(4))
    x = np.asarray(x, dtype=float)
    s = np.sin(kp * ell)
    kx = kp * x
    if order == 0:
        return (a * np.sin(kx) + b * np.sin(kp * ell - kx)) / s + c * x / ell + d
    if order == 1:
        return kp * (a * np.cos(kx) - b * np.cos(kp * ell - kx)) / s + c / ell + 0 * x
    if order == 2:
        return -kp * kp * (a * np.sin(kx) + b * np.sin(kp * ell - kx)) / s
    raise InvalidParameterError(f"unsupported derivative order {order}")


def _exp_terms(
    kinds: np.ndarray,
    lin: np.ndarray,
    sin: np.ndarray,
    kp: np.ndarray,
    ell: float,
    derivative: bool,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Rewrite linear/sinusoidal rows as sums of coef * (x/ell)**power * exp(expo x).

    The exponentials are exp(beta x) and exp(beta (ell - x)) with Re(beta) <= 0,
    so both stay bounded on the edge.
    """
    is_lin = kinds == LINEAR
    a = np.where(is_lin, 0, sin[:, 0])
    b = np.where(is_lin, 0, sin[:, 1])
    c = np.where(is_lin, lin[:, 1] - lin[:, 0], sin[:, 2])
    d = np.where(is_lin, lin[:, 0], sin[:, 3])
    beta = np.where(is_lin, 0, 1j * kp)
    beta = np.where(beta.real > 0, -beta, beta)
    rho = np.exp(beta * ell)
    den = np.where(is_lin, 1.0, rho * rho - 1.0)
    c1 = (a * rho - b) / den
    c2 = (b * rho - a) / den * rho
    zero = np.zeros_like(beta)
    expo = np.stack([beta, -beta, zero, zero], axis=1)
    if derivative:
        coef = np.stack([c1 * beta, -c2 * beta, c / ell, zero], axis=1)
        power = np.zeros((len(kinds), 4), dtype=np.int64)
    else:
        coef = np.stack([c1, c2, c, d], axis=1)
        power = np.tile(np.array([0, 0, 1, 0], dtype=np.int64), (len(kinds), 1))
    return coef, expo, power


def _exact_edge_inner(left, right, ell: float) -> np.ndarray:
    """Closed-form per-edge integrals of conj(left) * right over [0, ell]."""
    cl, el, pl = left
    cr, er, pr = right
    expo = (np.conj(el)[:, :, None] + er[:, None, :]) * ell
    power = pl[:, :, None] + pr[:, None, :]
    g = moments(expo, max_power=2)
    g = np.take_along_axis(g, power[None], axis=0)[0]
    weights = np.conj(cl)[:, :, None] * cr[:, None, :]
    return ell * np.sum(weights * g, axis=(1, 2))


class GraphFunction:
    """
    An element of the graph space: one profile per edge of a lattice.

    Edges are parameterized from their lexicographically smaller endpoint.
    Rows of the coefficient arrays are only meaningful for edges of the
    matching kind.

    Attributes:
        graph (LatticeGraph): The lattice
        kinds (np.ndarray): Variant code per edge
        lin (np.ndarray): (start, end) per edge, shape (E, 2)
        sin (np.ndarray): (a, b, c, d) per edge, shape (E, 4)
        k_prime (np.ndarray): Wavenumber per edge
        samples (Optional[np.ndarray]): Values, shape (E, m + 1)
        derivatives (Optional[np.ndarray]): Derivative samples, shape (E, m + 1)
    """

    def __init__(
        self,
        graph: LatticeGraph,
        kinds: np.ndarray,
        lin: Optional[np.ndarray] = None,
        sin: Optional[np.ndarray] = None,
        k_prime: Optional[np.ndarray] = None,
        samples: Optional[np.ndarray] = None,
        derivatives: Optional[np.ndarray] = None,
    ):
        n_edges = graph.num_edges
        self.graph = graph
        self.kinds = np.asarray(kinds, dtype=np.int8)
        if self.kinds.shape != (n_edges,):
            raise IncompatibleSpacesError("one profile per edge is required")
        self.lin = np.zeros((n_edges, 2), complex) if lin is None else np.asarray(lin, complex)
        self.sin = np.zeros((n_edges, 4), complex) if sin is None else np.asarray(sin, complex)
        self.k_prime = np.zeros(n_edges, complex) if k_prime is None else np.asarray(k_prime, complex)
        self.samples = None if samples is None else np.asarray(samples, complex)
        self.derivatives = None if derivatives is None else np.asarray(derivatives, complex)
        if np.any(self.kinds == SAMPLED):
            if self.samples is None or self.samples.ndim != 2 or self.samples.shape[1] < 3:
                raise InvalidParameterError("sampled edges need m + 1 >= 3 samples per edge")
            if self.derivatives is not None and self.derivatives.shape != self.samples.shape:
                raise InvalidParameterError("derivative samples must match the value samples")

    # construction ------------------------------------------------------------

    @classmethod
    def linear(cls, graph: LatticeGraph, start, end) -> "GraphFunction":
        """Create an all-linear function from endpoint values per edge."""
        lin = np.stack([np.broadcast_to(start, graph.num_edges),
                        np.broadcast_to(end, graph.num_edges)], axis=1)
        return cls(graph, np.full(graph.num_edges, LINEAR), lin=lin)

    @classmethod
    def constant(cls, graph: LatticeGraph, value: complex) -> "GraphFunction":
        """Create the constant function."""
        return cls.linear(graph, value, value)

    @classmethod
    def sinusoidal(cls, graph: LatticeGraph, k_prime, coefficients) -> "GraphFunction":
        """Create an all-sinusoidal function."""
        kp = np.broadcast_to(np.asarray(k_prime, complex), (graph.num_edges,))
        coef = np.broadcast_to(np.asarray(coefficients, complex), (graph.num_edges, 4))
        return cls(graph, np.full(graph.num_edges, SINUSOIDAL), sin=coef.copy(), k_prime=kp.copy())

    @classmethod
    def sampled(cls, graph: LatticeGraph, samples, derivatives=None) -> "GraphFunction":
        """Create an all-sampled function from (E, m + 1) sample arrays."""
        return cls(graph, np.full(graph.num_edges, SAMPLED), samples=samples, derivatives=derivatives)

    @classmethod
    def from_callable(cls, graph: LatticeGraph, func, m: int = DEFAULT_SAMPLES, derivative=None):
        """
        Sample a per-edge function func(t) given on the edge parameter t in [0, ell].

        Args:
            graph (LatticeGraph): The lattice
            func (Callable): Maps an array of shape (m + 1,) to (E, m + 1) or (m + 1,)
            m (int): Number of sampling sub-intervals
            derivative (Optional[Callable]): Derivative with the same signature

        Returns:
            GraphFunction: All-sampled function
        """
        t = np.linspace(0.0, graph.ell, m + 1)
        shape = (graph.num_edges, m + 1)
        values = np.broadcast_to(func(t), shape).copy()
        derivs = None if derivative is None else np.broadcast_to(derivative(t), shape).copy()
        return cls.sampled(graph, values, derivs)

    @classmethod
    def from_profiles(cls, graph: LatticeGraph, profiles: Sequence[EdgeProfile]) -> "GraphFunction":
        """
        Assemble a function from single-edge profiles.

        Raises:
            IncompatibleSpacesError: If the count or the edge lengths do not match
        """
        if len(profiles) != graph.num_edges:
            raise IncompatibleSpacesError("one profile per edge is required")
        n_edges = graph.num_edges
        kinds = np.empty(n_edges, np.int8)
        lin = np.zeros((n_edges, 2), complex)
        sin = np.zeros((n_edges, 4), complex)
        kp = np.zeros(n_edges, complex)
        sampled = [p for p in profiles if isinstance(p, SampledProfile)]
        ms = {p.m for p in sampled}
        if len(ms) > 1:
            raise IncompatibleSpacesError("sampled profiles must share the number of samples")
        m = ms.pop() if ms else None
        with_derivs = all(p.derivatives is not None for p in sampled)
        samples = np.zeros((n_edges, m + 1), complex) if m else None
        derivs = np.zeros((n_edges, m + 1), complex) if m and with_derivs else None
        for e, p in enumerate(profiles):
            if not np.isclose(p.ell, graph.ell, rtol=1e-12):
                raise IncompatibleSpacesError(f"edge {e}: profile length {p.ell} != {graph.ell}")
            if isinstance(p, LinearProfile):
                kinds[e] = LINEAR
                lin[e] = (p.start, p.end)
            elif isinstance(p, SinusoidalProfile):
                kinds[e] = SINUSOIDAL
                sin[e] = p.coefficients
                kp[e] = p.k_prime
            else:
                kinds[e] = SAMPLED
                samples[e] = p.values
                if derivs is not None:
                    derivs[e] = p.derivatives
        return cls(graph, kinds, lin, sin, kp, samples, derivs)

    def profile(self, e: int) -> EdgeProfile:
        """Return the profile of edge e."""
        ell = self.graph.ell
        kind = self.kinds[e]
        if kind == LINEAR:
            return LinearProfile(ell, self.lin[e, 0], self.lin[e, 1])
        if kind == SINUSOIDAL:
            return SinusoidalProfile(ell, self.k_prime[e], self.sin[e])
        derivs = None if self.derivatives is None else self.derivatives[e]
        return SampledProfile(ell, self.samples[e], derivs)

    def profiles(self) -> List[EdgeProfile]:
        """Return all edge profiles."""
        return [self.profile(e) for e in range(self.graph.num_edges)]

    @property
    def m(self) -> Optional[int]:
        """Number of sampling sub-intervals, if any edge is sampled."""
        return None if self.samples is None else self.samples.shape[1] - 1

    # evaluation --------------------------------------------------------------

    def endpoint_values(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Values at the start (smaller vertex) and end (larger vertex) of every edge.

        Returns:
            Tuple[np.ndarray, np.ndarray]: Start and end values
        """
        start = np.where(self.kinds == LINEAR, self.lin[:, 0], self.sin[:, 1] + self.sin[:, 3])
        end = np.where(
            self.kinds == LINEAR, self.lin[:, 1], self.sin[:, 0] + self.sin[:, 2] + self.sin[:, 3]
        )
        if self.samples is not None:
            start = np.where(self.kinds == SAMPLED, self.samples[:, 0], start)
            end = np.where(self.kinds == SAMPLED, self.samples[:, -1], end)
        return start, end

    def evaluate(self, x: np.ndarray, order: int = 0, rows: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Evaluate profiles (order 0) or their derivatives (order 1) at shared points.

        Args:
            x (np.ndarray): Edge parameters in [0, ell], shape (M,)
            order (int): 0 for values, 1 for first derivatives
            rows (Optional[np.ndarray]): Edge indices to evaluate, default all

        Returns:
            np.ndarray: Shape (len(rows), M)

        Raises:
            MissingDerivativeError: If a sampled edge has no derivative samples
        """
        ell = self.graph.ell
        rows = np.arange(self.graph.num_edges) if rows is None else np.asarray(rows)
        x = np.asarray(x, dtype=float)
        out = np.zeros((len(rows), len(x)), dtype=complex)
        kinds = self.kinds[rows]

        sel = np.flatnonzero(kinds == LINEAR)
        if len(sel):
            start, end = self.lin[rows[sel], 0, None], self.lin[rows[sel], 1, None]
            out[sel] = (end - start) / ell + 0 * x if order else start + (end - start) * x / ell

        sel = np.flatnonzero(kinds == SINUSOIDAL)
        if len(sel):
            out[sel] = sinusoidal_values(self.k_prime[rows[sel]], self.sin[rows[sel]], ell, x, order)

        sel = np.flatnonzero(kinds == SAMPLED)
        if len(sel):
            if order and self.derivatives is None:
                raise MissingDerivativeError("sampled profiles carry no derivative samples")
            grid = np.linspace(0.0, ell, self.m + 1)
            derivs = None if self.derivatives is None else self.derivatives[rows[sel]].T
            spline = _interpolant(grid, self.samples[rows[sel]].T, derivs)
            out[sel] = spline(x, order).T if order else spline(x).T
        return out

    def to_sampled(self, m: int = DEFAULT_SAMPLES) -> "GraphFunction":
        """Resample every edge on m uniform sub-intervals, with derivatives."""
        t = np.linspace(0.0, self.graph.ell, m + 1)
        values = self.evaluate(t)
        derivs = None
        if self.derivatives is not None or not np.any(self.kinds == SAMPLED):
            derivs = self.evaluate(t, order=1)
        return GraphFunction.sampled(self.graph, values, derivs)

    # algebra -----------------------------------------------------------------

    def _check(self, other: "GraphFunction") -> None:
        if not self.graph.same_as(other.graph):
            raise IncompatibleSpacesError("graph functions live on different lattices")

    def scale(self, s: complex) -> "GraphFunction":
        """Multiply by a scalar."""
        return GraphFunction(
            self.graph,
            self.kinds,
            self.lin * s,
            self.sin * s,
            self.k_prime,
            None if self.samples is None else self.samples * s,
            None if self.derivatives is None else self.derivatives * s,
        )

    def combine(self, other: "GraphFunction", alpha: complex = 1.0, beta: complex = 1.0) -> "GraphFunction":
        """
        Return alpha * self + beta * other.

        Linear and sinusoidal edges combine exactly (a linear profile is a
        sinusoidal one with a = b = 0); any other pairing is resampled.
        """
        self._check(other)
        n_edges = self.graph.num_edges
        k1, k2 = self.kinds, other.kinds
        both_lin = (k1 == LINEAR) & (k2 == LINEAR)
        closed = (k1 != SAMPLED) & (k2 != SAMPLED)
        kp_compatible = (k1 == LINEAR) | (k2 == LINEAR) | (self.k_prime == other.k_prime)
        exact = closed & kp_compatible

        kinds = np.full(n_edges, SAMPLED, np.int8)
        kinds[exact] = SINUSOIDAL
        kinds[both_lin] = LINEAR
        lin = alpha * self.lin + beta * other.lin
        sin = alpha * _as_sin(self) + beta * _as_sin(other)
        kp = np.where(k1 == SINUSOIDAL, self.k_prime, other.k_prime)

        samples = derivs = None
        resample = np.flatnonzero(~exact)
        if len(resample):
            ms = [f.m for f in (self, other) if f.m is not None and np.any(f.kinds[resample] == SAMPLED)]
            m = DEFAULT_SAMPLES if not ms else int(np.lcm.reduce(ms))
            t = np.linspace(0.0, self.graph.ell, m + 1)
            samples = np.zeros((n_edges, m + 1), complex)
            samples[resample] = alpha * self.evaluate(t, rows=resample) + beta * other.evaluate(t, rows=resample)
            if _has_derivatives(self, resample) and _has_derivatives(other, resample):
                derivs = np.zeros((n_edges, m + 1), complex)
                derivs[resample] = alpha * self.evaluate(t, 1, resample) + beta * other.evaluate(t, 1, resample)
        return GraphFunction(self.graph, kinds, lin, sin, kp, samples, derivs)

    def __add__(self, other: "GraphFunction") -> "GraphFunction":
        return self.combine(other, 1.0, 1.0)

    def __sub__(self, other: "GraphFunction") -> "GraphFunction":
        return self.combine(other, 1.0, -1.0)

    def __mul__(self, scalar: complex) -> "GraphFunction":
        return self.scale(scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "GraphFunction":
        return self.scale(-1.0)

    # serialization -----------------------------------------------------------

    def to_text(self) -> str:
        """
        Serialize as one line per edge: edge id, variant, then payload.

        Complex numbers are written as real,imag pairs with repr precision.
        """
        lines = [f"# graph nu={self.graph.nu} ell={self.graph.ell!r} radius={self.graph.radius!r}"]
        for e in range(self.graph.num_edges):
            p = self.profile(e)
            if isinstance(p, LinearProfile):
                payload = [p.start, p.end]
            elif isinstance(p, SinusoidalProfile):
                payload = [p.k_prime, *p.coefficients]
            else:
                payload = list(p.values)
                if p.derivatives is not None:
                    payload += ["|"] + list(p.derivatives)
            tokens = [x if isinstance(x, str) else f"{x.real!r},{x.imag!r}" for x in payload]
            lines.append(" ".join([str(e), p.kind] + tokens))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, graph: LatticeGraph, text: str) -> "GraphFunction":
        """Parse the format written by to_text."""
        profiles: List[EdgeProfile] = []
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            _, kind, *tokens = line.split()
            if kind == "sampled" and "|" in tokens:
                cut = tokens.index("|")
                values, derivs = tokens[:cut], tokens[cut + 1:]
            else:
                values, derivs = tokens, None
            numbers = [_parse_complex(t) for t in values]
            if kind == "linear":
                profiles.append(LinearProfile(graph.ell, *numbers))
            elif kind == "sinusoidal":
                profiles.append(SinusoidalProfile(graph.ell, numbers[0], numbers[1:]))
            elif kind == "sampled":
                d = None if derivs is None else [_parse_complex(t) for t in derivs]
                profiles.append(SampledProfile(graph.ell, numbers, d))
            else:
                raise InvalidParameterError(f"unknown profile variant {kind!r}")
        return cls.from_profiles(graph, profiles)

    def __repr__(self) -> str:
        counts = {KIND_NAMES[k]: int(np.sum(self.kinds == k)) for k in KIND_NAMES}
        return f"GraphFunction(edges={self.graph.num_edges}, kinds={counts})"


def _parse_complex(token: str) -> complex:
    re_part, im_part = token.split(",")
    return complex(float(re_part), float(im_part))


def _as_sin(f: GraphFunction) -> np.ndarray:
    """Sinusoidal coefficients of every closed-form row, linear rows included."""
    lin_as_sin = np.stack(
        [np.zeros(len(f.kinds)), np.zeros(len(f.kinds)), f.lin[:, 1] - f.lin[:, 0], f.lin[:, 0]], axis=1
    )
    return np.where((f.kinds == LINEAR)[:, None], lin_as_sin, f.sin)


def _has_derivatives(f: GraphFunction, rows: np.ndarray) -> bool:
    return f.derivatives is not None or not np.any(f.kinds[rows] == SAMPLED)


# -- integrals ----------------------------------------------------------------


def _quadrature_nodes(ms: Sequence[int], ell: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on every sub-interval of the union of uniform grids."""
    m = 1
    for value in ms:
        m = m * value // gcd(m, value)
    xi, wi = gauss_legendre(QUADRATURE_ORDER)
    left = np.arange(m)[:, None]
    nodes = ((left + xi[None, :]) * ell / m).ravel()
    weights = np.tile(wi * ell / m, m)
    return nodes, weights


def edge_integrals(phi: GraphFunction, psi: GraphFunction, derivative: bool = False) -> np.ndarray:
    """
    Per-edge integrals of conj(phi) * psi (or of their derivatives) over [0, ell].

    Args:
        phi (GraphFunction): Left argument
        psi (GraphFunction): Right argument
        derivative (bool): Integrate the product of first derivatives instead

    Returns:
        np.ndarray: One complex integral per edge
    """
    if not phi.graph.same_as(psi.graph):
        raise IncompatibleSpacesError("graph functions live on different lattices")
    ell = phi.graph.ell
    out = np.zeros(phi.graph.num_edges, dtype=complex)
    closed = (phi.kinds != SAMPLED) & (psi.kinds != SAMPLED)

    rows = np.flatnonzero(closed)
    if len(rows):
        left = _exp_terms(phi.kinds[rows], phi.lin[rows], phi.sin[rows], phi.k_prime[rows], ell, derivative)
        right = _exp_terms(psi.kinds[rows], psi.lin[rows], psi.sin[rows], psi.k_prime[rows], ell, derivative)
        out[rows] = _exact_edge_inner(left, right, ell)

    rows = np.flatnonzero(~closed)
    if len(rows):
        ms = [f.m for f in (phi, psi) if f.m is not None]
        nodes, weights = _quadrature_nodes(ms, ell)
        order = 1 if derivative else 0
        left = phi.evaluate(nodes, order, rows)
        right = psi.evaluate(nodes, order, rows)
        out[rows] = (np.conj(left) * right) @ weights
    return out


def h1_inner(phi: GraphFunction, psi: GraphFunction) -> complex:
    """
    Graph space inner product (ell**(nu-1)/nu) sum over edges of the integral of conj(phi) psi.

    Args:
        phi (GraphFunction): Left argument (conjugated)
        psi (GraphFunction): Right argument

    Returns:
        complex: The inner product

    Raises:
        IncompatibleSpacesError: If the functions live on different graphs
    """
    return complex(phi.graph.edge_weight * np.sum(edge_integrals(phi, psi)))


def h1_norm(phi: GraphFunction) -> float:
    """Graph space norm."""
    return float(np.sqrt(max(h1_inner(phi, phi).real, 0.0)))


def derivative_norm(phi: GraphFunction) -> float:
    """Graph space norm of the edgewise derivative."""
    value = phi.graph.edge_weight * np.sum(edge_integrals(phi, phi, derivative=True)).real
    return float(np.sqrt(max(value, 0.0)))


def h1_sobolev_norm(phi: GraphFunction) -> float:
    """
    First-order Sobolev norm on the graph, with the graph space weight on both terms.

    Raises:
        MissingDerivativeError: If a sampled edge has no derivative samples
    """
    return float(np.hypot(h1_norm(phi), derivative_norm(phi)))


# -- identification operators -------------------------------------------------


def embed_I(u: VertexFunction) -> GraphFunction:
    """Embed vertex data by linear interpolation along every edge."""
    g = u.graph
    return GraphFunction.linear(g, u.values[g.edges[:, 0]], u.values[g.edges[:, 1]])


def continuity_defect(phi: GraphFunction) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reference value and largest incident discrepancy at every vertex.

    The reference value is the one of the first incident edge in edge order.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Reference values and discrepancies
    """
    g = phi.graph
    start, end = phi.endpoint_values()
    vertex_ids = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
    values = np.concatenate([start, end])
    position = np.concatenate([np.arange(g.num_edges), np.arange(g.num_edges)])
    order = np.lexsort((position, vertex_ids))[::-1]
    reference = np.zeros(g.num_vertices, dtype=complex)
    reference[vertex_ids[order]] = values[order]
    defect = np.zeros(g.num_vertices)
    np.maximum.at(defect, vertex_ids, np.abs(values - reference[vertex_ids]))
    return reference, defect


def trace_K(phi: GraphFunction, tolerance: float = CONTINUITY_TOLERANCE) -> VertexFunction:
    """
    Vertex trace of a continuous graph function.

    Args:
        phi (GraphFunction): A function continuous at every vertex
        tolerance (float): Absolute tolerance for unit-scale data; it grows
            with the largest endpoint magnitude

    Returns:
        VertexFunction: The common incident value at each vertex

    Raises:
        NotInH1Error: With the worst vertex and its discrepancy
    """
    reference, defect = continuity_defect(phi)
    scale = max(1.0, float(np.max(np.abs(reference), initial=0.0)))
    worst = int(np.argmax(defect)) if len(defect) else 0
    if len(defect) and defect[worst] > tolerance * scale:
        raise NotInH1Error(worst, defect[worst], tolerance * scale)
    return VertexFunction(phi.graph, reference)


def weighted_integrals(phi: GraphFunction) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-edge integrals of (1 - t/ell) phi and (t/ell) phi.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Weights toward the start and end vertex
    """
    g = phi.graph
    toward_start = GraphFunction.linear(g, 1.0, 0.0)
    toward_end = GraphFunction.linear(g, 0.0, 1.0)
    return edge_integrals(toward_start, phi), edge_integrals(toward_end, phi)


def sinusoidal_weighted_integrals(kp: np.ndarray, coef: np.ndarray, ell: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrals of (1 - t/ell) f and (t/ell) f for detached sinusoidal profiles.

    Args:
        kp (np.ndarray): Wavenumbers, shape (R,)
        coef (np.ndarray): Coefficients (a, b, c, d), shape (R, 4)
        ell (float): Edge length

    Returns:
        Tuple[np.ndarray, np.ndarray]: Weights toward the start and end of each profile
    """
    rows = len(kp)
    kinds = np.full(rows, SINUSOIDAL, np.int8)
    no_lin = np.zeros((rows, 2), complex)
    profile = _exp_terms(kinds, no_lin, np.asarray(coef, complex), np.asarray(kp, complex), ell, False)
    linear = np.full(rows, LINEAR, np.int8)
    no_sin = np.zeros((rows, 4), complex)
    zero_kp = np.zeros(rows, complex)
    start_weight = _exp_terms(linear, np.tile([1.0, 0.0], (rows, 1)), no_sin, zero_kp, ell, False)
    end_weight = _exp_terms(linear, np.tile([0.0, 1.0], (rows, 1)), no_sin, zero_kp, ell, False)
    return _exact_edge_inner(start_weight, profile, ell), _exact_edge_inner(end_weight, profile, ell)


def adjoint_Istar(phi: GraphFunction) -> VertexFunction:
    """
    Adjoint of the linear interpolation embedding.

    (I* phi)_j = 1/(nu ell) * sum over incident edges of the integral of
    (1 - t/ell) phi_jn(t), with t measured from j.
    """
    g = phi.graph
    at_start, at_end = weighted_integrals(phi)
    total = np.zeros(g.num_vertices, dtype=complex)
    np.add.at(total, g.edges[:, 0], at_start)
    np.add.at(total, g.edges[:, 1], at_end)
    return VertexFunction(g, total / (g.nu * g.ell))


# -- operator estimates -------------------------------------------------------


def _sobolev_denominator(phi: GraphFunction) -> float:
    denominator = h1_sobolev_norm(phi)
    if denominator == 0.0:
        raise UndefinedRatioError("the probe has zero Sobolev norm")
    return denominator


def interpolation_trace_check(phi: GraphFunction) -> Tuple[float, float]:
    """
    Measure the interpolation-of-trace defect against its bound.

    Returns:
        Tuple[float, float]: ||IK phi - phi|| / ||phi||_H1 and the bound ell

    Raises:
        UndefinedRatioError: For a zero probe
        NotInH1Error: For a discontinuous probe
    """
    denominator = _sobolev_denominator(phi)
    defect = embed_I(trace_K(phi)) - phi
    return h1_norm(defect) / denominator, phi.graph.ell


def adjoint_trace_check(phi: GraphFunction) -> Tuple[float, float]:
    """
    Measure the adjoint-versus-trace defect against its bound.

    The defect is measured on interior vertices, where every lattice
    coupling lies inside the box.

    Returns:
        Tuple[float, float]: ||I* phi - K phi|| / ||phi||_H1 and the bound ell/sqrt(5)
    """
    denominator = _sobolev_denominator(phi)
    defect = (adjoint_Istar(phi) - trace_K(phi)).restrict(interior_mask(phi.graph))
    return defect.norm() / denominator, phi.graph.ell / np.sqrt(5.0)


def interpolation_adjoint_ratio(phi: GraphFunction) -> float:
    """Measure ||I I* phi - phi|| / ||phi||_H1."""
    denominator = _sobolev_denominator(phi)
    return h1_norm(embed_I(adjoint_Istar(phi)) - phi) / denominator
