"""
The quantum graph Hamiltonian nu H1 on the lattice graph.

nu H1 acts as -nu psi'' on every edge with delta couplings
sum of outward derivatives = alpha_j psi_j, alpha_j = ell V_j, at the vertices.
Its resolvent is realized through the closed-form edge solution: eliminating
the edge profiles leaves the vertex system

    (H2 - z + M1) K psi = (1 + M2) phi

for psi = (nu H1 - z)^-1 I phi. The lattice is truncated with Dirichlet stubs:
every missing neighbour of a boundary vertex is an exterior vertex where
psi = phi = 0, joined by a full-length edge.
"""
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from attrs import define, field
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh, splu

from .discrete import DENSE_LIMIT, ResolventSolver, SparseOperator, assemble_h2, assemble_laplacian
from .entire import cosc, even_real, sigma, sinc
from .errors import (
    ConsistencyFailureError,
    EdgeSingularError,
    InvalidIntervalError,
    InvalidParameterError,
    NonConvergenceError,
    ResolventSingularError,
)
from .lattice import LatticeGraph
from .potentials import Potential, vertex_couplings
from .spaces import (
    SINUSOIDAL,
    GraphFunction,
    SinusoidalProfile,
    VertexFunction,
    adjoint_Istar,
    embed_I,
    h1_norm,
    sinusoidal_values,
    sinusoidal_weighted_integrals,
)
from .spectral import SpectrumSlice, eigenpairs

logger = logging.getLogger(__name__)

EDGE_SINGULAR_TOLERANCE = 1e-12
VERTEX_RESIDUAL_TOLERANCE = 1e-8
ODE_RESIDUAL_TOLERANCE = 1e-10
WINDOW_FRACTION = 0.9
SECULAR_MAX_ITER = 500


@define(frozen=True)
class ResolventParams:
    """
    Spectral parameter z = k**2 with the edge wavenumber k' = k / sqrt(nu).

    Attributes:
        z (complex): Spectral parameter
        k (complex): Principal square root of z
        k_prime (complex): k / sqrt(nu)
        ell (float): Edge length
        nu (int): Dimension
    """

    z: complex = field(converter=complex)
    k: complex = field(converter=complex)
    k_prime: complex = field(converter=complex)
    ell: float = field(converter=float)
    nu: int = field(converter=int)

    @property
    def w(self) -> complex:
        """The edge phase k' ell."""
        return self.k_prime * self.ell

    @property
    def conjugate(self) -> "ResolventParams":
        """Parameters at conj(z)."""
        return resolvent_params(self.z.conjugate(), self.ell, self.nu)


def resolvent_params(z: complex, ell: float, nu: int) -> ResolventParams:
    """
    Validate z and derive k and k'.

    Args:
        z (complex): Spectral parameter, nonzero
        ell (float): Edge length
        nu (int): Dimension

    Returns:
        ResolventParams: The parameters

    Raises:
        InvalidParameterError: If z = 0 or ell <= 0
        EdgeSingularError: If sin(k' ell) vanishes (z hits the Dirichlet spectrum of an edge)
    """
    z = complex(z)
    if z == 0:
        raise InvalidParameterError("z = 0 is not supported by the edge resolvent")
    if ell <= 0 or nu < 1:
        raise InvalidParameterError(f"invalid edge length {ell} or dimension {nu}")
    k = np.sqrt(z)
    k_prime = k / np.sqrt(nu)
    w = k_prime * ell
    if abs(w) >= 1.0 and abs(np.sin(w)) <= EDGE_SINGULAR_TOLERANCE * abs(w):
        raise EdgeSingularError(
            f"sin(k'ell) = {np.sin(w):.3e} at z = {z}: z hits the Dirichlet spectrum of an edge"
        )
    return ResolventParams(z, k, k_prime, ell, nu)


# -- single edge ----------------------------------------------------------------


def edge_resolvent_coefficients(psi_j, psi_n, phi_j, phi_n, p: ResolventParams) -> np.ndarray:
    """
    Coefficients (a, b, c, d) of the edge solution, vectorized over edges.

    The profile a S1 + b S2 + c x/ell + d solves -nu psi'' - k**2 psi = I phi
    with psi(0) = psi_j and psi(ell) = psi_n.

    Returns:
        np.ndarray: Shape (..., 4)
    """
    psi_j, psi_n, phi_j, phi_n = (np.asarray(x, dtype=complex) for x in (psi_j, psi_n, phi_j, phi_n))
    inv_k2 = 1.0 / p.z
    a = psi_n + phi_n * inv_k2
    b = psi_j + phi_j * inv_k2
    c = (phi_j - phi_n) * inv_k2
    d = -phi_j * inv_k2
    return np.stack(np.broadcast_arrays(a, b, c, d), axis=-1)


def edge_resolvent_solution(psi_j, psi_n, phi_j, phi_n, p: ResolventParams) -> SinusoidalProfile:
    """
    Solve the edge equation -nu psi'' - k**2 psi = I phi with prescribed endpoint values.

    Args:
        psi_j (complex): Value at the start vertex
        psi_n (complex): Value at the end vertex
        phi_j (complex): Right-hand side vertex value at the start
        phi_n (complex): Right-hand side vertex value at the end
        p (ResolventParams): Spectral parameters

    Returns:
        SinusoidalProfile: The edge solution
    """
    coef = edge_resolvent_coefficients(psi_j, psi_n, phi_j, phi_n, p)
    return SinusoidalProfile(p.ell, p.k_prime, coef)


def edge_derivative_at_origin(psi_j, psi_n, phi_j, phi_n, p: ResolventParams):
    """
    Derivative at x = 0 of the edge solution, vectorized.

    Written through sinc, cosc and sigma so that the small-phase limit
    (psi_n - psi_j)/ell is reached without cancellation.

    Returns:
        complex or np.ndarray: psi'(0)
    """
    psi_j, psi_n, phi_j, phi_n = (np.asarray(x, dtype=complex) for x in (psi_j, psi_n, phi_j, phi_n))
    w = p.w
    ell2_nu = p.ell ** 2 / p.nu
    cw = cosc(w)
    numerator = (
        (psi_n - psi_j)
        + 0.5 * w * w * cw * psi_j
        - ell2_nu * sigma(w) * (phi_n - phi_j)
        + 0.5 * ell2_nu * cw * phi_j
    )
    out = numerator / (p.ell * sinc(w))
    return complex(out) if np.ndim(out) == 0 else out


# -- correction operators -------------------------------------------------------


@define(frozen=True)
class CorrectionOperators:
    """
    The perturbations M1 (diagonal) and M2 (lattice stencil) of the vertex system.

    Attributes:
        m1 (SparseOperator): (sinc(w) - 1) V_j - k**2 (cosc(w) - 1) on the diagonal
        m2 (SparseOperator): -(sigma(w)/nu) sum (phi_n - phi_j) + (cosc(w) - 1) phi_j
        params (ResolventParams): Spectral parameters
    """

    m1: SparseOperator
    m2: SparseOperator
    params: ResolventParams


def assemble_corrections(g: LatticeGraph, v: Potential, p: ResolventParams) -> CorrectionOperators:
    """
    Assemble M1 and M2 for a spectral parameter.

    Args:
        g (LatticeGraph): The lattice
        v (Potential): The potential
        p (ResolventParams): Spectral parameters

    Returns:
        CorrectionOperators: The two operators
    """
    w = p.w
    s, c = complex(sinc(w)), complex(cosc(w))
    potential = vertex_couplings(v, g) / g.ell
    m1 = sp.diags((s - 1.0) * potential - p.z * (c - 1.0)).astype(complex)
    # sum over neighbours of (phi_n - phi_j) is ell**2 Delta_d phi
    laplacian = assemble_laplacian(g).entries
    m2 = -(complex(sigma(w)) * g.ell ** 2 / g.nu) * laplacian + (c - 1.0) * sp.identity(g.num_vertices)
    return CorrectionOperators(SparseOperator(g, m1, "M1"), SparseOperator(g, m2.astype(complex), "M2"), p)


# -- graph resolvent ------------------------------------------------------------


class GraphResolvent:
    """
    The resolvent of nu H1 at one spectral parameter, with every factorization reused.

    Attributes:
        graph (LatticeGraph): The lattice
        potential (Potential): The potential
        params (ResolventParams): Spectral parameters
        h2 (SparseOperator): The discrete operator
        corrections (CorrectionOperators): M1 and M2
    """

    def __init__(self, g: LatticeGraph, v: Potential, p: ResolventParams, h2: Optional[SparseOperator] = None):
        if p.nu != g.nu or p.ell != g.ell:
            raise InvalidParameterError("resolvent parameters do not match the lattice")
        self.graph = g
        self.potential = v
        self.params = p
        self.h2 = assemble_h2(g, v) if h2 is None else h2
        self.corrections = assemble_corrections(g, v, p)
        self.alpha = vertex_couplings(v, g)
        self._vertex_solver: Optional[ResolventSolver] = None

    @property
    def vertex_solver(self) -> ResolventSolver:
        """Factorization of H2 - z + M1."""
        if self._vertex_solver is None:
            matrix = self.h2.entries + self.corrections.m1.entries
            try:
                self._vertex_solver = ResolventSolver(matrix, self.params.z, "H2 + M1")
            except ResolventSingularError as e:
                logger.error("Vertex system is singular at ell=%g, z=%s", self.graph.ell, self.params.z)
                raise ResolventSingularError(
                    f"{e}; try a smaller ell or a different z"
                ) from e
        return self._vertex_solver

    def apply_one_plus_m2(self, values: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """(1 + M2) phi, or its adjoint."""
        m2 = self.corrections.m2.entries
        if adjoint:
            return values + m2.conj() @ values
        return values + m2 @ values

    def sandwich(self, values: np.ndarray) -> np.ndarray:
        """K (nu H1 - z)^-1 I on raw vertex values."""
        return self.vertex_solver.solve(self.apply_one_plus_m2(values))

    def sandwich_adjoint(self, values: np.ndarray) -> np.ndarray:
        """Adjoint of sandwich on raw vertex values."""
        return self.apply_one_plus_m2(self.vertex_solver.solve(values, adjoint=True), adjoint=True)

    def edge_coefficients(self, w: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Sinusoidal coefficients on every in-box edge."""
        e0, e1 = self.graph.edges[:, 0], self.graph.edges[:, 1]
        return edge_resolvent_coefficients(w[e0], w[e1], phi[e0], phi[e1], self.params)

    def stub_coefficients(self, w: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Sinusoidal coefficients of the stub leaving every vertex (exterior end at x = ell)."""
        zero = np.zeros_like(w)
        return edge_resolvent_coefficients(w, zero, phi, zero, self.params)

    def outward_derivative_sums(self, w: np.ndarray, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Sum and absolute sum of outward derivatives at every vertex, stubs included.

        Returns:
            Tuple[np.ndarray, np.ndarray]: Signed sums and sums of magnitudes
        """
        g, p = self.graph, self.params
        e0, e1 = g.edges[:, 0], g.edges[:, 1]
        at_start = edge_derivative_at_origin(w[e0], w[e1], phi[e0], phi[e1], p)
        at_end = edge_derivative_at_origin(w[e1], w[e0], phi[e1], phi[e0], p)
        stub = edge_derivative_at_origin(w, 0.0, phi, 0.0, p) * g.missing

        total = stub.astype(complex)
        magnitude = np.abs(stub)
        np.add.at(total, e0, at_start)
        np.add.at(total, e1, at_end)
        np.add.at(magnitude, e0, np.abs(at_start))
        np.add.at(magnitude, e1, np.abs(at_end))
        return total, magnitude

    def reconstruct(self, phi: np.ndarray, check: bool = True) -> Tuple[np.ndarray, GraphFunction]:
        """
        Vertex values and edge profiles of (nu H1 - z)^-1 I phi.

        Args:
            phi (np.ndarray): Vertex values
            check (bool): Verify the vertex condition and the edge equation

        Returns:
            Tuple[np.ndarray, GraphFunction]: K psi and psi on the in-box edges

        Raises:
            ConsistencyFailureError: If the vertex condition or the edge equation fails
        """
        phi = np.asarray(phi, dtype=complex)
        w = self.sandwich(phi)
        coef = self.edge_coefficients(w, phi)
        psi = GraphFunction.sinusoidal(self.graph, self.params.k_prime, coef)
        if check:
            self.check_vertex_condition(w, phi)
            self.check_edge_equation(psi, phi)
        return w, psi

    def check_vertex_condition(self, w: np.ndarray, phi: np.ndarray) -> float:
        """
        Relative residual of sum psi'_jn(j) = alpha_j psi_j over all vertices.

        Raises:
            ConsistencyFailureError: Above VERTEX_RESIDUAL_TOLERANCE
        """
        total, magnitude = self.outward_derivative_sums(w, phi)
        coupling = self.alpha * w
        scale = np.max(magnitude + np.abs(coupling) + 2 * self.graph.nu * np.abs(w) / self.graph.ell, initial=0.0)
        if scale == 0.0:
            return 0.0
        residual = float(np.max(np.abs(total - coupling)) / scale)
        if residual > VERTEX_RESIDUAL_TOLERANCE:
            logger.error("Vertex condition residual %.3e at ell=%g", residual, self.graph.ell)
            raise ConsistencyFailureError("reconstructed resolvent violates the vertex condition", residual)
        return residual

    def check_edge_equation(self, psi: GraphFunction, phi: np.ndarray, points: int = 20) -> float:
        """
        Relative residual of -nu psi'' - k**2 psi - I phi at interior edge points.

        Raises:
            ConsistencyFailureError: Above ODE_RESIDUAL_TOLERANCE
        """
        g, p = self.graph, self.params
        x = np.linspace(0.0, g.ell, points + 2)[1:-1]
        values = sinusoidal_values(psi.k_prime, psi.sin, g.ell, x, 0)
        second = sinusoidal_values(psi.k_prime, psi.sin, g.ell, x, 2)
        forcing = embed_I(VertexFunction(g, phi)).evaluate(x)
        terms = [np.abs(p.nu * second), np.abs(p.z * values), np.abs(forcing)]
        scale = max(float(np.max(t, initial=0.0)) for t in terms)
        if scale == 0.0:
            return 0.0
        residual = float(np.max(np.abs(-p.nu * second - p.z * values - forcing)) / scale)
        if residual > ODE_RESIDUAL_TOLERANCE:
            raise ConsistencyFailureError("edge profiles violate the edge equation", residual)
        return residual

    def istar(self, w: np.ndarray, phi: np.ndarray, psi: GraphFunction) -> np.ndarray:
        """
        I* psi on the truncated graph, stub contributions included.

        Args:
            w (np.ndarray): Vertex values of psi
            phi (np.ndarray): Vertex values of the right-hand side
            psi (GraphFunction): Profiles on the in-box edges

        Returns:
            np.ndarray: Vertex values
        """
        g = self.graph
        inbox = adjoint_Istar(psi).values
        stub_coef = self.stub_coefficients(w, phi)
        at_vertex, _ = sinusoidal_weighted_integrals(np.full(len(w), self.params.k_prime), stub_coef, g.ell)
        return inbox + g.missing * at_vertex / (g.nu * g.ell)

    def istar_form(self, phi: np.ndarray) -> np.ndarray:
        """I* (nu H1 - z)^-1 I on raw vertex values."""
        w, psi = self.reconstruct(phi, check=False)
        return self.istar(w, np.asarray(phi, dtype=complex), psi)


def sandwiched_resolvent(g: LatticeGraph, v: Potential, p: ResolventParams, phi: VertexFunction) -> VertexFunction:
    """
    Compute K (nu H1 - z)^-1 I phi from the vertex system.

    Args:
        g (LatticeGraph): The lattice
        v (Potential): The potential
        p (ResolventParams): Spectral parameters
        phi (VertexFunction): Vertex data

    Returns:
        VertexFunction: w solving (H2 - z + M1) w = (1 + M2) phi

    Raises:
        ResolventSingularError: If the vertex system is singular
    """
    return VertexFunction(g, GraphResolvent(g, v, p).sandwich(phi.values))


def reconstruct_graph_resolvent(g: LatticeGraph, v: Potential, p: ResolventParams, phi: VertexFunction) -> GraphFunction:
    """
    Build (nu H1 - z)^-1 I phi as sinusoidal profiles on every edge.

    The result is checked for the vertex condition and the edge equation.

    Raises:
        ConsistencyFailureError: If a check fails
        ResolventSingularError: If the vertex system is singular
    """
    _, psi = GraphResolvent(g, v, p).reconstruct(phi.values)
    return psi


# -- secular eigenvalues --------------------------------------------------------


def validity_cap(g: LatticeGraph) -> float:
    """Upper end of the secular search window, below the first edge resonance."""
    return WINDOW_FRACTION * g.nu * (np.pi / g.ell) ** 2


def _secular_matrix(laplacian: sp.spmatrix, potential: np.ndarray, lam: float, g: LatticeGraph) -> sp.spmatrix:
    u = lam * g.ell ** 2 / g.nu
    return -laplacian + sp.diags(float(even_real(sinc, u)) * potential)


def seed_window(g: LatticeGraph, potential: np.ndarray, low: float, high: float) -> Tuple[float, float]:
    """
    H2 window holding the seed of every secular eigenvalue in [low, high].

    A root lambda satisfies lambda cosc(w) = mu_i(-Delta_d + sinc(w) V), and
    cosc(w) is decreasing in w**2, so the matching H2 eigenvalue lies in
    [low cosc(w_low), high] up to the Weyl shift |1 - sinc(w)| max |V|.
    """
    cap = validity_cap(g)
    u_low, u_cap = low * g.ell ** 2 / g.nu, cap * g.ell ** 2 / g.nu
    scale = float(even_real(cosc, u_low)) if low < 0 else float(even_real(cosc, u_cap))
    drift = max(abs(1.0 - float(even_real(sinc, u))) for u in (min(u_low, 0.0), u_cap))
    spread = drift * float(np.max(np.abs(potential), initial=0.0))
    margin = 1e-6 * max(1.0, abs(low), abs(high))
    return low * scale - spread - margin, min(high + spread + margin, cap)


def _tracked_eigenpair(
    matrix: sp.spmatrix, target: float, previous: np.ndarray, hint: int
) -> Tuple[float, np.ndarray, int]:
    """Eigenpair of a symmetric matrix continuing `previous`, preferring eigenvalues near target."""
    n = matrix.shape[0]
    if n <= DENSE_LIMIT:
        values, vectors = eigh(matrix.toarray())
        indices = np.arange(n)
    else:
        k = min(8, n - 1)
        values, vectors = eigsh(matrix, k=k, sigma=target, which="LM", v0=previous)
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
        indices = np.full(len(values), hint)
    overlap = np.abs(vectors.T @ previous)
    candidates = np.flatnonzero(overlap >= 0.5 * overlap.max())
    gaps = np.abs(values[candidates] - target)
    close = candidates[gaps <= gaps.min() + 1e-10 * max(1.0, abs(target))]
    best = close[np.argmin(np.abs(indices[close] - hint))] if len(close) > 1 else candidates[np.argmin(gaps)]
    return float(values[best]), vectors[:, best], int(indices[best])


def secular_eigenvalues(
    g: LatticeGraph,
    v: Potential,
    search_interval: Tuple[float, float],
    tol: float = 1e-12,
    max_iter: int = SECULAR_MAX_ITER,
) -> List[Tuple[float, VertexFunction]]:
    """
    Eigenvalues of nu H1 in a window from the secular vertex problem.

    lambda is an eigenvalue iff T(lambda) = -Delta_d + sinc(w) diag(V) has the
    eigenvalue lambda cosc(w), w**2 = lambda ell**2 / nu. Each root is found by
    the fixed-point iteration lambda <- mu_i(T(lambda)) / cosc(w), seeded from
    the matching eigenvalue of H2.

    Args:
        g (LatticeGraph): The lattice
        v (Potential): The potential
        search_interval (Tuple[float, float]): Closed window (low, high)
        tol (float): Fixed-point tolerance on |lambda_{m+1} - lambda_m|
        max_iter (int): Iteration budget per eigenvalue

    Returns:
        List[Tuple[float, VertexFunction]]: Sorted eigenvalues with vertex vectors
        of unit vertex-space norm, first nonzero component positive

    Raises:
        InvalidIntervalError: If the window is malformed or reaches the edge resonance
        NonConvergenceError: If an iteration does not converge
    """
    low, high = (float(x) for x in search_interval)
    cap = validity_cap(g)
    if not low <= high:
        raise InvalidIntervalError(f"malformed search interval ({low}, {high})")
    if high >= cap:
        raise InvalidIntervalError(f"search interval reaches {high:g} >= {cap:g}, the edge resonance threshold")
    if tol <= 0:
        raise InvalidParameterError("tolerance must be positive")

    h2 = assemble_h2(g, v)
    laplacian = assemble_laplacian(g).entries
    potential = vertex_couplings(v, g) / g.ell
    seeds = eigenpairs(h2, seed_window(g, potential, low, high), check_boundaries=False)
    if not len(seeds.eigenvalues):
        return []

    results: List[Tuple[float, VertexFunction]] = []
    for i, (lam, vec) in enumerate(zip(seeds.eigenvalues, seeds.eigenvectors.T)):
        hint = seeds.first_index + i
        history = [float(lam)]
        converged = False
        for _ in range(max_iter):
            u = lam * g.ell ** 2 / g.nu
            c = float(even_real(cosc, u))
            mu, vec, hint = _tracked_eigenpair(_secular_matrix(laplacian, potential, lam, g), lam * c, vec, hint)
            new = mu / c
            history.append(new)
            if new >= cap:
                logger.warning("Secular iterate %.6g left the validity window; seed dropped", new)
                break
            if abs(new - lam) < tol * max(1.0, abs(new)):
                lam, converged = new, True
                break
            lam = new
        else:
            raise NonConvergenceError(f"secular iteration from seed {history[0]:.10g} did not converge", history)
        if converged and low <= lam <= high:
            results.append((lam, _normalize_vertex_vector(g, vec)))

    results.sort(key=lambda r: r[0])
    logger.info("Found %d secular eigenvalues in [%g, %g] at ell=%g", len(results), low, high, g.ell)
    return results


def _normalize_vertex_vector(g: LatticeGraph, vec: np.ndarray) -> VertexFunction:
    vec = np.asarray(vec, dtype=complex)
    vec = vec / (np.linalg.norm(vec) * np.sqrt(g.cell_volume))
    nonzero = np.flatnonzero(np.abs(vec) > 1e-12 * np.abs(vec).max())
    first = vec[nonzero[0]]
    vec = vec * (abs(first) / first)
    return VertexFunction(g, vec.real if np.allclose(vec.imag, 0.0) else vec)


def secular_slice(g: LatticeGraph, v: Potential, window: Tuple[float, float], tol: float = 1e-12) -> SpectrumSlice:
    """Secular eigenpairs packed as a spectrum slice over the vertex space."""
    pairs = secular_eigenvalues(g, v, window, tol)
    vectors = np.array([w.values for _, w in pairs]).T if pairs else np.zeros((g.num_vertices, 0))
    return SpectrumSlice(
        eigenvalues=np.array([lam for lam, _ in pairs]),
        eigenvectors=vectors * np.sqrt(g.cell_volume),
        window=tuple(window),
        operator_label="nuH1",
    )


def graph_eigenfunction(g: LatticeGraph, lam: float, vertex_vector: VertexFunction) -> GraphFunction:
    """
    The eigenfunction of nu H1 with vertex values `vertex_vector`, unit norm on the in-box edges.

    Args:
        g (LatticeGraph): The lattice
        lam (float): Secular eigenvalue
        vertex_vector (VertexFunction): Matching vertex vector

    Returns:
        GraphFunction: Sinusoidal profiles with wavenumber sqrt(lam / nu)
    """
    p = resolvent_params(lam, g.ell, g.nu)
    w = vertex_vector.values
    coef = edge_resolvent_coefficients(w[g.edges[:, 0]], w[g.edges[:, 1]], 0.0, 0.0, p)
    psi = GraphFunction.sinusoidal(g, p.k_prime, coef)
    norm = h1_norm(psi)
    return psi.scale(1.0 / norm) if norm > 0 else psi


def eigenfunction_mapping(g: LatticeGraph, eigenvalues: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    """
    Map secular vertex vectors to I* of their graph eigenfunctions.

    The returned callable takes and returns (N, k) arrays.
    """

    def mapping(vectors: np.ndarray) -> np.ndarray:
        columns = []
        for lam, column in zip(eigenvalues, np.asarray(vectors).T):
            psi = graph_eigenfunction(g, lam, VertexFunction(g, column))
            columns.append(adjoint_Istar(psi).values)
        return np.array(columns).T if columns else np.zeros((g.num_vertices, 0))

    return mapping


# -- finite-element oracle -------------------------------------------------------


@define(frozen=True)
class FemSolution:
    """
    P1 finite-element solution on every in-box edge.

    Attributes:
        vertex_values (np.ndarray): Values at the lattice vertices
        edge_values (np.ndarray): Nodal values per edge, shape (E, n + 1)
        subdivisions (int): Elements per edge
    """

    vertex_values: np.ndarray
    edge_values: np.ndarray
    subdivisions: int


def metric_graph_fem_resolvent(
    g: LatticeGraph, v: Potential, z: complex, phi: VertexFunction, subdivisions: int = 64
) -> FemSolution:
    """
    Solve (nu H1 - z) psi = I phi with P1 elements on every edge and stub.

    The delta couplings enter through the form nu (||psi'||**2 + sum alpha_j |psi_j|**2).

    Args:
        g (LatticeGraph): The lattice
        v (Potential): The potential
        z (complex): Spectral parameter
        phi (VertexFunction): Vertex data
        subdivisions (int): Elements per edge

    Returns:
        FemSolution: Nodal values
    """
    n = int(subdivisions)
    if n < 1:
        raise InvalidParameterError("subdivisions must be positive")
    n_vertices, n_edges = g.num_vertices, g.num_edges
    stub_owner = np.repeat(np.arange(n_vertices), g.missing)
    n_chains = n_edges + len(stub_owner)
    ground = n_vertices + n_chains * (n - 1)

    nodes = np.empty((n_chains, n + 1), dtype=np.int64)
    nodes[:, 1:n] = n_vertices + np.arange(n_chains * (n - 1)).reshape(n_chains, n - 1)
    nodes[:n_edges, 0], nodes[:n_edges, n] = g.edges[:, 0], g.edges[:, 1]
    nodes[n_edges:, 0], nodes[n_edges:, n] = stub_owner, ground

    t = np.linspace(0.0, 1.0, n + 1)
    phi_values = np.asarray(phi.values, dtype=complex)
    start = np.concatenate([phi_values[g.edges[:, 0]], phi_values[stub_owner]])
    end = np.concatenate([phi_values[g.edges[:, 1]], np.zeros(len(stub_owner))])
    forcing = start[:, None] + (end - start)[:, None] * t

    h = g.ell / n
    local_k = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
    local_m = np.array([[2.0, 1.0], [1.0, 2.0]]) * h / 6.0
    left, right = nodes[:, :-1].ravel(), nodes[:, 1:].ravel()
    pairs = np.stack([left, right], axis=1)
    rows = np.repeat(pairs, 2, axis=1).ravel()
    cols = np.tile(pairs, (1, 2)).ravel()
    local = g.nu * local_k - z * local_m
    size = ground + 1
    matrix = sp.coo_matrix((np.tile(local.ravel(), len(pairs)), (rows, cols)), shape=(size, size)).tocsr()
    matrix = matrix + sp.coo_matrix(
        (g.nu * vertex_couplings(v, g), (np.arange(n_vertices), np.arange(n_vertices))), shape=(size, size)
    )

    f_left, f_right = forcing[:, :-1].ravel(), forcing[:, 1:].ravel()
    load = np.zeros(size, dtype=complex)
    np.add.at(load, left, local_m[0, 0] * f_left + local_m[0, 1] * f_right)
    np.add.at(load, right, local_m[1, 0] * f_left + local_m[1, 1] * f_right)

    free = slice(0, ground)
    solution = np.zeros(size, dtype=complex)
    solution[free] = splu(sp.csc_matrix(matrix[free, free], dtype=complex)).solve(load[free])
    logger.debug("FEM oracle solved %d unknowns", ground)
    return FemSolution(solution[:n_vertices], solution[nodes[:n_edges]], n)


def fem_distance(solution: FemSolution, psi: GraphFunction) -> float:
    """
    Graph space distance between a FEM solution and a graph function.

    The error is interpolated linearly between the FEM nodes and integrated exactly.
    """
    g = psi.graph
    n = solution.subdivisions
    t = np.linspace(0.0, g.ell, n + 1)
    error = solution.edge_values - psi.evaluate(t)
    h = g.ell / n
    left, right = error[:, :-1], error[:, 1:]
    squares = (h / 3.0) * (np.abs(left) ** 2 + np.real(np.conj(left) * right) + np.abs(right) ** 2)
    return float(np.sqrt(g.edge_weight * np.sum(squares)))
