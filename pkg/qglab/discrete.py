"""
The discrete Schrodinger operator H2 = -Delta_d + V on a truncated lattice.

Truncation is of Dirichlet type: a missing neighbour contributes (0 - u_j),
so every row keeps the full 2 nu / ell**2 diagonal.
"""
import logging
from collections import OrderedDict
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigvalsh
from scipy.sparse.linalg import LinearOperator, eigsh, gmres, spilu, splu

from .errors import ResolventSingularError
from .lattice import LatticeGraph
from .norms import DEFAULT_MAX_ITER, DEFAULT_TOLERANCE, power_iteration
from .potentials import Potential, sample_on_vertices
from .spaces import VertexFunction

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-10
SINGULAR_DISTANCE = 1e-8
DIRECT_LIMIT = 100_000
DENSE_LIMIT = 400
SOLVER_CACHE_SIZE = 4


class SparseOperator:
    """
    A symmetric sparse matrix acting on vertex functions.

    Attributes:
        graph (LatticeGraph): The lattice defining the vertex ordering
        entries (sp.csr_matrix): The matrix
        label (str): Identifier used in logs and exports
    """

    def __init__(self, graph: LatticeGraph, entries: sp.spmatrix, label: str):
        self.graph = graph
        self.entries = sp.csr_matrix(entries)
        self.label = label
        self._solvers: "OrderedDict[complex, ResolventSolver]" = OrderedDict()

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def apply(self, u: VertexFunction) -> VertexFunction:
        """Matrix action on a vertex function."""
        return VertexFunction(self.graph, self.entries @ u.values)

    def dense(self) -> np.ndarray:
        """Dense copy of the matrix."""
        return self.entries.toarray()

    def resolvent(self, z: complex) -> "ResolventSolver":
        """
        Factorization of (A - z) reused across solves.

        Args:
            z (complex): Spectral parameter

        Only the SOLVER_CACHE_SIZE most recently used factorizations are kept.

        Returns:
            ResolventSolver: Cached solver for this z
        """
        z = complex(z)
        if z in self._solvers:
            self._solvers.move_to_end(z)
            return self._solvers[z]
        solver = ResolventSolver(self.entries, z, self.label)
        self._solvers[z] = solver
        if len(self._solvers) > SOLVER_CACHE_SIZE:
            evicted, _ = self._solvers.popitem(last=False)
            logger.debug("%s: dropped resolvent factorization at z=%s", self.label, evicted)
        return solver

    def to_triplets(self) -> str:
        """
        Plain-text export, one `row col value` line per stored entry.

        Complex entries are written as value_real value_imag.
        """
        coo = self.entries.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = []
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            if np.iscomplexobj(coo.data):
                lines.append(f"{r} {c} {v.real!r} {v.imag!r}")
            else:
                lines.append(f"{r} {c} {v!r}")
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        return f"SparseOperator(label={self.label!r}, shape={self.shape}, nnz={self.entries.nnz})"


def distance_to_spectrum(matrix: sp.spmatrix, z: complex) -> float:
    """
    Distance from z to the spectrum of a real symmetric matrix.

    Small matrices are diagonalized densely; larger ones use shift-invert
    Lanczos around Re z.
    """
    n = matrix.shape[0]
    if n <= DENSE_LIMIT:
        eigenvalues = eigvalsh(matrix.toarray())
    else:
        eigenvalues = eigsh(matrix, k=1, sigma=z.real, which="LM", return_eigenvectors=False)
    return float(np.min(np.abs(eigenvalues - z)))


class ResolventSolver:
    """
    Solves (A - z) u = f with a residual contract.

    Systems up to DIRECT_LIMIT unknowns are factorized once with a sparse LU;
    larger ones fall back to ILU-preconditioned GMRES.

    Attributes:
        z (complex): Spectral parameter
        backend (str): "direct" or "iterative"
    """

    def __init__(self, matrix: sp.spmatrix, z: complex, label: str = "operator"):
        n = matrix.shape[0]
        self.z = complex(z)
        self.label = label
        self._shifted = sp.csc_matrix(matrix - self.z * sp.identity(n), dtype=complex)

        if abs(self.z.imag) < SINGULAR_DISTANCE and np.isrealobj(matrix.data):
            distance = distance_to_spectrum(sp.csr_matrix(matrix), self.z)
            if distance < SINGULAR_DISTANCE * max(1.0, abs(self.z)):
                logger.error("%s - %s is singular (distance %.3e)", label, self.z, distance)
                raise ResolventSingularError(
                    f"z = {self.z} lies within {distance:.3e} of the spectrum of {label}"
                )

        self.backend = "direct" if n <= DIRECT_LIMIT else "iterative"
        try:
            if self.backend == "direct":
                self._lu = splu(self._shifted)
            else:
                logger.warning("%s has %d unknowns; using preconditioned GMRES", label, n)
                self._ilu = spilu(self._shifted)
        except RuntimeError as e:
            raise ResolventSingularError(f"factorization of {label} - {self.z} failed: {e}") from e
        logger.debug("Factorized %s - (%s) with %d unknowns (%s)", label, self.z, n, self.backend)

    def _iterative(self, f: np.ndarray, adjoint: bool) -> np.ndarray:
        a = self._shifted.conj().T.tocsc() if adjoint else self._shifted
        n = a.shape[0]
        if adjoint:
            preconditioner = LinearOperator((n, n), lambda x: self._ilu.solve(x, trans="H"), dtype=complex)
        else:
            preconditioner = LinearOperator((n, n), self._ilu.solve, dtype=complex)
        u, info = gmres(a, f, M=preconditioner, rtol=RESIDUAL_TOLERANCE / 10, restart=100, maxiter=1000)
        if info != 0:
            raise ResolventSingularError(f"GMRES for {self.label} did not converge (info={info})")
        return u

    def solve(self, f: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """
        Solve (A - z) u = f, or (A - z)* u = f when adjoint is set.

        Args:
            f (np.ndarray): Right-hand side(s), shape (N,) or (N, k)
            adjoint (bool): Solve with the conjugate transpose

        Returns:
            np.ndarray: Solution with relative residual <= RESIDUAL_TOLERANCE

        Raises:
            ResolventSingularError: If the residual contract cannot be met
        """
        f = np.asarray(f, dtype=complex)
        if self.backend == "direct":
            trans = "H" if adjoint else "N"
            u = self._lu.solve(f, trans=trans)
        else:
            u = self._iterative(f, adjoint)
        a = self._shifted.conj().T if adjoint else self._shifted
        residual = np.linalg.norm(a @ u - f)
        scale = np.linalg.norm(f)
        if residual > RESIDUAL_TOLERANCE * scale and self.backend == "direct":
            # one step of iterative refinement
            u = u + self._lu.solve(f - a @ u, trans="H" if adjoint else "N")
            residual = np.linalg.norm(a @ u - f)
        if residual > RESIDUAL_TOLERANCE * scale:
            raise ResolventSingularError(
                f"resolvent solve for {self.label} at z = {self.z} has relative residual "
                f"{residual / scale:.3e}; z is too close to the spectrum"
            )
        return u


def apply_discrete_laplacian(g: LatticeGraph, u: VertexFunction) -> VertexFunction:
    """
    Matrix-free discrete Laplacian with Dirichlet truncation.

    Args:
        g (LatticeGraph): The lattice
        u (VertexFunction): Input values

    Returns:
        VertexFunction: (1/ell**2) * sum over the 2 nu lattice neighbours of (u_n - u_j)
    """
    values = u.values
    total = np.zeros_like(values)
    np.add.at(total, g.edges[:, 0], values[g.edges[:, 1]])
    np.add.at(total, g.edges[:, 1], values[g.edges[:, 0]])
    return VertexFunction(g, (total - 2 * g.nu * values) / g.ell ** 2)


def assemble_laplacian(g: LatticeGraph) -> SparseOperator:
    """Assemble Delta_d as a sparse matrix."""
    n = g.num_vertices
    rows = np.concatenate([g.edges[:, 0], g.edges[:, 1], np.arange(n)])
    cols = np.concatenate([g.edges[:, 1], g.edges[:, 0], np.arange(n)])
    data = np.concatenate([np.ones(2 * g.num_edges), np.full(n, -2.0 * g.nu)]) / g.ell ** 2
    return SparseOperator(g, sp.csr_matrix((data, (rows, cols)), shape=(n, n)), "laplacian")


def assemble_h2(g: LatticeGraph, v: Potential) -> SparseOperator:
    """
    Assemble H2 = -Delta_d + diag(V_j).

    Args:
        g (LatticeGraph): The lattice
        v (Potential): The potential

    Returns:
        SparseOperator: Exactly symmetric real matrix
    """
    potential = sample_on_vertices(v, g).values
    h2 = -assemble_laplacian(g).entries + sp.diags(potential)
    op = SparseOperator(g, h2, "H2")
    logger.debug("Assembled %r", op)
    return op


def solve_h2_resolvent(h2: SparseOperator, z: complex, f: VertexFunction) -> VertexFunction:
    """
    Solve (H2 - z) u = f.

    Args:
        h2 (SparseOperator): The assembled operator
        z (complex): Spectral parameter off the spectrum
        f (VertexFunction): Right-hand side

    Returns:
        VertexFunction: The solution, relative residual <= 1e-10

    Raises:
        ResolventSingularError: If z is within 1e-8 of an eigenvalue
    """
    return VertexFunction(h2.graph, h2.resolvent(z).solve(f.values))


def laplacian_resolvent_check(
    g: LatticeGraph,
    v: Potential,
    z: complex,
    rng: Optional[np.random.Generator] = None,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Tuple[float, float, float]:
    """
    Estimate ||Delta_d (H2 - z)^-1|| and ||V (H2 - z)^-1||.

    Args:
        g (LatticeGraph): The lattice
        v (Potential): The potential (bounded below on the truncation)
        z (complex): Spectral parameter
        rng (Optional[np.random.Generator]): Start vectors for power iteration
        tol (float): Power iteration tolerance
        max_iter (int): Power iteration budget

    Returns:
        Tuple[float, float, float]: norm_dl, norm_v and the reference scale 1/ell

    Raises:
        EstimationFailureError: If power iteration does not converge
    """
    h2 = assemble_h2(g, v)
    laplacian = assemble_laplacian(g).entries
    potential = sample_on_vertices(v, g).values
    solver = h2.resolvent(z)
    n = g.num_vertices

    norm_dl = power_iteration(
        lambda x: laplacian @ solver.solve(x),
        lambda y: solver.solve(laplacian @ y, adjoint=True),
        n, rng, tol, max_iter, label="Delta_d (H2 - z)^-1",
    ).value
    norm_v = power_iteration(
        lambda x: potential * solver.solve(x),
        lambda y: solver.solve(potential * y, adjoint=True),
        n, rng, tol, max_iter, label="V (H2 - z)^-1",
    ).value
    logger.info("ell=%g: ||Delta_d R||=%.6g, ||V R||=%.6g", g.ell, norm_dl, norm_v)
    return norm_dl, norm_v, 1.0 / g.ell


def laplacian_norm(g: LatticeGraph, rng: Optional[np.random.Generator] = None) -> float:
    """Estimate ||Delta_d|| by power iteration."""
    laplacian = assemble_laplacian(g).entries
    return power_iteration(
        lambda x: laplacian @ x, lambda y: laplacian @ y, g.num_vertices, rng, label="Delta_d"
    ).value
