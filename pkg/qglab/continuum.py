"""
Finite-difference reference spectra for the continuum operator H = -Delta + V.

Second-order central differences on the Dirichlet box [-radius, radius]**nu,
with Richardson extrapolation between mesh widths h and h/2.
"""
import logging
from typing import Optional, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
from attrs import define, field
from scipy.linalg import eigvalsh_tridiagonal
from scipy.sparse.linalg import eigsh

from .errors import InsufficientResolutionError, InvalidParameterError
from .potentials import Potential

logger = logging.getLogger(__name__)

GRID_TOLERANCE = 1e-9


def _positive(instance, attribute, value) -> None:
    if not value > 0:
        raise InvalidParameterError(f"{attribute.name} must be positive, got {value}")


@define(frozen=True)
class ContinuumGrid:
    """
    Uniform Dirichlet grid on [-radius, radius]**nu.

    Attributes:
        nu (int): Dimension (1 or 2)
        h (float): Mesh width, 2 radius / h must be an integer
        radius (float): Box half-width
    """

    nu: int = field(converter=int)
    h: float = field(converter=float, validator=_positive)
    radius: float = field(converter=float, validator=_positive)

    def __attrs_post_init__(self) -> None:
        if self.nu not in (1, 2):
            raise InvalidParameterError(f"continuum reference supports nu = 1, 2; got {self.nu}")
        cells = 2 * self.radius / self.h
        if abs(cells - round(cells)) > GRID_TOLERANCE * cells or round(cells) < 2:
            raise InvalidParameterError(f"2 * radius / h = {cells:g} must be an integer >= 2")

    @property
    def points_per_axis(self) -> int:
        """Interior grid points per axis."""
        return int(round(2 * self.radius / self.h)) - 1

    @property
    def num_points(self) -> int:
        """Number of unknowns."""
        return self.points_per_axis ** self.nu

    def axis(self) -> np.ndarray:
        """Interior coordinates -radius + i h, i = 1..n."""
        return -self.radius + self.h * np.arange(1, self.points_per_axis + 1)

    def points(self) -> np.ndarray:
        """All interior points, shape (num_points, nu), first axis slowest."""
        mesh = np.meshgrid(*([self.axis()] * self.nu), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def refined(self) -> "ContinuumGrid":
        """The grid with half the mesh width."""
        return ContinuumGrid(self.nu, self.h / 2.0, self.radius)


@define(frozen=True)
class ReferenceSpectrum:
    """
    Richardson-extrapolated reference eigenvalues.

    Attributes:
        eigenvalues (np.ndarray): Extrapolated values (4 lambda_{h/2} - lambda_h) / 3
        errors (np.ndarray): Estimates |lambda_{h/2} - lambda_h| / 3
        coarse (np.ndarray): Eigenvalues at mesh width h
        fine (np.ndarray): Eigenvalues at mesh width h/2
        grid (ContinuumGrid): The coarse grid
    """

    eigenvalues: np.ndarray = field(eq=False)
    errors: np.ndarray = field(eq=False)
    coarse: np.ndarray = field(eq=False)
    fine: np.ndarray = field(eq=False)
    grid: ContinuumGrid

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def to_frame(self) -> pd.DataFrame:
        """Table with index, eigenvalue, error, coarse and fine columns."""
        return pd.DataFrame(
            {
                "index": np.arange(len(self.eigenvalues)),
                "eigenvalue": self.eigenvalues,
                "error": self.errors,
                "coarse": self.coarse,
                "fine": self.fine,
            }
        )


def fd_hamiltonian(grid: ContinuumGrid, v: Potential) -> sp.csr_matrix:
    """
    Sparse finite-difference matrix of -Delta + V.

    Returns:
        sp.csr_matrix: Symmetric matrix of size num_points
    """
    n = grid.points_per_axis
    second = sp.diags([np.full(n - 1, -1.0), np.full(n, 2.0), np.full(n - 1, -1.0)], [-1, 0, 1]) / grid.h ** 2
    eye = sp.identity(n)
    laplacian = second if grid.nu == 1 else sp.kron(second, eye) + sp.kron(eye, second)
    return sp.csr_matrix(laplacian + sp.diags(v(grid.points())))


def lowest_eigenvalues(grid: ContinuumGrid, v: Potential, upper: float, count: Optional[int] = None) -> np.ndarray:
    """
    Sorted eigenvalues of the finite-difference operator below `upper`.

    Args:
        grid (ContinuumGrid): The grid
        v (Potential): The potential
        upper (float): Exclusive upper end
        count (Optional[int]): Return exactly the lowest `count` eigenvalues instead

    Returns:
        np.ndarray: Eigenvalues
    """
    potential = v(grid.points())
    floor = float(np.min(potential)) - 1.0
    if grid.nu == 1:
        diagonal = 2.0 / grid.h ** 2 + potential
        off = np.full(grid.points_per_axis - 1, -1.0 / grid.h ** 2)
        if count is not None:
            count = min(count, grid.num_points)
            return eigvalsh_tridiagonal(diagonal, off, select="i", select_range=(0, count - 1))
        return eigvalsh_tridiagonal(diagonal, off, select="v", select_range=(floor, upper))

    matrix = fd_hamiltonian(grid, v)
    n = grid.num_points
    k = min(n - 2, count if count is not None else 16)
    while True:
        values = np.sort(eigsh(matrix, k=k, sigma=floor, which="LM", return_eigenvectors=False))
        if count is not None or values.max() >= upper or k >= n - 2:
            break
        k = min(n - 2, 2 * k)
    return values if count is not None else values[values < upper]


def continuum_eigenvalues(
    grid: ContinuumGrid,
    v: Potential,
    window: Tuple[float, float],
    count: Optional[int] = None,
    tol: Optional[float] = None,
) -> ReferenceSpectrum:
    """
    Reference eigenvalues of -Delta + V in a window.

    Modes are matched by index between the h and h/2 grids and extrapolated.

    Args:
        grid (ContinuumGrid): Coarse grid; the refined grid has mesh width h/2
        v (Potential): The potential
        window (Tuple[float, float]): Window (a, b) on the extrapolated values
        count (Optional[int]): Keep at most this many lowest eigenvalues
        tol (Optional[float]): Largest acceptable Richardson error estimate

    Returns:
        ReferenceSpectrum: Extrapolated eigenvalues with error estimates

    Raises:
        InsufficientResolutionError: If an error estimate exceeds tol
    """
    a, b = (float(x) for x in window)
    coarse = lowest_eigenvalues(grid, v, b)
    modes = len(coarse)
    fine = lowest_eigenvalues(grid.refined(), v, b, count=modes) if modes else np.zeros(0)
    # finite differences approach the Dirichlet limit from below, so the coarse set covers the window
    extrapolated = (4.0 * fine - coarse) / 3.0
    errors = np.abs(fine - coarse) / 3.0

    keep = (extrapolated > a) & (extrapolated < b)
    keep_idx = np.flatnonzero(keep)
    if count is not None:
        keep_idx = keep_idx[:count]
    result = ReferenceSpectrum(extrapolated[keep_idx], errors[keep_idx], coarse[keep_idx], fine[keep_idx], grid)

    worst = float(np.max(result.errors, initial=0.0))
    logger.info(
        "Continuum reference: %d eigenvalues in (%g, %g), h=%g, %d points, worst error %.3e",
        len(result), a, b, grid.h, grid.num_points, worst,
    )
    if tol is not None and worst > tol:
        raise InsufficientResolutionError(worst, tol)
    return result
