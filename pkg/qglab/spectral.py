"""
Eigenvalue windows, spectral projections and distances between spectra.
"""
import logging
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from attrs import define, field
from scipy.linalg import eigh, subspace_angles
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.spatial.distance import directed_hausdorff

from .discrete import SparseOperator
from .errors import (
    BoundaryCollisionError,
    ConsistencyFailureError,
    EmptySetError,
    IncompatibleSpacesError,
    ShiftViolationError,
)

logger = logging.getLogger(__name__)

DENSE_EIGEN_LIMIT = 2000
BOUNDARY_SEPARATION = 1e-8
EIGEN_RESIDUAL = 1e-8
MULTIPLET_FACTOR = 10.0


def _as_float_array(values) -> np.ndarray:
    return np.asarray(values, dtype=float)


@define(frozen=True)
class SpectrumSlice:
    """
    Eigenpairs of an operator inside an open window.

    Attributes:
        eigenvalues (np.ndarray): Sorted eigenvalues inside the window
        eigenvectors (np.ndarray): Orthonormal columns, shape (N, k)
        window (Tuple[float, float]): The window (a, b)
        operator_label (str): Operator the slice belongs to
        first_index (int): Global index of the first eigenvalue, when known
    """

    eigenvalues: np.ndarray = field(converter=_as_float_array, eq=False)
    eigenvectors: np.ndarray = field(eq=False)
    window: Tuple[float, float]
    operator_label: str
    first_index: int = 0

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def projection(self) -> np.ndarray:
        """Dense orthogonal projection onto the slice."""
        v = self.eigenvectors
        return v @ v.conj().T


def ensure_window_clear(eigenvalues: np.ndarray, window: Tuple[float, float]) -> None:
    """
    Require both window ends to stay BOUNDARY_SEPARATION away from every eigenvalue.

    Raises:
        BoundaryCollisionError: With the offending end and eigenvalue
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    for boundary in window:
        if not np.isfinite(boundary) or not len(eigenvalues):
            continue
        nearest = eigenvalues[np.argmin(np.abs(eigenvalues - boundary))]
        if abs(nearest - boundary) < BOUNDARY_SEPARATION:
            raise BoundaryCollisionError(boundary, nearest)


def _dense_window(matrix: np.ndarray, window: Tuple[float, float], check: bool):
    values, vectors = eigh(matrix)
    if check:
        ensure_window_clear(values, window)
    a, b = window
    inside = (values > a) & (values < b)
    first = int(np.sum(values <= a))
    return values[inside], vectors[:, inside], first


def _sparse_window(op: SparseOperator, window: Tuple[float, float], max_count: Optional[int], check: bool):
    a, b = window
    n = op.shape[0]
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(n)
    sigma = a if np.isfinite(a) else b
    k = min(n - 1, max(8, max_count or 8))
    while True:
        try:
            values, vectors = eigsh(op.entries, k=k, sigma=sigma, which="LM", v0=v0)
        except ArpackNoConvergence as e:
            values, vectors = e.eigenvalues, e.eigenvectors
            logger.warning("ARPACK returned %d of %d eigenpairs for %s", len(values), k, op.label)
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
        inside = (values > a) & (values < b)
        enough = max_count is not None and np.sum(inside) >= max_count
        if values.max() >= b or k >= n - 1 or enough:
            break
        k = min(n - 1, 2 * k)
    if check:
        ensure_window_clear(values, window)
    return values[inside], vectors[:, inside], 0


def eigenpairs(
    op: SparseOperator,
    window: Tuple[float, float],
    max_count: Optional[int] = None,
    check_boundaries: bool = True,
    backend: str = "auto",
) -> SpectrumSlice:
    """
    All eigenpairs of a symmetric operator inside an open window.

    Args:
        op (SparseOperator): Real symmetric operator
        window (Tuple[float, float]): Window (a, b)
        max_count (Optional[int]): Keep at most this many lowest eigenpairs
        check_boundaries (bool): Require the window ends to avoid the spectrum
        backend (str): "dense", "sparse" or "auto" (dense up to DENSE_EIGEN_LIMIT)

    Returns:
        SpectrumSlice: Sorted eigenpairs with orthonormal eigenvectors

    Raises:
        BoundaryCollisionError: If a window end is within 1e-8 of an eigenvalue
        ConsistencyFailureError: If an eigenpair residual exceeds 1e-8 max(1, |lambda|)
    """
    a, b = (float(x) for x in window)
    n = op.shape[0]
    if not a < b:
        return SpectrumSlice(np.zeros(0), np.zeros((n, 0)), (a, b), op.label)
    if backend == "auto":
        backend = "dense" if n <= DENSE_EIGEN_LIMIT else "sparse"
    if backend == "dense" or n < 3:
        values, vectors, first = _dense_window(op.dense(), (a, b), check_boundaries)
    else:
        values, vectors, first = _sparse_window(op, (a, b), max_count, check_boundaries)
    if max_count is not None:
        values, vectors = values[:max_count], vectors[:, :max_count]

    if len(values):
        scale = max(1.0, float(np.abs(values).max()))
        worst = float(np.linalg.norm(op.entries @ vectors - vectors * values, axis=0).max())
        if worst > EIGEN_RESIDUAL * scale:
            logger.error("Eigenpair residual %.3e for %s exceeds the contract", worst, op.label)
            raise ConsistencyFailureError(f"eigenpairs of {op.label} in ({a:g}, {b:g})", worst / scale)
    logger.debug("%s: %d eigenvalues in (%g, %g) via %s", op.label, len(values), a, b, backend)
    return SpectrumSlice(values, vectors, (a, b), op.label, first)


def _mapped_vectors(
    slice_a: SpectrumSlice, slice_b: SpectrumSlice, mapping: Optional[Callable[[np.ndarray], np.ndarray]]
) -> Tuple[np.ndarray, np.ndarray]:
    if tuple(slice_a.window) != tuple(slice_b.window):
        logger.warning("Comparing slices over different windows %s and %s", slice_a.window, slice_b.window)
    vectors_a = slice_a.eigenvectors if mapping is None else mapping(slice_a.eigenvectors)
    vectors_b = slice_b.eigenvectors
    if vectors_a.shape[0] != vectors_b.shape[0]:
        raise IncompatibleSpacesError(
            f"cannot compare subspaces of spaces with dimensions {vectors_a.shape[0]} and {vectors_b.shape[0]}"
        )
    return vectors_a, vectors_b


def _subspace_distance(vectors_a: np.ndarray, vectors_b: np.ndarray) -> float:
    if vectors_a.shape[1] != vectors_b.shape[1]:
        return 1.0
    if vectors_a.shape[1] == 0:
        return 0.0
    return float(np.sin(np.max(subspace_angles(vectors_a, vectors_b))))


def spectral_projection_distance(
    slice_a: SpectrumSlice,
    slice_b: SpectrumSlice,
    mapping: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> float:
    """
    Operator-norm distance between two spectral projections.

    The eigenvectors of slice_a are pushed through `mapping` (for example
    graph eigenfunctions followed by I*) before comparison.

    Args:
        slice_a (SpectrumSlice): First slice
        slice_b (SpectrumSlice): Second slice
        mapping (Optional[Callable]): Maps (N_a, k) column arrays into slice_b's space

    Returns:
        float: sin of the largest principal angle, or 1 for subspaces of different dimension

    Raises:
        IncompatibleSpacesError: If the spaces differ and no mapping is given
    """
    return _subspace_distance(*_mapped_vectors(slice_a, slice_b, mapping))


def multiplet_projection_distance(
    slice_a: SpectrumSlice,
    slice_b: SpectrumSlice,
    mapping: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    tol: float = EIGEN_RESIDUAL,
) -> float:
    """
    Largest projection distance between matching eigenvalue multiplets.

    Each slice is split with cluster_multiplets (tolerance scaled by
    max(1, |lambda|)) and the clusters are paired in ascending order, so
    degenerate eigenvalues are compared by subspace only.

    Returns:
        float: Max over paired multiplets of sin of the largest principal angle,
        or 1 if the multiplet structures differ
    """
    vectors_a, vectors_b = _mapped_vectors(slice_a, slice_b, mapping)
    scale = max([1.0] + [abs(float(x)) for s in (slice_a, slice_b) for x in s.eigenvalues])
    groups_a = cluster_multiplets(slice_a.eigenvalues, tol * scale)
    groups_b = cluster_multiplets(slice_b.eigenvalues, tol * scale)
    if [len(g) for g in groups_a] != [len(g) for g in groups_b]:
        return 1.0
    return max(
        (_subspace_distance(vectors_a[:, ga], vectors_b[:, gb]) for ga, gb in zip(groups_a, groups_b)),
        default=0.0,
    )


def cluster_multiplets(eigenvalues: Sequence[float], tol: float) -> List[List[int]]:
    """
    Group sorted eigenvalues whose neighbours lie within MULTIPLET_FACTOR * tol.

    Returns:
        List[List[int]]: Index groups in ascending order
    """
    groups: List[List[int]] = []
    previous = None
    for i, value in enumerate(eigenvalues):
        if previous is not None and value - previous <= MULTIPLET_FACTOR * tol:
            groups[-1].append(i)
        else:
            groups.append([i])
        previous = value
    return groups


def hausdorff_distance(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Hausdorff distance between two finite sets of reals.

    Raises:
        EmptySetError: If either set is empty
    """
    if len(x) == 0 or len(y) == 0:
        raise EmptySetError("Hausdorff distance needs two non-empty sets")
    xa = np.asarray(x, dtype=float).reshape(-1, 1)
    ya = np.asarray(y, dtype=float).reshape(-1, 1)
    return float(max(directed_hausdorff(xa, ya, seed=0)[0], directed_hausdorff(ya, xa, seed=0)[0]))


def inverse_shift_spectra_compare(spec_a: Sequence[float], spec_b: Sequence[float], m_shift: float) -> float:
    """
    Hausdorff distance of the images of two spectra under lambda -> (lambda + M)^-1.

    Raises:
        ShiftViolationError: If an eigenvalue lies at or below -M
        EmptySetError: If either spectrum is empty
    """
    a = np.asarray(spec_a, dtype=float)
    b = np.asarray(spec_b, dtype=float)
    for values in (a, b):
        if len(values) and np.min(values) <= -m_shift:
            raise ShiftViolationError(
                f"eigenvalue {np.min(values):.10g} is not above -M = {-m_shift:g}"
            )
    return hausdorff_distance(1.0 / (a + m_shift), 1.0 / (b + m_shift))


def spectra_table(slices: Iterable[Tuple[str, Sequence[float]]]) -> pd.DataFrame:
    """
    Long-format spectra table with columns operator_label, index, eigenvalue.

    Args:
        slices (Iterable[Tuple[str, Sequence[float]]]): (label, eigenvalues) pairs
    """
    rows = [
        {"operator_label": label, "index": i, "eigenvalue": float(value)}
        for label, values in slices
        for i, value in enumerate(values)
    ]
    return pd.DataFrame(rows, columns=["operator_label", "index", "eigenvalue"])
