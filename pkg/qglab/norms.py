"""
Operator norm estimation on A*A: plain power iteration and ARPACK Lanczos.
"""
import logging
from typing import Callable, Optional

import numpy as np
from attrs import define
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, svds

from .errors import EstimationFailureError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_ITER = 500

MatVec = Callable[[np.ndarray], np.ndarray]


@define(frozen=True)
class NormEstimate:
    """
    Result of an operator norm estimate.

    Attributes:
        value (float): Estimated operator norm
        iterations (int): Power iterations used (0 for ARPACK estimates)
        vector (np.ndarray): Normalized leading right singular vector estimate
    """

    value: float
    iterations: int
    vector: np.ndarray


def power_iteration(
    apply: MatVec,
    apply_adjoint: MatVec,
    size: int,
    rng: Optional[np.random.Generator] = None,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    label: str = "operator",
) -> NormEstimate:
    """
    Estimate ||A|| from the largest eigenvalue of A*A.

    The norm is unchanged by a uniform weight on the space, so plain vector
    norms are used.

    Args:
        apply (MatVec): x -> A x
        apply_adjoint (MatVec): y -> A* y
        size (int): Dimension of the domain
        rng (Optional[np.random.Generator]): Source of the random complex start vector
        tol (float): Relative change of the estimate that counts as stagnation
        max_iter (int): Iteration budget
        label (str): Name used in log messages

    Returns:
        NormEstimate: The estimate

    Raises:
        EstimationFailureError: If the estimate does not stagnate within max_iter
    """
    rng = np.random.default_rng(0) if rng is None else rng
    x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    x /= np.linalg.norm(x)
    ratio_old = np.inf
    ratio = 0.0
    for it in range(1, max_iter + 1):
        ax = apply(x)
        ratio = float(np.linalg.norm(ax))
        if ratio == 0.0:
            logger.debug("%s annihilates the iterate; norm estimate 0", label)
            return NormEstimate(0.0, it, x)
        if abs(ratio - ratio_old) <= tol * ratio:
            logger.debug("%s: norm %.8g after %d iterations", label, ratio, it)
            return NormEstimate(ratio, it, x)
        ratio_old = ratio
        x = apply_adjoint(ax)
        x /= np.linalg.norm(x)
    logger.error("%s: power iteration did not stagnate in %d iterations", label, max_iter)
    raise EstimationFailureError(
        f"power iteration for {label} did not converge in {max_iter} iterations "
        f"(last estimate {ratio:.8g})",
        ratio,
        x,
    )


def lanczos_norm(
    apply: MatVec,
    apply_adjoint: MatVec,
    size: int,
    rng: Optional[np.random.Generator] = None,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    label: str = "operator",
) -> NormEstimate:
    """
    Estimate ||A|| with ARPACK's Lanczos iteration on A*A.

    Unlike plain power iteration this converges when the leading singular
    values are clustered.

    Raises:
        EstimationFailureError: If ARPACK does not converge within max_iter restarts
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if size < 3:
        dense = np.array([apply(column) for column in np.eye(size, dtype=complex)]).T
        _, s, vh = np.linalg.svd(dense)
        return NormEstimate(float(s[0]), 1, vh[0].conj())
    operator = LinearOperator((size, size), matvec=apply, rmatvec=apply_adjoint, dtype=complex)
    v0 = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    try:
        _, s, vh = svds(operator, k=1, v0=v0, tol=tol, maxiter=max_iter)
    except ArpackNoConvergence as e:
        logger.error("%s: Lanczos norm estimate did not converge in %d restarts", label, max_iter)
        last = float(np.sqrt(np.max(np.abs(e.eigenvalues)))) if len(e.eigenvalues) else float("nan")
        raise EstimationFailureError(f"Lanczos norm estimate for {label} did not converge", last, v0) from e
    logger.debug("%s: norm %.8g by Lanczos", label, s[0])
    return NormEstimate(float(s[0]), 0, vh[0].conj())
