import logging
from typing import Optional

import numpy as np
from django.conf import settings
from scipy.sparse.linalg import LinearOperator, cg

from fem.exceptions import NoConvergence

logger = logging.getLogger(__name__)


def solve_linear(matrix, rhs: np.ndarray, tol: Optional[float] = None, maxiter: Optional[int] = None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients to relative residual ``tol``."""
    tol = settings.HOMLAB["CG_TOL"] if tol is None else tol
    rhs = np.asarray(rhs, dtype=np.float64)
    n = rhs.shape[0]
    maxiter = settings.HOMLAB["CG_MAXITER_FACTOR"] * max(n, 1) if maxiter is None else maxiter
    if n == 0 or not np.any(rhs):
        return np.zeros(n)

    diagonal = matrix.diagonal()
    if np.any(diagonal <= 0):
        raise NoConvergence(f"matrix of size {n} has a non-positive diagonal entry; it is not SPD")
    preconditioner = LinearOperator((n, n), matvec=lambda x: x / diagonal, dtype=np.float64)

    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    solution, info = cg(matrix, rhs, rtol=tol, atol=0.0, maxiter=maxiter, M=preconditioner, callback=count)
    residual = np.linalg.norm(matrix @ solution - rhs) / np.linalg.norm(rhs)
    if info != 0 or not np.all(np.isfinite(solution)) or not residual <= max(100.0 * tol, 1e-12):
        logger.error(f"CG stopped after {iterations} iterations with relative residual {residual:.3e} (n={n})")
        raise NoConvergence(
            f"conjugate gradients did not reach {tol:g} in {maxiter} iterations (residual {residual:.3e})",
            iterations=iterations,
            residual=residual,
        )
    logger.debug(f"CG converged in {iterations} iterations, relative residual {residual:.3e} (n={n})")
    return solution
