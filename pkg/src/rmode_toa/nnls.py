"""Active-set nonnegative least squares (Lawson and Hanson, 1974)."""
import numpy as np


class NNLSConvergenceError(RuntimeError):
    pass


def _lstsq(a, b):
    # min-norm solution; ties in rank-deficient subproblems resolve here
    return np.linalg.lstsq(a, b, rcond=None)[0]


def nnls(A, b, maxiter=None, tol=None):
    """Solve ``min ||A x - b||_2`` subject to ``x >= 0``.

    Parameters
    ----------
    A : array_like, shape (m, n)
    b : array_like, shape (m,)
    maxiter : int, optional
        Outer iteration limit (default ``3 * n``).
    tol : float, optional
        Dual feasibility tolerance on the gradient ``A.T (b - A x)``.

    Returns
    -------
    x : ndarray, shape (n,)
    rnorm : float
        Euclidean norm of the residual.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}")
    m, n = A.shape
    if maxiter is None:
        maxiter = 3 * n
    if tol is None:
        tol = 10 * np.finfo(float).eps * max(m, n) * max(1.0, np.abs(A).max(initial=0.0)) * max(
            1.0, np.abs(b).max(initial=0.0)
        )

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ (b - A @ x)
    it = 0
    while not passive.all() and (w[~passive] > tol).any():
        if it >= maxiter:
            raise NNLSConvergenceError(f"no convergence after {maxiter} iterations")
        it += 1
        cand = np.where(passive, -np.inf, w)
        passive[int(np.argmax(cand))] = True

        while True:
            z = np.zeros(n)
            z[passive] = _lstsq(A[:, passive], b)
            if (z[passive] > 0).all():
                x = z
                break
            # step back towards x until the first passive variable hits zero
            blocked = passive & (z <= 0)
            alpha = np.min(x[blocked] / (x[blocked] - z[blocked]))
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
            if not passive.any():
                break
        w = A.T @ (b - A @ x)
    return x, float(np.linalg.norm(A @ x - b))
