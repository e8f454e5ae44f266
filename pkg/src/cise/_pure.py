"""Pure numpy implementation of the penalized eigen-step.

This is the fallback backend; ``cise._accel`` provides the same function
compiled with direct LAPACK calls. Both must stay semantically identical:
``backend.py`` picks one at import time and the test suite cross-checks them.
"""

import math

import numpy as np

NAME = "pure"


def penalized_step(g, w_half, hdiag, d, gamma_prev=None):
    """One penalized eigen-step on the current active coordinates.

    Parameters
    ----------
    g : (p, p) ndarray
        Whitened kernel of the active problem.
    w_half : (p, p) ndarray
        Inverse square root of the active constraint matrix.
    hdiag : (p,) ndarray
        Diagonal of the local quadratic penalty (zeros for an unpenalized
        step).
    d : int
        Number of directions.
    gamma_prev : (p, d) ndarray, optional
        Previous orthonormal iterate; when given, the subspace distance to
        the new iterate is returned.

    Returns
    -------
    gamma : (p, d) ndarray
        Top-d eigenvectors (descending eigenvalues) of the working matrix.
    v : (p, d) ndarray
        ``w_half @ gamma``.
    rownorms : (p,) ndarray
        Euclidean norms of the rows of ``v``.
    lam : (d,) ndarray
        Leading eigenvalues of the working matrix, descending.
    dist : float
        Largest principal-angle sine between ``gamma_prev`` and ``gamma``
        (NaN when ``gamma_prev`` is None). Computed from the projection
        residual, which stays accurate near zero.
    """
    a = g - 0.5 * ((w_half * hdiag) @ w_half)
    w, vec = np.linalg.eigh(a)
    gamma = np.ascontiguousarray(vec[:, ::-1][:, :d])
    lam = w[::-1][:d].copy()
    v = w_half @ gamma
    rownorms = np.sqrt(np.einsum("ij,ij->i", v, v))
    if gamma_prev is None:
        dist = math.nan
    else:
        resid = gamma - gamma_prev @ (gamma_prev.T @ gamma)
        lmax = float(np.linalg.eigvalsh(resid.T @ resid)[-1])
        dist = math.sqrt(max(lmax, 0.0))
    return gamma, v, rownorms, lam, dist
