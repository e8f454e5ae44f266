"""Dense symmetric linear algebra primitives.

All routines enforce exact symmetry (by averaging with the transpose) and a
deterministic eigenvector sign convention, so that identical inputs produce
bit-identical outputs run to run.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotPSD, SingularMatrix

INV_CLAMP = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True)
class EigenDecomp:
    """Full spectral decomposition with eigenvalues in descending order.

    ``vectors[:, i]`` is the unit eigenvector for ``values[i]``; its
    component of largest magnitude is nonnegative.
    """

    values: np.ndarray
    vectors: np.ndarray


def symmetrize(a):
    """Return 0.5 * (a + a.T) as a float array, validating shape and finiteness."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise InvalidInput("matrix dimension must be >= 1")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    return 0.5 * (a + a.T)


def fix_signs(vectors):
    """Flip eigenvector columns so the first largest-magnitude entry is >= 0."""
    vectors = np.array(vectors, copy=True)
    idx = np.argmax(np.abs(vectors), axis=0)
    flip = vectors[idx, np.arange(vectors.shape[1])] < 0
    vectors[:, flip] *= -1.0
    return vectors


def sym_eig(a):
    """Spectral decomposition of a symmetric matrix, eigenvalues descending.

    Parameters
    ----------
    a : (p, p) array_like
        Symmetric matrix; symmetrized by averaging before decomposition.

    Returns
    -------
    EigenDecomp
    """
    a = symmetrize(a)
    w, v = np.linalg.eigh(a)
    return EigenDecomp(values=w[::-1].copy(), vectors=fix_signs(v[:, ::-1]))


def inv_sqrt(a, clamp=INV_CLAMP):
    """Symmetric inverse square root of a positive definite matrix.

    The result B satisfies B @ a @ B == I to roughly 1e-8 per entry.

    Raises
    ------
    SingularMatrix
        If any eigenvalue is at or below ``clamp`` times the largest one.
    """
    a = symmetrize(a)
    w, v = np.linalg.eigh(a)
    wmax = float(w[-1])
    wmin = float(w[0])
    if wmax <= 0.0 or wmin <= clamp * wmax:
        raise SingularMatrix(
            f"matrix is numerically singular: eigenvalue {wmin:.6e} "
            f"below clamp {clamp:.1e} * {wmax:.6e}",
            eigenvalue=wmin,
        )
    b = (v / np.sqrt(w)) @ v.T
    return 0.5 * (b + b.T)


def sqrt_psd(a):
    """Symmetric square root of a positive semidefinite matrix.

    Eigenvalues within -PSD_TOL (relative to max(1, largest eigenvalue)) of
    zero are clamped to zero.

    Raises
    ------
    NotPSD
        If an eigenvalue falls below the tolerance.
    """
    a = symmetrize(a)
    w, v = np.linalg.eigh(a)
    wmax = float(w[-1])
    tol = PSD_TOL * max(1.0, abs(wmax))
    wmin = float(w[0])
    if wmin < -tol:
        raise NotPSD(
            f"matrix is not positive semidefinite: eigenvalue {wmin:.6e}",
            eigenvalue=wmin,
        )
    w = np.clip(w, 0.0, None)
    b = (v * np.sqrt(w)) @ v.T
    return 0.5 * (b + b.T)
