"""Penalized generalized-eigenvalue solver and tuning-parameter selection.

The unpenalized solve (``osdre``) whitens the kernel pair and takes leading
eigenvectors. The sparse solve (``cise_fit``) minimizes

    -tr(V^T M V) + sum_i theta_i ||v_i||_2   subject to  V^T N V = I_d

by iterating a local quadratic approximation of the row-norm penalty: each
step is one eigendecomposition of the working matrix
``G_a - 0.5 * N_a^{-1/2} H N_a^{-1/2}`` on the current active coordinates,
and variables whose basis row falls below the drop threshold are removed for
good. Tuning scans a grid of penalty scales and picks the information-
criterion minimizer among converged fits.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend, linalg
from .errors import ActiveSetTooSmall, AllFitsFailed, InvalidInput, SingularMatrix

DEGENERATE_GAP = 1e-8
FROZEN_NORM = 1e-12
DEFAULT_EPS = 1e-6
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
DEFAULT_R = 0.5

# Default tuning grid: GRID_COUNT log-spaced points on
# [GRID_LO, GRID_HI] * tr(G)/p.
GRID_LO = 1e-4
GRID_HI = 10.0
GRID_COUNT = 60


@dataclass(frozen=True)
class OsdreResult:
    """Unpenalized solve: N-orthonormal basis of the leading eigenspace."""

    basis: np.ndarray
    values: np.ndarray
    eigen_gap: float
    degenerate: bool
    spectrum: np.ndarray
    w_half: np.ndarray
    g: np.ndarray


@dataclass(frozen=True)
class PenaltyWeights:
    """Per-variable penalty multipliers; frozen rows are treated as having
    infinite weight and never enter the active set."""

    theta: np.ndarray
    frozen: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        frozen = np.asarray(self.frozen, dtype=bool)
        if theta.ndim != 1 or frozen.shape != theta.shape:
            raise InvalidInput("theta and frozen must be equal-length vectors")
        if not np.all(np.isfinite(theta)) or np.any(theta < 0):
            raise InvalidInput("penalty weights must be finite and nonnegative")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "frozen", frozen)

    @classmethod
    def zeros(cls, p):
        return cls(theta=np.zeros(p), frozen=np.zeros(p, dtype=bool))


@dataclass(frozen=True)
class SparseEstimate:
    """A fitted sparse basis with its active set and solver diagnostics."""

    basis: np.ndarray
    active: np.ndarray
    eigenvalues: np.ndarray
    iterations: int
    converged: bool
    objective: float
    eigen_gap: float
    degenerate: bool
    qtrace: tuple = ()

    @property
    def p_active(self):
        return int(self.active.shape[0])


@dataclass(frozen=True)
class GridPoint:
    """One tuning-grid evaluation; criterion is +inf for failed fits."""

    theta: float
    criterion: float
    p_active: int
    active: tuple
    converged: bool
    error: str = None


@dataclass(frozen=True)
class TuningTrace:
    grid: tuple
    selected: int
    gamma_rule: str
    gamma: float


def _as_kernel_arrays(kp):
    m = np.asarray(kp.m, dtype=float)
    nn = np.asarray(kp.nn, dtype=float)
    if m.shape != nn.shape or m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput("kernel pair must hold square matrices of equal size")
    return m, nn


def osdre(kp, d):
    """Solve the unpenalized generalized eigenproblem for the top-d basis.

    Returns an OsdreResult whose basis V satisfies V^T nn V = I_d and whose
    ``degenerate`` flag marks a spectral gap below DEGENERATE_GAP between
    the d-th and (d+1)-th eigenvalues.
    """
    m, nn = _as_kernel_arrays(kp)
    p = m.shape[0]
    if not 1 <= d <= p:
        raise InvalidInput(f"need 1 <= d <= p, got d={d}, p={p}")
    w_half = linalg.inv_sqrt(nn)
    g = w_half @ m @ w_half
    g = 0.5 * (g + g.T)
    eig = linalg.sym_eig(g)
    gamma = eig.vectors[:, :d]
    basis = w_half @ gamma
    basis = _renormalize(basis, nn)
    if d < p:
        gap = float(eig.values[d - 1] - eig.values[d])
    else:
        gap = math.nan
    return OsdreResult(
        basis=basis,
        values=eig.values[:d].copy(),
        eigen_gap=gap,
        degenerate=bool(d < p and gap < DEGENERATE_GAP),
        spectrum=eig.values,
        w_half=w_half,
        g=g,
    )


def penalty_rho(v, weights):
    """Row-group penalty: sum over rows of theta_i times the row norm."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if isinstance(weights, PenaltyWeights):
        theta, frozen = weights.theta, weights.frozen
    else:
        theta = np.asarray(weights, dtype=float)
        frozen = np.zeros(theta.shape, dtype=bool)
    if theta.shape[0] != v.shape[0]:
        raise InvalidInput("weight vector length must match the row count")
    norms = np.sqrt(np.einsum("ij,ij->i", v, v))
    if np.any(norms[frozen] > 0):
        return math.inf
    return float(theta[~frozen] @ norms[~frozen])


def adaptive_weights(vhat, theta, r=DEFAULT_R):
    """Per-variable weights theta * ||vhat_i||^-r from an unpenalized basis.

    Rows with essentially zero norm cannot receive a finite weight; they are
    marked frozen (conceptually infinite weight) whenever theta > 0.
    """
    if isinstance(vhat, OsdreResult):
        vhat = vhat.basis
    vhat = np.asarray(vhat, dtype=float)
    if vhat.ndim == 1:
        vhat = vhat[:, None]
    if theta < 0:
        raise InvalidInput("theta must be nonnegative")
    if r <= 0:
        raise InvalidInput("exponent r must be positive")
    norms = np.sqrt(np.einsum("ij,ij->i", vhat, vhat))
    p = norms.shape[0]
    if theta == 0.0:
        return PenaltyWeights.zeros(p)
    frozen = norms < FROZEN_NORM
    weights = np.zeros(p)
    live = ~frozen
    weights[live] = theta * norms[live] ** (-r)
    return PenaltyWeights(theta=weights, frozen=frozen)


def _renormalize(basis, nn):
    """Return basis @ S^{-1/2} with S = basis^T nn basis, then fix signs."""
    s = basis.T @ nn @ basis
    basis = basis @ linalg.inv_sqrt(s)
    return linalg.fix_signs(basis)


def _build_active(m, nn, active):
    sub = np.ix_(active, active)
    w_half = linalg.inv_sqrt(nn[sub])
    g = w_half @ m[sub] @ w_half
    return np.ascontiguousarray(0.5 * (g + g.T)), np.ascontiguousarray(w_half)


def cise_fit(kp, d, weights, eps=DEFAULT_EPS, tol=DEFAULT_TOL,
             max_iter=DEFAULT_MAX_ITER, _osdre=None, _init_gamma=None):
    """Fit the sparse basis for one penalty-weight vector.

    Starts from the unpenalized solution, iterates the locally quadratic
    penalty update, and permanently removes any variable whose basis row
    norm falls below ``eps`` (rebuilding the working matrices on the reduced
    coordinates). Converges when the active set is stable and the subspace
    distance between successive iterates is below ``tol``; hitting
    ``max_iter`` returns the best iterate with ``converged=False``.

    Raises
    ------
    ActiveSetTooSmall
        If fewer than d variables would remain active.
    """
    m, nn = _as_kernel_arrays(kp)
    p = m.shape[0]
    if isinstance(weights, (int, float)):
        raise InvalidInput("weights must be a PenaltyWeights or a vector")
    if not isinstance(weights, PenaltyWeights):
        weights = PenaltyWeights(
            theta=np.asarray(weights, dtype=float),
            frozen=np.zeros(p, dtype=bool),
        )
    if weights.theta.shape[0] != p:
        raise InvalidInput("weight vector length must match kernel size")
    base = _osdre if _osdre is not None else osdre(kp, d)

    active = np.flatnonzero(~weights.frozen)
    if active.shape[0] < d:
        raise ActiveSetTooSmall(
            f"{active.shape[0]} unfrozen variables cannot support d={d}"
        )
    if active.shape[0] == p:
        g_a, w_a = base.g, base.w_half
        g_a = np.ascontiguousarray(g_a)
        w_a = np.ascontiguousarray(w_a)
    else:
        g_a, w_a = _build_active(m, nn, active)

    if max_iter < 1:
        raise InvalidInput("max_iter must be at least 1")
    if _init_gamma is not None:
        if active.shape[0] != p:
            raise InvalidInput("explicit initialization requires no frozen rows")
        gamma = np.ascontiguousarray(np.asarray(_init_gamma, dtype=float))
        v = w_a @ gamma
        rn = np.sqrt(np.einsum("ij,ij->i", v, v))
        lam = base.values.copy()
    else:
        gamma, v, rn, lam, _ = backend.penalized_step(
            g_a, w_a, np.zeros(active.shape[0]), d, None
        )

    qtrace = []
    theta_a = weights.theta[active]
    converged = False
    iterations = 0
    set_changed = False
    while iterations < max_iter:
        iterations += 1
        if rn.min() < eps:
            keep = rn >= eps
            active = active[keep]
            if active.shape[0] < d:
                raise ActiveSetTooSmall(
                    f"penalty removed too many variables to support d={d}"
                )
            g_a, w_a = _build_active(m, nn, active)
            rn = rn[keep]
            theta_a = theta_a[keep]
            set_changed = True
        hdiag = theta_a / rn
        prev = None if set_changed else gamma
        gamma, v, rn, lam, dist = backend.penalized_step(g_a, w_a, hdiag, d, prev)
        # tr(G_a Gamma Gamma^T) = sum(lam) + 0.5 * sum_k h_k ||v_k||^2, since
        # Gamma spans the leading eigenspace of G_a - 0.5 W H W
        q = -(float(lam.sum()) + 0.5 * float(hdiag @ (rn * rn))) + float(theta_a @ rn)
        qtrace.append((active.shape[0], q))
        if prev is not None and dist < tol and rn.min() >= eps:
            converged = True
            break
        set_changed = False

    basis = np.zeros((p, d))
    basis[active] = v
    basis = _renormalize(basis, nn)  # zero rows stay exactly zero
    objective = -float(np.einsum("ij,ij->", basis, m @ basis)) + penalty_rho(
        basis, weights
    )
    return SparseEstimate(
        basis=basis,
        active=np.sort(active),
        eigenvalues=np.asarray(lam, dtype=float),
        iterations=iterations,
        converged=converged,
        objective=objective,
        eigen_gap=base.eigen_gap,
        degenerate=base.degenerate,
        qtrace=tuple(qtrace),
    )


def df_grassmann(p_active, d):
    """Model degrees of freedom: (p_active - d) * d."""
    return (p_active - d) * d


def default_grid(g, p, lo=None, hi=None, count=None):
    """Log-spaced penalty grid scaled by the whitened kernel's mean eigenvalue.

    Bounds and size default to the module-level GRID_* constants, read at
    call time.
    """
    lo = GRID_LO if lo is None else lo
    hi = GRID_HI if hi is None else hi
    count = GRID_COUNT if count is None else count
    scale = float(np.trace(g)) / p
    if scale <= 0:
        scale = 1.0
    return np.geomspace(lo, hi, count) * scale


def tune(kp, d, n, grid=None, rule="bic", r=DEFAULT_R, eps=DEFAULT_EPS,
         tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Scan a penalty grid and select by information criterion.

    Each grid point theta gets adaptive weights from the unpenalized basis,
    a sparse fit, and the criterion

        -tr(V^T M V) + gamma * (p_active - d) * d

    with gamma = 2/n (AIC) or log(n)/n (BIC). Fits that error out or fail to
    converge are recorded with a +inf criterion and never selected; ties
    break toward the larger (sparser) theta.

    Returns (TuningTrace, SparseEstimate at the selected grid point).

    Raises
    ------
    AllFitsFailed
        If no grid point yields a converged fit.
    """
    rule_norm = rule.upper()
    if rule_norm == "AIC":
        gamma = 2.0 / n
    elif rule_norm == "BIC":
        gamma = math.log(n) / n
    else:
        raise InvalidInput(f"rule must be AIC or BIC, got {rule!r}")
    m, _ = _as_kernel_arrays(kp)
    base = osdre(kp, d)
    if grid is None:
        grid = default_grid(base.g, kp.p)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.shape[0] < 1:
        raise InvalidInput("grid must be a nonempty vector of theta values")
    if np.any(grid < 0) or not np.all(np.isfinite(grid)):
        raise InvalidInput("grid values must be finite and nonnegative")

    points = []
    best_idx = -1
    best_crit = math.inf
    best_est = None
    for idx, theta in enumerate(grid):
        weights = adaptive_weights(base, float(theta), r=r)
        err = None
        est = None
        try:
            est = cise_fit(kp, d, weights, eps=eps, tol=tol,
                           max_iter=max_iter, _osdre=base)
        except (ActiveSetTooSmall, SingularMatrix) as exc:
            err = f"{type(exc).__name__}: {exc}"
        if est is not None and est.converged:
            crit = -float(np.einsum("ij,ij->", est.basis, m @ est.basis))
            crit += gamma * df_grassmann(est.p_active, d)
        else:
            crit = math.inf
            if err is None and est is not None:
                err = "MaxIterExceeded: no convergence within the iteration budget"
        points.append(GridPoint(
            theta=float(theta),
            criterion=crit,
            p_active=est.p_active if est is not None else 0,
            active=tuple(est.active.tolist()) if est is not None else (),
            converged=bool(est is not None and est.converged),
            error=err,
        ))
        if math.isfinite(crit) and (
            crit < best_crit
            or (crit == best_crit and best_idx >= 0 and theta > grid[best_idx])
        ):
            best_crit = crit
            best_idx = idx
            best_est = est
    if best_est is None:
        raise AllFitsFailed("no tuning-grid point produced a converged fit")
    trace = TuningTrace(
        grid=tuple(points),
        selected=best_idx,
        gamma_rule=rule_norm,
        gamma=gamma,
    )
    return trace, best_est
