"""Kernel-pair construction for the supported dimension-reduction methods.

Each method reduces to a pair of p x p symmetric matrices (m, nn): the
leading generalized eigenvectors of ``m v = lambda nn v`` span the estimated
reduction subspace. Sample moments use divisor n throughout so that the
slice-weighted identities the DR construction relies on hold exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import InvalidInput, RankDeficientBasis, SliceError

DEFAULT_SLICES = 6


@dataclass(frozen=True)
class Dataset:
    """Predictor matrix paired with a response vector.

    Requires finite entries, n >= 2 and n > p.
    """

    x: np.ndarray
    y: np.ndarray
    names: tuple = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2:
            raise InvalidInput(f"x must be 2-d, got shape {x.shape}")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise InvalidInput("y must be a vector with one entry per row of x")
        n, p = x.shape
        if n < 2 or p < 1:
            raise InvalidInput(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if n <= p:
            raise InvalidInput(f"need n > p, got n={n}, p={p}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidInput("dataset has non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.names is not None:
            names = tuple(str(c) for c in self.names)
            if len(names) != p:
                raise InvalidInput("names must have one entry per predictor")
            object.__setattr__(self, "names", names)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def column_names(self):
        if self.names is not None:
            return self.names
        return tuple(f"x{j + 1}" for j in range(self.p))


@dataclass(frozen=True)
class SliceAssignment:
    """Equal-frequency discretization of a response vector.

    ``order`` holds the stable argsort of y; slice s owns the positions
    ``order[starts[s] : starts[s] + counts[s]]``.
    """

    labels: np.ndarray
    h: int
    counts: np.ndarray
    order: np.ndarray


@dataclass(frozen=True)
class KernelPair:
    """Method-specific matrices (m, nn) of the generalized eigenproblem."""

    m: np.ndarray
    nn: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.m.shape[0]


@dataclass(frozen=True)
class FBasis:
    """Named map y -> f(y) in R^r used by the fitted-components kernel."""

    name: str
    r: int

    def evaluate(self, y):
        y = np.asarray(y, dtype=float)
        if self.name == "abs-lin-quad":
            f = np.column_stack([np.abs(y), y, y * y])
        elif self.name == "sqrt-lin-quad":
            if np.min(y) <= 0.0:
                raise InvalidInput(
                    "sqrt-lin-quad basis requires a strictly positive response"
                )
            f = np.column_stack([np.sqrt(y), y, y * y])
        else:
            raise InvalidInput(f"unknown f-basis {self.name!r}")
        if not np.all(np.isfinite(f)):
            raise InvalidInput("f-basis evaluates to non-finite values")
        return f


F_BASES = {
    "abs-lin-quad": FBasis("abs-lin-quad", 3),
    "sqrt-lin-quad": FBasis("sqrt-lin-quad", 3),
}


def fbasis(name):
    """Look up a prebuilt f-basis by name."""
    try:
        return F_BASES[name]
    except KeyError:
        raise InvalidInput(
            f"unknown f-basis {name!r}; known: {sorted(F_BASES)}"
        ) from None


def center_cov(x):
    """Column means and the divisor-n covariance of a data matrix.

    Accepts any n x p array with n >= 2; the dataset-level n > p requirement
    is not imposed here.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InvalidInput("need an n x p matrix with n >= 2")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("matrix has non-finite entries")
    mean = x.mean(axis=0)
    xc = x - mean
    sigma = xc.T @ xc / x.shape[0]
    return mean, 0.5 * (sigma + sigma.T)


def slice_response(y, h):
    """Assign responses to h equal-frequency slices.

    Slice sizes differ by at most one, with the remainder going to the
    lowest-index slices; ties in y are resolved by stable sort order.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if not isinstance(h, (int, np.integer)) or h < 1:
        raise InvalidInput(f"slice count must be a positive integer, got {h}")
    if h > n:
        raise InvalidInput(f"cannot form {h} slices from {n} observations")
    order = np.argsort(y, kind="stable")
    counts = np.full(h, n // h, dtype=int)
    counts[: n % h] += 1
    labels = np.empty(n, dtype=int)
    start = 0
    for s, size in enumerate(counts):
        labels[order[start:start + size]] = s
        start += size
    return SliceAssignment(labels=labels, h=int(h), counts=counts, order=order)


def _sliced_views(data, h, min_size):
    """Rows of (x, y) reordered by the stable sort of y, plus slice bounds.

    Reordering first makes every downstream moment a function of the sorted
    sample only, so jointly permuting the rows of (x, y) cannot change the
    result when y is tie-free.
    """
    sl = slice_response(data.y, h)
    if np.any(sl.counts < min_size):
        raise SliceError(
            f"every slice needs at least {min_size} observations; "
            f"got counts {sl.counts.tolist()}"
        )
    xs = data.x[sl.order]
    bounds = np.concatenate([[0], np.cumsum(sl.counts)])
    return xs, sl, bounds


def kernel_pca(data):
    """Principal components: m is the covariance of x, nn the identity."""
    _, sigma = center_cov(data.x)
    return KernelPair(m=sigma, nn=np.eye(data.p), method="PCA", meta={})


def kernel_sir(data, h=DEFAULT_SLICES):
    """Sliced inverse regression: m is the between-slice covariance of means."""
    xs, sl, bounds = _sliced_views(data, h, min_size=1)
    n, p = xs.shape
    xbar = xs.mean(axis=0)
    m = np.zeros((p, p))
    for s in range(sl.h):
        seg = xs[bounds[s]:bounds[s + 1]]
        dm = seg.mean(axis=0) - xbar
        m += (seg.shape[0] / n) * np.outer(dm, dm)
    _, sigma = center_cov(xs)
    return KernelPair(m=0.5 * (m + m.T), nn=sigma, method="SIR", meta={"h": sl.h})


def kernel_save(data, h=DEFAULT_SLICES):
    """Sliced average variance estimation.

    With z the standardized predictors, m averages (I - cov(z | slice))^2
    over slices with weights n_s / n, conjugated back by the covariance
    square root.
    """
    xs, sl, bounds = _sliced_views(data, h, min_size=2)
    n, p = xs.shape
    _, sigma = center_cov(xs)
    w_half = linalg.inv_sqrt(sigma)
    z = (xs - xs.mean(axis=0)) @ w_half
    eye = np.eye(p)
    core = np.zeros((p, p))
    for s in range(sl.h):
        seg = z[bounds[s]:bounds[s + 1]]
        _, cov_s = center_cov(seg)
        dev = eye - cov_s
        core += (seg.shape[0] / n) * (dev @ dev)
    root = linalg.sqrt_psd(sigma)
    m = root @ core @ root
    return KernelPair(m=0.5 * (m + m.T), nn=sigma, method="SAVE", meta={"h": sl.h})


def kernel_dr(data, h=DEFAULT_SLICES):
    """Directional regression.

    Built from the slice-weighted second moments A_s = E(z z^T | slice) and
    means b_s = E(z | slice):

        core = 2 sum w_s A_s^2 + 2 (sum w_s b_s b_s^T)^2
               + 2 (sum w_s b_s^T b_s) (sum w_s b_s b_s^T) - 2 I

    and m conjugates core by the covariance square root.
    """
    xs, sl, bounds = _sliced_views(data, h, min_size=2)
    n, p = xs.shape
    _, sigma = center_cov(xs)
    w_half = linalg.inv_sqrt(sigma)
    z = (xs - xs.mean(axis=0)) @ w_half
    second = np.zeros((p, p))
    bbt = np.zeros((p, p))
    btb = 0.0
    for s in range(sl.h):
        seg = z[bounds[s]:bounds[s + 1]]
        w_s = seg.shape[0] / n
        a_s = seg.T @ seg / seg.shape[0]
        b_s = seg.mean(axis=0)
        second += w_s * (a_s @ a_s)
        bbt += w_s * np.outer(b_s, b_s)
        btb += w_s * float(b_s @ b_s)
    core = 2.0 * second + 2.0 * (bbt @ bbt) + 2.0 * btb * bbt - 2.0 * np.eye(p)
    root = linalg.sqrt_psd(sigma)
    m = root @ core @ root
    return KernelPair(m=0.5 * (m + m.T), nn=sigma, method="DR", meta={"h": sl.h})


def kernel_pfc(data, basis, isotropic=False):
    """Principal fitted components.

    m is the divisor-n covariance of the fitted values from the least-squares
    regression of centered x on the centered basis expansion of y; nn is the
    covariance of x, or the identity under the isotropic error variant.
    """
    if isinstance(basis, str):
        basis = fbasis(basis)
    f = basis.evaluate(data.y)
    fc = f - f.mean(axis=0)
    if np.linalg.matrix_rank(fc) < fc.shape[1]:
        raise RankDeficientBasis(
            f"design for f-basis {basis.name!r} is rank deficient"
        )
    xc = data.x - data.x.mean(axis=0)
    coef, *_ = np.linalg.lstsq(fc, xc, rcond=None)
    fitted = fc @ coef
    m = fitted.T @ fitted / data.n
    if isotropic:
        nn = np.eye(data.p)
    else:
        _, nn = center_cov(data.x)
    return KernelPair(
        m=0.5 * (m + m.T),
        nn=nn,
        method="PFC",
        meta={"fbasis": basis.name, "isotropic": bool(isotropic)},
    )


def build_kernel(data, method, h=DEFAULT_SLICES, basis="abs-lin-quad"):
    """Dispatch a kernel construction by lowercase method tag."""
    method = method.lower()
    if method == "pca":
        return kernel_pca(data)
    if method == "sir":
        return kernel_sir(data, h=h)
    if method == "save":
        return kernel_save(data, h=h)
    if method == "dr":
        return kernel_dr(data, h=h)
    if method == "pfc":
        return kernel_pfc(data, basis)
    raise InvalidInput(f"unknown method {method!r}")
