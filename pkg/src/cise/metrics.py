"""Subspace distance and variable-selection accuracy statistics."""

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import InvalidInput, RankDeficient


@dataclass(frozen=True)
class SelectionOutcome:
    """Per-replication selection accuracy against a known relevant set."""

    relevant_hit_fraction: float
    irrelevant_zero_fraction: float
    exact: bool


def _orthonormalize(a, label):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] < a.shape[1] or a.shape[1] < 1:
        raise InvalidInput(f"{label} must be a p x d matrix with p >= d >= 1")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{label} has non-finite entries")
    q, r = np.linalg.qr(a)
    diag = np.abs(np.diag(r))
    if np.min(diag) <= a.shape[0] * np.finfo(float).eps * max(np.max(diag), 1.0):
        raise RankDeficient(f"{label} is rank deficient")
    return q


def subspace_distance(a, b):
    """Largest singular value of the difference of the two span projections.

    Both arguments are p x d matrices (d may differ) of full column rank;
    the value is the sine of the largest principal angle when the dimensions
    agree, lies in [0, 1] in that case, and is zero iff the spans coincide.
    """
    qa = _orthonormalize(a, "a")
    qb = _orthonormalize(b, "b")
    if qa.shape[0] != qb.shape[0]:
        raise InvalidInput("subspaces must live in the same ambient dimension")
    diff = qa @ qa.T - qb @ qb.T
    top = linalg.sym_eig(diff @ diff).values[0]
    return math.sqrt(max(float(top), 0.0))


def selection_outcome(active, relevant, p):
    """Score an active set against the true relevant set of a p-variable problem.

    Index bases just need to agree between the two sets.
    """
    active = set(int(i) for i in active)
    relevant = set(int(i) for i in relevant)
    if not relevant:
        raise InvalidInput("relevant set must be nonempty")
    p = int(p)
    hit = len(active & relevant) / len(relevant)
    n_irr = p - len(relevant)
    if n_irr > 0:
        extra = len(active - relevant)
        zero = (n_irr - extra) / n_irr
    else:
        zero = 1.0
    return SelectionOutcome(
        relevant_hit_fraction=hit,
        irrelevant_zero_fraction=zero,
        exact=(active == relevant),
    )
