"""Dense linear-algebra kernels and index selection shared by the pursuits.

Supports are represented as ascending tuples of 0-based column indices.
Set algebra on them (intersection, union) goes through ``frozenset`` and is
normalised back with :func:`as_support`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.linalg import qr, solve_triangular

from .errors import DimensionMismatch, InsufficientCandidates, RankDeficient

#: pivot magnitude (relative to the largest pivot) below which a column
#: submatrix is declared rank deficient
RANK_RTOL = 1e-10

Support = Tuple[int, ...]


def as_support(indices: Iterable[int], n: Optional[int] = None) -> Support:
    """Validate ``indices`` and return them as an ascending tuple."""
    out = tuple(sorted(int(i) for i in indices))
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate indices in support {out}")
    if out and out[0] < 0:
        raise ValueError(f"negative index in support {out}")
    if n is not None and out and out[-1] >= n:
        raise ValueError(f"index {out[-1]} out of range for {n} columns")
    return out


@dataclass(frozen=True)
class SparseEstimate:
    """A K-sparse estimate: support, coefficients on it, and residual norm.

    ``coefficients[j]`` belongs to column ``support[j]``; the support is kept
    in ascending order.
    """

    support: Support
    coefficients: np.ndarray
    residual_norm: float
    n: int

    def __post_init__(self):
        if len(self.support) != len(self.coefficients):
            raise DimensionMismatch("support and coefficients differ in length")
        if len(self.support) > self.n:
            raise DimensionMismatch("support larger than ambient dimension")
        if self.residual_norm < 0:
            raise ValueError("residual norm must be nonnegative")
        self.coefficients.setflags(write=False)

    def to_dense(self) -> np.ndarray:
        x = np.zeros(self.n)
        x[list(self.support)] = self.coefficients
        return x


def check_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"expected a nonempty 2-d matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def check_vector(v, length: Optional[int] = None) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise DimensionMismatch(f"expected length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def least_squares_on_support(A: np.ndarray, b: np.ndarray, support: Iterable[int]):
    """Least-squares fit of ``b`` on the columns of ``A`` listed in ``support``.

    Solved through a column-pivoted QR factorisation of the submatrix.

    Returns
    -------
    coefficients : ndarray
        Minimiser of ``||b - A[:, T] c||``, ordered like ``support``.
    residual : ndarray
        ``b - A[:, T] @ coefficients``.

    Raises
    ------
    RankDeficient
        If a pivot falls below ``RANK_RTOL`` times the largest pivot, or the
        support has more columns than ``A`` has rows.
    """
    m, n = A.shape
    if b.shape != (m,):
        raise DimensionMismatch(f"b has shape {b.shape}, expected ({m},)")
    idx = list(support)
    if not idx:
        return np.zeros(0), b.copy()
    if max(idx) >= n or min(idx) < 0:
        raise DimensionMismatch(f"support index out of range for {n} columns")
    if len(idx) > m:
        raise RankDeficient(idx, m)

    sub = A[:, idx]
    q, r, piv = qr(sub, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(r))
    if diag[0] == 0.0 or diag[-1] < RANK_RTOL * diag[0]:
        raise RankDeficient(idx, int(np.sum(diag >= RANK_RTOL * diag[0])))
    z = solve_triangular(r, q.T @ b, check_finite=False)
    coef = np.empty(len(idx))
    coef[piv] = z
    return coef, b - sub @ coef


def matched_filter(A: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Correlation of every column of ``A`` with ``r``, i.e. ``A.T @ r``."""
    if r.shape != (A.shape[0],):
        raise DimensionMismatch(f"r has shape {r.shape}, expected ({A.shape[0]},)")
    return A.T @ r


def top_k_magnitude(v: np.ndarray, k: int, exclude: Iterable[int] = ()) -> Support:
    """Indices of the ``k`` largest ``|v_i|`` outside ``exclude``.

    Ties go to the lower index. Raises :class:`InsufficientCandidates` when
    fewer than ``k`` indices are eligible.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    mag = np.abs(np.asarray(v, dtype=float))
    excl = list(exclude)
    if len(v) - len(set(excl)) < k:
        raise InsufficientCandidates(
            f"need {k} indices, only {len(v) - len(set(excl))} eligible"
        )
    if k == 0:
        return ()
    if excl:
        mag = mag.copy()
        mag[excl] = -np.inf
    order = np.argsort(-mag, kind="stable")
    return as_support(order[:k])


def argmax_correlation(c: np.ndarray, exclude: Iterable[int] = (), magnitude: bool = True) -> int:
    """Index maximising ``|c_i|`` (or ``c_i`` when ``magnitude`` is false) off ``exclude``.

    ``np.argmax`` returns the first maximiser, which is the lowest-index tie rule.
    """
    score = np.abs(c) if magnitude else np.array(c, dtype=float)
    excl = list(exclude)
    if len(excl) >= len(c):
        raise InsufficientCandidates("every index is excluded")
    if excl:
        score[excl] = -np.inf
    return int(np.argmax(score))
