"""Greedy pursuits with warm starts and their fusion.

``omp`` and ``sp`` accept an initial support that is kept (OMP) or used to
seed the first residual (SP); with an empty initial support they reduce to
the classic algorithms. ``fugp`` fuses one OMP and one SP estimate by a
least-squares vote over the union of their supports, and ``ifugp`` repeats
the fusion, warm-starting both pursuits from the atoms they agree on, for as
long as the residual norm keeps decreasing.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .core import (
    SparseEstimate,
    Support,
    argmax_correlation,
    as_support,
    check_matrix,
    check_vector,
    least_squares_on_support,
    matched_filter,
    top_k_magnitude,
)
from .errors import DimensionMismatch, InvalidInitialSupport

ALGORITHMS = ("omp", "sp", "fugp", "ifugp")

# absolute slack, relative to ||b||, on every "residual stopped decreasing" test
STALL_RTOL = 1e-12


@dataclass(frozen=True)
class PursuitConfig:
    sparsity: int
    max_sp_iterations: int = 100
    max_ifugp_iterations: int = 50
    correlation_uses_magnitude: bool = True

    def __post_init__(self):
        if self.sparsity < 1:
            raise ValueError("sparsity must be at least 1")
        if self.max_sp_iterations < 1 or self.max_ifugp_iterations < 1:
            raise ValueError("iteration caps must be at least 1")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    support: Support
    residual_norm: float
    accepted: bool = True


@dataclass
class PursuitTrace:
    """Per-iteration history of one pursuit run.

    ``accepted`` is false only for the final iterate of SP/IFuGP, the one that
    failed to decrease the residual and was discarded. ``padded`` marks an SP
    run whose first iteration failed and whose initial support had to be
    topped up to K atoms.
    """

    records: List[TraceRecord] = field(default_factory=list)
    padded: bool = False
    cap_reached: bool = False

    def add(self, k, support, residual_norm, accepted=True):
        self.records.append(TraceRecord(k, tuple(support), float(residual_norm), accepted))

    @property
    def accepted(self) -> List[TraceRecord]:
        return [r for r in self.records if r.accepted]


@dataclass(frozen=True)
class FusionReport:
    omp: SparseEstimate
    sp: SparseEstimate
    common: Support
    joint: Support
    joint_coefficients: np.ndarray


def _prepare(A, b, cfg: PursuitConfig, init: Iterable[int] = ()):
    A = check_matrix(A)
    b = check_vector(b, A.shape[0])
    m, n = A.shape
    if cfg.sparsity > m:
        raise DimensionMismatch(f"sparsity {cfg.sparsity} exceeds {m} measurements")
    init = as_support(init, n)
    if len(init) >= cfg.sparsity:
        raise InvalidInitialSupport(
            f"initial support has {len(init)} atoms, at most {cfg.sparsity - 1} allowed"
        )
    return A, b, init


def _estimate(A, b, support) -> SparseEstimate:
    support = as_support(support)
    coef, r = least_squares_on_support(A, b, support)
    return SparseEstimate(support, coef, float(np.linalg.norm(r)), A.shape[1])


def omp(A, b, cfg: PursuitConfig, init: Iterable[int] = ()) -> Tuple[SparseEstimate, PursuitTrace]:
    """Orthogonal matching pursuit started from the atoms in ``init``.

    Each step adds the column most correlated with the current residual and
    refits on the enlarged support, until K atoms are selected.
    """
    A, b, init = _prepare(A, b, cfg, init)
    K = cfg.sparsity
    support = list(init)
    _, r = least_squares_on_support(A, b, init)
    trace = PursuitTrace()
    trace.add(len(support), init, np.linalg.norm(r))
    while len(support) < K:
        c = matched_filter(A, r)
        support.append(argmax_correlation(c, support, cfg.correlation_uses_magnitude))
        _, r = least_squares_on_support(A, b, support)
        trace.add(len(support), as_support(support), np.linalg.norm(r))
    return _estimate(A, b, support), trace


def sp(A, b, cfg: PursuitConfig, init: Iterable[int] = ()) -> Tuple[SparseEstimate, PursuitTrace]:
    """Subspace pursuit whose first residual is taken against ``init``.

    Every iteration merges the K strongest matched-filter atoms into the
    current support, refits, prunes back to the K largest coefficients and
    refits again. The loop ends as soon as the residual norm fails to
    decrease; the previous support is returned.
    """
    A, b, init = _prepare(A, b, cfg, init)
    K = cfg.sparsity
    slack = STALL_RTOL * np.linalg.norm(b)

    _, r = least_squares_on_support(A, b, init)
    best, best_norm = init, float(np.linalg.norm(r))
    trace = PursuitTrace()
    trace.add(0, init, best_norm)

    for k in range(1, cfg.max_sp_iterations + 1):
        J = top_k_magnitude(matched_filter(A, r), K)
        candidates = as_support(set(J).union(best))
        v, _ = least_squares_on_support(A, b, candidates)
        support = tuple(candidates[j] for j in top_k_magnitude(v, K))
        _, r_new = least_squares_on_support(A, b, support)
        norm = float(np.linalg.norm(r_new))
        if norm >= best_norm - slack:
            trace.add(k, support, norm, accepted=False)
            break
        trace.add(k, support, norm)
        best, best_norm, r = support, norm, r_new
    else:
        trace.cap_reached = True

    if len(best) < K:
        # only reachable when the very first iteration did not help
        _, r0 = least_squares_on_support(A, b, init)
        extra = top_k_magnitude(matched_filter(A, r0), K - len(init), exclude=init)
        best = as_support(set(init).union(extra))
        trace.padded = True
    return _estimate(A, b, best), trace


def _fuse(A, b, K, est_omp: SparseEstimate, est_sp: SparseEstimate):
    common = as_support(set(est_omp.support) & set(est_sp.support))
    joint = as_support(set(est_omp.support) | set(est_sp.support))
    v, _ = least_squares_on_support(A, b, joint)
    common_set = set(common)
    free = [j for j, idx in enumerate(joint) if idx not in common_set]
    picked = top_k_magnitude(v[free], K - len(common))
    support = as_support(common_set.union(joint[free[p]] for p in picked))
    report = FusionReport(est_omp, est_sp, common, joint, v)
    return _estimate(A, b, support), report


def _require_double_sparsity(A, cfg):
    if 2 * cfg.sparsity > A.shape[0]:
        raise DimensionMismatch(
            f"fusion needs at least 2K = {2 * cfg.sparsity} measurements, got {A.shape[0]}"
        )


def fugp(
    A,
    b,
    cfg: PursuitConfig,
    *,
    ingredients: Optional[Tuple[SparseEstimate, SparseEstimate]] = None,
    concurrent: bool = False,
) -> Tuple[SparseEstimate, FusionReport]:
    """Fuse classic OMP and SP estimates of a K-sparse signal.

    Atoms chosen by both pursuits are kept; the rest of the support is
    filled with the largest least-squares coefficients over the union of the
    two supports.

    Parameters
    ----------
    ingredients : (SparseEstimate, SparseEstimate), optional
        Precomputed ``(omp, sp)`` results on the same ``(A, b, cfg)`` with
        empty initial support. Skips rerunning the pursuits.
    concurrent : bool
        Run the two pursuits on separate threads. The output does not
        depend on this flag.
    """
    A, b, _ = _prepare(A, b, cfg)
    _require_double_sparsity(A, cfg)
    if ingredients is None:
        if concurrent:
            with ThreadPoolExecutor(max_workers=2) as pool:
                fo = pool.submit(omp, A, b, cfg)
                fs = pool.submit(sp, A, b, cfg)
                ingredients = (fo.result()[0], fs.result()[0])
        else:
            ingredients = (omp(A, b, cfg)[0], sp(A, b, cfg)[0])
    return _fuse(A, b, cfg.sparsity, *ingredients)


def ifugp(
    A,
    b,
    cfg: PursuitConfig,
    *,
    first: Optional[Tuple[SparseEstimate, FusionReport]] = None,
) -> Tuple[SparseEstimate, PursuitTrace, FusionReport]:
    """Iterated fusion: rerun OMP and SP warm-started from their common atoms.

    Iteration 1 is exactly :func:`fugp` and is always accepted. Later
    iterations are kept only while they strictly lower the residual norm.
    Iteration stops early once both pursuits agree on all K atoms.

    ``first`` may carry a precomputed ``fugp`` result for iteration 1.
    Returns the estimate, the trace and the fusion report of the returned
    iterate.
    """
    A, b, _ = _prepare(A, b, cfg)
    _require_double_sparsity(A, cfg)
    K = cfg.sparsity
    slack = STALL_RTOL * np.linalg.norm(b)
    trace = PursuitTrace()

    best = best_report = None
    best_norm = np.inf
    common: Support = ()
    for k in range(1, cfg.max_ifugp_iterations + 1):
        if k == 1 and first is not None:
            est, report = first
        else:
            ingredients = (omp(A, b, cfg, common)[0], sp(A, b, cfg, common)[0])
            est, report = _fuse(A, b, K, *ingredients)
        if best is not None and est.residual_norm >= best_norm - slack:
            trace.add(k, est.support, est.residual_norm, accepted=False)
            break
        trace.add(k, est.support, est.residual_norm)
        best, best_report, best_norm = est, report, est.residual_norm
        common = report.common
        if len(common) == K:
            break
    else:
        trace.cap_reached = True
    return best, trace, best_report


def recover(A, b, sparsity: int, algorithm: str, **cfg_kwargs) -> SparseEstimate:
    """Run one of :data:`ALGORITHMS` and return only the estimate."""
    cfg = PursuitConfig(sparsity, **cfg_kwargs)
    if algorithm == "omp":
        return omp(A, b, cfg)[0]
    if algorithm == "sp":
        return sp(A, b, cfg)[0]
    if algorithm == "fugp":
        return fugp(A, b, cfg)[0]
    if algorithm == "ifugp":
        return ifugp(A, b, cfg)[0]
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
