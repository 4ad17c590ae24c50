"""Fast built-in checks behind ``gpfusion selftest``."""

from __future__ import annotations

import numpy as np

from .bench import ExperimentConfig, run_sweep
from .core import least_squares_on_support
from .ensemble import NoiseSpec, RngSeed, SignalSpec, gen_sensing_matrix, gen_sparse_signal, measure
from .metrics import support_fusion_stats
from .pursuits import PursuitConfig, fugp, ifugp, omp, sp


def check_orthogonality():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        A = gen_sensing_matrix(30, 80, rng)
        b = rng.standard_normal(30)
        T = rng.choice(80, size=rng.integers(1, 25), replace=False)
        _, r = least_squares_on_support(A, b, T)
        worst = max(worst, np.max(np.abs(A[:, T].T @ r)) / np.linalg.norm(b))
    return worst <= 1e-8, f"max |a_j^T r| / ||b|| = {worst:.1e}"


def check_union_bound():
    seed = RngSeed(12)
    cfg = PursuitConfig(8)
    spec = SignalSpec(120, 8)
    violations = 0
    for s in range(300):
        A = gen_sensing_matrix(30, 120, seed.matrix_rng(0, s))
        rng = seed.trial_rng(0, s, 0)
        x, T = gen_sparse_signal(spec, rng)
        b, _ = measure(A, x, NoiseSpec(), spec.k, rng)
        To, Ts = omp(A, b, cfg)[0].support, sp(A, b, cfg)[0].support
        _, _, joint_true = support_fusion_stats(T, To, Ts)
        if joint_true < max(len(set(T) & set(To)), len(set(T) & set(Ts))):
            violations += 1
    return violations == 0, f"{violations} violations in 300 trials"


def check_determinism():
    # tie instances: equal correlations must resolve to the lowest index
    ties_ok = (
        omp(np.eye(4), np.ones(4), PursuitConfig(1))[0].support == (0,)
        and sp(np.eye(4), np.ones(4), PursuitConfig(2))[0].support == (0, 1)
    )
    seed = RngSeed(13)
    A = gen_sensing_matrix(40, 100, seed.matrix_rng(0, 0))
    x, _ = gen_sparse_signal(SignalSpec(100, 10), seed.trial_rng(0, 0, 0))
    b = A @ x
    cfg = PursuitConfig(10)
    runs = []
    for _ in range(2):
        runs.append((omp(A, b, cfg)[0], sp(A, b, cfg)[0], fugp(A, b, cfg)[0], ifugp(A, b, cfg)[0]))
    same = all(
        e1.support == e2.support and np.array_equal(e1.coefficients, e2.coefficients)
        for e1, e2 in zip(*runs)
    )
    return ties_ok and same, f"tie rule {'ok' if ties_ok else 'BROKEN'}, repeat runs {'identical' if same else 'DIFFER'}"


def check_mini_sweep():
    config = ExperimentConfig(n=100, k=5, alphas=(0.2,), s=20, t=10,
                              algorithms=("omp", "sp", "fugp"), seed=14)
    result = run_sweep(config)
    o, s_ = result.row(0.2, "omp"), result.row(0.2, "sp")
    union = o.avg_joint_true
    ok = o.avg_true_atoms <= union and s_.avg_true_atoms <= union
    return ok, f"avg true atoms omp {o.avg_true_atoms:.2f}, sp {s_.avg_true_atoms:.2f}, union {union:.2f}"


CHECKS = (
    ("ls-orthogonality", check_orthogonality),
    ("union-bound", check_union_bound),
    ("determinism", check_determinism),
    ("mini-sweep", check_mini_sweep),
)


def run_checks():
    """Run every check; return ``[(name, passed, detail), ...]``."""
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
