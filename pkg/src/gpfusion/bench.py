"""Monte Carlo sweep driver.

For every measurement fraction ``alpha`` the sweep draws ``S`` sensing
matrices and ``T`` signals per matrix, runs the configured pursuits on each
``(A, b)`` and accumulates one :class:`~gpfusion.metrics.Aggregate` per
algorithm. The unit of work handed to a worker is one matrix with its ``T``
trials; results are merged exactly, so the output does not depend on the
number of workers.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from . import __version__
from .core import Support
from .ensemble import (
    Distribution,
    NoiseSpec,
    RngSeed,
    SignalSpec,
    gen_sensing_matrix,
    gen_sparse_signal,
    measure,
)
from .errors import ConfigInvalid, RankDeficient
from .metrics import Aggregate, srer_db, support_fusion_stats, true_atom_count
from .pursuits import ALGORITHMS, PursuitConfig, fugp, ifugp, omp, sp

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "alpha", "M", "algorithm", "trials", "failed", "srer_db", "avg_true_atoms",
    "avg_common", "avg_joint", "avg_joint_true", "wall_s",
)
FUSION_ALGORITHMS = ("fugp", "ifugp")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 500
    k: int = 20
    alphas: Tuple[float, ...] = (0.18,)
    s: int = 10
    t: int = 100
    distribution: Distribution = Distribution.GAUSSIAN
    smnr_db: Optional[float] = None
    algorithms: Tuple[str, ...] = ALGORITHMS
    seed: int = 0
    output: Optional[Path] = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        try:
            object.__setattr__(self, "distribution", Distribution(self.distribution))
        except ValueError:
            raise ConfigInvalid(f"unknown distribution {self.distribution!r}") from None
        self.validate()

    def measurements(self, alpha: float) -> int:
        return int(round(alpha * self.n))

    def validate(self) -> None:
        if self.n < 2 or self.k < 1:
            raise ConfigInvalid(f"need N >= 2 and K >= 1, got N={self.n}, K={self.k}")
        if not self.alphas:
            raise ConfigInvalid("no alphas given")
        if self.s < 1 or self.t < 1:
            raise ConfigInvalid(f"S and T must be at least 1, got S={self.s}, T={self.t}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ConfigInvalid(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigInvalid("duplicate algorithm in list")
        fusion = any(a in FUSION_ALGORITHMS for a in self.algorithms)
        for alpha in self.alphas:
            if not 0.0 < alpha <= 1.0:
                raise ConfigInvalid(f"alpha={alpha} outside (0, 1]")
            m = alpha * self.n
            if abs(m - round(m)) > 1e-9:
                raise ConfigInvalid(f"alpha={alpha} gives non-integer M = {m:g} for N={self.n}")
            m = round(m)
            if self.k >= m:
                raise ConfigInvalid(f"alpha={alpha}: K={self.k} must be below M={m}")
            if fusion and 2 * self.k > m:
                raise ConfigInvalid(f"alpha={alpha}: fusion needs M >= 2K, got M={m}, K={self.k}")

    @property
    def signal(self) -> SignalSpec:
        return SignalSpec(self.n, self.k, self.distribution)

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.smnr_db)


@dataclass(frozen=True)
class AlgorithmOutcome:
    support: Optional[Support]
    error_energy: float = math.nan
    true_atoms: int = 0
    fusion: Optional[Tuple[int, int, int]] = None
    wall_s: float = 0.0

    @property
    def failed(self) -> bool:
        return self.support is None


@dataclass(frozen=True)
class TrialRecord:
    true_support: Support
    signal_energy: float
    noise_energy: float
    outcomes: Dict[str, AlgorithmOutcome]


def run_trial(A: np.ndarray, spec: SignalSpec, noise: NoiseSpec, cfg: PursuitConfig,
              rng: np.random.Generator, algorithms: Sequence[str] = ALGORITHMS) -> TrialRecord:
    """Draw one signal and measurement on ``A`` and run every requested pursuit.

    FuGP reuses the OMP and SP runs of the same trial, and IFuGP reuses the
    FuGP result as its first iteration. An algorithm whose least-squares
    step is rank deficient is marked failed, together with everything that
    depends on it.
    """
    x, true_support = gen_sparse_signal(spec, rng)
    b, w = measure(A, x, noise, spec.k, rng)
    wanted = set(algorithms)
    need_omp = bool(wanted & {"omp", "fugp", "ifugp"})
    need_sp = bool(wanted & {"sp", "fugp", "ifugp"})
    need_fugp = bool(wanted & {"fugp", "ifugp"})

    def timed(fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            out = fn(*args, **kwargs)
        except RankDeficient as exc:
            log.debug("rank-deficient trial: %s", exc)
            out = None
        return out, time.perf_counter() - t0

    res_omp, t_omp = timed(omp, A, b, cfg) if need_omp else (None, 0.0)
    res_sp, t_sp = timed(sp, A, b, cfg) if need_sp else (None, 0.0)
    pair = None
    if res_omp is not None and res_sp is not None:
        pair = support_fusion_stats(true_support, res_omp[0].support, res_sp[0].support)

    res_fugp, t_fugp = None, t_omp + t_sp
    if need_fugp and pair is not None:
        res_fugp, dt = timed(fugp, A, b, cfg, ingredients=(res_omp[0], res_sp[0]))
        t_fugp += dt
    res_ifugp, t_ifugp = None, t_fugp
    if "ifugp" in wanted and res_fugp is not None:
        res_ifugp, dt = timed(ifugp, A, b, cfg, first=res_fugp)
        t_ifugp += dt

    def outcome(estimate, fusion, wall):
        if estimate is None:
            return AlgorithmOutcome(None, wall_s=wall)
        err = float(np.sum((x - estimate.to_dense()) ** 2))
        return AlgorithmOutcome(estimate.support, err,
                                true_atom_count(true_support, estimate.support), fusion, wall)

    outcomes = {}
    for name in algorithms:
        if name == "omp":
            outcomes[name] = outcome(res_omp and res_omp[0], pair, t_omp)
        elif name == "sp":
            outcomes[name] = outcome(res_sp and res_sp[0], pair, t_sp)
        elif name == "fugp":
            outcomes[name] = outcome(res_fugp and res_fugp[0], pair, t_fugp)
        else:
            est = report = None
            if res_ifugp is not None:
                est, _, report = res_ifugp
            fusion = None
            if report is not None:
                fusion = support_fusion_stats(true_support, report.omp.support, report.sp.support)
            outcomes[name] = outcome(est, fusion, t_ifugp)
    return TrialRecord(true_support, float(x @ x), float(w @ w), outcomes)


@dataclass
class Cell:
    """Merged aggregate and failure count for one (alpha, algorithm)."""

    aggregate: Aggregate = field(default_factory=Aggregate)
    failed: int = 0

    def __add__(self, other: "Cell") -> "Cell":
        return Cell(self.aggregate + other.aggregate, self.failed + other.failed)


def _accumulate(cells: Dict[str, Cell], record: TrialRecord) -> None:
    for name, out in record.outcomes.items():
        cell = cells[name]
        if out.failed:
            cell.failed += 1
            continue
        cell.aggregate.add(record.signal_energy, out.error_energy, out.true_atoms,
                           out.fusion, record.noise_energy, out.wall_s)


def run_matrix(config: ExperimentConfig, alpha_index: int, s: int) -> Dict[str, Cell]:
    """All ``T`` trials on the ``s``-th matrix of one sweep point."""
    m = config.measurements(config.alphas[alpha_index])
    seed = RngSeed(config.seed)
    A = gen_sensing_matrix(m, config.n, seed.matrix_rng(alpha_index, s))
    cfg = PursuitConfig(config.k)
    cells = {name: Cell() for name in config.algorithms}
    for t in range(config.t):
        record = run_trial(A, config.signal, config.noise, cfg,
                           seed.trial_rng(alpha_index, s, t), config.algorithms)
        _accumulate(cells, record)
    return cells


def _run_task(args):
    return run_matrix(*args)


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    M: int
    algorithm: str
    trials: int
    failed: int
    srer_db: Optional[float]
    avg_true_atoms: Optional[float]
    avg_common: Optional[float]
    avg_joint: Optional[float]
    avg_joint_true: Optional[float]
    wall_s: float


@dataclass
class SweepResult:
    rows: List[SweepRow]
    cells: Dict[Tuple[float, str], Cell] = field(default_factory=dict, compare=False)

    def row(self, alpha: float, algorithm: str) -> SweepRow:
        for r in self.rows:
            if r.algorithm == algorithm and math.isclose(r.alpha, alpha):
                return r
        raise KeyError((alpha, algorithm))


def _row(alpha: float, m: int, name: str, cell: Cell, attempted: int) -> SweepRow:
    agg = cell.aggregate
    done = agg.trials > 0
    fusion = agg.mean_fusion()
    return SweepRow(
        alpha=alpha, M=m, algorithm=name, trials=attempted, failed=cell.failed,
        srer_db=srer_db(agg) if done else None,
        avg_true_atoms=agg.mean_true_atoms() if done else None,
        avg_common=fusion[0] if fusion else None,
        avg_joint=fusion[1] if fusion else None,
        avg_joint_true=fusion[2] if fusion else None,
        wall_s=agg.wall_s,
    )


def run_sweep(config: ExperimentConfig, workers: int = 1, progress: bool = False) -> SweepResult:
    """Run the full sweep. Output is identical for any ``workers`` value."""
    if workers < 1:
        raise ConfigInvalid("workers must be at least 1")
    tasks = [(config, ai, s) for ai in range(len(config.alphas)) for s in range(config.s)]
    if workers == 1:
        results: Iterable = map(_run_task, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers)))

    merged = {(ai, name): Cell() for ai in range(len(config.alphas)) for name in config.algorithms}
    try:
        for done, ((_, ai, _), cells) in enumerate(zip(tasks, results), 1):
            for name, cell in cells.items():
                merged[ai, name] = merged[ai, name] + cell
            if progress and (done % max(1, len(tasks) // 20) == 0 or done == len(tasks)):
                log.info("matrices done: %d/%d", done, len(tasks))
    finally:
        if pool is not None:
            pool.shutdown()

    rows, cells = [], {}
    for ai, alpha in enumerate(config.alphas):
        m = config.measurements(alpha)
        for name in config.algorithms:
            cell = merged[ai, name]
            cells[alpha, name] = cell
            rows.append(_row(alpha, m, name, cell, config.s * config.t))
    return SweepResult(rows, cells)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(result: SweepResult, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in result.rows:
        writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    write_csv(result, buf)
    return buf.getvalue()


def read_csv(source: TextIO) -> SweepResult:
    reader = csv.DictReader(source)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected header {reader.fieldnames}")

    def opt(v):
        return float(v) if v != "" else None

    rows = [
        SweepRow(
            alpha=float(d["alpha"]), M=int(d["M"]), algorithm=d["algorithm"],
            trials=int(d["trials"]), failed=int(d["failed"]), srer_db=opt(d["srer_db"]),
            avg_true_atoms=opt(d["avg_true_atoms"]), avg_common=opt(d["avg_common"]),
            avg_joint=opt(d["avg_joint"]), avg_joint_true=opt(d["avg_joint_true"]),
            wall_s=float(d["wall_s"]),
        )
        for d in reader
    ]
    return SweepResult(rows)


def csv_body_without_wall(text: str) -> str:
    """CSV text with the wall-clock column dropped, for determinism checks."""
    lines = []
    for line in text.splitlines():
        lines.append(line.rsplit(",", 1)[0])
    return "\n".join(lines)


def build_id() -> str:
    return (f"gpfusion {__version__}; python {platform.python_version()}; "
            f"numpy {np.__version__}")


def write_manifest(config: ExperimentConfig, path: Path, workers: int) -> None:
    """Config echo, seed and build identifier as ``key = value`` lines."""
    d = asdict(config)
    lines = [
        "# gpfusion run manifest",
        f"created = {time.strftime('%Y-%m-%dT%H:%M:%S%z')}",
        f"build = {build_id()}",
        f"command = {' '.join(sys.argv)}",
        f"workers = {workers}",
    ]
    for key, label in (("n", "N"), ("k", "K"), ("s", "S"), ("t", "T"), ("seed", "seed")):
        lines.append(f"{label} = {d[key]}")
    lines.append(f"alphas = {','.join(repr(a) for a in config.alphas)}")
    lines.append(f"distribution = {config.distribution.value}")
    lines.append(f"noise = {config.noise.label()}")
    lines.append(f"algorithms = {','.join(config.algorithms)}")
    path.write_text("\n".join(lines) + "\n")
