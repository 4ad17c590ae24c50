"""Seeded random problem instances: sensing matrices, sparse signals, noise.

Every random object is drawn from a numpy ``Generator`` seeded by a
``SeedSequence`` whose spawn key names the object: ``(alpha_index, s, 0)``
for the s-th matrix of a sweep point and ``(alpha_index, s, 1, t)`` for the
t-th signal/noise draw on that matrix. A trial's stream therefore depends
only on its coordinates, never on execution order or worker count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .core import Support, as_support, check_matrix, check_vector
from .errors import DimensionMismatch

_MATRIX_STREAM = 0
_TRIAL_STREAM = 1


class Distribution(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"


@dataclass(frozen=True)
class SignalSpec:
    n: int
    k: int
    distribution: Distribution = Distribution.GAUSSIAN

    def __post_init__(self):
        if not 1 <= self.k < self.n:
            raise ValueError(f"need 1 <= K < N, got K={self.k}, N={self.n}")
        object.__setattr__(self, "distribution", Distribution(self.distribution))

    # both distributions have unit power per nonzero entry
    signal_power = 1.0


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement noise; ``smnr_db=None`` means clean measurements."""

    smnr_db: Optional[float] = None

    @property
    def clean(self) -> bool:
        return self.smnr_db is None

    def sigma(self, k: int, m: int, signal_power: float = 1.0) -> float:
        """Per-entry noise standard deviation giving the configured SMNR.

        From ``SMNR = K * sigma_s^2 / (M * sigma_n^2)`` in linear units.
        """
        if self.clean:
            return 0.0
        return math.sqrt(k * signal_power / (m * 10.0 ** (self.smnr_db / 10.0)))

    def label(self) -> str:
        return "clean" if self.clean else f"smnr={self.smnr_db:g}dB"


@dataclass(frozen=True)
class RngSeed:
    seed: int = 0

    def _rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=key))

    def matrix_rng(self, alpha_index: int, s: int) -> np.random.Generator:
        return self._rng(alpha_index, s, _MATRIX_STREAM)

    def trial_rng(self, alpha_index: int, s: int, t: int) -> np.random.Generator:
        return self._rng(alpha_index, s, _TRIAL_STREAM, t)


def gaussian_matrix(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. N(0, 1/M) entries, before column normalisation."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= M <= N, got M={m}, N={n}")
    return rng.normal(0.0, 1.0 / math.sqrt(m), size=(m, n))


def gen_sensing_matrix(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    A = gaussian_matrix(m, n, rng)
    return A / np.linalg.norm(A, axis=0)


def gen_sparse_signal(spec: SignalSpec, rng: np.random.Generator) -> Tuple[np.ndarray, Support]:
    """Exactly K-sparse signal on a uniformly random support."""
    support = rng.choice(spec.n, size=spec.k, replace=False)
    if spec.distribution is Distribution.GAUSSIAN:
        values = rng.standard_normal(spec.k)
    else:
        values = 2.0 * rng.integers(0, 2, size=spec.k) - 1.0
    x = np.zeros(spec.n)
    x[support] = values
    return x, as_support(support)


def measure(A: np.ndarray, x: np.ndarray, noise: NoiseSpec, k: int,
            rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``(b, w)`` with ``b = A @ x + w``; ``w`` is zero when clean."""
    if A.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[1]} columns, x has length {x.shape[0]}")
    m = A.shape[0]
    if noise.clean:
        w = np.zeros(m)
    else:
        if rng is None:
            raise ValueError("noisy measurements need a generator")
        w = rng.normal(0.0, noise.sigma(k, m), size=m)
    return A @ x + w, w


# Plain-text instance files: comma-separated, row-major, no header, written
# with 17 significant digits so every double round-trips.

_FMT = "%.17g"


def write_matrix(path, A: np.ndarray) -> None:
    np.savetxt(Path(path), np.atleast_2d(A), fmt=_FMT, delimiter=",")


def write_vector(path, v: np.ndarray) -> None:
    np.savetxt(Path(path), np.asarray(v).reshape(-1, 1), fmt=_FMT, delimiter=",")


def read_matrix(path) -> np.ndarray:
    return check_matrix(np.loadtxt(Path(path), delimiter=",", ndmin=2))


def read_vector(path) -> np.ndarray:
    v = np.loadtxt(Path(path), delimiter=",", ndmin=2)
    if v.shape[1] != 1 and v.shape[0] != 1:
        raise DimensionMismatch(f"vector file has shape {v.shape}")
    return check_vector(v.ravel())
