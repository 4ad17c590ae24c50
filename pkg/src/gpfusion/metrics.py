"""Recovery quality measures and mergeable Monte Carlo accumulators.

Energy sums are kept as exact rationals (``fractions.Fraction`` of the
float inputs), so merging partial aggregates in any grouping or order gives
bit-identical results. Count sums are plain integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Iterable, Optional, Tuple

from .errors import EmptyAggregate


def true_atom_count(true_support: Iterable[int], estimate: Iterable[int]) -> int:
    return len(set(true_support) & set(estimate))


def support_fusion_stats(true_support, omp_support, sp_support) -> Tuple[int, int, int]:
    """Return ``(|common|, |joint|, |true ∩ joint|)`` for two estimated supports."""
    a, b = set(omp_support), set(sp_support)
    joint = a | b
    return len(a & b), len(joint), len(joint & set(true_support))


@dataclass
class Aggregate:
    """Running sums over the trials of one (sweep point, algorithm) cell.

    ``fusion_trials`` counts the trials that carried common/joint statistics;
    the three fusion sums are averaged over that count.
    """

    trials: int = 0
    signal_energy: Fraction = field(default_factory=Fraction)
    error_energy: Fraction = field(default_factory=Fraction)
    noise_energy: Fraction = field(default_factory=Fraction)
    true_atoms: int = 0
    fusion_trials: int = 0
    common: int = 0
    joint: int = 0
    joint_true: int = 0
    # excluded from every determinism guarantee
    wall_s: float = 0.0

    def add(self, signal_energy: float, error_energy: float, true_atoms: int,
            fusion: Optional[Tuple[int, int, int]] = None, noise_energy: float = 0.0,
            wall_s: float = 0.0) -> None:
        self.trials += 1
        self.signal_energy += Fraction(signal_energy)
        self.error_energy += Fraction(error_energy)
        self.noise_energy += Fraction(noise_energy)
        self.true_atoms += true_atoms
        if fusion is not None:
            self.fusion_trials += 1
            self.common += fusion[0]
            self.joint += fusion[1]
            self.joint_true += fusion[2]
        self.wall_s += wall_s

    def __add__(self, other: "Aggregate") -> "Aggregate":
        if not isinstance(other, Aggregate):
            return NotImplemented
        return Aggregate(**{f.name: getattr(self, f.name) + getattr(other, f.name)
                            for f in fields(self)})

    def mean_true_atoms(self) -> float:
        if self.trials == 0:
            raise EmptyAggregate("no trials aggregated")
        return self.true_atoms / self.trials

    def mean_fusion(self) -> Optional[Tuple[float, float, float]]:
        if self.fusion_trials == 0:
            return None
        n = self.fusion_trials
        return self.common / n, self.joint / n, self.joint_true / n


def _db(num: Fraction, den: Fraction) -> float:
    # log of the integer parts avoids float overflow for extreme ratios
    ratio = num / den
    if ratio == 0:
        return -math.inf
    return 10.0 * (math.log10(ratio.numerator) - math.log10(ratio.denominator))


def srer_db(agg: Aggregate) -> float:
    """Signal-to-reconstruction-error ratio in dB over all aggregated trials.

    Ratio of summed energies, not an average of per-trial ratios. Returns
    ``inf`` when every trial was recovered exactly.
    """
    if agg.trials == 0:
        raise EmptyAggregate("SRER of an empty aggregate")
    if agg.error_energy == 0:
        return math.inf
    return _db(agg.signal_energy, agg.error_energy)


def empirical_smnr_db(agg: Aggregate) -> float:
    """Measured signal-to-measurement-noise ratio from summed energies."""
    if agg.trials == 0:
        raise EmptyAggregate("SMNR of an empty aggregate")
    if agg.noise_energy == 0:
        return math.inf
    return _db(agg.signal_energy, agg.noise_energy)
