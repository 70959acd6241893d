"""Frequency-of-frequencies statistics and coverage-based cardinality estimators.

A sample of clustered responses is summarized by its occupancy profile: how
many semantic classes were seen once, twice, and so on.  From the singleton
and doubleton counts, the missing-mass estimators here extrapolate to the
total probability of classes that were never observed, and from there to the
effective number of classes behind the sample.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

__all__ = [
    "OccupancyProfile",
    "CoverageEstimate",
    "profile_from_labels",
    "gt_estimate",
    "ggt_estimate",
    "plugin_estimate",
    "plugin_entropy",
    "GGT_SINGLETON_SCALE",
    "GGT_SINGLETON_EXPONENT",
    "GGT_DOUBLETON_SCALE",
    "GGT_DOUBLETON_EXPONENT",
    "COVERAGE_FLOOR",
]

# Stabilization constants of the generalized missing-mass formula.  The test
# suite pins these values; treat them as part of the estimator definition.
GGT_SINGLETON_SCALE = 2.08
GGT_SINGLETON_EXPONENT = 0.7
GGT_DOUBLETON_SCALE = 4.1
GGT_DOUBLETON_EXPONENT = 1.7

# Coverage is clamped to [COVERAGE_FLOOR, 1] before dividing by it.
COVERAGE_FLOOR = 1e-12


@dataclass(frozen=True)
class OccupancyProfile:
    """Occupancy summary of one clustered sample.

    Attributes:
        n: Number of sampled responses.
        k_obs: Number of distinct semantic classes observed.
        freq_of_freq: Sparse map from multiplicity m (>= 1) to the number of
            classes that appear exactly m times.
        class_counts: Per-class observed counts, sorted descending so the
            profile is independent of label order and identity.
    """

    n: int
    k_obs: int
    freq_of_freq: Mapping[int, int]
    class_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("empty sample")
        if not 1 <= self.k_obs <= self.n:
            raise ValueError(f"k_obs={self.k_obs} outside [1, n={self.n}]")
        if any(c < 1 for c in self.class_counts):
            raise ValueError("class counts must be positive")
        if sum(self.class_counts) != self.n:
            raise ValueError("class counts must sum to n")
        if len(self.class_counts) != self.k_obs:
            raise ValueError("class_counts length must equal k_obs")
        if sum(m * f for m, f in self.freq_of_freq.items()) != self.n:
            raise ValueError("freq_of_freq inconsistent with n")
        if sum(self.freq_of_freq.values()) != self.k_obs:
            raise ValueError("freq_of_freq inconsistent with k_obs")

    def f(self, m: int) -> int:
        """Number of classes appearing exactly ``m`` times (0 when absent)."""
        return self.freq_of_freq.get(m, 0)

    @property
    def frequencies(self) -> tuple[float, ...]:
        """Empirical class frequencies c_i / n, aligned with class_counts."""
        return tuple(c / self.n for c in self.class_counts)


@dataclass(frozen=True)
class CoverageEstimate:
    """Missing mass, coverage, and the implied class cardinality.

    ``missing_mass`` keeps the raw pre-clamp value for diagnostics; coverage
    is 1 - missing_mass clamped to [COVERAGE_FLOOR, 1], so ``cardinality``
    (k_obs / coverage) is always >= k_obs.
    """

    missing_mass: float
    coverage: float
    cardinality: float

    @classmethod
    def from_missing_mass(cls, missing_mass: float, k_obs: int) -> "CoverageEstimate":
        coverage = min(max(1.0 - missing_mass, COVERAGE_FLOOR), 1.0)
        return cls(missing_mass=missing_mass, coverage=coverage, cardinality=k_obs / coverage)


def profile_from_labels(labels: Sequence[Hashable]) -> OccupancyProfile:
    """Tabulates an occupancy profile from per-response cluster labels.

    Label identity, not order, determines classes; permuting the input
    produces a bit-identical profile.

    Args:
        labels: Non-empty sequence of cluster identifiers, one per response.

    Returns:
        The tabulated OccupancyProfile.

    Raises:
        ValueError: If ``labels`` is empty.
    """
    if len(labels) == 0:
        raise ValueError("empty sample")
    counts = Counter(labels)
    class_counts = tuple(sorted(counts.values(), reverse=True))
    freq_of_freq = dict(sorted(Counter(class_counts).items()))
    return OccupancyProfile(
        n=len(labels),
        k_obs=len(class_counts),
        freq_of_freq=freq_of_freq,
        class_counts=class_counts,
    )


def gt_estimate(p: OccupancyProfile) -> CoverageEstimate:
    """Classical Good-Turing missing mass: M = f_1 / n."""
    return CoverageEstimate.from_missing_mass(p.f(1) / p.n, p.k_obs)


def ggt_estimate(p: OccupancyProfile) -> CoverageEstimate:
    """Generalized Good-Turing missing mass from singleton and doubleton counts.

    M = (1/n) * (1 - 2.08 / n^0.7) * f_1 + (4.1 / n^1.7) * f_2

    For n <= 2 the singleton coefficient is negative; the raw value is kept in
    ``missing_mass`` and the coverage clamp handles the range.
    """
    n = float(p.n)
    singleton_coef = (1.0 - GGT_SINGLETON_SCALE / n**GGT_SINGLETON_EXPONENT) / n
    doubleton_coef = GGT_DOUBLETON_SCALE / n**GGT_DOUBLETON_EXPONENT
    missing = singleton_coef * p.f(1) + doubleton_coef * p.f(2)
    return CoverageEstimate.from_missing_mass(missing, p.k_obs)


def plugin_estimate(p: OccupancyProfile) -> CoverageEstimate:
    """Plugin estimator: no extrapolation, cardinality equals k_obs."""
    return CoverageEstimate(missing_mass=0.0, coverage=1.0, cardinality=float(p.k_obs))


def plugin_entropy(p: OccupancyProfile) -> float:
    """Plugin Shannon entropy of the empirical class frequencies, in nats."""
    return -sum(q * math.log(q) for q in p.frequencies)
