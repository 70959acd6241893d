"""Synthetic query pools with known semantic alphabets and noisy entailment.

Each generated query draws class probabilities from a heavy-tailed (zipf) or
Dirichlet family, samples response labels i.i.d., and fills a directed
entailment matrix with interval-uniform noise: within-class entries high,
cross-class entries low.  With the default separability margin, threshold
clustering recovers the true labels exactly, so the full evaluation protocol
can run without any language model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .records import QueryRecord

__all__ = ["SyntheticSpec", "generate_pool"]


@dataclass(frozen=True)
class SyntheticSpec:
    """Ground-truth pool parameters.

    Attributes:
        true_alphabet_size: Number of semantic classes K behind each query.
        family: Class-probability family, "zipf" (probability of class i
            proportional to (i+1)^-exponent) or "dirichlet" (symmetric, with
            the given concentration).
        zipf_exponent: Tail exponent for the zipf family; larger means
            heavier concentration on the top classes.
        dirichlet_concentration: Concentration for the dirichlet family.
        responses_per_query: Pool size N sampled per query.
        lo_in / hi_in: Range of within-class entailment noise.
        lo_out / hi_out: Range of cross-class entailment noise.
        allow_overlap: Permit hi_out >= lo_in (stress mode; threshold
            clustering is no longer guaranteed to recover the truth).
        seed: Base seed; query i uses the sub-seed (seed, i).
    """

    true_alphabet_size: int = 12
    family: str = "zipf"
    zipf_exponent: float = 1.2
    dirichlet_concentration: float = 1.0
    responses_per_query: int = 100
    lo_in: float = 0.8
    hi_in: float = 1.0
    lo_out: float = 0.0
    hi_out: float = 0.2
    allow_overlap: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.true_alphabet_size < 1:
            raise ValueError("true_alphabet_size must be >= 1")
        if self.family not in ("zipf", "dirichlet"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.zipf_exponent < 0.0:
            raise ValueError("zipf_exponent must be >= 0")
        if self.dirichlet_concentration <= 0.0:
            raise ValueError("dirichlet_concentration must be > 0")
        if self.responses_per_query < 1:
            raise ValueError("responses_per_query must be >= 1")
        for lo, hi, tag in ((self.lo_in, self.hi_in, "in"), (self.lo_out, self.hi_out, "out")):
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError(f"noise range lo_{tag}..hi_{tag} must satisfy 0 <= lo <= hi <= 1")
        if not self.allow_overlap and self.hi_out >= self.lo_in:
            raise ValueError("separability requires hi_out < lo_in (or allow_overlap)")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    def class_probabilities(self, rng: np.random.Generator) -> np.ndarray:
        k = self.true_alphabet_size
        if self.family == "zipf":
            weights = np.arange(1, k + 1, dtype=float) ** -self.zipf_exponent
            return weights / weights.sum()
        return rng.dirichlet(np.full(k, self.dirichlet_concentration))


def generate_pool(spec: SyntheticSpec, queries: int) -> list[QueryRecord]:
    """Generates labeled query pools with noisy entailment matrices.

    Each query is seeded independently from (spec.seed, query index), so
    pools are bit-identical across runs and queries may be generated in any
    order.  Both the configured alphabet size and the realized distinct-class
    count are recorded on every record, so the pool oracle's own bias can be
    measured against the truth.

    Args:
        spec: Pool parameters.
        queries: Number of queries to generate (>= 1).

    Returns:
        Query records with cluster labels, an entailment matrix, and ground
        truth, ids q00000, q00001, ...
    """
    if queries < 1:
        raise ValueError("queries must be >= 1")
    n = spec.responses_per_query
    records: list[QueryRecord] = []
    for qi in range(queries):
        rng = np.random.default_rng([spec.seed, qi])
        probs = spec.class_probabilities(rng)
        labels = rng.choice(spec.true_alphabet_size, size=n, p=probs)
        noise = rng.random((n, n))
        same = labels[:, None] == labels[None, :]
        matrix = np.where(
            same,
            spec.lo_in + noise * (spec.hi_in - spec.lo_in),
            spec.lo_out + noise * (spec.hi_out - spec.lo_out),
        )
        np.fill_diagonal(matrix, 1.0)
        records.append(
            QueryRecord(
                query_id=f"q{qi:05d}",
                cluster_labels=tuple(int(c) for c in labels),
                entailment=matrix,
                true_k=spec.true_alphabet_size,
                realized_k=int(len(set(labels.tolist()))),
            )
        )
    return records
