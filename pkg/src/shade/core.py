"""Coverage-gated fusion of occupancy and spectral cardinality estimates.

The two routes to the effective class count, missing-mass extrapolation and
the heat-kernel trace, are combined according to how much of the class mass
the sample is estimated to cover: a convex blend when coverage is high, a
smooth maximum (LogSumExp) when it is low.  The fused cardinality receives a
small-sample correction and is converted into a visibility-adjusted entropy
used as the risk score.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .graph import (
    EntailmentMatrix,
    cluster_bidirectional,
    heat_trace,
    laplacian_spectrum,
    symmetrize,
    u_eigv,
)
from .occupancy import (
    OccupancyProfile,
    ggt_estimate,
    gt_estimate,
    plugin_entropy,
    plugin_estimate,
    profile_from_labels,
)

__all__ = [
    "FusionConfig",
    "EstimateBundle",
    "fuse",
    "finite_sample_correct",
    "shade_entropy",
    "score_query",
    "CARDINALITY_ESTIMATORS",
    "SPECTRAL_ESTIMATORS",
    "DETECTION_SCORES",
]

log = logging.getLogger(__name__)

# Cardinality estimators comparable against a pooled reference, in report
# order: estimator name -> EstimateBundle attribute.
CARDINALITY_ESTIMATORS: dict[str, str] = {
    "plugin": "s_plugin",
    "gt": "s_gt",
    "ggt": "s_ggt",
    "u_eigv": "u_eigv",
    "hybrid_gt": "s_hybrid_gt",
    "hybrid_ggt": "s_hybrid_ggt",
    "shade": "s_final",
}

# Estimators that need an entailment matrix (the rest run on labels alone).
SPECTRAL_ESTIMATORS = frozenset({"u_eigv", "hybrid_gt", "hybrid_ggt", "shade"})

# Default uncertainty scores ranked by the detection protocol.
DETECTION_SCORES = ("h_shade", "s_hybrid", "s_final", "numsets", "h_plugin", "dse")


@dataclass(frozen=True)
class FusionConfig:
    """Scalar knobs of the fusion pipeline, fixed once per run.

    Attributes:
        beta: Heat-kernel temperature (> 0).
        alpha: LogSumExp sharpness (> 0); smaller alpha pushes the smooth
            maximum further above max(a, b), up to ln(2)/alpha.
        tau: Coverage gate threshold in (0, 1) selecting convex vs LogSumExp
            fusion.
        entail_threshold: Bidirectional entailment clustering threshold in
            (0, 1).
    """

    beta: float = 1.0
    alpha: float = 0.1
    tau: float = 0.7
    entail_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not self.beta > 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not 0.0 < self.entail_threshold < 1.0:
            raise ValueError(f"entail_threshold must lie in (0, 1), got {self.entail_threshold}")


@dataclass(frozen=True)
class EstimateBundle:
    """Every estimate and score produced for one query.

    Spectral fields (and everything downstream of them) are None when the
    query carried no entailment matrix; occupancy-only estimators are always
    populated.
    """

    n: int
    k_obs: int
    coverage_ggt: float
    s_plugin: float
    s_gt: float
    s_ggt: float
    p_hat: tuple[float, ...]
    h_plugin: float
    dse: float
    numsets: float
    s_soft_eigv: float | None = None
    u_eigv: float | None = None
    s_hybrid: float | None = None
    s_final: float | None = None
    s_hybrid_gt: float | None = None
    s_hybrid_ggt: float | None = None
    p_star: tuple[float, ...] | None = None
    h_shade: float | None = None

    # Stable column order for delimited output; spectral fields render empty
    # when absent so the schema never depends on data content.
    SCALAR_FIELDS = (
        "n",
        "k_obs",
        "coverage_ggt",
        "s_plugin",
        "s_gt",
        "s_ggt",
        "s_soft_eigv",
        "u_eigv",
        "s_hybrid",
        "s_final",
        "h_shade",
        "h_plugin",
        "dse",
        "numsets",
        "s_hybrid_gt",
        "s_hybrid_ggt",
    )


def fuse(s_ggt: float, s_soft: float, coverage: float, cfg: FusionConfig) -> float:
    """Coverage-gated combination of the two cardinality estimates.

    With coverage >= cfg.tau the result is the convex blend
    coverage * s_ggt + (1 - coverage) * s_soft, which down-weights the
    spectral estimate as coverage grows.  Below the gate it is the smooth
    maximum (1/alpha) * ln(exp(alpha*s_ggt) + exp(alpha*s_soft)), evaluated
    in the shifted form max + (1/alpha) * ln(1 + exp(-alpha*|diff|)) so it
    cannot overflow even at clamp-driven cardinalities near 1e12.
    """
    if coverage >= cfg.tau:
        return coverage * s_ggt + (1.0 - coverage) * s_soft
    return max(s_ggt, s_soft) + math.log1p(math.exp(-cfg.alpha * abs(s_ggt - s_soft))) / cfg.alpha


def finite_sample_correct(s_hybrid: float, k_obs: int, n: int, sign: float = 1.0) -> float:
    """Adds the leading-order small-sample term (k_obs - 1) / (2n).

    ``sign`` flips the term for sensitivity analysis; the default follows the
    additive form.
    """
    return s_hybrid + sign * (k_obs - 1) / (2.0 * n)


def shade_entropy(
    p_hat: Sequence[float],
    k_obs: int,
    n: int,
    s_final: float,
) -> tuple[float, tuple[float, ...]]:
    """Visibility-adjusted entropy of the cardinality-rescaled frequencies.

    Each empirical frequency is rescaled to p*_i = k_obs * p̂_i / s_final and
    its entropy term divided by 1 - (1 - p*_i)^n, the probability that the
    class shows up at all in n draws.  A p*_i of exactly 1 contributes 0 (the
    limit value).  Values above 1 are clamped to 1 with a logged warning.

    Args:
        p_hat: Empirical class frequencies, summing to 1 within 1e-10.
        k_obs: Observed class count.
        n: Sample size.
        s_final: Corrected cardinality estimate (> 0).

    Returns:
        (entropy in nats, the p* vector after clamping).

    Raises:
        ValueError: If s_final <= 0, p_hat has nonpositive entries, or p_hat
            does not sum to 1 within tolerance.
    """
    if s_final <= 0.0:
        raise ValueError(f"s_final must be positive, got {s_final}")
    if any(p <= 0.0 for p in p_hat):
        raise ValueError("p_hat entries must be positive")
    total = math.fsum(p_hat)
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"p_hat must sum to 1 (got {total})")
    p_star = []
    entropy = 0.0
    for p in p_hat:
        ps = k_obs * p / s_final
        if ps > 1.0:
            log.warning("clamping p*=%.6g to 1 (k_obs=%d, s_final=%.6g)", ps, k_obs, s_final)
            ps = 1.0
        p_star.append(ps)
        if ps == 1.0:
            continue
        entropy += -ps * math.log(ps) / (1.0 - (1.0 - ps) ** n)
    return entropy, tuple(p_star)


def score_query(
    labels: Sequence[Hashable] | None = None,
    entailment: EntailmentMatrix | np.ndarray | None = None,
    cfg: FusionConfig | None = None,
    correction_sign: float = 1.0,
) -> EstimateBundle:
    """Runs the full pipeline for one query and returns every estimate.

    Clustering happens only when ``labels`` is absent (it then requires the
    entailment matrix).  Without a matrix the spectral route is unavailable:
    the occupancy estimators are still produced and all spectral fields are
    None.

    Args:
        labels: Per-response cluster labels, if already known.
        entailment: Directed entailment matrix over the responses.
        cfg: Fusion configuration; defaults to FusionConfig().
        correction_sign: Sign applied to the finite-sample term.

    Returns:
        The populated EstimateBundle.
    """
    if cfg is None:
        cfg = FusionConfig()
    matrix: EntailmentMatrix | None = None
    if entailment is not None:
        matrix = entailment if isinstance(entailment, EntailmentMatrix) else EntailmentMatrix(entailment)
    if labels is None:
        if matrix is None:
            raise ValueError("need cluster labels or an entailment matrix")
        labels = cluster_bidirectional(matrix, cfg.entail_threshold)
    elif matrix is not None and len(labels) != matrix.n:
        raise ValueError(f"{len(labels)} labels for a {matrix.n}-node entailment matrix")

    profile = profile_from_labels(labels)
    plugin = plugin_estimate(profile)
    gt = gt_estimate(profile)
    ggt = ggt_estimate(profile)
    h_plugin = plugin_entropy(profile)

    base = dict(
        n=profile.n,
        k_obs=profile.k_obs,
        coverage_ggt=ggt.coverage,
        s_plugin=plugin.cardinality,
        s_gt=gt.cardinality,
        s_ggt=ggt.cardinality,
        p_hat=profile.frequencies,
        h_plugin=h_plugin,
        dse=h_plugin,
        numsets=float(profile.k_obs),
    )
    if matrix is None:
        return EstimateBundle(**base)

    spectrum = laplacian_spectrum(symmetrize(matrix))
    s_soft = heat_trace(spectrum, cfg.beta)
    s_hybrid = fuse(ggt.cardinality, s_soft, ggt.coverage, cfg)
    s_final = finite_sample_correct(s_hybrid, profile.k_obs, profile.n, correction_sign)
    h_shade, p_star = shade_entropy(profile.frequencies, profile.k_obs, profile.n, s_final)
    return EstimateBundle(
        **base,
        s_soft_eigv=s_soft,
        u_eigv=u_eigv(spectrum),
        s_hybrid=s_hybrid,
        s_final=s_final,
        s_hybrid_gt=gt.coverage * gt.cardinality + (1.0 - gt.coverage) * s_soft,
        s_hybrid_ggt=ggt.coverage * ggt.cardinality + (1.0 - ggt.coverage) * s_soft,
        p_star=p_star,
        h_shade=h_shade,
    )
