"""Evaluation protocols: pooled cardinality error, win rates, and ROC AUC.

A large labeled pool per query acts as the cardinality reference; estimators
run on seeded subsamples and their pooled absolute errors feed the error
report and the pairwise win rates.  Incorrectness detection ranks queries by
an uncertainty score and measures ROC AUC against binary labels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import CARDINALITY_ESTIMATORS, SPECTRAL_ESTIMATORS, FusionConfig, score_query
from .records import QueryRecord

__all__ = [
    "PooledErrorReport",
    "WinRateRow",
    "WinRateReport",
    "DetectionReport",
    "pseudo_oracle",
    "subsample_eval",
    "pairwise_win_rates",
    "roc_auc",
    "detection_report",
]

log = logging.getLogger(__name__)


def pseudo_oracle(records: Sequence[QueryRecord], pool_size: int) -> dict[str, int]:
    """Reference cardinality per query: distinct classes in the full pool.

    Queries whose pool does not hold exactly ``pool_size`` labeled responses
    are excluded with a logged reason.

    Args:
        records: Query pools carrying cluster labels.
        pool_size: Required pool size N.

    Returns:
        Map from query_id to its reference class count.
    """
    references: dict[str, int] = {}
    for record in records:
        if record.cluster_labels is None:
            log.warning("excluding %s from the oracle: no cluster labels", record.query_id)
            continue
        if len(record.cluster_labels) != pool_size:
            log.warning(
                "excluding %s from the oracle: %d responses, expected %d",
                record.query_id,
                len(record.cluster_labels),
                pool_size,
            )
            continue
        references[record.query_id] = len(set(record.cluster_labels))
    return references


@dataclass(frozen=True)
class PooledErrorReport:
    """Per-estimator, per-n absolute errors against the pooled reference.

    ``abs_errors[(estimator, n)]`` has shape (queries, trials), with queries
    in sorted query_id order.
    """

    estimators: tuple[str, ...]
    n_values: tuple[int, ...]
    trials: int
    seed: int
    query_ids: tuple[str, ...]
    abs_errors: dict[tuple[str, int], np.ndarray] = field(repr=False)

    def mae(self, estimator: str, n: int) -> float:
        return float(self.abs_errors[(estimator, n)].mean())

    def rmse(self, estimator: str, n: int) -> float:
        return float(np.sqrt(np.square(self.abs_errors[(estimator, n)]).mean()))

    def cell_count(self, estimator: str, n: int) -> int:
        return int(self.abs_errors[(estimator, n)].size)

    @property
    def query_count(self) -> int:
        return len(self.query_ids)

    def per_query_errors(self, estimator: str, n: int) -> np.ndarray:
        """Trial-averaged absolute error per query (sorted query order)."""
        return self.abs_errors[(estimator, n)].mean(axis=1)


def subsample_eval(
    records: Sequence[QueryRecord],
    n_values: Sequence[int],
    trials: int,
    seed: int,
    cfg: FusionConfig | None = None,
    estimators: Sequence[str] | None = None,
    pool_size: int | None = None,
    correction_sign: float = 1.0,
) -> PooledErrorReport:
    """Subsampling protocol: estimator error against the pool reference.

    For every query, subsample size n, and trial, n responses are drawn
    uniformly without replacement (generator seeded from
    (seed, query index, n, trial), so reruns are bit-identical) and every
    enabled estimator is scored against the pseudo-oracle reference.  Pool
    cluster labels are inherited by the subsample; spectral estimators see
    the corresponding entailment submatrix.

    Args:
        records: Labeled query pools (entailment required for spectral
            estimators).
        n_values: Subsample sizes, each <= the pool size.
        trials: Draws per (query, n) cell, >= 1.
        seed: Base seed (>= 0).
        cfg: Fusion configuration for the scoring pipeline.
        estimators: Enabled estimator names; defaults to all.
        pool_size: Pool size N; defaults to the largest pool present.
        correction_sign: Sign of the finite-sample term.

    Returns:
        The pooled error report (queries merged in sorted query_id order).
    """
    if cfg is None:
        cfg = FusionConfig()
    names = tuple(estimators) if estimators is not None else tuple(CARDINALITY_ESTIMATORS)
    unknown = [name for name in names if name not in CARDINALITY_ESTIMATORS]
    if unknown:
        raise ValueError(f"unknown estimator names: {unknown}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not n_values:
        raise ValueError("n_values must be nonempty")
    if pool_size is None:
        pool_size = max(record.n for record in records)
    if max(n_values) > pool_size:
        raise ValueError(f"subsample size {max(n_values)} exceeds pool size {pool_size}")

    references = pseudo_oracle(records, pool_size)
    pool = sorted(
        (record for record in records if record.query_id in references),
        key=lambda record: record.query_id,
    )
    need_spectral = any(name in SPECTRAL_ESTIMATORS for name in names)
    if need_spectral:
        missing = [record.query_id for record in pool if record.entailment is None]
        if missing:
            raise ValueError(
                f"spectral estimators enabled but records lack entailment matrices: {missing[:5]}"
            )

    sorted_n = tuple(sorted(set(int(n) for n in n_values)))
    errors: dict[tuple[str, int], np.ndarray] = {
        (name, n): np.empty((len(pool), trials)) for name in names for n in sorted_n
    }
    for qi, record in enumerate(pool):
        reference = references[record.query_id]
        labels = np.asarray(record.cluster_labels)
        for n in sorted_n:
            for trial in range(trials):
                rng = np.random.default_rng([seed, qi, n, trial])
                idx = rng.choice(pool_size, size=n, replace=False)
                sub_matrix = record.entailment[np.ix_(idx, idx)] if need_spectral else None
                bundle = score_query(
                    labels=labels[idx].tolist(),
                    entailment=sub_matrix,
                    cfg=cfg,
                    correction_sign=correction_sign,
                )
                for name in names:
                    estimate = getattr(bundle, CARDINALITY_ESTIMATORS[name])
                    errors[(name, n)][qi, trial] = abs(estimate - reference)
    for arr in errors.values():
        arr.setflags(write=False)
    return PooledErrorReport(
        estimators=names,
        n_values=sorted_n,
        trials=trials,
        seed=seed,
        query_ids=tuple(record.query_id for record in pool),
        abs_errors=errors,
    )


@dataclass(frozen=True)
class WinRateRow:
    """Win/loss/tie tally of the fused estimator against one baseline."""

    wins: int
    losses: int
    ties: int

    @property
    def n_valid(self) -> int:
        return self.wins + self.losses + self.ties

    @property
    def win_rate(self) -> float | None:
        """W / (W + L); ties are excluded.  None when W + L == 0."""
        decided = self.wins + self.losses
        return self.wins / decided if decided else None


@dataclass(frozen=True)
class WinRateReport:
    """Per-baseline win-rate rows, in baseline order."""

    rows: dict[str, WinRateRow]


def pairwise_win_rates(
    shade_errors: Sequence[float],
    baseline_errors: Mapping[str, Sequence[float]],
) -> WinRateReport:
    """Counts strict wins, losses, and ties of aligned per-query errors.

    A win means the fused estimator's absolute error is strictly lower than
    the baseline's on that comparison unit.

    Raises:
        ValueError: On empty input or misaligned error vectors.
    """
    shade = np.asarray(shade_errors, dtype=float)
    if shade.size == 0 or not baseline_errors:
        raise ValueError("empty error input")
    rows: dict[str, WinRateRow] = {}
    for name, errs in baseline_errors.items():
        base = np.asarray(errs, dtype=float)
        if base.shape != shade.shape:
            raise ValueError(f"error vector for {name!r} is not aligned with the shade errors")
        wins = int(np.sum(shade < base))
        losses = int(np.sum(shade > base))
        rows[name] = WinRateRow(wins=wins, losses=losses, ties=int(shade.size - wins - losses))
    return WinRateReport(rows=rows)


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """ROC AUC as the Mann-Whitney rank statistic with midrank ties.

    Equals the fraction of (positive, negative) pairs where the positive
    scores higher, counting exact ties as 1/2.

    Args:
        scores: Real-valued scores (higher = more likely positive).
        labels: Binary labels, 1 = positive.

    Raises:
        ValueError: If labels are not binary or only one class is present.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be aligned 1-d vectors")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    n_pos = int(np.sum(y == 1))
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("degenerate labels")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.size)
    sorted_scores = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass(frozen=True)
class DetectionReport:
    """Per-dataset, per-score ROC AUCs with a per-score mean column.

    ``auc[(score, dataset, kind)]`` holds AUC_s (kind "s", sequence labels)
    or AUC_r (kind "r", response labels); None marks a label type absent
    from that dataset.  ``mean[score]`` averages every AUC present in the
    row.
    """

    scores: tuple[str, ...]
    datasets: tuple[str, ...]
    auc: dict[tuple[str, str, str], float | None]
    mean: dict[str, float]


def detection_report(
    records: Sequence[QueryRecord],
    score_values: Mapping[str, Sequence[float]],
) -> DetectionReport:
    """Builds the incorrectness-detection table from per-query scores.

    Records are grouped by their dataset tag (untagged records form the
    "default" group).  Within each dataset, AUC_s / AUC_r are computed from
    whichever of the two label fields every record carries.

    Args:
        records: Queries with incorrectness labels, aligned with the score
            vectors.
        score_values: Map from score name to one value per record.

    Raises:
        ValueError: If no record carries any label field, or labels within a
            dataset are degenerate.
    """
    names = tuple(score_values)
    datasets = tuple(sorted({record.dataset or "default" for record in records}))
    by_dataset: dict[str, list[int]] = {ds: [] for ds in datasets}
    for i, record in enumerate(records):
        by_dataset[record.dataset or "default"].append(i)

    auc: dict[tuple[str, str, str], float | None] = {}
    for ds in datasets:
        idx = by_dataset[ds]
        seq = [records[i].label_sequence for i in idx]
        resp = [records[i].label_response for i in idx]
        has_seq = all(v is not None for v in seq)
        has_resp = all(v is not None for v in resp)
        if not has_seq and not has_resp:
            raise ValueError(f"dataset {ds!r} is missing incorrectness label fields")
        for name in names:
            values = [score_values[name][i] for i in idx]
            auc[(name, ds, "s")] = roc_auc(values, seq) if has_seq else None
            auc[(name, ds, "r")] = roc_auc(values, resp) if has_resp else None

    mean: dict[str, float] = {}
    for name in names:
        present = [v for (s, _, _), v in auc.items() if s == name and v is not None]
        mean[name] = float(np.mean(present))
    return DetectionReport(scores=names, datasets=datasets, auc=auc, mean=mean)
