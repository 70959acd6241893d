"""Delimited report writers.

Every report starts with '# key = value' metadata lines carrying the fully
resolved configuration and seed, followed by a CSV body.  Identical (input,
config, seed) runs produce byte-identical files: values are written with
shortest round-trip float formatting and no timestamps.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

from .core import EstimateBundle
from .evaluation import DetectionReport, PooledErrorReport, WinRateReport

__all__ = [
    "write_score_csv",
    "write_score_jsonl",
    "write_error_report_csv",
    "write_winrate_csv",
    "write_detection_csv",
]


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str | Path, meta: dict[str, Any], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for key in sorted(meta):
            handle.write(f"# {key} = {json.dumps(meta[key], sort_keys=True)}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in row])


def write_score_csv(
    path: str | Path,
    query_ids: Sequence[str],
    bundles: Sequence[EstimateBundle],
    meta: dict[str, Any],
) -> None:
    """One row per query with every scalar estimate; absent fields are empty."""
    header = ["query_id", *EstimateBundle.SCALAR_FIELDS]
    rows = (
        [qid, *(getattr(b, name) for name in EstimateBundle.SCALAR_FIELDS)]
        for qid, b in zip(query_ids, bundles)
    )
    _write_csv(path, meta, header, rows)


def write_score_jsonl(
    path: str | Path,
    query_ids: Sequence[str],
    bundles: Sequence[EstimateBundle],
    meta: dict[str, Any],
) -> None:
    """JSONL variant of the score report; includes the frequency vectors."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps({"_meta": meta}, sort_keys=True) + "\n")
        for qid, b in zip(query_ids, bundles):
            obj: dict[str, Any] = {"query_id": qid}
            for name in EstimateBundle.SCALAR_FIELDS:
                obj[name] = getattr(b, name)
            obj["p_hat"] = list(b.p_hat)
            obj["p_star"] = list(b.p_star) if b.p_star is not None else None
            handle.write(json.dumps(obj) + "\n")


def write_error_report_csv(path: str | Path, report: PooledErrorReport, meta: dict[str, Any]) -> None:
    """Estimator rows with MAE/RMSE/count columns per subsample size."""
    header = ["estimator"]
    for n in report.n_values:
        header += [f"mae_n{n}", f"rmse_n{n}", f"count_n{n}"]
    rows = []
    for name in report.estimators:
        row: list[Any] = [name]
        for n in report.n_values:
            row += [report.mae(name, n), report.rmse(name, n), report.cell_count(name, n)]
        rows.append(row)
    _write_csv(path, meta, header, rows)


def write_winrate_csv(path: str | Path, report: WinRateReport, meta: dict[str, Any]) -> None:
    """Baseline rows with win/loss/tie counts and the tie-excluded win rate."""
    header = ["baseline", "wins", "losses", "ties", "n_valid", "win_rate_pct"]
    rows = []
    for name, row in report.rows.items():
        rate = row.win_rate
        rows.append(
            [name, row.wins, row.losses, row.ties, row.n_valid, "n/a" if rate is None else 100.0 * rate]
        )
    _write_csv(path, meta, header, rows)


def write_detection_csv(path: str | Path, report: DetectionReport, meta: dict[str, Any]) -> None:
    """Score rows with per-dataset AUC_s / AUC_r columns and the mean."""
    header = ["score"]
    for ds in report.datasets:
        header += [f"auc_s_{ds}", f"auc_r_{ds}"]
    header.append("mean")
    rows = []
    for name in report.scores:
        row: list[Any] = [name]
        for ds in report.datasets:
            row += [report.auc[(name, ds, "s")], report.auc[(name, ds, "r")]]
        row.append(report.mean[name])
        rows.append(row)
    _write_csv(path, meta, header, rows)
