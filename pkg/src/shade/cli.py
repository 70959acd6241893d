"""Command-line surface: score, evaluate, winrates, detect, simulate.

Each report-producing subcommand writes a delimited file with an embedded
config header and, unless --no-figures is given, a PNG rendering of the same
numbers next to it.  Exit codes: 0 success, 1 validation failure, 2 config
error.  Set SHADE_LOG_LEVEL (DEBUG/INFO/WARNING/...) to change log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .core import DETECTION_SCORES, EstimateBundle, score_query
from .evaluation import detection_report, pairwise_win_rates, subsample_eval
from .records import (
    ConfigError,
    QueryRecord,
    RunConfig,
    ValidationError,
    dump_jsonl,
    ensure_cluster_labels,
    load_jsonl,
)
from .reports import (
    write_detection_csv,
    write_error_report_csv,
    write_score_csv,
    write_score_jsonl,
    write_winrate_csv,
)
from .synthetic import SyntheticSpec, generate_pool

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_toml(args.config) if args.config else RunConfig()
    overrides: dict[str, Any] = {}
    if getattr(args, "n", None):
        overrides["n_values"] = tuple(int(x) for x in args.n.split(","))
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if overrides:
        try:
            cfg = dataclasses.replace(cfg, **overrides)
        except ValueError as err:
            raise ConfigError(str(err)) from None
    return cfg


def _meta(command: str, args: argparse.Namespace, cfg: RunConfig, **extra: Any) -> dict[str, Any]:
    meta = {"command": command, "config": cfg.as_dict(), "version": __version__}
    if getattr(args, "input", None):
        meta["input"] = str(args.input)
    meta.update(extra)
    return meta


def _figure_path(output: str, suffix: str) -> Path:
    out = Path(output)
    return out.with_name(f"{out.stem}_{suffix}.png")


def _score_records(records: Sequence[QueryRecord], cfg: RunConfig) -> list[EstimateBundle]:
    return [
        score_query(
            labels=r.cluster_labels,
            entailment=r.entailment,
            cfg=cfg.fusion(),
            correction_sign=cfg.correction_sign,
        )
        for r in records
    ]


def _cmd_score(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    records = load_jsonl(args.input, strict=not args.lenient)
    bundles = _score_records(records, cfg)
    ids = [r.query_id for r in records]
    meta = _meta("score", args, cfg)
    if str(args.output).endswith(".jsonl"):
        write_score_jsonl(args.output, ids, bundles, meta)
    else:
        write_score_csv(args.output, ids, bundles, meta)
    if not args.no_figures and bundles:
        from .figures import score_figure

        score_figure(bundles, _figure_path(args.output, "scores"))
    return 0


def _prepare_pool(args: argparse.Namespace, cfg: RunConfig) -> tuple[list[QueryRecord], int]:
    records = load_jsonl(args.input, strict=not args.lenient)
    if not records:
        raise ValidationError(f"no usable records in {args.input}")
    records = ensure_cluster_labels(records, cfg.entail_threshold)
    pool_size = args.pool_n if getattr(args, "pool_n", None) else max(r.n for r in records)
    return records, pool_size


def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    records, pool_size = _prepare_pool(args, cfg)
    report = subsample_eval(
        records,
        n_values=cfg.n_values,
        trials=cfg.trials,
        seed=cfg.seed,
        cfg=cfg.fusion(),
        estimators=cfg.estimators,
        pool_size=pool_size,
        correction_sign=cfg.correction_sign,
    )
    write_error_report_csv(args.output, report, _meta("evaluate", args, cfg, pool_size=pool_size))
    if not args.no_figures:
        from .figures import error_report_figure

        error_report_figure(report, _figure_path(args.output, "mae"))
    return 0


def _read_error_columns(path: str) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as handle:
        rows = [row for row in csv.reader(line for line in handle if not line.startswith("#")) if row]
    if len(rows) < 2:
        raise ValidationError(f"{path}: expected a header and at least one error row")
    header = rows[0]
    try:
        data = np.asarray([[float(v) for v in row] for row in rows[1:]])
    except ValueError as err:
        raise ValidationError(f"{path}: non-numeric error value ({err})") from None
    return {name: data[:, i] for i, name in enumerate(header)}


def _cmd_winrates(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    if args.errors:
        columns = _read_error_columns(args.errors)
        if "shade" not in columns:
            raise ValidationError(f"{args.errors}: needs a 'shade' column")
        shade = columns.pop("shade")
        report = pairwise_win_rates(shade, columns)
        meta = _meta("winrates", args, cfg, errors=str(args.errors))
    else:
        if not args.input:
            raise ValidationError("winrates needs --input or --errors")
        if "shade" not in cfg.estimators:
            raise ConfigError("winrates needs the 'shade' estimator enabled")
        records, pool_size = _prepare_pool(args, cfg)
        pooled = subsample_eval(
            records,
            n_values=cfg.n_values,
            trials=cfg.trials,
            seed=cfg.seed,
            cfg=cfg.fusion(),
            estimators=cfg.estimators,
            pool_size=pool_size,
            correction_sign=cfg.correction_sign,
        )
        shade = np.concatenate([pooled.per_query_errors("shade", n) for n in pooled.n_values])
        baselines = {
            name: np.concatenate([pooled.per_query_errors(name, n) for n in pooled.n_values])
            for name in pooled.estimators
            if name != "shade"
        }
        report = pairwise_win_rates(shade, baselines)
        meta = _meta("winrates", args, cfg, pool_size=pool_size)
    write_winrate_csv(args.output, report, meta)
    if not args.no_figures:
        from .figures import winrate_figure

        winrate_figure(report, _figure_path(args.output, "winrates"))
    return 0


def _cmd_detect(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    records = load_jsonl(args.input, strict=not args.lenient)
    if not records:
        raise ValidationError(f"no usable records in {args.input}")
    bundles = _score_records(records, cfg)
    scores = tuple(args.scores.split(",")) if args.scores else DETECTION_SCORES
    unknown = [s for s in scores if s not in EstimateBundle.SCALAR_FIELDS]
    if unknown:
        raise ConfigError(f"unknown score names: {unknown}")
    values: dict[str, list[float]] = {}
    for name in scores:
        column = [getattr(b, name) for b in bundles]
        missing = [r.query_id for r, v in zip(records, column) if v is None]
        if missing:
            raise ValidationError(
                f"score {name!r} unavailable for {missing[:3]}...; records need entailment matrices"
            )
        values[name] = column
    report = detection_report(records, values)
    write_detection_csv(args.output, report, _meta("detect", args, cfg, scores=list(scores)))
    if not args.no_figures:
        from .figures import detection_figure

        detection_figure(report, _figure_path(args.output, "auc"))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    data: dict[str, Any] = {}
    if args.spec:
        try:
            with open(args.spec, "rb") as handle:
                data = tomllib.load(handle)
        except OSError as err:
            raise ConfigError(f"cannot read spec {args.spec}: {err}") from None
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"invalid TOML in {args.spec}: {err}") from None
    queries = data.pop("queries", 100)
    known = set(SyntheticSpec.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown synthetic spec keys: {sorted(unknown)}")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.queries is not None:
        queries = args.queries
    try:
        spec = SyntheticSpec(**data)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad synthetic spec: {err}") from None
    dump_jsonl(generate_pool(spec, queries), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shade",
        description="Semantic alphabet-size estimation and entropy risk scoring for sampled responses",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, output: bool = True) -> None:
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--lenient", action="store_true", help="skip invalid input lines instead of aborting")
        p.add_argument("--no-figures", action="store_true", help="skip the PNG rendering of the report")
        p.add_argument("--seed", type=int, help="override the configured seed")
        if output:
            p.add_argument("--output", required=True, help="report path (.csv, or .jsonl for score)")

    p = sub.add_parser("score", help="score every query and emit one estimate row each")
    p.add_argument("--input", required=True, help="query JSONL")
    common(p)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("evaluate", help="pooled MAE/RMSE of every estimator against the pool oracle")
    p.add_argument("--input", required=True, help="labeled pool JSONL")
    p.add_argument("--n", help="comma-separated subsample sizes (overrides config)")
    p.add_argument("--trials", type=int, help="subsample draws per (query, n) cell")
    p.add_argument("--pool-n", type=int, help="pool size N (default: largest pool in the input)")
    common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("winrates", help="pairwise win rates of the fused estimator vs baselines")
    p.add_argument("--input", help="labeled pool JSONL (errors are computed by subsampling)")
    p.add_argument("--errors", help="CSV of precomputed per-query absolute errors (needs a 'shade' column)")
    p.add_argument("--n", help="comma-separated subsample sizes (overrides config)")
    p.add_argument("--trials", type=int, help="subsample draws per (query, n) cell")
    p.add_argument("--pool-n", type=int, help="pool size N (default: largest pool in the input)")
    common(p)
    p.set_defaults(func=_cmd_winrates)

    p = sub.add_parser("detect", help="ROC AUC of uncertainty scores against incorrectness labels")
    p.add_argument("--input", required=True, help="labeled query JSONL")
    p.add_argument("--scores", help="comma-separated score columns (default: %s)" % ",".join(DETECTION_SCORES))
    common(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("simulate", help="generate a synthetic labeled pool with known ground truth")
    p.add_argument("--spec", help="TOML synthetic spec (fields of SyntheticSpec plus 'queries')")
    p.add_argument("--queries", type=int, help="number of queries (overrides spec)")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--out", required=True, help="output pool JSONL")
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("SHADE_LOG_LEVEL", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (ValidationError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
