"""Query-record schema, JSONL ingestion, and run configuration.

One JSON object per line describes a query: its responses and/or cluster
labels, an optional directed entailment matrix (flat row-major with an
explicit ``n``, to guard against truncation), optional incorrectness labels,
and an optional dataset tag.  Unknown keys are tolerated so upstream tools
can carry extra context (for example the question text).
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import CARDINALITY_ESTIMATORS, FusionConfig
from .graph import cluster_bidirectional, EntailmentMatrix

__all__ = [
    "QueryRecord",
    "RunConfig",
    "ValidationError",
    "ConfigError",
    "load_jsonl",
    "dump_jsonl",
    "ensure_cluster_labels",
]

log = logging.getLogger(__name__)


class ValidationError(ValueError):
    """A record or input file failed validation."""


class ConfigError(Exception):
    """A run configuration is malformed or out of range."""


@dataclass(frozen=True, eq=False)
class QueryRecord:
    """One query's responses, structure, and labels.

    At least one of ``cluster_labels`` or ``entailment`` must be present;
    dimensions must agree wherever two of responses / labels / matrix
    coexist.
    """

    query_id: str
    responses: tuple[str, ...] | None = None
    cluster_labels: tuple[int, ...] | None = None
    entailment: np.ndarray | None = None
    label_sequence: int | None = None
    label_response: int | None = None
    dataset: str | None = None
    true_k: int | None = None
    realized_k: int | None = None

    def __post_init__(self) -> None:
        if not self.query_id:
            raise ValidationError("query_id must be a nonempty string")
        if self.cluster_labels is None and self.entailment is None:
            raise ValidationError("record needs cluster_labels or an entailment matrix")
        sizes = {}
        if self.responses is not None:
            sizes["responses"] = len(self.responses)
        if self.cluster_labels is not None:
            sizes["cluster_labels"] = len(self.cluster_labels)
        if self.entailment is not None:
            arr = np.asarray(self.entailment, dtype=float)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ValidationError(f"entailment matrix must be square, got shape {arr.shape}")
            if not np.all((arr >= 0.0) & (arr <= 1.0)):
                raise ValidationError("entailment entries must lie in [0, 1]")
            arr.setflags(write=False)
            object.__setattr__(self, "entailment", arr)
            sizes["entailment"] = arr.shape[0]
        if len(set(sizes.values())) > 1:
            raise ValidationError(f"inconsistent dimensions: {sizes}")
        if next(iter(sizes.values())) < 1:
            raise ValidationError("record must describe at least one response")
        for name in ("label_sequence", "label_response"):
            value = getattr(self, name)
            if value is not None and value not in (0, 1):
                raise ValidationError(f"{name} must be 0 or 1, got {value!r}")

    @property
    def n(self) -> int:
        if self.cluster_labels is not None:
            return len(self.cluster_labels)
        if self.responses is not None:
            return len(self.responses)
        return int(self.entailment.shape[0])


def _parse_matrix(obj: dict[str, Any]) -> np.ndarray | None:
    raw = obj.get("entailment")
    if raw is None:
        return None
    if not isinstance(raw, list) or not raw:
        raise ValidationError("entailment must be a nonempty list")
    if isinstance(raw[0], list):  # nested rows
        arr = np.asarray(raw, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError(f"entailment rows do not form a square matrix (shape {arr.shape})")
        return arr
    n = obj.get("n")
    if n is None:
        raise ValidationError("flat entailment requires an explicit 'n'")
    n = int(n)
    if len(raw) != n * n:
        raise ValidationError(f"entailment has {len(raw)} entries, expected n*n = {n * n}")
    return np.asarray(raw, dtype=float).reshape(n, n)


def record_from_obj(obj: dict[str, Any]) -> QueryRecord:
    """Builds a validated QueryRecord from a decoded JSON object."""
    if not isinstance(obj, dict):
        raise ValidationError("each line must hold a JSON object")
    if "query_id" not in obj or not isinstance(obj["query_id"], str):
        raise ValidationError("missing or non-string query_id")
    responses = obj.get("responses")
    if responses is not None:
        if not isinstance(responses, list) or not all(isinstance(r, str) for r in responses):
            raise ValidationError("responses must be a list of strings")
        responses = tuple(responses)
    labels = obj.get("cluster_labels")
    if labels is not None:
        if not isinstance(labels, list) or not all(isinstance(c, int) for c in labels):
            raise ValidationError("cluster_labels must be a list of integers")
        labels = tuple(labels)
    matrix = _parse_matrix(obj)
    if matrix is not None and "n" in obj and int(obj["n"]) != matrix.shape[0]:
        raise ValidationError(f"declared n={obj['n']} but entailment is {matrix.shape[0]}x{matrix.shape[0]}")
    incorrect = obj.get("labels") or {}
    if not isinstance(incorrect, dict):
        raise ValidationError("labels must be an object with 'sequence'/'response' fields")
    return QueryRecord(
        query_id=obj["query_id"],
        responses=responses,
        cluster_labels=labels,
        entailment=matrix,
        label_sequence=incorrect.get("sequence"),
        label_response=incorrect.get("response"),
        dataset=obj.get("dataset"),
        true_k=obj.get("true_k"),
        realized_k=obj.get("realized_k"),
    )


def load_jsonl(path: str | Path, strict: bool = True) -> list[QueryRecord]:
    """Loads query records from a JSONL file.

    Malformed lines are reported with their line number; in strict mode the
    first problem aborts the load, in lenient mode bad lines are skipped with
    a warning.

    Args:
        path: Input file, one JSON object per line.
        strict: Abort on the first invalid line instead of skipping it.

    Returns:
        The validated records, in file order.

    Raises:
        ValidationError: In strict mode, on any malformed line, dimension
            mismatch, out-of-range entry, or duplicate query_id.
    """
    records: list[QueryRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as err:
                    raise ValidationError(f"invalid JSON: {err}") from None
                record = record_from_obj(obj)
                if record.query_id in seen:
                    raise ValidationError(f"duplicate query_id {record.query_id!r}")
            except ValidationError as err:
                message = f"{path}: line {line_no}: {err}"
                if strict:
                    raise ValidationError(message) from None
                log.warning("skipping %s", message)
                continue
            seen.add(record.query_id)
            records.append(record)
    if not records:
        log.warning("no records loaded from %s", path)
    return records


def _record_obj(record: QueryRecord, matrix_decimals: int | None) -> dict[str, Any]:
    obj: dict[str, Any] = {"query_id": record.query_id, "n": record.n}
    if record.responses is not None:
        obj["responses"] = list(record.responses)
    if record.cluster_labels is not None:
        obj["cluster_labels"] = list(record.cluster_labels)
    if record.entailment is not None:
        flat = np.asarray(record.entailment).ravel()
        if matrix_decimals is not None:
            flat = flat.round(matrix_decimals)
        obj["entailment"] = [float(x) for x in flat]
    if record.label_sequence is not None or record.label_response is not None:
        labels: dict[str, int] = {}
        if record.label_sequence is not None:
            labels["sequence"] = record.label_sequence
        if record.label_response is not None:
            labels["response"] = record.label_response
        obj["labels"] = labels
    if record.dataset is not None:
        obj["dataset"] = record.dataset
    if record.true_k is not None:
        obj["true_k"] = record.true_k
    if record.realized_k is not None:
        obj["realized_k"] = record.realized_k
    return obj


def dump_jsonl(records: Iterable[QueryRecord], path: str | Path, matrix_decimals: int | None = 6) -> None:
    """Writes records in the canonical JSONL schema (flat row-major matrix).

    Entailment entries are rounded to ``matrix_decimals`` digits; pass None
    to keep full precision.
    """
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(_record_obj(record, matrix_decimals), ensure_ascii=False))
            handle.write("\n")


def ensure_cluster_labels(records: Sequence[QueryRecord], threshold: float) -> list[QueryRecord]:
    """Fills missing cluster labels by bidirectional-entailment clustering."""
    out: list[QueryRecord] = []
    for record in records:
        if record.cluster_labels is not None:
            out.append(record)
            continue
        labels = cluster_bidirectional(EntailmentMatrix(record.entailment), threshold)
        out.append(
            QueryRecord(
                query_id=record.query_id,
                responses=record.responses,
                cluster_labels=tuple(labels),
                entailment=record.entailment,
                label_sequence=record.label_sequence,
                label_response=record.label_response,
                dataset=record.dataset,
                true_k=record.true_k,
                realized_k=record.realized_k,
            )
        )
    return out


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration, embedded verbatim in every report."""

    beta: float = 1.0
    alpha: float = 0.1
    tau: float = 0.7
    entail_threshold: float = 0.5
    n_values: tuple[int, ...] = (5, 8, 10, 25, 50)
    trials: int = 10
    seed: int = 0
    estimators: tuple[str, ...] = tuple(CARDINALITY_ESTIMATORS)
    correction_sign: float = 1.0

    def __post_init__(self) -> None:
        try:
            self.fusion()
        except ValueError as err:
            raise ConfigError(str(err)) from None
        unknown = [name for name in self.estimators if name not in CARDINALITY_ESTIMATORS]
        if unknown:
            raise ConfigError(f"unknown estimator names: {unknown}")
        if not self.estimators:
            raise ConfigError("at least one estimator must be enabled")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ConfigError(f"n_values must be positive integers, got {self.n_values}")
        if self.correction_sign not in (1.0, -1.0):
            raise ConfigError(f"correction_sign must be +1 or -1, got {self.correction_sign}")

    def fusion(self) -> FusionConfig:
        return FusionConfig(
            beta=self.beta,
            alpha=self.alpha,
            tau=self.tau,
            entail_threshold=self.entail_threshold,
        )

    def as_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["n_values"] = list(self.n_values)
        data["estimators"] = list(self.estimators)
        return data

    @classmethod
    def from_toml(cls, path: str | Path) -> "RunConfig":
        """Loads and validates a TOML run configuration.

        Raises:
            ConfigError: On unreadable files, unknown keys, bad types, or
                out-of-range values.
        """
        try:
            with open(path, "rb") as handle:
                data = tomllib.load(handle)
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"invalid TOML in {path}: {err}") from None
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = dict(data)
        try:
            for key in ("n_values", "estimators"):
                if key in kwargs:
                    kwargs[key] = tuple(kwargs[key])
            if "correction_sign" in kwargs:
                kwargs["correction_sign"] = float(kwargs["correction_sign"])
            return cls(**kwargs)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad config value: {err}") from None
