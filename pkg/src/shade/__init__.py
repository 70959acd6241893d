"""Semantic alphabet-size estimation for sampled LLM responses.

Fuses missing-mass coverage extrapolation with the heat-kernel trace of an
entailment-graph Laplacian, corrects the fused cardinality for small samples,
and converts it into a coverage-adjusted entropy risk score.  Ships the full
subsampling evaluation protocol (pooled error, win rates, detection AUC) and
a synthetic pool simulator.
"""

__version__ = "0.1.0"

from .core import (
    CARDINALITY_ESTIMATORS,
    DETECTION_SCORES,
    EstimateBundle,
    FusionConfig,
    finite_sample_correct,
    fuse,
    score_query,
    shade_entropy,
)
from .evaluation import (
    DetectionReport,
    PooledErrorReport,
    WinRateReport,
    detection_report,
    pairwise_win_rates,
    pseudo_oracle,
    roc_auc,
    subsample_eval,
)
from .graph import (
    ConvergenceError,
    EntailmentMatrix,
    SemanticGraph,
    Spectrum,
    cluster_bidirectional,
    connected_components,
    eigenvalues_symmetric,
    heat_trace,
    laplacian_spectrum,
    normalized_laplacian,
    symmetrize,
    u_eigv,
)
from .occupancy import (
    CoverageEstimate,
    OccupancyProfile,
    ggt_estimate,
    gt_estimate,
    plugin_entropy,
    plugin_estimate,
    profile_from_labels,
)
from .records import (
    ConfigError,
    QueryRecord,
    RunConfig,
    ValidationError,
    dump_jsonl,
    ensure_cluster_labels,
    load_jsonl,
)
from .synthetic import SyntheticSpec, generate_pool

__all__ = [
    "__version__",
    "CARDINALITY_ESTIMATORS",
    "DETECTION_SCORES",
    "ConfigError",
    "ConvergenceError",
    "CoverageEstimate",
    "DetectionReport",
    "EntailmentMatrix",
    "EstimateBundle",
    "FusionConfig",
    "OccupancyProfile",
    "PooledErrorReport",
    "QueryRecord",
    "RunConfig",
    "SemanticGraph",
    "Spectrum",
    "SyntheticSpec",
    "ValidationError",
    "WinRateReport",
    "cluster_bidirectional",
    "connected_components",
    "detection_report",
    "dump_jsonl",
    "eigenvalues_symmetric",
    "ensure_cluster_labels",
    "finite_sample_correct",
    "fuse",
    "generate_pool",
    "ggt_estimate",
    "gt_estimate",
    "heat_trace",
    "laplacian_spectrum",
    "load_jsonl",
    "normalized_laplacian",
    "pairwise_win_rates",
    "plugin_entropy",
    "plugin_estimate",
    "profile_from_labels",
    "pseudo_oracle",
    "roc_auc",
    "score_query",
    "shade_entropy",
    "subsample_eval",
    "symmetrize",
    "u_eigv",
]
