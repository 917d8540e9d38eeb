"""Neighbourhood-based, correlation-preserving fingerprinting for mixed-type tables."""

from .attacks import AttackSpec, cluster_flip, collude, flip, horizontal_subset, run_attack, vertical_subset
from .codes import (
    AccusationReport,
    Codebook,
    accuse,
    detection_confidence,
    generate_hash_code,
    hash_codebook,
    tardos_accuse,
    tardos_generate,
)
from .correlation import CorrelatedGroups, correlated_groups, correlation_matrix
from .errors import FingerprintError
from .fingerprint import (
    DetectionResult,
    EmbeddingConfig,
    EmbeddingPlan,
    apply_plan,
    build_plan,
    detect,
    embed,
    vote_error_rate,
)
from .metrics import FidelityReport, collusion_outcome, data_accuracy, fidelity_report, hellinger, kl_divergence
from .synthetic import make_synthetic
from .table import Dataset, cell_changes, diff_cells, load_csv, write_csv

__all__ = [
    "AccusationReport", "AttackSpec", "Codebook", "CorrelatedGroups", "Dataset", "DetectionResult",
    "EmbeddingConfig", "EmbeddingPlan", "FidelityReport", "FingerprintError",
    "accuse", "apply_plan", "build_plan", "cell_changes", "cluster_flip", "collude", "collusion_outcome",
    "correlated_groups", "correlation_matrix", "data_accuracy", "detect", "detection_confidence",
    "diff_cells", "embed", "fidelity_report", "flip", "generate_hash_code", "hash_codebook", "hellinger",
    "horizontal_subset", "kl_divergence", "load_csv", "make_synthetic", "run_attack", "tardos_accuse",
    "tardos_generate", "vertical_subset", "vote_error_rate", "write_csv",
]
